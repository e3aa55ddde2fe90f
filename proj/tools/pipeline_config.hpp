#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"
#include "lconf/corpus.hpp"
#include "lconf/error.hpp"
#include "lconf/trainer.hpp"

namespace lconf::cli {

// Invalid pipeline configuration. pointer is the JSON pointer of the offending value.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& pointer, const std::string& what)
      : Error("config error at " + (pointer.empty() ? std::string("/") : pointer) + ": " + what), pointer_(pointer) {}
  const std::string& pointer() const noexcept { return pointer_; }

 private:
  std::string pointer_;
};

struct PipelineSpec {
  corpus::BlobSpec blobs;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  corpus::NoiseSpec noise;
  trainer::TrainConfig train;
  std::optional<std::filesystem::path> output;
  int threads = 0;
};

// Schema (all sections required unless noted):
//   seed      integer, optional, default 0; default for the three section seeds
//   threads   integer, optional
//   dataset   {n_train, n_test, classes, dim, separation, spread, seed?}
//   noise     {kind: "sym"|"asym", rate, transition?: CSV path | "cifar10-pairflip", seed?}
//   train     TrainConfig fields by name, all optional
//   output    report path, optional, relative to the config file
// Unknown keys are rejected.
PipelineSpec parse_pipeline_config(const nlohmann::json& doc, const std::filesystem::path& config_dir);

struct PipelineData {
  NoisyDataset train;
  std::optional<NoisyDataset> test;
};

// Blobs split into train/test; noise goes into the training part only.
PipelineData make_pipeline_data(const PipelineSpec& spec);

}  // namespace lconf::cli
