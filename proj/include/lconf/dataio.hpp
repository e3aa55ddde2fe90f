#pragma once

// On-disk formats.
//
// .lcf  "LCF1" | n: u64 LE | d: u64 LE | dtype: u8 (0 = f32 LE) | n*d values, row-major
//       Total length is exactly 21 + 4*n*d bytes. Values are widened to double on load.
// .csv  labels: one non-negative integer per line, optional "label" header.
//       confidence: "index,confidence" header, then one row per sample.
// .json run reports, see RunReport.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "lconf/core.hpp"

namespace lconf::dataio {

inline constexpr char kLcfMagic[4] = {'L', 'C', 'F', '1'};
inline constexpr std::size_t kLcfHeaderBytes = 21;  // magic + n + d + dtype
inline constexpr unsigned char kDtypeFloat32 = 0;

void write_embeddings(const std::filesystem::path& path, const FeatureMatrix& features);
FeatureMatrix read_embeddings(const std::filesystem::path& path);

// Same layout for any dense matrix (predicted probabilities, PCA components).
void write_matrix(const std::filesystem::path& path, const RowMatrix& m);
RowMatrix read_matrix(const std::filesystem::path& path);

std::vector<unsigned char> encode_lcf(const RowMatrix& m);
RowMatrix decode_lcf(const std::vector<unsigned char>& bytes);

Labels read_labels_csv(const std::filesystem::path& path);
void write_labels_csv(const std::filesystem::path& path, std::span<const int> labels);

void write_confidence_csv(const std::filesystem::path& path, const ConfidenceVector& w);
ConfidenceVector read_confidence_csv(const std::filesystem::path& path);

// Plain numeric CSV without header (transition matrices).
Matrix read_matrix_csv(const std::filesystem::path& path);

// i,j,weight for the upper triangle (i < j) of a symmetric matrix.
void write_graph_csv(const std::filesystem::path& path, const SparseMatrix& adjacency);

void write_confusion_csv(const std::filesystem::path& path, const Eigen::MatrixX<long>& confusion);

struct RunReport {
  nlohmann::json config = nlohmann::json::object();
  std::vector<nlohmann::json> per_epoch;
  nlohmann::json final_metrics = nlohmann::json::object();
  std::map<std::string, double> timings;  // seconds
};

nlohmann::json to_json(const RunReport& report);
void write_report(const std::filesystem::path& path, const RunReport& report);
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace lconf::dataio
