#include "pipeline_config.hpp"

#include <limits>
#include <set>

#include "lconf/dataio.hpp"

namespace lconf::cli {

namespace {

using nlohmann::json;

class Section {
 public:
  Section(const json& node, std::string pointer) : node_(node), pointer_(std::move(pointer)) {
    if (!node_.is_object()) throw ConfigError(pointer_, "expected an object");
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  std::string at(const std::string& key) const { return pointer_ + "/" + key; }

  std::int64_t integer(const std::string& key, std::optional<std::int64_t> fallback, std::int64_t lo,
                       std::int64_t hi = std::numeric_limits<std::int64_t>::max()) {
    const json* v = find(key);
    if (!v) {
      if (!fallback) throw ConfigError(at(key), "missing required integer");
      return *fallback;
    }
    if (!v->is_number_integer()) throw ConfigError(at(key), "expected an integer");
    const auto x = v->get<std::int64_t>();
    if (x < lo || x > hi) {
      throw ConfigError(at(key), "value " + std::to_string(x) + " outside [" + std::to_string(lo) + ", " +
                                     std::to_string(hi) + "]");
    }
    return x;
  }

  std::uint64_t seed(const std::string& key, std::uint64_t fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0)) {
      throw ConfigError(at(key), "expected a non-negative integer seed");
    }
    return v->get<std::uint64_t>();
  }

  double number(const std::string& key, std::optional<double> fallback) {
    const json* v = find(key);
    if (!v) {
      if (!fallback) throw ConfigError(at(key), "missing required number");
      return *fallback;
    }
    if (!v->is_number()) throw ConfigError(at(key), "expected a number");
    return v->get<double>();
  }

  bool boolean(const std::string& key, bool fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_boolean()) throw ConfigError(at(key), "expected true or false");
    return v->get<bool>();
  }

  std::optional<std::string> string(const std::string& key) {
    const json* v = find(key);
    if (!v) return std::nullopt;
    if (!v->is_string()) throw ConfigError(at(key), "expected a string");
    return v->get<std::string>();
  }

  void reject_unknown() const {
    for (const auto& [key, _] : node_.items()) {
      if (!seen_.count(key)) throw ConfigError(at(key), "unknown key");
    }
  }

 private:
  const json& node_;
  std::string pointer_;
  std::set<std::string> seen_;
};

const json& required(Section& s, const std::string& key) {
  const json* v = s.find(key);
  if (!v) throw ConfigError(s.at(key), "missing required section");
  return *v;
}

}  // namespace

PipelineSpec parse_pipeline_config(const json& doc, const std::filesystem::path& config_dir) {
  Section root(doc, "");
  PipelineSpec spec;
  const std::uint64_t seed = root.seed("seed", 0);
  spec.threads = static_cast<int>(root.integer("threads", 0, 0, 1024));

  {
    Section ds(required(root, "dataset"), "/dataset");
    spec.n_train = static_cast<std::size_t>(ds.integer("n_train", std::nullopt, 2));
    spec.n_test = static_cast<std::size_t>(ds.integer("n_test", 0, 0));
    spec.blobs.num_classes = static_cast<int>(ds.integer("classes", std::nullopt, 1, 1 << 20));
    spec.blobs.dim = static_cast<std::size_t>(ds.integer("dim", std::nullopt, 1));
    spec.blobs.separation = ds.number("separation", std::nullopt);
    if (!(spec.blobs.separation > 0.0)) throw ConfigError(ds.at("separation"), "must be > 0");
    spec.blobs.spread = ds.number("spread", std::nullopt);
    if (!(spec.blobs.spread >= 0.0)) throw ConfigError(ds.at("spread"), "must be >= 0");
    spec.blobs.seed = ds.seed("seed", seed);
    spec.blobs.n = spec.n_train + spec.n_test;
    if (spec.n_train < static_cast<std::size_t>(spec.blobs.num_classes)) {
      throw ConfigError(ds.at("n_train"), "must be at least the number of classes");
    }
    ds.reject_unknown();
  }

  {
    Section nz(required(root, "noise"), "/noise");
    const auto kind = nz.string("kind");
    if (!kind) throw ConfigError(nz.at("kind"), "missing required string");
    if (*kind == "sym") spec.noise.kind = corpus::NoiseKind::Symmetric;
    else if (*kind == "asym") spec.noise.kind = corpus::NoiseKind::Asymmetric;
    else throw ConfigError(nz.at("kind"), "expected \"sym\" or \"asym\"");
    spec.noise.rate = nz.number("rate", std::nullopt);
    if (!(spec.noise.rate >= 0.0 && spec.noise.rate <= 1.0)) throw ConfigError(nz.at("rate"), "must lie in [0, 1]");
    spec.noise.seed = nz.seed("seed", seed + 1);
    if (const auto t = nz.string("transition")) {
      try {
        spec.noise.transition =
            *t == "cifar10-pairflip" ? corpus::cifar10_pairflip_transition() : dataio::read_matrix_csv(config_dir / *t);
        corpus::check_transition(*spec.noise.transition, spec.blobs.num_classes);
      } catch (const Error& e) {
        throw ConfigError(nz.at("transition"), e.what());
      }
    } else if (spec.noise.kind == corpus::NoiseKind::Asymmetric) {
      throw ConfigError(nz.at("transition"), "asymmetric noise needs a transition matrix");
    }
    nz.reject_unknown();
  }

  {
    Section tr(required(root, "train"), "/train");
    auto& t = spec.train;
    constexpr std::int64_t kBig = std::numeric_limits<int>::max();
    t.rounds = static_cast<int>(tr.integer("rounds", t.rounds, 1, kBig));
    t.warmup_rounds = static_cast<int>(tr.integer("warmup_rounds", t.warmup_rounds, 0, t.rounds));
    t.iterations_per_round = static_cast<int>(tr.integer("iterations_per_round", t.iterations_per_round, 0, kBig));
    t.batch_size = static_cast<int>(tr.integer("batch_size", t.batch_size, 1, kBig));
    t.learning_rate = tr.number("learning_rate", t.learning_rate);
    t.lr_decay_round = static_cast<int>(tr.integer("lr_decay_round", t.lr_decay_round, -1, kBig));
    t.decayed_learning_rate = tr.number("decayed_learning_rate", t.decayed_learning_rate);
    t.momentum = tr.number("momentum", t.momentum);
    t.weight_decay = tr.number("weight_decay", t.weight_decay);
    t.temperature = tr.number("temperature", t.temperature);
    t.k = static_cast<std::size_t>(tr.integer("k", static_cast<std::int64_t>(t.k), 1));
    t.mu = tr.number("mu", t.mu);
    t.uniform_prior_weight = tr.number("uniform_prior_weight", t.uniform_prior_weight);
    t.neg_entropy_weight = tr.number("neg_entropy_weight", t.neg_entropy_weight);
    t.jitter = tr.number("jitter", t.jitter);
    t.hidden = static_cast<std::size_t>(tr.integer("hidden", static_cast<std::int64_t>(t.hidden), 0));
    t.l2_normalize_graph = tr.boolean("l2_normalize_graph", t.l2_normalize_graph);
    t.seed = tr.seed("seed", seed + 2);
    tr.reject_unknown();
    try {
      t.validate();
    } catch (const InputError& e) {
      throw ConfigError("/train", e.what());
    }
    if (t.k >= spec.n_train) throw ConfigError("/train/k", "must be smaller than n_train");
  }

  if (const auto out = root.string("output")) spec.output = config_dir / *out;
  root.reject_unknown();
  return spec;
}

PipelineData make_pipeline_data(const PipelineSpec& spec) {
  const NoisyDataset all = corpus::make_gaussian_blobs(spec.blobs);
  if (spec.n_test == 0) return {corpus::inject_noise(all, spec.noise), std::nullopt};
  auto [train, test] = corpus::split(all, spec.n_train, spec.blobs.seed + 7);
  return {corpus::inject_noise(train, spec.noise), std::move(test)};
}

}  // namespace lconf::cli
