#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "lconf/corpus.hpp"
#include "lconf/dataio.hpp"
#include "lconf/gmm.hpp"
#include "lconf/laplace.hpp"
#include "lconf/metrics.hpp"
#include "lconf/parallel.hpp"
#include "lconf/reduce.hpp"
#include "lconf/trainer.hpp"
#include "pipeline_config.hpp"

namespace lconf::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

class UsageError : public Error {
 public:
  using Error::Error;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

fs::path truth_path_for(const fs::path& labels) {
  fs::path p = labels;
  const auto ext = p.extension();
  p.replace_extension();
  p += "_truth";
  p += ext.empty() ? fs::path(".csv") : ext;
  return p;
}

fs::path stats_path_for(const fs::path& out) {
  fs::path p = out;
  p.replace_extension(".json");
  if (p == out) p += ".stats.json";
  return p;
}

void emit(const json& doc, const std::string& out_path, std::ostream& out) {
  if (out_path.empty()) out << doc.dump(2) << "\n";
  else dataio::write_json(out_path, doc);
}

// "" -> no reduction, "auto" -> min(64, d), otherwise an integer.
std::optional<std::size_t> parse_pca_dim(const std::string& flag, std::size_t d) {
  if (flag.empty() || flag == "0") return std::nullopt;
  if (flag == "auto") return reduce::default_target_dim(d);
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(flag, &pos);
    if (pos == flag.size() && v > 0) return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
  }
  throw UsageError("--pca-dim expects a positive integer or \"auto\", got \"" + flag + "\"");
}

Labels load_labels(const std::string& path, std::size_t expected, int classes) {
  Labels labels = dataio::read_labels_csv(path);
  if (expected && labels.size() != expected) {
    throw InputError(path + ": " + std::to_string(labels.size()) + " labels for " + std::to_string(expected) +
                     " samples");
  }
  if (classes > 0) check_labels(labels, classes);
  return labels;
}

// ------------------------------------------------------------------ synth

struct SynthArgs {
  std::size_t n = 0;
  int classes = 0;
  std::size_t dim = 0;
  double sep = 8.0;
  double spread = 1.0;
  std::uint64_t seed = 0;
  std::string out_features;
  std::string out_labels;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  const NoisyDataset ds = corpus::make_gaussian_blobs({a.n, a.classes, a.dim, a.sep, a.spread, a.seed});
  dataio::write_embeddings(a.out_features, ds.features());
  dataio::write_labels_csv(a.out_labels, ds.noisy_labels());
  const fs::path truth = truth_path_for(a.out_labels);
  dataio::write_labels_csv(truth, *metrics::true_labels(ds));
  out << "wrote " << a.out_features << ", " << a.out_labels << ", " << truth.string() << "\n";
  return kOk;
}

// ------------------------------------------------------------------ corrupt

struct CorruptArgs {
  std::string labels;
  std::string noise;
  double rate = 0.0;
  std::string transition;
  std::uint64_t seed = 0;
  std::string out;
  int classes = 0;
};

int cmd_corrupt(const CorruptArgs& a, std::ostream& out) {
  const Labels labels = dataio::read_labels_csv(a.labels);
  Labels noisy;
  if (a.noise == "sym") {
    int classes = a.classes;
    if (classes <= 0) classes = labels.empty() ? 1 : *std::max_element(labels.begin(), labels.end()) + 1;
    noisy = corpus::corrupt_symmetric(labels, classes, a.rate, a.seed);
  } else {
    if (a.transition.empty()) throw UsageError("--noise asym requires --transition");
    const Matrix t =
        a.transition == "cifar10-pairflip" ? corpus::cifar10_pairflip_transition() : dataio::read_matrix_csv(a.transition);
    if (a.classes > 0 && t.rows() != a.classes) throw UsageError("--classes disagrees with the transition matrix size");
    noisy = corpus::corrupt_asymmetric(labels, a.rate, t, a.seed);
  }
  dataio::write_labels_csv(a.out, noisy);
  std::size_t changed = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) changed += labels[i] != noisy[i];
  out << "changed " << changed << " of " << labels.size() << " labels\n";
  return kOk;
}

// ------------------------------------------------------------------ estimate

struct EstimateArgs {
  std::string features;
  std::string labels;
  int classes = 0;
  std::string method = "laplace";
  std::size_t k = 10;
  double mu = 1.0;
  std::string pca_dim;
  std::string probs;
  std::string out;
  double tol = 1e-8;
  int max_iter = 2000;
  std::string rhs_mode = "paper";
  bool l2_normalize = false;
  std::uint64_t seed = 0;
};

struct LaplaceRun {
  laplace::EstimateResult result;
  std::size_t reduced_dim = 0;
  double pca_seconds = 0.0;
  double total_seconds = 0.0;
};

LaplaceRun run_laplace(const FeatureMatrix& features, const Labels& labels, int classes,
                       const laplace::EstimateOptions& opts, std::optional<std::size_t> pca_dim) {
  const auto t0 = Clock::now();
  std::optional<FeatureMatrix> reduced;
  double pca_seconds = 0.0;
  if (pca_dim) {
    reduced = reduce::pca_transform(reduce::pca_fit(features, *pca_dim), features);
    pca_seconds = seconds_since(t0);
  }
  const FeatureMatrix& used = reduced ? *reduced : features;
  auto result = laplace::estimate(used, labels, classes, opts);
  return LaplaceRun{std::move(result), used.d(), pca_seconds, seconds_since(t0)};
}

int cmd_estimate(const EstimateArgs& a, std::ostream& out) {
  if (a.method == "gmm" && a.probs.empty()) throw UsageError("--method gmm requires --probs");
  if (a.method == "laplace" && !a.probs.empty()) throw UsageError("--probs only applies to --method gmm");

  json stats{{"method", a.method}, {"classes", a.classes}};
  std::optional<ConfidenceVector> w;

  if (a.method == "laplace") {
    const FeatureMatrix features = dataio::read_embeddings(a.features);
    const Labels labels = load_labels(a.labels, features.n(), a.classes);
    laplace::EstimateOptions opts;
    opts.k = a.k;
    opts.solver.mu = a.mu;
    opts.solver.tol = a.tol;
    opts.solver.max_iter = a.max_iter;
    opts.solver.rhs_mode = a.rhs_mode == "stationary" ? laplace::RhsMode::Stationary : laplace::RhsMode::Paper;
    opts.knn.l2_normalize = a.l2_normalize;
    const auto pca = parse_pca_dim(a.pca_dim, features.d());
    LaplaceRun run = run_laplace(features, labels, a.classes, opts, pca);
    stats["n"] = features.n();
    stats["dim"] = features.d();
    stats["reduced_dim"] = pca ? json(run.reduced_dim) : json(nullptr);
    stats["k"] = a.k;
    stats["mu"] = a.mu;
    stats["rhs_mode"] = a.rhs_mode;
    stats["solver"] = {{"iterations", run.result.solve.iterations},
                       {"residuals", run.result.solve.residuals},
                       {"degenerate_rows", run.result.degenerate_rows}};
    stats["timings"] = {{"pca", run.pca_seconds},
                        {"graph", run.result.graph_seconds},
                        {"solve", run.result.solve_seconds},
                        {"graph_and_solve", run.result.graph_seconds + run.result.solve_seconds},
                        {"total", run.total_seconds}};
    w = std::move(run.result.confidence);
  } else {
    const RowMatrix probs = dataio::read_matrix(a.probs);
    if (probs.cols() != a.classes) throw InputError("--probs has " + std::to_string(probs.cols()) + " columns, expected " + std::to_string(a.classes));
    const Labels labels = load_labels(a.labels, static_cast<std::size_t>(probs.rows()), a.classes);
    const auto losses = gmm::per_sample_loss(probs, labels);
    try {
      const gmm::GmmFit fit = gmm::fit_gmm2(losses, {100, 1e-6, a.seed});
      stats["model"] = {{"means", fit.model.means}, {"variances", fit.model.variances}, {"weights", fit.model.weights}};
      stats["iterations"] = fit.iterations;
      stats["converged"] = fit.converged;
      stats["fallback"] = false;
      w = gmm::clean_posterior(fit.model, losses);
    } catch (const DegenerateFitError& e) {
      stats["fallback"] = true;
      stats["fallback_reason"] = e.what();
      w = ConfidenceVector(std::vector<double>(losses.size(), 1.0));
    }
  }

  dataio::write_confidence_csv(a.out, *w);
  const fs::path stats_path = stats_path_for(a.out);
  dataio::write_json(stats_path, stats);
  out << "wrote " << a.out << " and " << stats_path.string() << "\n";
  return kOk;
}

// ------------------------------------------------------------------ bench

struct BenchArgs {
  std::string features;
  std::string labels;
  std::string truth_labels;
  int classes = 0;
  std::size_t k = 10;
  double mu = 1.0;
  std::string pca_dim;
  int repeats = 3;
  std::string out;
};

int cmd_bench(const BenchArgs& a, std::ostream& out) {
  if (a.repeats < 1) throw UsageError("--repeats must be >= 1");
  const FeatureMatrix features = dataio::read_embeddings(a.features);
  const Labels labels = load_labels(a.labels, features.n(), a.classes);
  const auto pca = parse_pca_dim(a.pca_dim.empty() ? "auto" : a.pca_dim, features.d());
  std::optional<std::vector<bool>> clean;
  if (!a.truth_labels.empty()) {
    const Labels truth = load_labels(a.truth_labels, features.n(), a.classes);
    clean.emplace(truth.size());
    for (std::size_t i = 0; i < truth.size(); ++i) (*clean)[i] = truth[i] == labels[i];
  }
  laplace::EstimateOptions opts;
  opts.k = a.k;
  opts.solver.mu = a.mu;

  json doc{{"n", features.n()}, {"dim", features.d()}, {"pca_dim", *pca}, {"k", a.k}, {"mu", a.mu},
           {"repeats", a.repeats}};
  std::vector<std::vector<double>> confidences;
  for (const auto& [name, dim] : {std::pair{"plain", std::optional<std::size_t>{}}, std::pair{"pca", pca}}) {
    std::vector<double> seconds;
    std::optional<LaplaceRun> last;
    for (int r = 0; r < a.repeats; ++r) {
      last = run_laplace(features, labels, a.classes, opts, dim);
      seconds.push_back(last->total_seconds);
    }
    json variant{{"seconds", seconds}, {"median_seconds", median(seconds)}};
    if (clean) variant["f1"] = metrics::noise_detection_scores(last->result.confidence, *clean).f1;
    doc[name] = std::move(variant);
    confidences.push_back(last->result.confidence.values());
  }
  double diff = 0.0;
  for (std::size_t i = 0; i < confidences[0].size(); ++i) diff = std::max(diff, std::abs(confidences[0][i] - confidences[1][i]));
  doc["max_abs_confidence_diff"] = diff;
  emit(doc, a.out, out);
  return kOk;
}

// ------------------------------------------------------------------ pipeline

struct PipelineArgs {
  std::string config;
  std::string out;
};

int cmd_pipeline(const PipelineArgs& a, std::ostream& out) {
  json doc;
  try {
    doc = dataio::read_json(a.config);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
  const PipelineSpec spec = parse_pipeline_config(doc, fs::path(a.config).parent_path());
  if (spec.threads > 0) set_thread_count(spec.threads);

  const auto t0 = Clock::now();
  auto [train, test] = make_pipeline_data(spec);
  const double data_seconds = seconds_since(t0);
  const auto mask = metrics::clean_mask(train);
  const double actual_noise = 1.0 - static_cast<double>(std::count(mask.begin(), mask.end(), true)) / static_cast<double>(mask.size());

  const auto t1 = Clock::now();
  const trainer::PipelineResult result = trainer::run_pipeline(train, test, spec.train);
  const double train_seconds = seconds_since(t1);

  dataio::RunReport report;
  report.config = {{"input", doc}, {"resolved_train", trainer::to_json(spec.train)}};
  for (const auto& r : result.rounds) report.per_epoch.push_back(trainer::to_json(r));
  report.final_metrics = {{"test_accuracy", result.final_test_accuracy ? json(*result.final_test_accuracy) : json(nullptr)},
                          {"noise_f1", result.final_noise_f1 ? json(*result.final_noise_f1) : json(nullptr)},
                          {"actual_noise_rate", actual_noise},
                          {"n_train", train.size()},
                          {"n_test", test ? test->size() : 0}};
  report.timings = {{"data", data_seconds}, {"train", train_seconds}, {"total", seconds_since(t0)}};

  const std::string dest = !a.out.empty() ? a.out : (spec.output ? spec.output->string() : std::string());
  if (dest.empty()) out << dataio::to_json(report).dump(2) << "\n";
  else {
    dataio::write_report(dest, report);
    out << "wrote " << dest << "\n";
  }
  return kOk;
}

// ------------------------------------------------------------------ eval

struct EvalArgs {
  std::string confidence;
  std::string truth_labels;
  std::string noisy_labels;
  double threshold = 0.5;
  std::string out;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const ConfidenceVector w = dataio::read_confidence_csv(a.confidence);
  const Labels truth = load_labels(a.truth_labels, w.size(), 0);
  const Labels noisy = load_labels(a.noisy_labels, w.size(), 0);
  std::vector<bool> clean(w.size());
  for (std::size_t i = 0; i < clean.size(); ++i) clean[i] = truth[i] == noisy[i];
  const auto scores = metrics::noise_detection_scores(w, clean, a.threshold);
  json doc = metrics::to_json(scores);
  doc["threshold"] = a.threshold;
  doc["n"] = w.size();
  doc["noise_rate"] = 1.0 - static_cast<double>(std::count(clean.begin(), clean.end(), true)) / static_cast<double>(clean.size());
  emit(doc, a.out, out);
  return kOk;
}

int exit_code_for(const Error& e) {
  if (dynamic_cast<const UsageError*>(&e) || dynamic_cast<const ConfigError*>(&e)) return kUsage;
  if (dynamic_cast<const DegenerateGraphError*>(&e) || dynamic_cast<const ConvergenceError*>(&e) ||
      dynamic_cast<const DegenerateFitError*>(&e)) {
    return kNumerical;
  }
  return kData;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Label confidence estimation for noisy-labeled embeddings", "lconf"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Cap on worker threads (0 = all)")->check(CLI::NonNegativeNumber);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a Gaussian-blob dataset");
  s->add_option("--n", synth.n, "Sample count")->required();
  s->add_option("--classes", synth.classes, "Class count")->required()->check(CLI::PositiveNumber);
  s->add_option("--dim", synth.dim, "Feature dimension")->required()->check(CLI::PositiveNumber);
  s->add_option("--sep", synth.sep, "Distance of class means from the origin")->capture_default_str();
  s->add_option("--spread", synth.spread, "Per-coordinate standard deviation")->capture_default_str();
  s->add_option("--seed", synth.seed)->capture_default_str();
  s->add_option("--out-features", synth.out_features, ".lcf output")->required();
  s->add_option("--out-labels", synth.out_labels, "labels CSV output; truth goes to <stem>_truth.csv")->required();

  CorruptArgs corrupt;
  auto* c = app.add_subcommand("corrupt", "Inject synthetic label noise");
  c->add_option("--labels", corrupt.labels)->required();
  c->add_option("--noise", corrupt.noise)->required()->check(CLI::IsMember({"sym", "asym"}));
  c->add_option("--rate", corrupt.rate)->required()->check(CLI::Range(0.0, 1.0));
  c->add_option("--transition", corrupt.transition, "C x C CSV, or \"cifar10-pairflip\"");
  c->add_option("--seed", corrupt.seed)->capture_default_str();
  c->add_option("--out", corrupt.out)->required();
  c->add_option("--classes", corrupt.classes, "Class count for sym noise (default: max label + 1)");

  EstimateArgs est;
  auto* e = app.add_subcommand("estimate", "Estimate per-sample label confidence");
  e->add_option("--features", est.features, ".lcf embeddings (laplace)");
  e->add_option("--labels", est.labels)->required();
  e->add_option("--classes", est.classes)->required()->check(CLI::PositiveNumber);
  e->add_option("--method", est.method)->check(CLI::IsMember({"laplace", "gmm"}))->capture_default_str();
  e->add_option("--k", est.k)->check(CLI::PositiveNumber)->capture_default_str();
  e->add_option("--mu", est.mu)->check(CLI::PositiveNumber)->capture_default_str();
  e->add_option("--pca-dim", est.pca_dim, "Reduce features first: integer or \"auto\"");
  e->add_option("--probs", est.probs, ".lcf N x C predicted probabilities (gmm)");
  e->add_option("--out", est.out, "Confidence CSV; stats go next to it as .json")->required();
  e->add_option("--tol", est.tol)->check(CLI::PositiveNumber)->capture_default_str();
  e->add_option("--max-iter", est.max_iter)->check(CLI::PositiveNumber)->capture_default_str();
  e->add_option("--rhs-mode", est.rhs_mode)->check(CLI::IsMember({"paper", "stationary"}))->capture_default_str();
  e->add_flag("--l2-normalize", est.l2_normalize, "Row-normalize features before the k-NN graph");
  e->add_option("--seed", est.seed)->capture_default_str();

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "Time estimation with and without PCA");
  b->add_option("--features", bench.features)->required();
  b->add_option("--labels", bench.labels)->required();
  b->add_option("--truth-labels", bench.truth_labels, "Enables F1 reporting");
  b->add_option("--classes", bench.classes)->required()->check(CLI::PositiveNumber);
  b->add_option("--k", bench.k)->check(CLI::PositiveNumber)->capture_default_str();
  b->add_option("--mu", bench.mu)->check(CLI::PositiveNumber)->capture_default_str();
  b->add_option("--pca-dim", bench.pca_dim, "integer or \"auto\" (default)");
  b->add_option("--repeats", bench.repeats)->capture_default_str();
  b->add_option("--out", bench.out, "JSON output (default: stdout)");

  PipelineArgs pipe;
  auto* p = app.add_subcommand("pipeline", "Run the co-training pipeline from a JSON config");
  p->add_option("--config", pipe.config)->required();
  p->add_option("--out", pipe.out, "Report path (overrides the config)");

  EvalArgs ev;
  auto* v = app.add_subcommand("eval", "Score a confidence vector against known noise");
  v->add_option("--confidence", ev.confidence)->required();
  v->add_option("--truth-labels", ev.truth_labels)->required();
  v->add_option("--noisy-labels", ev.noisy_labels)->required();
  v->add_option("--threshold", ev.threshold)->capture_default_str();
  v->add_option("--out", ev.out, "JSON output (default: stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& pe) {
    err << "usage error: " << pe.what() << "\n";
    return kUsage;
  }

  try {
    set_thread_count(threads);
    if (s->parsed()) return cmd_synth(synth, out);
    if (c->parsed()) return cmd_corrupt(corrupt, out);
    if (e->parsed()) {
      if (est.method == "laplace" && est.features.empty()) throw UsageError("--method laplace requires --features");
      return cmd_estimate(est, out);
    }
    if (b->parsed()) return cmd_bench(bench, out);
    if (p->parsed()) return cmd_pipeline(pipe, out);
    if (v->parsed()) return cmd_eval(ev, out);
  } catch (const Error& ex) {
    const int code = exit_code_for(ex);
    err << (code == kUsage ? "usage error: " : "error: ") << ex.what() << "\n";
    return code;
  } catch (const json::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return kData;
  }
  return kUsage;
}

}  // namespace lconf::cli
