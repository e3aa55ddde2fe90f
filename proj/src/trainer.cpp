#include "lconf/trainer.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <numeric>
#include <random>

#include "lconf/laplace.hpp"
#include "lconf/metrics.hpp"

namespace lconf::trainer {

// ---------------------------------------------------------------- Parameters

Parameters& Parameters::operator+=(const Parameters& o) {
  w1 += o.w1;
  b1 += o.b1;
  w2 += o.w2;
  b2 += o.b2;
  return *this;
}

Parameters& Parameters::operator*=(double s) {
  w1 *= s;
  b1 *= s;
  w2 *= s;
  b2 *= s;
  return *this;
}

Parameters Parameters::zeros_like() const {
  return Parameters{Matrix::Zero(w1.rows(), w1.cols()), Vector::Zero(b1.size()), Matrix::Zero(w2.rows(), w2.cols()),
                    Vector::Zero(b2.size())};
}

std::size_t Parameters::count() const {
  return static_cast<std::size_t>(w1.size() + b1.size() + w2.size() + b2.size());
}

double& Parameters::at(std::size_t flat) {
  auto i = static_cast<Eigen::Index>(flat);
  if (i < w1.size()) return w1.data()[i];
  i -= w1.size();
  if (i < b1.size()) return b1.data()[i];
  i -= b1.size();
  if (i < w2.size()) return w2.data()[i];
  i -= w2.size();
  if (i < b2.size()) return b2.data()[i];
  throw InputError("parameter index out of range");
}

double Parameters::at(std::size_t flat) const { return const_cast<Parameters*>(this)->at(flat); }

// ---------------------------------------------------------------- MlpClassifier

MlpClassifier::MlpClassifier(std::size_t input_dim, std::size_t hidden_dim, int num_classes)
    : input_dim_(input_dim), hidden_dim_(hidden_dim), num_classes_(num_classes) {
  if (input_dim < 1 || num_classes < 1) throw InputError("classifier needs d >= 1 and C >= 1");
  const auto d = static_cast<Eigen::Index>(input_dim);
  const auto h = static_cast<Eigen::Index>(hidden_dim);
  params_.w1 = Matrix::Zero(h, d);
  params_.b1 = Vector::Zero(h);
  params_.w2 = Matrix::Zero(num_classes, h > 0 ? h : d);
  params_.b2 = Vector::Zero(num_classes);
}

MlpClassifier::MlpClassifier(std::size_t input_dim, std::size_t hidden_dim, int num_classes, std::uint64_t seed)
    : MlpClassifier(input_dim, hidden_dim, num_classes) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto fill = [&](Matrix& w, double fan_in, double gain) {
    const double scale = std::sqrt(gain / fan_in);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = scale * gauss(rng);
  };
  if (hidden_dim_ > 0) {
    fill(params_.w1, static_cast<double>(input_dim_), 2.0);
    fill(params_.w2, static_cast<double>(hidden_dim_), 1.0);
  } else {
    fill(params_.w2, static_cast<double>(input_dim_), 1.0);
  }
}

MlpClassifier MlpClassifier::zeros(std::size_t input_dim, std::size_t hidden_dim, int num_classes) {
  return MlpClassifier(input_dim, hidden_dim, num_classes);
}

void MlpClassifier::check_input(const Eigen::Ref<const Matrix>& x) const {
  if (static_cast<std::size_t>(x.cols()) != input_dim_) {
    throw InputError("classifier expects " + std::to_string(input_dim_) + " features, got " +
                     std::to_string(x.cols()));
  }
}

Matrix MlpClassifier::representation(const Eigen::Ref<const Matrix>& x) const {
  check_input(x);
  if (hidden_dim_ == 0) return x;
  Matrix pre = x * params_.w1.transpose();
  pre.rowwise() += params_.b1.transpose();
  return pre.cwiseMax(0.0);
}

Matrix MlpClassifier::logits(const Eigen::Ref<const Matrix>& x) const {
  Matrix z = representation(x) * params_.w2.transpose();
  z.rowwise() += params_.b2.transpose();
  return z;
}

namespace {

// Numerically stable row-wise log-softmax.
Matrix log_softmax(const Matrix& z) {
  Matrix out = z;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double m = z.row(i).maxCoeff();
    const double lse = m + std::log((z.row(i).array() - m).exp().sum());
    out.row(i).array() -= lse;
  }
  return out;
}

// Backprop of dL/dp through softmax: dz = p * (g - <p, g>).
Matrix softmax_backward(const Matrix& p, const Matrix& g) {
  const Vector inner = (p.array() * g.array()).rowwise().sum();
  return p.array() * (g.colwise() - inner).array();
}

}  // namespace

Matrix MlpClassifier::forward(const Eigen::Ref<const Matrix>& x) const { return log_softmax(logits(x)).array().exp(); }

// ---------------------------------------------------------------- loss

LossGrad loss_and_gradient(const MlpClassifier& model, const Eigen::Ref<const Matrix>& x,
                           const Eigen::Ref<const Matrix>& targets, const RegWeights& reg) {
  if (targets.rows() != x.rows() || targets.cols() != model.num_classes()) {
    throw InputError("loss_and_gradient: target shape does not match batch");
  }
  if (x.rows() < 1) throw InputError("loss_and_gradient: empty batch");
  const Parameters& w = model.params();
  const auto batch = static_cast<double>(x.rows());
  const bool has_hidden = model.hidden_dim() > 0;

  Matrix pre, hidden;
  if (has_hidden) {
    pre = x * w.w1.transpose();
    pre.rowwise() += w.b1.transpose();
    hidden = pre.cwiseMax(0.0);
  }
  const Matrix rep = has_hidden ? hidden : Matrix(x);
  Matrix z = rep * w.w2.transpose();
  z.rowwise() += w.b2.transpose();
  const Matrix logp = log_softmax(z);
  const Matrix p = logp.array().exp();

  LossGrad out;
  out.cross_entropy = -(targets.array() * logp.array()).sum() / batch;
  // dCE/dz = p * sum_c(y) - y, which is p - y for stochastic targets.
  Matrix dz = (p.array().colwise() * targets.rowwise().sum().array() - targets.array()).matrix() / batch;

  if (reg.uniform_prior != 0.0) {
    const double prior = 1.0 / static_cast<double>(model.num_classes());
    const Vector mean_p = p.colwise().mean().transpose();
    out.uniform_prior = (prior * (prior / mean_p.array()).log()).sum();
    const Eigen::RowVectorXd g_row = (-prior / (batch * mean_p.array())).matrix().transpose();
    const Matrix g = g_row.replicate(p.rows(), 1);
    dz += reg.uniform_prior * softmax_backward(p, g);
  }
  if (reg.neg_entropy != 0.0) {
    out.neg_entropy = (p.array() * logp.array()).sum() / batch;
    dz += reg.neg_entropy * softmax_backward(p, logp / batch);
  }
  out.loss = out.cross_entropy + reg.uniform_prior * out.uniform_prior + reg.neg_entropy * out.neg_entropy;

  out.grad.w2 = dz.transpose() * rep;
  out.grad.b2 = dz.colwise().sum().transpose();
  if (has_hidden) {
    const Matrix dpre = ((dz * w.w2).array() * (pre.array() > 0.0).cast<double>()).matrix();
    out.grad.w1 = dpre.transpose() * x;
    out.grad.b1 = dpre.colwise().sum().transpose();
  } else {
    out.grad.w1 = Matrix::Zero(0, static_cast<Eigen::Index>(model.input_dim()));
    out.grad.b1 = Vector::Zero(0);
  }
  return out;
}

// ---------------------------------------------------------------- pseudo-labels

Matrix sharpen(const Eigen::Ref<const Matrix>& p, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) throw InputError("sharpen: temperature must be > 0");
  Matrix out(p.rows(), p.cols());
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    // Work in log space so small probabilities survive large exponents.
    double m = -std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < p.cols(); ++c) {
      if (p(i, c) > 0.0) m = std::max(m, std::log(p(i, c)) / temperature);
    }
    if (!std::isfinite(m)) throw InputError("sharpen: row " + std::to_string(i) + " has no positive mass");
    double sum = 0.0;
    for (Eigen::Index c = 0; c < p.cols(); ++c) {
      out(i, c) = p(i, c) > 0.0 ? std::exp(std::log(p(i, c)) / temperature - m) : 0.0;
      sum += out(i, c);
    }
    out.row(i) /= sum;
  }
  return out;
}

Matrix cotrain_pseudo_label(const Eigen::Ref<const Matrix>& p1, const Eigen::Ref<const Matrix>& p2,
                            double temperature) {
  if (p1.rows() != p2.rows() || p1.cols() != p2.cols()) throw InputError("cotrain_pseudo_label: shape mismatch");
  return sharpen(0.5 * (p1 + p2), temperature);
}

Matrix refurbish(std::span<const double> w, const Eigen::Ref<const Matrix>& noisy_one_hot,
                 const Eigen::Ref<const Matrix>& pseudo) {
  if (static_cast<Eigen::Index>(w.size()) != noisy_one_hot.rows() || noisy_one_hot.rows() != pseudo.rows() ||
      noisy_one_hot.cols() != pseudo.cols()) {
    throw InputError("refurbish: shape mismatch");
  }
  Matrix out(pseudo.rows(), pseudo.cols());
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double wi = w[static_cast<std::size_t>(i)];
    if (!(wi >= 0.0 && wi <= 1.0)) throw InputError("refurbish: confidence outside [0, 1]");
    out.row(i) = wi * noisy_one_hot.row(i) + (1.0 - wi) * pseudo.row(i);
  }
  return out;
}

// ---------------------------------------------------------------- config

void TrainConfig::validate() const {
  if (rounds < 1) throw InputError("rounds must be >= 1");
  if (warmup_rounds < 0 || warmup_rounds > rounds) throw InputError("warmup_rounds must lie in [0, rounds]");
  if (iterations_per_round < 0) throw InputError("iterations_per_round must be >= 0");
  if (batch_size < 1) throw InputError("batch_size must be >= 1");
  if (!(learning_rate > 0.0) || !(decayed_learning_rate > 0.0)) throw InputError("learning rates must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InputError("momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw InputError("weight_decay must be >= 0");
  if (!(temperature > 0.0)) throw InputError("temperature must be > 0");
  if (k < 1) throw InputError("k must be >= 1");
  if (!(mu > 0.0)) throw InputError("mu must be > 0");
  if (!(uniform_prior_weight >= 0.0) || !(neg_entropy_weight >= 0.0)) throw InputError("regularizer weights must be >= 0");
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"rounds", c.rounds},
          {"warmup_rounds", c.warmup_rounds},
          {"iterations_per_round", c.iterations_per_round},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"lr_decay_round", c.lr_decay_round},
          {"decayed_learning_rate", c.decayed_learning_rate},
          {"momentum", c.momentum},
          {"weight_decay", c.weight_decay},
          {"temperature", c.temperature},
          {"k", c.k},
          {"mu", c.mu},
          {"uniform_prior_weight", c.uniform_prior_weight},
          {"neg_entropy_weight", c.neg_entropy_weight},
          {"jitter", c.jitter},
          {"hidden", c.hidden},
          {"l2_normalize_graph", c.l2_normalize_graph},
          {"seed", c.seed}};
}

nlohmann::json to_json(const RoundMetrics& m) {
  nlohmann::json j{{"round", m.round},
                   {"model", m.model},
                   {"phase", m.warmup ? "warmup" : "main"},
                   {"learning_rate", m.learning_rate},
                   {"train_loss", m.train_loss},
                   {"noisy_train_accuracy", m.noisy_train_accuracy}};
  const auto put = [&j](const char* key, const auto& opt) {
    if (opt) j[key] = *opt;
    else j[key] = nullptr;
  };
  put("clean_train_accuracy", m.clean_train_accuracy);
  put("test_accuracy", m.test_accuracy);
  put("ensemble_test_accuracy", m.ensemble_test_accuracy);
  put("noise_f1", m.noise_f1);
  put("mean_confidence", m.mean_confidence);
  put("mean_confidence_clean", m.mean_confidence_clean);
  put("mean_confidence_noisy", m.mean_confidence_noisy);
  put("solver_iterations", m.solver_iterations);
  if (m.aborted) j["aborted"] = *m.aborted;
  return j;
}

// ---------------------------------------------------------------- pipeline

Labels predict(const std::array<MlpClassifier, 2>& models, const Eigen::Ref<const Matrix>& x) {
  return argmax_rows(0.5 * (models[0].forward(x) + models[1].forward(x)));
}

namespace {

class Sgd {
 public:
  Sgd(const Parameters& like, double momentum, double weight_decay)
      : velocity_(like.zeros_like()), momentum_(momentum), weight_decay_(weight_decay) {}

  void step(Parameters& params, Parameters grad, double lr) {
    if (weight_decay_ > 0.0) {
      Parameters decay = params;
      decay *= weight_decay_;
      grad += decay;
    }
    if (momentum_ > 0.0) {
      velocity_ *= momentum_;
      velocity_ += grad;
      grad = velocity_;
    }
    grad *= -lr;
    params += grad;
  }

 private:
  Parameters velocity_;
  double momentum_;
  double weight_decay_;
};

// Cycles through a freshly shuffled permutation, one batch at a time.
class BatchSampler {
 public:
  BatchSampler(std::size_t n, std::size_t batch) : order_(n), batch_(std::min(batch, n)) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
  }

  std::vector<std::size_t> next(std::mt19937_64& rng) {
    if (pos_ == 0 || pos_ + batch_ > order_.size()) {
      std::shuffle(order_.begin(), order_.end(), rng);
      pos_ = 0;
    }
    std::vector<std::size_t> out(order_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                 order_.begin() + static_cast<std::ptrdiff_t>(pos_ + batch_));
    pos_ += batch_;
    return out;
  }

  // One pass in fresh random order, last batch possibly short.
  std::vector<std::vector<std::size_t>> epoch(std::mt19937_64& rng) {
    std::shuffle(order_.begin(), order_.end(), rng);
    pos_ = 0;
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t s = 0; s < order_.size(); s += batch_) {
      const std::size_t e = std::min(order_.size(), s + batch_);
      out.emplace_back(order_.begin() + static_cast<std::ptrdiff_t>(s), order_.begin() + static_cast<std::ptrdiff_t>(e));
    }
    return out;
  }

 private:
  std::vector<std::size_t> order_;
  std::size_t batch_;
  std::size_t pos_ = 0;
};

Matrix gather_rows(const Matrix& m, const std::vector<std::size_t>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = m.row(static_cast<Eigen::Index>(rows[r]));
  return out;
}

Matrix jittered(const Matrix& x, double sigma, std::mt19937_64& rng) {
  if (sigma <= 0.0) return x;
  std::normal_distribution<double> gauss(0.0, sigma);
  Matrix out = x;
  for (Eigen::Index j = 0; j < out.cols(); ++j)
    for (Eigen::Index i = 0; i < out.rows(); ++i) out(i, j) += gauss(rng);
  return out;
}

double feature_std(const Matrix& x) {
  const double mean = x.mean();
  return std::sqrt((x.array() - mean).square().mean());
}

}  // namespace

PipelineResult run_pipeline(const NoisyDataset& train, const std::optional<NoisyDataset>& test,
                            const TrainConfig& config) {
  config.validate();
  const int classes = train.num_classes();
  const Matrix x = train.features().data();
  const Labels& noisy = train.noisy_labels();
  const Matrix noisy_one_hot = one_hot(noisy, classes);
  const auto& truth = metrics::true_labels(train);
  std::optional<std::vector<bool>> clean;
  if (truth) clean = metrics::clean_mask(train);
  std::optional<Matrix> x_test;
  if (test) {
    if (test->features().d() != train.features().d()) throw InputError("test features have a different dimension");
    x_test = test->features().data();
  }

  std::mt19937_64 rng(config.seed);
  const std::uint64_t seed0 = rng(), seed1 = rng();
  PipelineResult result{{MlpClassifier(train.features().d(), config.hidden, classes, seed0),
                         MlpClassifier(train.features().d(), config.hidden, classes, seed1)},
                        {},
                        std::nullopt,
                        std::nullopt};
  auto& models = result.models;
  std::array<Sgd, 2> optimizers{Sgd(models[0].params(), config.momentum, config.weight_decay),
                                Sgd(models[1].params(), config.momentum, config.weight_decay)};
  BatchSampler sampler(train.size(), static_cast<std::size_t>(config.batch_size));
  const double sigma = config.jitter >= 0.0 ? config.jitter : 0.05 * feature_std(x);
  const int iterations = config.iterations_per_round > 0
                             ? config.iterations_per_round
                             : static_cast<int>((train.size() + static_cast<std::size_t>(config.batch_size) - 1) /
                                                static_cast<std::size_t>(config.batch_size));

  laplace::EstimateOptions est;
  est.k = config.k;
  est.solver.mu = config.mu;
  est.knn.l2_normalize = config.l2_normalize_graph;

  for (int r = 0; r < config.rounds; ++r) {
    const double lr = (config.lr_decay_round >= 0 && r >= config.lr_decay_round) ? config.decayed_learning_rate
                                                                                  : config.learning_rate;
    for (int m = 0; m < 2; ++m) {
      RoundMetrics rm;
      rm.round = r;
      rm.model = m;
      rm.warmup = r < config.warmup_rounds;
      rm.learning_rate = lr;
      double loss_sum = 0.0;
      int steps = 0;

      if (rm.warmup) {
        const RegWeights reg{0.0, config.neg_entropy_weight};
        for (const auto& batch : sampler.epoch(rng)) {
          const Matrix xb = gather_rows(x, batch);
          const Matrix yb = gather_rows(noisy_one_hot, batch);
          LossGrad lg = loss_and_gradient(models[m], xb, yb, reg);
          loss_sum += lg.loss;
          ++steps;
          optimizers[m].step(models[m].params(), std::move(lg.grad), lr);
        }
      } else {
        // Confidence for model m comes from its peer.
        const MlpClassifier& peer = models[1 - m];
        std::optional<laplace::EstimateResult> estimated;
        try {
          estimated = laplace::estimate(FeatureMatrix(peer.representation(x)), noisy, classes, est);
        } catch (const DegenerateGraphError& e) {
          rm.aborted = e.what();
        }
        if (estimated) {
          const auto& w = estimated->confidence.values();
          rm.solver_iterations = *std::max_element(estimated->solve.iterations.begin(), estimated->solve.iterations.end());
          rm.mean_confidence = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());
          if (clean) {
            rm.noise_f1 = metrics::noise_detection_scores(estimated->confidence, *clean).f1;
            double sc = 0.0, sn = 0.0;
            std::size_t nc = 0, nn = 0;
            for (std::size_t i = 0; i < w.size(); ++i) {
              if ((*clean)[i]) sc += w[i], ++nc;
              else sn += w[i], ++nn;
            }
            if (nc) rm.mean_confidence_clean = sc / static_cast<double>(nc);
            if (nn) rm.mean_confidence_noisy = sn / static_cast<double>(nn);
            result.final_noise_f1 = rm.noise_f1;
          }
          const RegWeights reg{config.uniform_prior_weight, 0.0};
          for (int it = 0; it < iterations; ++it) {
            const auto batch = sampler.next(rng);
            const Matrix xb = gather_rows(x, batch);
            const Matrix weak = jittered(xb, sigma, rng);
            const Matrix pseudo =
                cotrain_pseudo_label(models[0].forward(weak), models[1].forward(weak), config.temperature);
            std::vector<double> wb(batch.size());
            for (std::size_t b = 0; b < batch.size(); ++b) wb[b] = w[batch[b]];
            const Matrix target = refurbish(wb, gather_rows(noisy_one_hot, batch), pseudo);
            const Matrix strong = jittered(xb, sigma, rng);
            LossGrad lg = loss_and_gradient(models[m], strong, target, reg);
            loss_sum += lg.loss;
            ++steps;
            optimizers[m].step(models[m].params(), std::move(lg.grad), lr);
          }
        }
      }

      rm.train_loss = steps ? loss_sum / steps : 0.0;
      const Labels train_pred = argmax_rows(models[m].forward(x));
      rm.noisy_train_accuracy = metrics::accuracy(train_pred, noisy);
      if (truth) rm.clean_train_accuracy = metrics::accuracy(train_pred, *truth);
      if (x_test) {
        const auto& test_truth = metrics::true_labels(*test);
        if (test_truth) {
          rm.test_accuracy = metrics::accuracy(argmax_rows(models[m].forward(*x_test)), *test_truth);
          rm.ensemble_test_accuracy = metrics::accuracy(predict(models, *x_test), *test_truth);
        }
      }
      result.rounds.push_back(std::move(rm));
    }
  }
  if (!result.rounds.empty()) result.final_test_accuracy = result.rounds.back().ensemble_test_accuracy;
  return result;
}

}  // namespace lconf::trainer
