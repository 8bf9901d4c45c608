#include "gla/synthlab.hpp"

#include <cmath>
#include <random>
#include <string>

#include "gla/errors.hpp"

namespace gla {

namespace {

enum class Stream : std::uint64_t { kLabels = 1, kZeroShotView = 2, kFineTunedView = 3 };

std::mt19937_64 make_engine(std::uint64_t seed, Stream stream, std::uint64_t cls = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(cls),
                    static_cast<std::uint32_t>(cls >> 32)};
  return std::mt19937_64(seq);
}

std::vector<double> mean_layout(const SyntheticTaskConfig& cfg) {
  std::vector<double> means(cfg.k * cfg.dim, 0.0);
  if (cfg.dim >= cfg.k) {
    // Scaled one-hot vertices: every pair of means is mean_separation apart.
    const double scale = cfg.mean_separation / std::sqrt(2.0);
    for (std::size_t c = 0; c < cfg.k; ++c) means[c * cfg.dim + c] = scale;
  } else {
    // Not enough room for orthogonal means: equally spaced on the first axis.
    for (std::size_t c = 0; c < cfg.k; ++c) {
      means[c * cfg.dim] = cfg.mean_separation * static_cast<double>(c);
    }
  }
  return means;
}

// Per-row class log-likelihoods for both views.
struct Draws {
  std::vector<int> labels;
  std::vector<double> loglik_zs;
  std::vector<double> loglik_ft;
};

// One Gaussian noise source per (view, class). The distribution object is
// kept with its engine because it caches the second value of each pair.
struct NoiseStream {
  std::mt19937_64 engine;
  std::normal_distribution<double> normal{0.0, 1.0};

  double operator()() { return normal(engine); }
};

class ClassStreams {
 public:
  ClassStreams(const SyntheticTask& task, std::uint64_t seed) : task_(task) {
    for (std::size_t c = 0; c < task.k(); ++c) {
      zs_.push_back({make_engine(seed, Stream::kZeroShotView, c)});
      ft_.push_back({make_engine(seed, Stream::kFineTunedView, c)});
    }
    x_.resize(task.dim());
  }

  // Draws the next example of class y and appends its log-likelihood rows.
  void draw(std::size_t y, Draws& out) {
    append(0, y, zs_[y], out.loglik_zs);
    append(1, y, ft_[y], out.loglik_ft);
    out.labels.push_back(static_cast<int>(y));
  }

 private:
  void append(int view, std::size_t y, NoiseStream& noise, std::vector<double>& sink) {
    const auto& mu = task_.means(view);
    const double sigma = task_.config().noise_sigma;
    for (std::size_t d = 0; d < task_.dim(); ++d) {
      x_[d] = mu[y * task_.dim() + d] + sigma * noise();
    }
    for (std::size_t c = 0; c < task_.k(); ++c) {
      sink.push_back(task_.log_likelihood(view, c, x_.data()));
    }
  }

  const SyntheticTask& task_;
  std::vector<NoiseStream> zs_;
  std::vector<NoiseStream> ft_;
  std::vector<double> x_;
};

void check_prior(const SyntheticTask& task, const ProbabilitySimplex& prior) {
  if (prior.size() != task.k()) {
    throw DimensionError("prior has " + std::to_string(prior.size()) + " classes, task has " +
                         std::to_string(task.k()));
  }
}

Draws draw_from_prior(const SyntheticTask& task, const ProbabilitySimplex& prior, std::size_t n,
                      std::uint64_t seed) {
  if (n < 1) throw InvalidInput("sample size must be at least 1");
  check_prior(task, prior);
  auto label_engine = make_engine(seed, Stream::kLabels);
  std::discrete_distribution<std::size_t> pick(prior.vector().begin(), prior.vector().end());
  ClassStreams streams(task, seed);
  Draws d;
  for (std::size_t r = 0; r < n; ++r) streams.draw(pick(label_engine), d);
  return d;
}

LogitTable with_prior(std::vector<double> loglik, std::size_t k, const ProbabilitySimplex& prior) {
  const auto log_p = log_prior(prior);
  for (std::size_t i = 0; i < loglik.size(); ++i) loglik[i] += log_p[i % k];
  const std::size_t n = loglik.size() / k;
  return LogitTable(n, k, std::move(loglik));
}

SyntheticBatch to_batch(const SyntheticTask& task, Draws d) {
  const auto& cfg = task.config();
  return SyntheticBatch{with_prior(std::move(d.loglik_zs), cfg.k, cfg.pretrain_prior),
                        with_prior(std::move(d.loglik_ft), cfg.k, cfg.source_prior),
                        std::move(d.labels)};
}

}  // namespace

void SyntheticTaskConfig::validate() const {
  if (k < 2) throw InvalidInput("synthetic task needs k >= 2");
  if (dim < 1) throw InvalidInput("synthetic task needs dim >= 1");
  if (!(noise_sigma > 0.0) || !std::isfinite(noise_sigma)) {
    throw InvalidInput("noise_sigma must be positive");
  }
  if (!std::isfinite(mean_separation) || mean_separation < 0.0) {
    throw InvalidInput("mean_separation must be finite and nonnegative");
  }
  if (pretrain_prior.size() != k || source_prior.size() != k) {
    throw InvalidInput("task priors must have k entries");
  }
}

SyntheticTask::SyntheticTask(SyntheticTaskConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  means_zs_ = mean_layout(cfg_);
  means_ft_ = means_zs_;
}

double SyntheticTask::log_likelihood(int view, std::size_t c, const double* x) const {
  const auto& mu = means(view);
  double sq = 0.0;
  for (std::size_t d = 0; d < cfg_.dim; ++d) {
    const double diff = x[d] - mu[c * cfg_.dim + d];
    sq += diff * diff;
  }
  return -sq / (2.0 * cfg_.noise_sigma * cfg_.noise_sigma);
}

SyntheticTask make_task(const SyntheticTaskConfig& cfg) { return SyntheticTask(cfg); }

SyntheticBatch sample_batch(const SyntheticTask& task, const ProbabilitySimplex& prior,
                            std::size_t n, std::uint64_t seed) {
  return to_batch(task, draw_from_prior(task, prior, n, seed));
}

SyntheticBatch sample_shots(const SyntheticTask& task, std::size_t n_per_class,
                            std::uint64_t seed) {
  if (n_per_class < 1) throw InvalidInput("shots per class must be at least 1");
  ClassStreams streams(task, seed);
  Draws d;
  for (std::size_t y = 0; y < task.k(); ++y) {
    for (std::size_t i = 0; i < n_per_class; ++i) streams.draw(y, d);
  }
  return to_batch(task, std::move(d));
}

double bayes_risk(const SyntheticTask& task, const ProbabilitySimplex& eval_prior,
                  std::size_t n_mc, std::uint64_t seed, BayesViews views) {
  const Draws d = draw_from_prior(task, eval_prior, n_mc, seed);
  const std::size_t k = task.k();
  const auto log_p = log_prior(eval_prior);
  std::vector<double> score(k);
  std::size_t errors = 0;
  for (std::size_t r = 0; r < n_mc; ++r) {
    for (std::size_t c = 0; c < k; ++c) {
      const double zs = d.loglik_zs[r * k + c];
      const double ft = d.loglik_ft[r * k + c];
      switch (views) {
        case BayesViews::kBoth: score[c] = zs + ft; break;
        case BayesViews::kZeroShotView: score[c] = zs; break;
        case BayesViews::kFineTunedView: score[c] = ft; break;
      }
      score[c] += log_p[c];
    }
    if (argmax(score) != static_cast<std::size_t>(d.labels[r])) ++errors;
  }
  return static_cast<double>(errors) / static_cast<double>(n_mc);
}

BinaryNaiveBias binary_naive_bias(double p11, double p12) {
  if (!(p12 > 0.0 && p12 < p11 && p11 <= 1.0)) {
    throw InvalidInput("binary naive bias requires 0 < p12 < p11 <= 1");
  }
  if (!(p11 > 0.5 && 1.0 - p12 > 0.5)) {
    throw InvalidInput("binary naive bias requires both diagonal entries above 0.5");
  }
  // Fixed point of q = q p11 + (1 - q) p12.
  const double q = p12 / (1.0 - p11 + p12);
  const double naive = 0.5 * (p11 + p12);
  return {q, naive, q - naive, (q - 0.5) * (q - 0.5) / q};
}

}  // namespace gla
