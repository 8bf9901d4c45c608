#pragma once

// Synthetic label-shift tasks with exact Bayes logits.
//
// Each class owns a spherical Gaussian in two independent feature views.
// The zero-shot scorer sees view 1 and carries the pre-training prior; the
// fine-tuned scorer sees view 2 and carries the source prior. Both are the
// exact log-posteriors up to a per-row constant, so the two scorers are
// conditionally independent given the label.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "gla/numerics.hpp"

namespace gla {

struct SyntheticTaskConfig {
  std::size_t k = 2;
  std::size_t dim = 2;
  double mean_separation = 3.0;
  double noise_sigma = 1.0;
  ProbabilitySimplex pretrain_prior = ProbabilitySimplex::uniform(2);
  ProbabilitySimplex source_prior = ProbabilitySimplex::uniform(2);
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const SyntheticTaskConfig&, const SyntheticTaskConfig&) = default;
};

class SyntheticTask {
 public:
  explicit SyntheticTask(SyntheticTaskConfig cfg);

  const SyntheticTaskConfig& config() const noexcept { return cfg_; }
  std::size_t k() const noexcept { return cfg_.k; }
  std::size_t dim() const noexcept { return cfg_.dim; }

  /// Class means, row-major k x dim, for view 0 (zero-shot) or 1 (fine-tuned).
  const std::vector<double>& means(int view) const { return view == 0 ? means_zs_ : means_ft_; }

  /// Log-density of x under class c in the given view, dropping the
  /// normalizer shared by all classes.
  double log_likelihood(int view, std::size_t c, const double* x) const;

  friend bool operator==(const SyntheticTask&, const SyntheticTask&) = default;

 private:
  SyntheticTaskConfig cfg_;
  std::vector<double> means_zs_;
  std::vector<double> means_ft_;
};

struct SyntheticBatch {
  LogitTable zs_logits;
  LogitTable ft_logits;
  std::vector<int> labels;

  LabelledLogits zero_shot() const { return {zs_logits, labels}; }
  LabelledLogits fine_tuned() const { return {ft_logits, labels}; }
};

SyntheticTask make_task(const SyntheticTaskConfig& cfg);

/// Labels drawn from `prior`; features from the fixed class-conditionals.
/// The i-th draw of class c depends only on (seed, c, i), never on the prior.
SyntheticBatch sample_batch(const SyntheticTask& task, const ProbabilitySimplex& prior,
                            std::size_t n, std::uint64_t seed);

/// Exactly n_per_class rows of each class, class-major. Uses the same
/// per-class feature streams as sample_batch.
SyntheticBatch sample_shots(const SyntheticTask& task, std::size_t n_per_class,
                            std::uint64_t seed);

enum class BayesViews { kBoth, kZeroShotView, kFineTunedView };

/// Monte-Carlo 0-1 risk of the exact Bayes classifier under eval_prior.
/// Draws the same samples as sample_batch(task, eval_prior, n_mc, seed).
double bayes_risk(const SyntheticTask& task, const ProbabilitySimplex& eval_prior,
                  std::size_t n_mc = 100000, std::uint64_t seed = 0,
                  BayesViews views = BayesViews::kBoth);

struct BinaryNaiveBias {
  double q_true;
  double q_naive;
  double error;
  double lower_bound;
};

/// Two-class naive-estimation bias for a transition matrix with first row
/// (p11, p12). Requires 0 < p12 < p11 <= 1, p11 > 0.5 and 1 - p12 > 0.5.
BinaryNaiveBias binary_naive_bias(double p11, double p12);

}  // namespace gla
