#pragma once

// Estimators for the label prior a pre-trained scorer absorbed during
// pre-training, using only downstream data seen through that scorer.

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gla/numerics.hpp"

namespace gla {

/// K x K column-stochastic matrix; column j is the mean predicted
/// probability vector over examples of class j.
class TransitionMatrix {
 public:
  /// `entries` is row-major. Throws InvalidInput if an entry leaves [0, 1]
  /// or a column sum is off by more than `tolerance`.
  TransitionMatrix(std::size_t k, std::vector<double> entries,
                   double tolerance = kSimplexTolerance);

  std::size_t size() const noexcept { return k_; }
  double at(std::size_t i, std::size_t j) const { return entries_[i * k_ + j]; }
  std::span<const double> entries() const noexcept { return entries_; }

  /// P * q, accumulated left to right.
  std::vector<double> apply(std::span<const double> q) const;

 private:
  std::size_t k_;
  std::vector<double> entries_;
};

struct PowerIterConfig {
  double tol = 1e-4;
  int max_iters = 500;

  void validate() const;
};

enum class Surrogate { kCrossEntropy };

struct Method1Config {
  int steps = 2000;
  double primal_lr = 0.1;
  double dual_lr = 0.01;
  double floor = kDefaultLogFloor;
  Surrogate surrogate = Surrogate::kCrossEntropy;

  void validate() const;
};

struct BoundQuery {
  std::size_t k = 2;
  std::size_t n_per_class = 1;
  double delta = 0.05;

  void validate() const;
};

struct PowerIterResult {
  ProbabilitySimplex q;
  int iters = 0;
  double residual = 0.0;  // ||P q - q||_1 at the returned q
};

/// Throws MissingClassError for the first class with no examples.
TransitionMatrix build_transition_matrix(const LabelledLogits& data);

/// Starts from the uniform vector and iterates q <- P q / ||P q||_1 until the
/// l1 step falls below cfg.tol or cfg.max_iters is reached. Non-convergence
/// shows up as residual > tol, not as an exception.
PowerIterResult power_iterate(const TransitionMatrix& p, const PowerIterConfig& cfg = {});

/// Stationary distribution of the class-averaged prediction matrix.
ProbabilitySimplex estimate_prior_m2(const LabelledLogits& data, const PowerIterConfig& cfg = {});

/// Primal-dual descent on the Lagrangian of
///   min_q  CE(softmax(f_zs - log q), y)  s.t.  q_i >= 0, sum q = 1,
/// with q parameterized directly and started at uniform.
ProbabilitySimplex estimate_prior_m1(const LabelledLogits& validation,
                                     const Method1Config& cfg = {});

/// Mean softmax over all rows.
ProbabilitySimplex estimate_prior_naive(const LogitTable& logits);

enum class Estimator { kM1, kM2, kNaive };

std::string estimator_name(Estimator e);
/// Accepts "m1", "m2" or "naive"; throws InvalidInput otherwise.
Estimator parse_estimator(std::string_view name);

/// Runs the chosen estimator. The naive estimator ignores the labels.
ProbabilitySimplex estimate_prior(Estimator e, const LabelledLogits& data,
                                  const Method1Config& m1 = {}, const PowerIterConfig& m2 = {});

/// sqrt(K^2 / (2N) * ln(2 K^2 / delta)), i.e. the l1 bound with its constant set to 1.
double m2_error_bound(const BoundQuery& query);

}  // namespace gla
