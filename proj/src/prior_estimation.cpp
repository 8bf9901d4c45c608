#include "gla/prior_estimation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gla/errors.hpp"
#include "gla/kernels.hpp"

namespace gla {

TransitionMatrix::TransitionMatrix(std::size_t k, std::vector<double> entries, double tolerance)
    : k_(k), entries_(std::move(entries)) {
  if (k_ < 1) throw InvalidInput("transition matrix needs at least one class");
  if (entries_.size() != k_ * k_) throw DimensionError("transition matrix is not K x K");
  for (double e : entries_) {
    if (!(e >= 0.0 && e <= 1.0)) throw InvalidInput("transition entry outside [0, 1]");
  }
  for (std::size_t j = 0; j < k_; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < k_; ++i) s += entries_[i * k_ + j];
    if (std::abs(s - 1.0) > tolerance) {
      throw InvalidInput("transition column " + std::to_string(j) + " sums to " +
                         std::to_string(s));
    }
  }
}

std::vector<double> TransitionMatrix::apply(std::span<const double> q) const {
  require_length(q, k_, "vector");
  std::vector<double> out(k_, 0.0);
  for (std::size_t i = 0; i < k_; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < k_; ++j) s += entries_[i * k_ + j] * q[j];
    out[i] = s;
  }
  return out;
}

void PowerIterConfig::validate() const {
  if (!(tol > 0.0)) throw InvalidInput("power iteration tol must be positive");
  if (max_iters < 1) throw InvalidInput("power iteration max_iters must be at least 1");
}

void Method1Config::validate() const {
  if (steps < 1) throw InvalidInput("method 1 steps must be at least 1");
  if (!(primal_lr > 0.0) || !(dual_lr > 0.0)) {
    throw InvalidInput("method 1 learning rates must be positive");
  }
  if (!(floor > 0.0)) throw InvalidInput("log floor must be positive");
}

void BoundQuery::validate() const {
  if (k < 2) throw InvalidInput("bound needs at least two classes");
  if (n_per_class < 1) throw InvalidInput("bound needs at least one shot per class");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidInput("delta must lie in (0, 1)");
}

TransitionMatrix build_transition_matrix(const LabelledLogits& data) {
  const std::size_t k = data.n_classes();
  const auto probs = kernels::softmax_rows(data.logits());
  std::vector<std::size_t> counts;
  auto entries = kernels::class_mean_columns(probs, k, data.labels(), counts);
  for (std::size_t j = 0; j < k; ++j) {
    if (counts[j] == 0) throw MissingClassError(j);
  }
  return TransitionMatrix(k, std::move(entries));
}

namespace {

std::vector<double> l1_normalized(std::vector<double> v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  for (double& x : v) x /= s;
  return v;
}

}  // namespace

PowerIterResult power_iterate(const TransitionMatrix& p, const PowerIterConfig& cfg) {
  cfg.validate();
  const std::size_t k = p.size();
  std::vector<double> q(k, 1.0 / static_cast<double>(k));
  int iters = 0;
  for (int i = 1; i <= cfg.max_iters; ++i) {
    iters = i;
    auto next = l1_normalized(p.apply(q));
    const double step = l1_distance(next, q);
    q = std::move(next);
    if (step < cfg.tol) break;
  }
  const double residual = l1_distance(p.apply(q), q);
  // Column-stochastic P keeps q nonnegative with unit mass up to rounding.
  return {ProbabilitySimplex::normalized(std::move(q)), iters, residual};
}

ProbabilitySimplex estimate_prior_m2(const LabelledLogits& data, const PowerIterConfig& cfg) {
  return power_iterate(build_transition_matrix(data), cfg).q;
}

ProbabilitySimplex estimate_prior_m1(const LabelledLogits& validation, const Method1Config& cfg) {
  cfg.validate();
  const std::size_t k = validation.n_classes();
  const std::size_t n = validation.n_examples();
  const auto& logits = validation.logits();
  const auto& labels = validation.labels();
  {
    std::vector<std::size_t> seen(k, 0);
    for (int y : labels) ++seen[static_cast<std::size_t>(y)];
    for (std::size_t j = 0; j < k; ++j) {
      if (seen[j] == 0) throw MissingClassError(j);
    }
  }

  // Primal q and the multipliers for q_i >= 0 (lambda) and sum q = 1 (nu).
  std::vector<double> q(k, 1.0 / static_cast<double>(k));
  std::vector<double> lambda(k, 0.0);
  double nu = 0.0;

  std::vector<double> log_q(k);
  std::vector<double> adjusted(k);
  std::vector<double> prob(k);
  std::vector<double> residual(k);  // mean over rows of (onehot(y) - softmax)

  for (int step = 0; step < cfg.steps; ++step) {
    for (std::size_t c = 0; c < k; ++c) log_q[c] = std::log(std::max(q[c], cfg.floor));
    std::fill(residual.begin(), residual.end(), 0.0);
    double loss = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const auto row = logits.row(r);
      for (std::size_t c = 0; c < k; ++c) adjusted[c] = row[c] - log_q[c];
      const double peak = *std::max_element(adjusted.begin(), adjusted.end());
      double total = 0.0;
      for (std::size_t c = 0; c < k; ++c) {
        prob[c] = std::exp(adjusted[c] - peak);
        total += prob[c];
      }
      const auto y = static_cast<std::size_t>(labels[r]);
      loss += std::log(total) + peak - adjusted[y];
      for (std::size_t c = 0; c < k; ++c) residual[c] -= prob[c] / total;
      residual[y] += 1.0;
    }
    loss /= static_cast<double>(n);
    if (!std::isfinite(loss)) {
      throw OptimizationError("method 1 loss became non-finite at step " + std::to_string(step));
    }

    // d CE / d q_c = mean(onehot_c - p_c) / q_c, since d(-log q_c)/d q_c = -1/q_c.
    double mass = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      const double grad_risk = residual[c] / static_cast<double>(n) / std::max(q[c], cfg.floor);
      const double grad = grad_risk - lambda[c] - nu;
      q[c] = std::max(q[c] - cfg.primal_lr * grad, cfg.floor);
      if (!std::isfinite(q[c])) {
        throw OptimizationError("method 1 iterate diverged at step " + std::to_string(step));
      }
      mass += q[c];
    }
    // Dual ascent: d/d lambda_c = -q_c, d/d nu = 1 - sum q.
    for (std::size_t c = 0; c < k; ++c) lambda[c] = std::max(0.0, lambda[c] - cfg.dual_lr * q[c]);
    nu += cfg.dual_lr * (1.0 - mass);
    if (!std::isfinite(nu) || !std::isfinite(mass)) {
      throw OptimizationError("method 1 multipliers diverged at step " + std::to_string(step));
    }
  }

  // The adjusted risk only sees q up to scale, so rescaling to unit mass keeps
  // the objective value; the projection then enforces the constraints exactly.
  double mass = 0.0;
  for (double x : q) mass += x;
  for (double& x : q) x /= mass;
  return project_to_simplex(q);
}

ProbabilitySimplex estimate_prior_naive(const LogitTable& logits) {
  const auto probs = kernels::softmax_rows(logits);
  return ProbabilitySimplex::normalized(kernels::column_means(probs, logits.n_classes()));
}

std::string estimator_name(Estimator e) {
  switch (e) {
    case Estimator::kM1: return "m1";
    case Estimator::kM2: return "m2";
    case Estimator::kNaive: return "naive";
  }
  return "unknown";
}

Estimator parse_estimator(std::string_view name) {
  if (name == "m1") return Estimator::kM1;
  if (name == "m2") return Estimator::kM2;
  if (name == "naive") return Estimator::kNaive;
  throw InvalidInput("unknown estimator '" + std::string(name) + "' (expected m1, m2 or naive)");
}

ProbabilitySimplex estimate_prior(Estimator e, const LabelledLogits& data,
                                  const Method1Config& m1, const PowerIterConfig& m2) {
  switch (e) {
    case Estimator::kM1: return estimate_prior_m1(data, m1);
    case Estimator::kM2: return estimate_prior_m2(data, m2);
    case Estimator::kNaive: return estimate_prior_naive(data.logits());
  }
  throw InvalidInput("unknown estimator");
}

double m2_error_bound(const BoundQuery& query) {
  query.validate();
  const auto k = static_cast<double>(query.k);
  const auto n = static_cast<double>(query.n_per_class);
  return std::sqrt(k * k / (2.0 * n) * std::log(2.0 * k * k / query.delta));
}

}  // namespace gla
