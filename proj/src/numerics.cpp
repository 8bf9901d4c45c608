#include "gla/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "gla/errors.hpp"

namespace gla {

namespace {

double sequential_sum(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace

ProbabilitySimplex::ProbabilitySimplex(std::vector<double> probs, double tolerance)
    : probs_(std::move(probs)) {
  if (probs_.empty()) throw InvalidInput("simplex must have at least one entry");
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    if (!std::isfinite(probs_[i]) || probs_[i] < 0.0) {
      throw InvalidInput("simplex entry " + std::to_string(i) + " is negative or non-finite");
    }
  }
  const double total = sequential_sum(probs_);
  if (std::abs(total - 1.0) > tolerance) {
    throw InvalidInput("simplex entries sum to " + std::to_string(total) + ", expected 1");
  }
}

ProbabilitySimplex ProbabilitySimplex::uniform(std::size_t k) {
  if (k == 0) throw InvalidInput("simplex must have at least one entry");
  return ProbabilitySimplex(std::vector<double>(k, 1.0 / static_cast<double>(k)));
}

ProbabilitySimplex ProbabilitySimplex::normalized(std::vector<double> weights) {
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) throw InvalidInput("weights must be finite and nonnegative");
  }
  const double total = sequential_sum(weights);
  if (!(total > 0.0)) throw InvalidInput("weights must have a positive sum");
  for (double& w : weights) w /= total;
  return ProbabilitySimplex(std::move(weights));
}

LogitTable::LogitTable(std::size_t n_examples, std::size_t n_classes, std::vector<double> scores)
    : n_(n_examples), k_(n_classes), scores_(std::move(scores)) {
  if (n_ < 1) throw InvalidInput("logit table needs at least one row");
  if (k_ < 2) throw InvalidInput("logit table needs at least two classes");
  if (scores_.size() != n_ * k_) {
    throw DimensionError("logit table has " + std::to_string(scores_.size()) +
                         " scores, expected " + std::to_string(n_ * k_));
  }
  for (std::size_t i = 0; i < scores_.size(); ++i) {
    if (!std::isfinite(scores_[i])) {
      throw InvalidInput("non-finite logit at row " + std::to_string(i / k_) + ", column " +
                         std::to_string(i % k_));
    }
  }
}

LogitTable LogitTable::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw InvalidInput("logit table needs at least one row");
  const std::size_t k = rows.front().size();
  std::vector<double> flat;
  flat.reserve(rows.size() * k);
  for (const auto& r : rows) {
    if (r.size() != k) throw DimensionError("ragged logit rows");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return LogitTable(rows.size(), k, std::move(flat));
}

LabelledLogits::LabelledLogits(LogitTable logits, std::vector<int> labels)
    : logits_(std::move(logits)), labels_(std::move(labels)) {
  if (labels_.size() != logits_.n_examples()) {
    throw DimensionError("got " + std::to_string(labels_.size()) + " labels for " +
                         std::to_string(logits_.n_examples()) + " rows");
  }
  const auto k = static_cast<int>(logits_.n_classes());
  for (std::size_t r = 0; r < labels_.size(); ++r) {
    if (labels_[r] < 0 || labels_[r] >= k) {
      throw InvalidInput("label " + std::to_string(labels_[r]) + " at row " + std::to_string(r) +
                         " is outside [0, " + std::to_string(k) + ")");
    }
  }
}

ProbabilitySimplex softmax_row(std::span<const double> v) {
  if (v.empty()) throw InvalidInput("softmax of an empty vector");
  for (double x : v) {
    if (!std::isfinite(x)) throw InvalidInput("softmax input is not finite");
  }
  const double peak = *std::max_element(v.begin(), v.end());
  std::vector<double> out(v.size());
  double total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - peak);
    total += out[i];
  }
  for (double& x : out) x /= total;
  return ProbabilitySimplex(std::move(out));
}

std::vector<double> log_prior(const ProbabilitySimplex& p, double floor) {
  if (!(floor > 0.0)) throw InvalidInput("log floor must be positive");
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = std::log(std::max(p[i], floor));
  return out;
}

double l1_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionError("l1 distance between lengths " + std::to_string(a.size()) + " and " +
                         std::to_string(b.size()));
  }
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
  return d;
}

double l1_distance(const ProbabilitySimplex& a, const ProbabilitySimplex& b) {
  return l1_distance(a.values(), b.values());
}

ProbabilitySimplex project_to_simplex(std::span<const double> v) {
  if (v.empty()) throw InvalidInput("projection of an empty vector");
  for (double x : v) {
    if (!std::isfinite(x)) throw InvalidInput("projection input is not finite");
  }
  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());

  // Largest rho with sorted[rho] - (cumsum[rho] - 1) / (rho + 1) > 0.
  double cumsum = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    cumsum += sorted[j];
    const double candidate = (cumsum - 1.0) / static_cast<double>(j + 1);
    if (sorted[j] - candidate > 0.0) theta = candidate;
  }

  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::max(v[i] - theta, 0.0);
  return ProbabilitySimplex::normalized(std::move(out));
}

std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

void require_length(std::span<const double> v, std::size_t k, const char* what) {
  if (v.size() != k) {
    throw DimensionError(std::string(what) + " has length " + std::to_string(v.size()) +
                         ", expected " + std::to_string(k));
  }
}

}  // namespace gla
