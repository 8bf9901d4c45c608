#pragma once

// Core value types (probability simplices, logit tables) and the small
// deterministic kernels the rest of the toolkit is built on.
//
// Every reduction in this header runs left to right over index order, so
// results are bit-reproducible from run to run.

#include <cstddef>
#include <span>
#include <vector>

namespace gla {

inline constexpr double kSimplexTolerance = 1e-9;
inline constexpr double kDefaultLogFloor = 1e-12;

/// Length-K vector of nonnegative reals summing to one.
class ProbabilitySimplex {
 public:
  /// Validates `probs` against the simplex invariants (entries >= 0, sum
  /// within `tolerance` of 1, K >= 1). Throws InvalidInput otherwise.
  explicit ProbabilitySimplex(std::vector<double> probs,
                              double tolerance = kSimplexTolerance);

  static ProbabilitySimplex uniform(std::size_t k);

  /// Divides by the sum. Input must be finite, nonnegative, with a positive sum.
  static ProbabilitySimplex normalized(std::vector<double> weights);

  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> values() const noexcept { return probs_; }
  const std::vector<double>& vector() const noexcept { return probs_; }

  friend bool operator==(const ProbabilitySimplex&, const ProbabilitySimplex&) = default;

 private:
  std::vector<double> probs_;
};

/// N x K row-major matrix of finite scores, one row per example.
class LogitTable {
 public:
  LogitTable(std::size_t n_examples, std::size_t n_classes, std::vector<double> scores);

  /// Builds from nested rows; every row must have the same width.
  static LogitTable from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t n_examples() const noexcept { return n_; }
  std::size_t n_classes() const noexcept { return k_; }

  std::span<const double> row(std::size_t r) const {
    return {scores_.data() + r * k_, k_};
  }
  double at(std::size_t r, std::size_t c) const { return scores_[r * k_ + c]; }
  std::span<const double> data() const noexcept { return scores_; }

  friend bool operator==(const LogitTable&, const LogitTable&) = default;

 private:
  std::size_t n_;
  std::size_t k_;
  std::vector<double> scores_;
};

/// A logit table together with one class label per row.
class LabelledLogits {
 public:
  LabelledLogits(LogitTable logits, std::vector<int> labels);

  const LogitTable& logits() const noexcept { return logits_; }
  const std::vector<int>& labels() const noexcept { return labels_; }
  std::size_t n_examples() const noexcept { return logits_.n_examples(); }
  std::size_t n_classes() const noexcept { return logits_.n_classes(); }

 private:
  LogitTable logits_;
  std::vector<int> labels_;
};

/// Max-subtracted softmax. Throws InvalidInput on non-finite input.
ProbabilitySimplex softmax_row(std::span<const double> v);

/// Elementwise log(max(p_i, floor)). `floor` must be positive.
std::vector<double> log_prior(const ProbabilitySimplex& p, double floor = kDefaultLogFloor);

/// Sum of absolute differences. Throws DimensionError on length mismatch.
double l1_distance(const ProbabilitySimplex& a, const ProbabilitySimplex& b);
double l1_distance(std::span<const double> a, std::span<const double> b);

/// Euclidean projection onto the probability simplex (sort-and-threshold).
/// The result is renormalized so it satisfies the simplex invariants exactly.
ProbabilitySimplex project_to_simplex(std::span<const double> v);

/// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> v);

/// Throws DimensionError unless `v` has `k` entries.
void require_length(std::span<const double> v, std::size_t k, const char* what);

}  // namespace gla
