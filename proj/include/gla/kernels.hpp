#pragma once

// Row-parallel inner loops shared by estimation, ensembling and evaluation.
//
// Each kernel comes in two flavours: the OpenMP one in gla::kernels, used by
// the library, and a plain loop in gla::kernels::serial kept as the reference
// the tests compare against. Both produce bit-identical output: parallelism is
// only over independent rows or classes, and every floating-point sum keeps
// its sequential index order.

#include <cstddef>
#include <span>
#include <vector>

#include "gla/numerics.hpp"

namespace gla::kernels {

/// Row-wise max-subtracted softmax; returns an N x K row-major buffer.
std::vector<double> softmax_rows(const LogitTable& logits);

/// Mean softmax row per label. Entry [i * K + j] is the mean of probability i
/// over rows labelled j. `counts[j]` receives the number of rows with label j;
/// columns of absent classes are left at zero.
std::vector<double> class_mean_columns(std::span<const double> probs, std::size_t k,
                                       std::span<const int> labels,
                                       std::vector<std::size_t>& counts);

/// Column means of an N x K buffer.
std::vector<double> column_means(std::span<const double> probs, std::size_t k);

/// out[r][c] = table[r][c] - shift[c].
std::vector<double> shift_rows(const LogitTable& table, std::span<const double> shift);

/// out[r][c] = wa * (a[r][c] - shift_a[c]) + wb * (b[r][c] - shift_b[c]) + offset[c].
/// An empty `offset` means zero.
std::vector<double> weighted_debiased_sum(const LogitTable& a, std::span<const double> shift_a,
                                          double wa, const LogitTable& b,
                                          std::span<const double> shift_b, double wb,
                                          std::span<const double> offset);

/// Per-row argmax, ties to the lowest index.
std::vector<std::size_t> argmax_rows(const LogitTable& table);

/// Per-class (correct, total) counts for predictions against labels.
void per_class_hits(std::span<const std::size_t> predictions, std::span<const int> labels,
                    std::size_t k, std::vector<std::size_t>& correct,
                    std::vector<std::size_t>& total);

namespace serial {

std::vector<double> softmax_rows(const LogitTable& logits);
std::vector<double> class_mean_columns(std::span<const double> probs, std::size_t k,
                                       std::span<const int> labels,
                                       std::vector<std::size_t>& counts);
std::vector<double> column_means(std::span<const double> probs, std::size_t k);
std::vector<double> shift_rows(const LogitTable& table, std::span<const double> shift);
std::vector<double> weighted_debiased_sum(const LogitTable& a, std::span<const double> shift_a,
                                          double wa, const LogitTable& b,
                                          std::span<const double> shift_b, double wb,
                                          std::span<const double> offset);
std::vector<std::size_t> argmax_rows(const LogitTable& table);
void per_class_hits(std::span<const std::size_t> predictions, std::span<const int> labels,
                    std::size_t k, std::vector<std::size_t>& correct,
                    std::vector<std::size_t>& total);

}  // namespace serial

}  // namespace gla::kernels
