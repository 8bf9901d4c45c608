#include "gla/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "gla/errors.hpp"

namespace gla::kernels {

namespace {

inline void softmax_into(std::span<const double> in, double* out) {
  const double peak = *std::max_element(in.begin(), in.end());
  double total = 0.0;
  for (std::size_t i = 0; i < in.size(); ++i) {
    out[i] = std::exp(in[i] - peak);
    total += out[i];
  }
  for (std::size_t i = 0; i < in.size(); ++i) out[i] /= total;
}

void check_labels(std::span<const double> probs, std::size_t k, std::span<const int> labels) {
  if (k == 0 || probs.size() != labels.size() * k) {
    throw DimensionError("probability buffer does not match label count");
  }
}

void check_pair(const LogitTable& a, const LogitTable& b) {
  if (a.n_examples() != b.n_examples() || a.n_classes() != b.n_classes()) {
    throw DimensionError("logit tables differ in shape");
  }
}

// Row indices grouped by label (counting sort). Group j is
// index[offset[j] .. offset[j + 1]), in ascending row order.
struct LabelGroups {
  std::vector<std::size_t> offset;
  std::vector<std::size_t> index;

  std::span<const std::size_t> rows(std::size_t j) const {
    return {index.data() + offset[j], offset[j + 1] - offset[j]};
  }
};

LabelGroups rows_by_label(std::span<const int> labels, std::size_t k) {
  LabelGroups g;
  g.offset.assign(k + 1, 0);
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= k) throw InvalidInput("label out of range");
    ++g.offset[static_cast<std::size_t>(y) + 1];
  }
  for (std::size_t j = 0; j < k; ++j) g.offset[j + 1] += g.offset[j];
  g.index.resize(labels.size());
  std::vector<std::size_t> next(g.offset.begin(), g.offset.end() - 1);
  for (std::size_t r = 0; r < labels.size(); ++r) {
    g.index[next[static_cast<std::size_t>(labels[r])]++] = r;
  }
  return g;
}

}  // namespace

std::vector<double> softmax_rows(const LogitTable& logits) {
  const std::size_t n = logits.n_examples();
  const std::size_t k = logits.n_classes();
  std::vector<double> out(n * k);
  const auto rows = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < rows; ++r) {
    const auto ur = static_cast<std::size_t>(r);
    softmax_into(logits.row(ur), out.data() + ur * k);
  }
  return out;
}

std::vector<double> class_mean_columns(std::span<const double> probs, std::size_t k,
                                       std::span<const int> labels,
                                       std::vector<std::size_t>& counts) {
  check_labels(probs, k, labels);
  const auto groups = rows_by_label(labels, k);
  std::vector<double> out(k * k, 0.0);
  counts.assign(k, 0);
  const auto classes = static_cast<std::int64_t>(k);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t jj = 0; jj < classes; ++jj) {
    const auto j = static_cast<std::size_t>(jj);
    const auto rows = groups.rows(j);
    counts[j] = rows.size();
    if (rows.empty()) continue;
    std::vector<double> sums(k, 0.0);
    for (std::size_t r : rows) {
      const double* row = probs.data() + r * k;
      for (std::size_t i = 0; i < k; ++i) sums[i] += row[i];
    }
    for (std::size_t i = 0; i < k; ++i) out[i * k + j] = sums[i] / static_cast<double>(rows.size());
  }
  return out;
}

std::vector<double> column_means(std::span<const double> probs, std::size_t k) {
  if (k == 0 || probs.size() % k != 0 || probs.empty()) {
    throw DimensionError("buffer is not a whole number of rows");
  }
  const std::size_t n = probs.size() / k;
  std::vector<double> out(k, 0.0);
  const auto cols = static_cast<std::int64_t>(k);
#pragma omp parallel for schedule(static)
  for (std::int64_t cc = 0; cc < cols; ++cc) {
    const auto c = static_cast<std::size_t>(cc);
    double s = 0.0;
    for (std::size_t r = 0; r < n; ++r) s += probs[r * k + c];
    out[c] = s / static_cast<double>(n);
  }
  return out;
}

std::vector<double> shift_rows(const LogitTable& table, std::span<const double> shift) {
  const std::size_t k = table.n_classes();
  require_length(shift, k, "shift vector");
  const auto in = table.data();
  std::vector<double> out(in.size());
  const auto rows = static_cast<std::int64_t>(table.n_examples());
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < rows; ++r) {
    const std::size_t base = static_cast<std::size_t>(r) * k;
    for (std::size_t c = 0; c < k; ++c) out[base + c] = in[base + c] - shift[c];
  }
  return out;
}

std::vector<double> weighted_debiased_sum(const LogitTable& a, std::span<const double> shift_a,
                                          double wa, const LogitTable& b,
                                          std::span<const double> shift_b, double wb,
                                          std::span<const double> offset) {
  check_pair(a, b);
  const std::size_t k = a.n_classes();
  require_length(shift_a, k, "first shift vector");
  require_length(shift_b, k, "second shift vector");
  if (!offset.empty()) require_length(offset, k, "offset vector");
  const auto da = a.data();
  const auto db = b.data();
  std::vector<double> out(da.size());
  const auto rows = static_cast<std::int64_t>(a.n_examples());
  const bool has_offset = !offset.empty();
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < rows; ++r) {
    const std::size_t base = static_cast<std::size_t>(r) * k;
    for (std::size_t c = 0; c < k; ++c) {
      double v = wa * (da[base + c] - shift_a[c]) + wb * (db[base + c] - shift_b[c]);
      if (has_offset) v += offset[c];
      out[base + c] = v;
    }
  }
  return out;
}

std::vector<std::size_t> argmax_rows(const LogitTable& table) {
  const std::size_t n = table.n_examples();
  std::vector<std::size_t> out(n);
  const auto rows = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < rows; ++r) {
    const auto ur = static_cast<std::size_t>(r);
    out[ur] = argmax(table.row(ur));
  }
  return out;
}

void per_class_hits(std::span<const std::size_t> predictions, std::span<const int> labels,
                    std::size_t k, std::vector<std::size_t>& correct,
                    std::vector<std::size_t>& total) {
  if (predictions.size() != labels.size()) {
    throw DimensionError("prediction and label counts differ");
  }
  const auto groups = rows_by_label(labels, k);
  correct.assign(k, 0);
  total.assign(k, 0);
  const auto classes = static_cast<std::int64_t>(k);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t jj = 0; jj < classes; ++jj) {
    const auto j = static_cast<std::size_t>(jj);
    std::size_t hits = 0;
    const auto rows = groups.rows(j);
    for (std::size_t r : rows) hits += predictions[r] == j ? 1 : 0;
    correct[j] = hits;
    total[j] = rows.size();
  }
}

namespace serial {

std::vector<double> softmax_rows(const LogitTable& logits) {
  const std::size_t k = logits.n_classes();
  std::vector<double> out(logits.n_examples() * k);
  for (std::size_t r = 0; r < logits.n_examples(); ++r) {
    softmax_into(logits.row(r), out.data() + r * k);
  }
  return out;
}

std::vector<double> class_mean_columns(std::span<const double> probs, std::size_t k,
                                       std::span<const int> labels,
                                       std::vector<std::size_t>& counts) {
  check_labels(probs, k, labels);
  std::vector<double> sums(k * k, 0.0);
  counts.assign(k, 0);
  for (std::size_t r = 0; r < labels.size(); ++r) {
    const int y = labels[r];
    if (y < 0 || static_cast<std::size_t>(y) >= k) throw InvalidInput("label out of range");
    const auto j = static_cast<std::size_t>(y);
    ++counts[j];
    for (std::size_t i = 0; i < k; ++i) sums[i * k + j] += probs[r * k + i];
  }
  for (std::size_t j = 0; j < k; ++j) {
    if (counts[j] == 0) continue;
    for (std::size_t i = 0; i < k; ++i) sums[i * k + j] /= static_cast<double>(counts[j]);
  }
  return sums;
}

std::vector<double> column_means(std::span<const double> probs, std::size_t k) {
  if (k == 0 || probs.size() % k != 0 || probs.empty()) {
    throw DimensionError("buffer is not a whole number of rows");
  }
  const std::size_t n = probs.size() / k;
  std::vector<double> out(k, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < k; ++c) out[c] += probs[r * k + c];
  }
  for (double& x : out) x /= static_cast<double>(n);
  return out;
}

std::vector<double> shift_rows(const LogitTable& table, std::span<const double> shift) {
  const std::size_t k = table.n_classes();
  require_length(shift, k, "shift vector");
  std::vector<double> out;
  out.reserve(table.n_examples() * k);
  for (std::size_t r = 0; r < table.n_examples(); ++r) {
    for (std::size_t c = 0; c < k; ++c) out.push_back(table.at(r, c) - shift[c]);
  }
  return out;
}

std::vector<double> weighted_debiased_sum(const LogitTable& a, std::span<const double> shift_a,
                                          double wa, const LogitTable& b,
                                          std::span<const double> shift_b, double wb,
                                          std::span<const double> offset) {
  check_pair(a, b);
  const std::size_t k = a.n_classes();
  require_length(shift_a, k, "first shift vector");
  require_length(shift_b, k, "second shift vector");
  if (!offset.empty()) require_length(offset, k, "offset vector");
  std::vector<double> out;
  out.reserve(a.n_examples() * k);
  for (std::size_t r = 0; r < a.n_examples(); ++r) {
    for (std::size_t c = 0; c < k; ++c) {
      double v = wa * (a.at(r, c) - shift_a[c]) + wb * (b.at(r, c) - shift_b[c]);
      if (!offset.empty()) v += offset[c];
      out.push_back(v);
    }
  }
  return out;
}

std::vector<std::size_t> argmax_rows(const LogitTable& table) {
  std::vector<std::size_t> out(table.n_examples());
  for (std::size_t r = 0; r < table.n_examples(); ++r) out[r] = argmax(table.row(r));
  return out;
}

void per_class_hits(std::span<const std::size_t> predictions, std::span<const int> labels,
                    std::size_t k, std::vector<std::size_t>& correct,
                    std::vector<std::size_t>& total) {
  if (predictions.size() != labels.size()) {
    throw DimensionError("prediction and label counts differ");
  }
  correct.assign(k, 0);
  total.assign(k, 0);
  for (std::size_t r = 0; r < labels.size(); ++r) {
    const int y = labels[r];
    if (y < 0 || static_cast<std::size_t>(y) >= k) throw InvalidInput("label out of range");
    const auto j = static_cast<std::size_t>(y);
    ++total[j];
    if (predictions[r] == j) ++correct[j];
  }
}

}  // namespace serial

}  // namespace gla::kernels
