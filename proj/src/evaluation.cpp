#include "gla/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>

#include "gla/errors.hpp"
#include "gla/kernels.hpp"

namespace gla {

namespace {

struct Hits {
  std::vector<std::size_t> correct;
  std::vector<std::size_t> total;
};

Hits count_hits(const LogitTable& logits, const std::vector<int>& labels) {
  if (labels.size() != logits.n_examples()) {
    throw DimensionError("got " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(logits.n_examples()) + " rows");
  }
  const auto predictions = kernels::argmax_rows(logits);
  Hits h;
  kernels::per_class_hits(predictions, labels, logits.n_classes(), h.correct, h.total);
  return h;
}

double group_accuracy(const Hits& h, const std::vector<std::size_t>& classes) {
  std::size_t correct = 0;
  std::size_t total = 0;
  for (std::size_t c : classes) {
    correct += h.correct[c];
    total += h.total[c];
  }
  return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

EvalReport report_from_hits(const Hits& h, std::size_t n) {
  EvalReport report;
  report.n_examples = n;
  const std::size_t correct = std::accumulate(h.correct.begin(), h.correct.end(), std::size_t{0});
  report.top1_accuracy = static_cast<double>(correct) / static_cast<double>(n);
  report.per_class_count = h.total;
  bool all_present = true;
  double balanced = 0.0;
  for (std::size_t c = 0; c < h.total.size(); ++c) {
    if (h.total[c] == 0) {
      report.per_class_accuracy.emplace_back(std::nullopt);
      all_present = false;
      continue;
    }
    const double acc = static_cast<double>(h.correct[c]) / static_cast<double>(h.total[c]);
    report.per_class_accuracy.emplace_back(acc);
    balanced += acc;
  }
  if (all_present) report.balanced_accuracy = balanced / static_cast<double>(h.total.size());
  return report;
}

void require_all_classes(const Hits& h) {
  for (std::size_t c = 0; c < h.total.size(); ++c) {
    if (h.total[c] == 0) throw MissingClassError(c);
  }
}

}  // namespace

double top1_error(const LogitTable& logits, const std::vector<int>& labels) {
  const Hits h = count_hits(logits, labels);
  const std::size_t correct = std::accumulate(h.correct.begin(), h.correct.end(), std::size_t{0});
  return static_cast<double>(logits.n_examples() - correct) /
         static_cast<double>(logits.n_examples());
}

double balanced_error(const LogitTable& logits, const std::vector<int>& labels) {
  const Hits h = count_hits(logits, labels);
  require_all_classes(h);
  double err = 0.0;
  for (std::size_t c = 0; c < h.total.size(); ++c) {
    err += static_cast<double>(h.total[c] - h.correct[c]) / static_cast<double>(h.total[c]);
  }
  return err / static_cast<double>(h.total.size());
}

EvalReport evaluate(const LogitTable& logits, const std::vector<int>& labels) {
  return report_from_hits(count_hits(logits, labels), logits.n_examples());
}

GroupBreakdown split_groups(const std::vector<double>& pi_p) {
  const std::size_t k = pi_p.size();
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return pi_p[a] > pi_p[b]; });
  const std::size_t third = k / 3;
  GroupBreakdown g;
  g.head.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(third));
  g.medium.assign(order.begin() + static_cast<std::ptrdiff_t>(third),
                  order.end() - static_cast<std::ptrdiff_t>(third));
  g.tail.assign(order.end() - static_cast<std::ptrdiff_t>(third), order.end());
  return g;
}

EvalReport breakdown_report(const LogitTable& logits, const std::vector<int>& labels,
                            const std::vector<double>& pi_p) {
  require_length(pi_p, logits.n_classes(), "pi_p");
  const Hits h = count_hits(logits, labels);
  require_all_classes(h);
  EvalReport report = report_from_hits(h, logits.n_examples());
  GroupBreakdown g = split_groups(pi_p);
  g.head_accuracy = group_accuracy(h, g.head);
  g.medium_accuracy = group_accuracy(h, g.medium);
  g.tail_accuracy = group_accuracy(h, g.tail);
  report.breakdown = std::move(g);
  return report;
}

ConvergenceStudy run_convergence_study(const SyntheticTaskConfig& task_cfg, Estimator estimator,
                                       const StudyOptions& options) {
  if (options.shots.empty()) throw InvalidInput("study needs at least one shot count");
  if (options.trials < 1) throw InvalidInput("study needs at least one trial");
  for (std::size_t n : options.shots) {
    if (n < 1) throw InvalidInput("shot counts must be positive");
  }
  const SyntheticTask task = make_task(task_cfg);

  std::vector<std::size_t> shots = options.shots;
  std::sort(shots.begin(), shots.end());
  shots.erase(std::unique(shots.begin(), shots.end()), shots.end());

  const auto trials = static_cast<std::size_t>(options.trials);
  const std::size_t cells = shots.size() * trials;
  std::vector<std::optional<double>> errors(cells);
  std::vector<std::string> failures(cells);

  const auto n_cells = static_cast<std::int64_t>(cells);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t cell = 0; cell < n_cells; ++cell) {
    const auto idx = static_cast<std::size_t>(cell);
    const std::size_t n = shots[idx / trials];
    const std::uint64_t seed = options.base_seed + idx % trials;
    try {
      const SyntheticBatch batch = sample_shots(task, n, seed);
      const ProbabilitySimplex q = estimate_prior(estimator, batch.zero_shot(), options.method1,
                                                  options.power_iter);
      errors[idx] = l1_distance(q, task_cfg.pretrain_prior);
    } catch (const Error& e) {
      failures[idx] = "trial " + std::to_string(idx % trials) + ": " + e.what();
    }
  }

  ConvergenceStudy study;
  study.shots = shots;
  study.trials = options.trials;
  study.metadata["estimator"] = estimator_name(estimator);
  study.metadata["aggregate"] = "mean";
  study.metadata["std"] = "population";
  study.metadata["bound_constant"] = "1";
  study.metadata["base_seed"] = std::to_string(options.base_seed);
  for (std::size_t s = 0; s < shots.size(); ++s) {
    StudyRow row;
    row.n = shots[s];
    double sum = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
      const std::size_t idx = s * trials + t;
      if (errors[idx]) {
        sum += *errors[idx];
        ++row.completed_trials;
      } else {
        row.failures.push_back(failures[idx]);
      }
    }
    if (row.completed_trials > 0) {
      row.mean_l1 = sum / static_cast<double>(row.completed_trials);
      double var = 0.0;
      for (std::size_t t = 0; t < trials; ++t) {
        const auto& e = errors[s * trials + t];
        if (e) var += (*e - row.mean_l1) * (*e - row.mean_l1);
      }
      row.std = std::sqrt(var / static_cast<double>(row.completed_trials));
    } else {
      row.mean_l1 = std::nan("");
      row.std = std::nan("");
    }
    row.bound = m2_error_bound({task_cfg.k, row.n, options.delta});
    study.rows.push_back(std::move(row));
  }
  return study;
}

double loglog_slope(const ConvergenceStudy& study) {
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& row : study.rows) {
    if (row.completed_trials == 0 || !(row.mean_l1 > 0.0)) continue;
    xs.push_back(std::log(static_cast<double>(row.n)));
    ys.push_back(std::log(row.mean_l1));
  }
  if (xs.size() < 2) throw InvalidInput("slope needs at least two usable rows");
  const double m = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / m;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / m;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace gla
