#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gla/numerics.hpp"
#include "gla/prior_estimation.hpp"
#include "gla/synthlab.hpp"

namespace gla {

struct GroupBreakdown {
  std::vector<std::size_t> head;
  std::vector<std::size_t> medium;
  std::vector<std::size_t> tail;
  double head_accuracy = 0.0;
  double medium_accuracy = 0.0;
  double tail_accuracy = 0.0;
};

struct EvalReport {
  double top1_accuracy = 0.0;
  std::optional<double> balanced_accuracy;
  // Empty entry for a class with no examples.
  std::vector<std::optional<double>> per_class_accuracy;
  std::vector<std::size_t> per_class_count;
  std::optional<GroupBreakdown> breakdown;
  std::size_t n_examples = 0;
  std::map<std::string, std::string> metadata;
};

/// Fraction of rows whose argmax (ties to the lowest index) misses the label.
double top1_error(const LogitTable& logits, const std::vector<int>& labels);

/// Unweighted mean of per-class errors. Throws MissingClassError if a class
/// has no rows.
double balanced_error(const LogitTable& logits, const std::vector<int>& labels);

/// Top-1 and per-class accuracy; balanced accuracy when every class is present.
EvalReport evaluate(const LogitTable& logits, const std::vector<int>& labels);

/// Splits classes into head / medium / tail by pi_p (descending, ties to the
/// lower index). Head and tail get floor(K/3) classes each; medium takes the rest.
GroupBreakdown split_groups(const std::vector<double>& pi_p);

/// Full report with the head / medium / tail breakdown keyed on pi_p.
EvalReport breakdown_report(const LogitTable& logits, const std::vector<int>& labels,
                            const std::vector<double>& pi_p);

struct StudyRow {
  std::size_t n = 0;
  double mean_l1 = 0.0;
  double std = 0.0;
  double bound = 0.0;
  std::size_t completed_trials = 0;
  std::vector<std::string> failures;
};

struct ConvergenceStudy {
  std::vector<std::size_t> shots;
  int trials = 0;
  std::vector<StudyRow> rows;  // ascending n
  std::map<std::string, std::string> metadata;
};

struct StudyOptions {
  std::vector<std::size_t> shots = {25, 100, 400, 1600};
  int trials = 5;
  double delta = 0.05;
  std::uint64_t base_seed = 0;
  Method1Config method1;
  PowerIterConfig power_iter;
};

/// For every (N, trial) draws N examples per class from the task
/// (seed = base_seed + trial), estimates the pre-training prior and records
/// the l1 error to the true one. Cells run in parallel; results do not depend
/// on scheduling. A failing cell is recorded in its row, not thrown.
ConvergenceStudy run_convergence_study(const SyntheticTaskConfig& task_cfg, Estimator estimator,
                                       const StudyOptions& options);

/// Least-squares slope of log(mean_l1) against log(n) over rows with a
/// positive mean and at least one completed trial.
double loglog_slope(const ConvergenceStudy& study);

}  // namespace gla
