#pragma once

// On-disk formats: logit CSV files, prior and report documents (JSON), the
// run configuration, and study CSV output. Every write goes through a temp
// file and a rename so readers never see a partial file.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gla/evaluation.hpp"
#include "gla/numerics.hpp"
#include "gla/prior_estimation.hpp"
#include "gla/synthlab.hpp"

namespace gla::io {

/// Contents of a logit CSV ("label,c0,...,c{K-1}").
struct LogitFile {
  LogitTable logits;
  std::optional<std::vector<int>> labels;  // empty if any row was unlabelled
  std::vector<std::string> warnings;

  bool labelled() const noexcept { return labels.has_value(); }
  LabelledLogits labelled_logits() const;
};

LogitFile parse_logits(std::string_view text);
LogitFile load_logits(const std::filesystem::path& path);

/// Seventeen significant digits, so values read back bit-for-bit.
std::string format_logits(const LogitTable& logits, const std::vector<int>* labels);
void save_logits(const std::filesystem::path& path, const LogitTable& logits,
                 const std::vector<int>* labels = nullptr);

struct PriorRecord {
  explicit PriorRecord(ProbabilitySimplex p) : probs(std::move(p)) {}

  ProbabilitySimplex probs;
  std::string estimator = "given";  // m1 | m2 | naive | given
  std::string source_split;
  std::optional<std::uint64_t> seed;
  std::string created_at;
};

std::string format_prior(const PriorRecord& prior);
/// Renormalizes probs; rejects vectors more than 1e-6 away from unit mass.
PriorRecord parse_prior(std::string_view text);
void save_prior(const std::filesystem::path& path, const PriorRecord& prior);
PriorRecord load_prior(const std::filesystem::path& path);

struct StudySettings {
  std::vector<std::size_t> shots = {25, 100, 400, 1600};
  int trials = 5;
  double delta = 0.05;
  std::uint64_t base_seed = 0;
};

/// Everything a run can be configured with. All keys are optional; unknown
/// keys are rejected with a ConfigError naming the key.
struct RunConfig {
  Method1Config method1;
  PowerIterConfig power_iter;
  SyntheticTaskConfig task;
  StudySettings study;
  std::optional<double> floor;
};

RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path);

std::string format_report(const EvalReport& report);
void save_report(const std::filesystem::path& path, const EvalReport& report);

/// "n,mean_l1,std,bound" followed by one row per shot count.
std::string format_study_csv(const ConvergenceStudy& study);

/// Writes to a sibling temp file and renames it over `path`.
void atomic_write(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

/// ISO-8601 UTC timestamp for provenance. Honors SOURCE_DATE_EPOCH; with no
/// epoch set, a seeded run gets the Unix epoch so its outputs stay byte-stable.
std::string provenance_timestamp(bool seeded);

}  // namespace gla::io
