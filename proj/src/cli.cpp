#include "gla/cli.hpp"

#include <cstdint>
#include <cstdlib>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "gla/ensemble.hpp"
#include "gla/errors.hpp"
#include "gla/evaluation.hpp"
#include "gla/io.hpp"
#include "gla/prior_estimation.hpp"
#include "gla/synthlab.hpp"

namespace gla::cli {

namespace {

// Raised for flag combinations CLI11 cannot express; maps to exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

std::string join(std::span<const double> v) {
  std::ostringstream s;
  s.precision(6);
  s << '[';
  for (std::size_t i = 0; i < v.size(); ++i) s << (i ? ", " : "") << v[i];
  s << ']';
  return s.str();
}

std::string join(const std::vector<std::size_t>& v) {
  std::ostringstream s;
  s << '{';
  for (std::size_t i = 0; i < v.size(); ++i) s << (i ? "," : "") << v[i];
  s << '}';
  return s.str();
}

// Log floor: flag, then GLA_DEFAULT_FLOOR, then the config file, then the default.
double resolve_floor(std::optional<double> flag, const io::RunConfig& cfg) {
  if (flag) {
    if (!(*flag > 0.0)) throw UsageError("--floor must be positive");
    return *flag;
  }
  if (const char* env = std::getenv("GLA_DEFAULT_FLOOR"); env && *env) {
    char* end = nullptr;
    const double v = std::strtod(env, &end);
    if (end == env || *end != '\0' || !(v > 0.0)) {
      throw ConfigError("GLA_DEFAULT_FLOOR must be a positive number");
    }
    return v;
  }
  if (cfg.floor) return *cfg.floor;
  return kDefaultLogFloor;
}

io::RunConfig load_config(const std::string& path) {
  if (path.empty()) return {};
  return io::load_run_config(path);
}

std::vector<double> log_of(const io::PriorRecord& rec, std::size_t k, double floor,
                           const char* flag) {
  if (rec.probs.size() != k) {
    throw DimensionError(std::string(flag) + " has " + std::to_string(rec.probs.size()) +
                         " classes, logits have " + std::to_string(k));
  }
  return log_prior(rec.probs, floor);
}

struct EstimateArgs {
  std::string logits;
  std::string method;
  std::string out;
  std::string config;
  std::string split = "downstream";
  std::optional<std::uint64_t> seed;
  std::optional<double> floor;
};

int cmd_estimate(const EstimateArgs& a, std::ostream& out, std::ostream& err) {
  const io::RunConfig cfg = load_config(a.config);
  const Estimator estimator = parse_estimator(a.method);
  Method1Config m1 = cfg.method1;
  m1.floor = resolve_floor(a.floor, cfg);

  const io::LogitFile file = io::load_logits(a.logits);
  for (const auto& w : file.warnings) err << "warning: " << a.logits << ": " << w << '\n';

  std::optional<PowerIterResult> power;
  ProbabilitySimplex q = ProbabilitySimplex::uniform(file.logits.n_classes());
  switch (estimator) {
    case Estimator::kNaive:
      q = estimate_prior_naive(file.logits);
      break;
    case Estimator::kM1:
      if (!file.labelled()) throw InvalidInput("labels required for method m1");
      q = estimate_prior_m1(file.labelled_logits(), m1);
      break;
    case Estimator::kM2:
      if (!file.labelled()) throw InvalidInput("labels required for method m2");
      power = power_iterate(build_transition_matrix(file.labelled_logits()), cfg.power_iter);
      q = power->q;
      break;
  }

  io::PriorRecord rec{q};
  rec.estimator = a.method;
  rec.source_split = a.split;
  rec.seed = a.seed;
  rec.created_at = io::provenance_timestamp(a.seed.has_value());
  io::save_prior(a.out, rec);

  out << "prior " << join(q.values()) << '\n';
  if (power) {
    out << "iterations " << power->iters << '\n';
    out << "residual " << power->residual << '\n';
    if (power->residual > cfg.power_iter.tol) {
      err << "warning: power iteration did not converge (residual " << power->residual << ")\n";
    }
  }
  return kExitOk;
}

struct EnsembleArgs {
  std::string ft;
  std::string zs;
  std::string prior_p;
  std::string prior_s;
  std::string prior_t;
  std::optional<double> alpha;
  std::string out;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> floor;
};

int cmd_ensemble(const EnsembleArgs& a, std::ostream& out, std::ostream& err) {
  const io::RunConfig cfg = load_config(a.config);
  const double floor = resolve_floor(a.floor, cfg);
  const io::LogitFile ft = io::load_logits(a.ft);
  const io::LogitFile zs = io::load_logits(a.zs);
  for (const auto& w : ft.warnings) err << "warning: " << a.ft << ": " << w << '\n';
  for (const auto& w : zs.warnings) err << "warning: " << a.zs << ": " << w << '\n';
  if (ft.logits.n_examples() != zs.logits.n_examples() ||
      ft.logits.n_classes() != zs.logits.n_classes()) {
    throw DimensionError("--ft is " + std::to_string(ft.logits.n_examples()) + "x" +
                         std::to_string(ft.logits.n_classes()) + " but --zs is " +
                         std::to_string(zs.logits.n_examples()) + "x" +
                         std::to_string(zs.logits.n_classes()));
  }
  const std::vector<int>* labels = nullptr;
  if (ft.labelled() && zs.labelled()) {
    if (*ft.labels != *zs.labels) throw InvalidInput("--ft and --zs files disagree on labels");
    labels = &*ft.labels;
  }

  const std::size_t k = ft.logits.n_classes();
  AdjustmentSpec adj;
  adj.pi_p = log_of(io::load_prior(a.prior_p), k, floor, "--prior-p");
  adj.pi_s = log_of(io::load_prior(a.prior_s), k, floor, "--prior-s");
  if (!a.prior_t.empty()) adj.pi_t = log_of(io::load_prior(a.prior_t), k, floor, "--prior-t");

  LogitTable combined = a.alpha ? alpha_mix(ft.logits, zs.logits, adj, MixSpec{*a.alpha})
                                : gla_combine(ft.logits, zs.logits, adj);
  if (a.alpha && adj.pi_t) err << "warning: --prior-t is ignored when --alpha is given\n";
  io::save_logits(a.out, combined, labels);
  out << "wrote " << combined.n_examples() << " rows to " << a.out << '\n';
  return kExitOk;
}

struct EvaluateArgs {
  std::string logits;
  std::string prior_p;
  bool balanced = false;
  std::string report;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> floor;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out, std::ostream& err) {
  const io::RunConfig cfg = load_config(a.config);
  const io::LogitFile file = io::load_logits(a.logits);
  for (const auto& w : file.warnings) err << "warning: " << a.logits << ": " << w << '\n';
  if (!file.labelled()) throw InvalidInput("evaluation requires a fully labelled logit file");
  const auto& labels = *file.labels;

  EvalReport report;
  std::optional<io::PriorRecord> prior;
  if (!a.prior_p.empty()) {
    prior = io::load_prior(a.prior_p);
    const double floor = resolve_floor(a.floor, cfg);
    report = breakdown_report(file.logits, labels,
                              log_of(*prior, file.logits.n_classes(), floor, "--prior-p"));
  } else {
    report = evaluate(file.logits, labels);
  }
  if (a.balanced && !report.balanced_accuracy) {
    // Surface the missing class through the same error balanced_error raises.
    balanced_error(file.logits, labels);
  }
  report.metadata["logits"] = a.logits;
  if (prior) {
    report.metadata["prior_p"] = a.prior_p;
    report.metadata["estimator"] = prior->estimator;
    report.metadata["split"] = prior->source_split;
  }
  if (a.seed) report.metadata["seed"] = std::to_string(*a.seed);
  io::save_report(a.report, report);

  out << "top1_accuracy " << report.top1_accuracy << '\n';
  if (a.balanced) out << "balanced_accuracy " << *report.balanced_accuracy << '\n';
  if (report.breakdown) {
    const auto& b = *report.breakdown;
    out << "head " << b.head_accuracy << ' ' << join(b.head) << '\n';
    out << "medium " << b.medium_accuracy << ' ' << join(b.medium) << '\n';
    out << "tail " << b.tail_accuracy << ' ' << join(b.tail) << '\n';
  }
  return kExitOk;
}

struct StudyArgs {
  std::string config;
  std::string estimator;
  std::string out;
  std::optional<std::uint64_t> seed;
};

int cmd_study(const StudyArgs& a, std::ostream& out, std::ostream& err) {
  const io::RunConfig cfg = io::load_run_config(a.config);
  StudyOptions opts;
  opts.shots = cfg.study.shots;
  opts.trials = cfg.study.trials;
  opts.delta = cfg.study.delta;
  opts.base_seed = a.seed.value_or(cfg.study.base_seed);
  opts.method1 = cfg.method1;
  opts.method1.floor = resolve_floor(std::nullopt, cfg);
  opts.power_iter = cfg.power_iter;

  const ConvergenceStudy study =
      run_convergence_study(cfg.task, parse_estimator(a.estimator), opts);
  for (const auto& row : study.rows) {
    for (const auto& f : row.failures) err << "warning: n=" << row.n << ' ' << f << '\n';
  }
  io::atomic_write(a.out, io::format_study_csv(study));
  out << "wrote " << study.rows.size() << " rows to " << a.out << '\n';
  return kExitOk;
}

struct SimulateArgs {
  std::string config;
  std::size_t n = 1000;
  std::optional<std::size_t> shots;
  std::string prior = "balanced";
  std::uint64_t seed = 0;
  std::string zs_out;
  std::string ft_out;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream&) {
  const io::RunConfig cfg = load_config(a.config);
  const SyntheticTask task = make_task(cfg.task);
  SyntheticBatch batch = [&] {
    if (a.shots) return sample_shots(task, *a.shots, a.seed);
    if (a.prior == "balanced") return sample_batch(task, ProbabilitySimplex::uniform(task.k()), a.n, a.seed);
    if (a.prior == "pretrain") return sample_batch(task, cfg.task.pretrain_prior, a.n, a.seed);
    return sample_batch(task, cfg.task.source_prior, a.n, a.seed);
  }();
  io::save_logits(a.zs_out, batch.zs_logits, &batch.labels);
  io::save_logits(a.ft_out, batch.ft_logits, &batch.labels);
  out << "wrote " << batch.labels.size() << " rows to " << a.zs_out << " and " << a.ft_out
      << '\n';
  return kExitOk;
}

template <typename Fn>
int guarded(Fn&& fn, std::ostream& err) {
  try {
    return fn();
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const MissingClassError& e) {
    err << "error: missing class " << e.class_index() << ": " << e.what() << '\n';
    return kExitDomainError;
  } catch (const DimensionError& e) {
    err << "error: DimensionError: " << e.what() << '\n';
    return kExitDomainError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitDomainError;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Label-prior estimation, logit adjustment and ensembling for zero-shot models",
               "gla"};
  app.require_subcommand(1);

  EstimateArgs est;
  auto* estimate = app.add_subcommand("estimate", "Estimate the pre-training label prior");
  estimate->add_option("--logits", est.logits, "Zero-shot logit CSV")->required();
  estimate->add_option("--method", est.method, "Estimator")
      ->required()
      ->check(CLI::IsMember({"m1", "m2", "naive"}));
  estimate->add_option("--out", est.out, "Output prior document")->required();
  estimate->add_option("--config", est.config, "Run configuration (JSON)");
  estimate->add_option("--seed", est.seed, "Seed recorded in the prior's provenance");
  estimate->add_option("--floor", est.floor, "Log floor for zero probabilities");
  estimate->add_option("--split", est.split, "Name of the split the logits came from");

  EnsembleArgs ens;
  auto* ensemble = app.add_subcommand("ensemble", "Combine fine-tuned and zero-shot logits");
  ensemble->add_option("--ft", ens.ft, "Fine-tuned logit CSV")->required();
  ensemble->add_option("--zs", ens.zs, "Zero-shot logit CSV")->required();
  ensemble->add_option("--prior-p", ens.prior_p, "Pre-training prior document")->required();
  ensemble->add_option("--prior-s", ens.prior_s, "Source (fine-tuning) prior document")
      ->required();
  ensemble->add_option("--prior-t", ens.prior_t, "Target prior document (default balanced)");
  ensemble->add_option("--alpha", ens.alpha, "Mixing weight on the fine-tuned side")
      ->check(CLI::Range(0.0, 1.0));
  ensemble->add_option("--out", ens.out, "Output logit CSV")->required();
  ensemble->add_option("--config", ens.config, "Run configuration (JSON)");
  ensemble->add_option("--seed", ens.seed, "Accepted for pipeline symmetry");
  ensemble->add_option("--floor", ens.floor, "Log floor for zero probabilities");

  EvaluateArgs ev;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score labelled logits");
  evaluate_cmd->add_option("--logits", ev.logits, "Labelled logit CSV")->required();
  evaluate_cmd->add_option("--prior-p", ev.prior_p, "Prior used for the head/medium/tail split");
  evaluate_cmd->add_flag("--balanced", ev.balanced, "Require and print balanced accuracy");
  evaluate_cmd->add_option("--report", ev.report, "Output report document")->required();
  evaluate_cmd->add_option("--config", ev.config, "Run configuration (JSON)");
  evaluate_cmd->add_option("--seed", ev.seed, "Seed recorded in the report metadata");
  evaluate_cmd->add_option("--floor", ev.floor, "Log floor for zero probabilities");

  StudyArgs st;
  auto* study = app.add_subcommand("study", "Prior-estimation error against shots per class");
  study->add_option("--config", st.config, "Task and study configuration (JSON)")->required();
  study->add_option("--estimator", st.estimator, "Estimator")
      ->required()
      ->check(CLI::IsMember({"m1", "m2", "naive"}));
  study->add_option("--out", st.out, "Output CSV")->required();
  study->add_option("--seed", st.seed, "Overrides study.base_seed");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Sample logits from a synthetic task");
  simulate->add_option("--config", sim.config, "Task configuration (JSON)");
  auto* n_opt = simulate->add_option("--n", sim.n, "Rows to sample from --prior")
                    ->check(CLI::PositiveNumber);
  simulate->add_option("--shots", sim.shots, "Rows per class instead of --n")
      ->check(CLI::PositiveNumber)
      ->excludes(n_opt);
  simulate->add_option("--prior", sim.prior, "Label distribution to sample from")
      ->check(CLI::IsMember({"balanced", "pretrain", "source"}));
  simulate->add_option("--seed", sim.seed, "Sampling seed");
  simulate->add_option("--zs-out", sim.zs_out, "Zero-shot logit CSV to write")->required();
  simulate->add_option("--ft-out", sim.ft_out, "Fine-tuned logit CSV to write")->required();

  std::vector<const char*> argv{"gla"};
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  }

  if (estimate->parsed()) return guarded([&] { return cmd_estimate(est, out, err); }, err);
  if (ensemble->parsed()) return guarded([&] { return cmd_ensemble(ens, out, err); }, err);
  if (evaluate_cmd->parsed()) return guarded([&] { return cmd_evaluate(ev, out, err); }, err);
  if (study->parsed()) return guarded([&] { return cmd_study(st, out, err); }, err);
  if (simulate->parsed()) return guarded([&] { return cmd_simulate(sim, out, err); }, err);
  return kExitUsage;
}

}  // namespace gla::cli
