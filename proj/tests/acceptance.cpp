// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "gla/ensemble.hpp"
#include "gla/evaluation.hpp"
#include "gla/io.hpp"
#include "gla/prior_estimation.hpp"
#include "gla/synthlab.hpp"
#include "oracles.hpp"

using namespace gla;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

int g_failures = 0;

void criterion(int id, const char* title, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (budget_s > 0.0 && secs > budget_s) {
    o.pass = false;
    o.detail += fmt::format(" (over the {:.0f} s budget)", budget_s);
  }
  if (!o.pass) ++g_failures;
  fmt::print("{} [{}] {} ({:.2f} s) {}\n", o.pass ? "PASS" : "FAIL", id, title, secs, o.detail);
  std::fflush(stdout);
}

ProbabilitySimplex dirichlet(std::size_t k, double concentration, std::mt19937_64& rng) {
  std::gamma_distribution<double> g(concentration, 1.0);
  std::vector<double> w(k);
  for (double& x : w) x = std::max(g(rng), 1e-3);
  return ProbabilitySimplex::normalized(std::move(w));
}

// Ten two-view tasks with skewed pre-training and source priors.
struct Task {
  SyntheticTaskConfig cfg;
  SyntheticTask task;
  SyntheticBatch test;
  ProbabilitySimplex pi_p_hat;
  double bayes;
};

constexpr std::size_t kTestN = 10000;

std::vector<Task> build_tasks() {
  std::vector<Task> tasks;
  std::mt19937_64 rng(2024);
  for (int t = 0; t < 10; ++t) {
    SyntheticTaskConfig cfg;
    cfg.k = 2 + static_cast<std::size_t>(t % 5);
    cfg.dim = cfg.k;
    cfg.mean_separation = 1.5 + 0.25 * (t % 4);
    cfg.noise_sigma = 1.0;
    cfg.pretrain_prior = dirichlet(cfg.k, 1.0, rng);
    cfg.source_prior = dirichlet(cfg.k, 1.0, rng);
    cfg.seed = 100 + static_cast<std::uint64_t>(t);
    SyntheticTask task = make_task(cfg);
    const auto balanced = ProbabilitySimplex::uniform(cfg.k);
    const std::uint64_t test_seed = 7000 + static_cast<std::uint64_t>(t);
    SyntheticBatch test = sample_batch(task, balanced, kTestN, test_seed);
    // pi_p comes from a separate balanced split, as it would in practice.
    const SyntheticBatch val = sample_shots(task, 500, 9000 + static_cast<std::uint64_t>(t));
    ProbabilitySimplex pi_p_hat = estimate_prior_m2(val.zero_shot());
    const double bayes = bayes_risk(task, balanced, kTestN, test_seed);
    tasks.push_back({cfg, std::move(task), std::move(test), std::move(pi_p_hat), bayes});
  }
  return tasks;
}

double error_of(const LogitTable& logits, const std::vector<int>& labels) {
  return top1_error(logits, labels);
}

int run_exe(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(GLA_EXE) + " " + args + " >" + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

int main() {
  criterion(1, "power iteration matches the fixed-point solve", 5.0, [] {
    std::mt19937_64 rng(11);
    PowerIterConfig tight;
    tight.tol = 1e-13;
    tight.max_iters = 1000000;
    double worst = 0.0;
    int count = 0;
    for (std::size_t k : {2u, 3u, 4u, 8u}) {
      for (int i = 0; i < 25; ++i, ++count) {
        const auto p = oracle::random_column_stochastic(k, rng);
        const auto ref = k == 2 ? oracle::stationary_2x2(p) : oracle::stationary_solve(p, k);
        const auto got = power_iterate(TransitionMatrix(k, p), tight);
        worst = std::max(worst, l1_distance(got.q.values(), ref));
      }
    }
    return Outcome{count == 100 && worst <= 1e-6, fmt::format("{} matrices, worst l1 {:.3g}", count, worst)};
  });

  criterion(2, "binary naive bias identity and lower bound", 1.0, [] {
    double worst = 0.0;
    bool strict = true;
    int points = 0;
    for (int a = 1; a <= 49; ++a) {
      for (int b = 1; b <= 49; ++b) {
        const double p11 = 0.5 + 0.01 * a;
        const double p12 = 0.01 * b;
        if (!(p12 < p11)) continue;
        ++points;
        const std::vector<double> p{p11, p12, 1.0 - p11, 1.0 - p12};
        const double q = oracle::stationary_2x2(p)[0];
        const double q_naive = 0.5 * (p11 + p12);
        const double measured = q - q_naive;
        worst = std::max(worst, std::abs(measured - (q - 0.5) * (p11 - p12)));
        const auto lib = binary_naive_bias(p11, p12);
        worst = std::max(worst, std::abs(lib.error - measured));
        if (q > 0.5 && !(measured > (q - 0.5) * (q - 0.5) / q)) strict = false;
      }
    }
    const auto w = binary_naive_bias(0.9, 0.2);
    const bool worked = std::abs(w.q_true - 2.0 / 3.0) < 1e-12 && std::abs(w.error - 7.0 / 60.0) < 1e-12 &&
                        std::abs(w.lower_bound - 1.0 / 24.0) < 1e-12;
    return Outcome{worst <= 1e-10 && strict && worked,
                   fmt::format("{} grid points, worst identity gap {:.3g}, strict bound {}, worked point {}",
                               points, worst, strict ? "holds" : "violated", worked ? "ok" : "wrong")};
  });

  criterion(3, "prior recovery on binary tasks", 60.0, [] {
    bool ok = true;
    std::string worst;
    double m1_worst = 0.0, m2_worst = 0.0, naive_min = 1.0;
    for (int i = 1; i <= 9; ++i) {
      const double q1 = 0.1 * i;
      SyntheticTaskConfig cfg;
      cfg.pretrain_prior = ProbabilitySimplex({q1, 1.0 - q1});
      cfg.seed = 31;
      const auto task = make_task(cfg);
      double e1 = 0.0, e2 = 0.0, en = 0.0;
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto shots = sample_shots(task, 1000, 500 + seed);
        e1 += std::abs(estimate_prior_m1(shots.zero_shot())[0] - q1) / 5.0;
        e2 += std::abs(estimate_prior_m2(shots.zero_shot())[0] - q1) / 5.0;
        en += std::abs(estimate_prior_naive(shots.zs_logits)[0] - q1) / 5.0;
      }
      m1_worst = std::max(m1_worst, e1);
      m2_worst = std::max(m2_worst, e2);
      if (e1 > 0.05 || e2 > 0.05) ok = false;
      if (std::abs(q1 - 0.5) >= 0.2 - 1e-12) {
        naive_min = std::min(naive_min, en);
        if (!(en > 0.05)) ok = false;
      }
    }
    return Outcome{ok, fmt::format("worst m1 {:.4f}, worst m2 {:.4f}, smallest naive error off-centre {:.4f}",
                                   m1_worst, m2_worst, naive_min)};
  });

  criterion(4, "power-iteration error falls like n^-1/2", 120.0, [] {
    bool ok = true;
    std::string detail;
    for (std::size_t k : {2u, 5u}) {
      SyntheticTaskConfig cfg;
      cfg.k = k;
      cfg.dim = k;
      std::mt19937_64 rng(77 + k);
      cfg.pretrain_prior = dirichlet(k, 2.0, rng);
      cfg.source_prior = ProbabilitySimplex::uniform(k);
      cfg.seed = 5;
      StudyOptions opts;
      opts.trials = 20;
      opts.base_seed = 1000;
      const auto study = run_convergence_study(cfg, Estimator::kM2, opts);
      const double slope = loglog_slope(study);
      if (std::abs(slope + 0.5) > 0.15) ok = false;
      detail += fmt::format("K={} slope {:.3f}  ", k, slope);
    }
    return Outcome{ok, detail};
  });

  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<Task> tasks = build_tasks();
  fmt::print("      built 10 synthetic tasks in {:.2f} s\n",
             std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());

  criterion(5, "GLA beats every baseline and tracks the Bayes risk", 0.0, [&] {
    bool ok = true;
    std::string detail;
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      const auto& tk = tasks[t];
      const auto& y = tk.test.labels;
      const auto& ft = tk.test.ft_logits;
      const auto& zs = tk.test.zs_logits;
      const auto pi_s = log_prior(tk.cfg.source_prior);
      const auto pi_p = log_prior(tk.pi_p_hat);
      const double gla = error_of(gla_combine(ft, zs, {pi_s, pi_p, std::nullopt}), y);
      const std::vector<double> rivals{
          error_of(ft, y), error_of(zs, y), error_of(logit_adjust(ft, pi_s), y),
          error_of(debias_zero_shot(zs, pi_p), y), error_of(naive_ensemble(ft, zs), y)};
      for (double r : rivals) {
        if (gla > r + 2.0 * oracle::binomial_se(r, kTestN)) ok = false;
      }
      const bool near_bayes = std::abs(gla - tk.bayes) <= 2.0 * oracle::binomial_se(tk.bayes, kTestN);
      if (!near_bayes) ok = false;
      detail += fmt::format("{}:{:.4f}/{:.4f} ", t, gla, tk.bayes);
    }
    return Outcome{ok, "gla/bayes error per task " + detail};
  });

  criterion(6, "alpha = 0.5 is within half a point of the best alpha", 0.0, [&] {
    bool ok = true;
    double worst_gap = 0.0;
    for (const auto& tk : tasks) {
      const AdjustmentSpec adj{log_prior(tk.cfg.source_prior), log_prior(tk.pi_p_hat), std::nullopt};
      double best = 0.0, at_half = 0.0;
      for (int a = 0; a <= 10; ++a) {
        const double acc =
            1.0 - error_of(alpha_mix(tk.test.ft_logits, tk.test.zs_logits, adj, MixSpec{0.1 * a}),
                           tk.test.labels);
        best = std::max(best, acc);
        if (a == 5) at_half = acc;
      }
      worst_gap = std::max(worst_gap, best - at_half);
      if (at_half < best - 0.005) ok = false;
    }
    return Outcome{ok, fmt::format("largest shortfall {:.2f} pp", 100.0 * worst_gap)};
  });

  criterion(7, "debiasing with the true pre-training prior beats rival priors", 0.0, [&] {
    bool ok = true;
    int beaten = 0;
    std::mt19937_64 rng(55);
    for (const auto& tk : tasks) {
      const auto& y = tk.test.labels;
      const double own = error_of(debias_zero_shot(tk.test.zs_logits, log_prior(tk.cfg.pretrain_prior)), y);
      for (int i = 0; i < 50; ++i) {
        const auto rival = dirichlet(tk.cfg.k, 1.0, rng);
        const double e = error_of(debias_zero_shot(tk.test.zs_logits, log_prior(rival)), y);
        if (own > e + 2.0 * oracle::binomial_se(e, kTestN)) {
          ok = false;
          ++beaten;
        }
      }
    }
    return Outcome{ok, fmt::format("{} of 500 rivals did better beyond slack", beaten)};
  });

  criterion(8, "naive estimate equals P times uniform on balanced data", 0.0, [] {
    double worst = 0.0;
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g(0.0, 2.0);
    for (int t = 0; t < 40; ++t) {
      const std::size_t k = 2 + static_cast<std::size_t>(t % 7);
      const std::size_t per = 1 + static_cast<std::size_t>(t % 5) * 13;
      std::vector<double> v(k * per * k);
      for (double& x : v) x = g(rng);
      std::vector<int> y;
      for (std::size_t r = 0; r < k * per; ++r) y.push_back(static_cast<int>(r % k));
      const LabelledLogits data(LogitTable(k * per, k, v), y);
      const auto naive = estimate_prior_naive(data.logits());
      const auto uniform = ProbabilitySimplex::uniform(k);
      const auto pu = build_transition_matrix(data).apply(uniform.values());
      worst = std::max(worst, l1_distance(naive.values(), pu));
    }
    return Outcome{worst <= 1e-9, fmt::format("40 fixtures, worst l1 {:.3g}", worst)};
  });

  criterion(9, "CLI pipeline is byte-identical across runs and exit codes hold", 0.0, [] {
    const fs::path root = fs::temp_directory_path() / ("gla_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root);
    const fs::path cfg = root / "task.json";
    io::atomic_write(cfg, R"({"task": {"k": 3, "dim": 3, "mean_separation": 2.0,
      "pretrain_prior": [0.6, 0.3, 0.1], "source_prior": [0.2, 0.3, 0.5], "seed": 4}})");
    const std::vector<std::string> artifacts{"val_zs.csv", "val_ft.csv", "test_zs.csv", "test_ft.csv",
                                             "prior_p.json", "prior_s.json", "gla.csv", "report.json"};
    ::unsetenv("SOURCE_DATE_EPOCH");
    ::unsetenv("GLA_DEFAULT_FLOOR");
    auto pipeline = [&](const fs::path& dir) {
      fs::create_directories(dir);
      const auto p = [&](const char* f) { return (dir / f).string(); };
      const auto log = dir / "log.txt";
      const std::string c = " --config " + cfg.string();
      int bad = 0;
      bad += run_exe("simulate" + c + " --shots 200 --seed 21 --zs-out " + p("val_zs.csv") +
                         " --ft-out " + p("val_ft.csv"), log) != 0;
      bad += run_exe("simulate" + c + " --n 3000 --prior balanced --seed 22 --zs-out " +
                         p("test_zs.csv") + " --ft-out " + p("test_ft.csv"), log) != 0;
      bad += run_exe("estimate" + c + " --logits " + p("val_zs.csv") +
                         " --method m2 --seed 21 --split val --out " + p("prior_p.json"), log) != 0;
      bad += run_exe("estimate" + c + " --logits " + p("val_ft.csv") +
                         " --method m1 --seed 21 --split val --out " + p("prior_s.json"), log) != 0;
      bad += run_exe("ensemble" + c + " --ft " + p("test_ft.csv") + " --zs " + p("test_zs.csv") +
                         " --prior-p " + p("prior_p.json") + " --prior-s " + p("prior_s.json") +
                         " --seed 22 --out " + p("gla.csv"), log) != 0;
      bad += run_exe("evaluate" + c + " --logits " + p("gla.csv") + " --prior-p " + p("prior_p.json") +
                         " --balanced --seed 22 --report " + p("report.json"), log) != 0;
      return bad;
    };
    // Same paths both times: the report records its input paths.
    const fs::path work = root / "work";
    const int bad_a = pipeline(work);
    fs::create_directories(root / "a");
    for (const auto& f : artifacts) {
      if (fs::exists(work / f)) fs::copy_file(work / f, root / "a" / f);
    }
    fs::remove_all(work);
    const int bad_b = pipeline(work);
    int differing = 0;
    for (const auto& f : artifacts) {
      if (!fs::exists(root / "a" / f) || !fs::exists(work / f) ||
          io::read_file(root / "a" / f) != io::read_file(work / f)) {
        ++differing;
      }
    }

    const auto a = [&](const char* f) { return (root / "a" / f).string(); };
    const auto log = root / "codes.txt";
    struct Case {
      std::string args;
      int expected;
    };
    const std::vector<Case> matrix{
        {"", 2},
        {"nonsense", 2},
        {"estimate --logits " + a("val_zs.csv") + " --out " + a("x.json"), 2},
        {"estimate --logits " + a("val_zs.csv") + " --method m9 --out " + a("x.json"), 2},
        {"estimate --logits " + a("missing.csv") + " --method m2 --out " + a("x.json"), 1},
        {"estimate --logits " + a("val_zs.csv") + " --method naive --out " + a("x.json"), 0},
        {"ensemble --ft " + a("val_ft.csv") + " --zs " + a("test_zs.csv") + " --prior-p " +
             a("prior_p.json") + " --prior-s " + a("prior_s.json") + " --out " + a("x.csv"), 1},
        {"evaluate --logits " + a("gla.csv") + " --report " + a("x.json") + " --config " +
             a("missing.json"), 2},
        {"study --config " + cfg.string() + " --estimator m2", 2},
        {"simulate --help", 0},
    };
    int wrong_codes = 0;
    std::string which;
    for (const auto& m : matrix) {
      const int code = run_exe(m.args, log);
      if (code != m.expected) {
        ++wrong_codes;
        which += fmt::format(" '{}' gave {}", m.args, code);
      }
    }
    fs::remove_all(root);
    return Outcome{bad_a == 0 && bad_b == 0 && differing == 0 && wrong_codes == 0,
                   fmt::format("{} failed steps, {} differing artifacts, {} wrong exit codes{}",
                               bad_a + bad_b, differing, wrong_codes, which)};
  });

  fmt::print("{} of 9 criteria passed\n", 9 - g_failures);
  return g_failures == 0 ? 0 : 1;
}
