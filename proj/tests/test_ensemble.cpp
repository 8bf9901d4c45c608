#include <cmath>
#include <random>

#include "doctest.h"
#include "gla/ensemble.hpp"
#include "gla/errors.hpp"
#include "gla/kernels.hpp"

using namespace gla;

namespace {

std::vector<double> log_of(std::vector<double> p) {
  for (double& x : p) x = std::log(x);
  return p;
}

LogitTable random_table(std::size_t n, std::size_t k, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 3.0);
  std::vector<double> v(n * k);
  for (double& x : v) x = g(rng);
  return LogitTable(n, k, std::move(v));
}

std::vector<double> random_log_prior(std::size_t k, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> w(k);
  double s = 0.0;
  for (double& x : w) s += (x = e(rng));
  for (double& x : w) x = std::log(x / s);
  return w;
}

}  // namespace

TEST_SUITE("ensemble") {

TEST_CASE("debias_zero_shot examples") {
  std::mt19937_64 rng(1);
  const auto zs = random_table(40, 4, rng);
  const auto uniform = log_of({0.25, 0.25, 0.25, 0.25});
  CHECK(kernels::argmax_rows(debias_zero_shot(zs, uniform)) == kernels::argmax_rows(zs));

  const auto row = LogitTable::from_rows({{1.0, 1.0}});
  const auto d = debias_zero_shot(row, log_of({0.9, 0.1}));
  CHECK(d.at(0, 0) == doctest::Approx(1.10536).epsilon(1e-5));
  CHECK(d.at(0, 1) == doctest::Approx(3.30259).epsilon(1e-5));
  CHECK(argmax(row.row(0)) == 0);
  CHECK(argmax(d.row(0)) == 1);
}

TEST_CASE("debiasing by pi then -pi restores the table") {
  // Dyadic shifts make both subtractions exact.
  const auto zs = LogitTable::from_rows({{1.5, -2.25}, {0.125, 8.0}});
  const std::vector<double> pi{-0.5, -1.75};
  const std::vector<double> neg{0.5, 1.75};
  CHECK(debias_zero_shot(debias_zero_shot(zs, pi), neg) == zs);

  std::mt19937_64 rng(2);
  const auto t = random_table(100, 5, rng);
  auto p = random_log_prior(5, rng);
  auto back = p;
  for (double& x : back) x = -x;
  const auto round = debias_zero_shot(debias_zero_shot(t, p), back);
  for (std::size_t i = 0; i < t.data().size(); ++i) {
    CHECK(std::abs(round.data()[i] - t.data()[i]) <= 1e-14 * (1.0 + std::abs(t.data()[i])));
  }
}

TEST_CASE("logit_adjust examples") {
  std::mt19937_64 rng(3);
  const auto ft = random_table(30, 3, rng);
  CHECK(kernels::argmax_rows(logit_adjust(ft, log_of({1 / 3., 1 / 3., 1 / 3.}))) ==
        kernels::argmax_rows(ft));

  const auto zero = LogitTable::from_rows({{0.0, 0.0}});
  const auto a = logit_adjust(zero, log_of({0.75, 0.25}));
  CHECK(a.at(0, 0) == doctest::Approx(0.28768).epsilon(1e-5));
  CHECK(a.at(0, 1) == doctest::Approx(1.38629).epsilon(1e-5));

  const auto floored = log_prior(ProbabilitySimplex({1.0, 0.0}));
  const auto f = logit_adjust(zero, floored);
  CHECK(std::isfinite(f.at(0, 1)));
}

TEST_CASE("gla_combine examples") {
  const auto ft = LogitTable::from_rows({{1.0, 2.0}});
  const auto zs = LogitTable::from_rows({{0.5, 0.5}});
  AdjustmentSpec adj{log_of({0.5, 0.5}), log_of({0.8, 0.2}), std::nullopt};
  const auto g = gla_combine(ft, zs, adj);
  // 1 + 0.5 + ln 2 - ln 0.8 and 2 + 0.5 + ln 2 - ln 0.2.
  CHECK(g.at(0, 0) == doctest::Approx(2.41629).epsilon(1e-5));
  CHECK(g.at(0, 1) == doctest::Approx(4.80259).epsilon(1e-5));

  std::mt19937_64 rng(4);
  const auto a = random_table(200, 4, rng);
  const auto b = random_table(200, 4, rng);
  const auto uniform = log_of({0.25, 0.25, 0.25, 0.25});
  AdjustmentSpec flat{uniform, uniform, std::nullopt};
  CHECK(kernels::argmax_rows(gla_combine(a, b, flat)) ==
        kernels::argmax_rows(naive_ensemble(a, b)));

  const LogitTable silent(200, 4, std::vector<double>(800, 0.0));
  const auto pi_s = random_log_prior(4, rng);
  AdjustmentSpec uninformative{pi_s, uniform, std::nullopt};
  CHECK(kernels::argmax_rows(gla_combine(a, silent, uninformative)) ==
        kernels::argmax_rows(logit_adjust(a, pi_s)));
}

TEST_CASE("gla_combine decomposes into two debiased models") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 20; ++t) {
    const std::size_t k = 2 + t % 6;
    const auto ft = random_table(64, k, rng);
    const auto zs = random_table(64, k, rng);
    AdjustmentSpec adj{random_log_prior(k, rng), random_log_prior(k, rng), std::nullopt};
    const auto direct = gla_combine(ft, zs, adj);
    const auto parts = naive_ensemble(logit_adjust(ft, *adj.pi_s), debias_zero_shot(zs, *adj.pi_p));
    for (std::size_t i = 0; i < direct.data().size(); ++i) {
      CHECK(std::abs(direct.data()[i] - parts.data()[i]) <= 1e-12);
    }
  }
}

TEST_CASE("gla_combine adds a non-balanced target prior") {
  const auto ft = LogitTable::from_rows({{0.0, 0.0, 0.0}});
  const auto zs = LogitTable::from_rows({{0.0, 0.0, 0.0}});
  const auto uniform = log_of({1 / 3., 1 / 3., 1 / 3.});
  const auto target = log_of({0.6, 0.3, 0.1});
  const auto g = gla_combine(ft, zs, {uniform, uniform, target});
  const auto base = gla_combine(ft, zs, {uniform, uniform, std::nullopt});
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(g.at(0, c) - base.at(0, c) == doctest::Approx(target[c]).epsilon(1e-14));
  }
  // A balanced target only shifts every logit by ln(1/K), so it is dropped.
  CHECK(gla_combine(ft, zs, {uniform, uniform, uniform}) == base);
}

TEST_CASE("naive_ensemble examples") {
  std::mt19937_64 rng(6);
  const auto ft = random_table(20, 3, rng);
  const LogitTable zero(20, 3, std::vector<double>(60, 0.0));
  CHECK(naive_ensemble(ft, zero) == ft);

  const auto s = naive_ensemble(LogitTable::from_rows({{1.0, 0.0}}), LogitTable::from_rows({{0.0, 1.0}}));
  CHECK(s.at(0, 0) == 1.0);
  CHECK(s.at(0, 1) == 1.0);
  CHECK(argmax(s.row(0)) == 0);

  const auto zs = random_table(20, 3, rng);
  const auto uniform = log_of({1 / 3., 1 / 3., 1 / 3.});
  const auto g = gla_combine(ft, zs, {uniform, uniform, std::nullopt});
  const auto n = naive_ensemble(ft, zs);
  for (std::size_t r = 0; r < 20; ++r) {
    const double shift = g.at(r, 0) - n.at(r, 0);
    for (std::size_t c = 1; c < 3; ++c) CHECK(g.at(r, c) - n.at(r, c) == doctest::Approx(shift));
  }
}

TEST_CASE("alpha_mix endpoints and midpoint") {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 10; ++t) {
    const std::size_t k = 2 + t % 4;
    const auto ft = random_table(50, k, rng);
    const auto zs = random_table(50, k, rng);
    AdjustmentSpec adj{random_log_prior(k, rng), random_log_prior(k, rng), std::nullopt};
    CHECK(alpha_mix(ft, zs, adj, {1.0}) == logit_adjust(ft, *adj.pi_s));
    CHECK(alpha_mix(ft, zs, adj, {0.0}) == debias_zero_shot(zs, *adj.pi_p));
    CHECK(kernels::argmax_rows(alpha_mix(ft, zs, adj, {0.5})) ==
          kernels::argmax_rows(gla_combine(ft, zs, adj)));
  }
}

TEST_CASE("argmax is invariant to per-row constant shifts") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0.0, 10.0);
  const auto t = random_table(300, 6, rng);
  for (std::size_t r = 0; r < t.n_examples(); ++r) {
    std::vector<double> row(t.row(r).begin(), t.row(r).end());
    const double c = g(rng);
    for (double& x : row) x += c;
    CHECK(argmax(row) == argmax(t.row(r)));
  }
}

TEST_CASE("ensemble errors") {
  const auto a = LogitTable::from_rows({{0.0, 1.0}});
  const auto b = LogitTable::from_rows({{0.0, 1.0}, {1.0, 0.0}});
  const auto c = LogitTable::from_rows({{0.0, 1.0, 2.0}});
  const auto half = log_of({0.5, 0.5});
  CHECK_THROWS_AS(naive_ensemble(a, b), DimensionError);
  CHECK_THROWS_AS(naive_ensemble(a, c), DimensionError);
  CHECK_THROWS_AS(debias_zero_shot(c, half), DimensionError);
  CHECK_THROWS_AS(logit_adjust(c, half), DimensionError);
  CHECK_THROWS_AS(gla_combine(a, b, {half, half, std::nullopt}), DimensionError);
  CHECK_THROWS_AS(gla_combine(a, a, {std::nullopt, half, std::nullopt}), InvalidInput);
  CHECK_THROWS_AS(gla_combine(a, a, {half, std::vector<double>{0.0, 0.0}, std::nullopt}),
                  InvalidInput);
  CHECK_THROWS_AS(alpha_mix(a, a, {half, half, std::nullopt}, {1.5}), InvalidInput);
  CHECK_THROWS_AS(alpha_mix(a, b, {half, half, std::nullopt}, {0.5}), DimensionError);
}

}  // TEST_SUITE
