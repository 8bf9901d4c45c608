#include "gla/ensemble.hpp"

#include <cmath>
#include <string>

#include "gla/errors.hpp"
#include "gla/kernels.hpp"

namespace gla {

namespace {

void check_log_simplex(const std::optional<std::vector<double>>& v, std::size_t k,
                       const char* name) {
  if (!v) return;
  require_length(*v, k, name);
  double mass = 0.0;
  for (double x : *v) {
    if (!std::isfinite(x)) throw InvalidInput(std::string(name) + " has a non-finite entry");
    mass += std::exp(x);
  }
  if (std::abs(mass - 1.0) > 1e-6) {
    throw InvalidInput(std::string(name) + " does not exponentiate to a probability simplex");
  }
}

const std::vector<double>& required(const std::optional<std::vector<double>>& v,
                                    const char* name) {
  if (!v) throw InvalidInput(std::string(name) + " is required");
  return *v;
}

void check_pair(const LogitTable& ft, const LogitTable& zs) {
  if (ft.n_examples() != zs.n_examples() || ft.n_classes() != zs.n_classes()) {
    throw DimensionError("fine-tuned table is " + std::to_string(ft.n_examples()) + "x" +
                         std::to_string(ft.n_classes()) + " but zero-shot table is " +
                         std::to_string(zs.n_examples()) + "x" + std::to_string(zs.n_classes()));
  }
}

// A balanced target prior only adds a per-row constant, which no
// argmax or softmax can see, so it is dropped.
bool is_balanced(const std::vector<double>& pi_t) {
  for (double x : pi_t) {
    if (x != pi_t.front()) return false;
  }
  return true;
}

}  // namespace

void AdjustmentSpec::validate(std::size_t k) const {
  check_log_simplex(pi_s, k, "pi_s");
  check_log_simplex(pi_p, k, "pi_p");
  check_log_simplex(pi_t, k, "pi_t");
}

void MixSpec::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidInput("alpha must lie in [0, 1]");
}

LogitTable debias_zero_shot(const LogitTable& zs, const std::vector<double>& pi_p) {
  return LogitTable(zs.n_examples(), zs.n_classes(), kernels::shift_rows(zs, pi_p));
}

LogitTable logit_adjust(const LogitTable& ft, const std::vector<double>& pi_s) {
  return LogitTable(ft.n_examples(), ft.n_classes(), kernels::shift_rows(ft, pi_s));
}

LogitTable gla_combine(const LogitTable& ft, const LogitTable& zs, const AdjustmentSpec& adj) {
  check_pair(ft, zs);
  const std::size_t k = ft.n_classes();
  adj.validate(k);
  const auto& pi_s = required(adj.pi_s, "pi_s");
  const auto& pi_p = required(adj.pi_p, "pi_p");
  std::vector<double> offset;
  if (adj.pi_t && !is_balanced(*adj.pi_t)) offset = *adj.pi_t;
  return LogitTable(ft.n_examples(), k,
                    kernels::weighted_debiased_sum(ft, pi_s, 1.0, zs, pi_p, 1.0, offset));
}

LogitTable naive_ensemble(const LogitTable& ft, const LogitTable& zs) {
  check_pair(ft, zs);
  const std::vector<double> zero(ft.n_classes(), 0.0);
  return LogitTable(ft.n_examples(), ft.n_classes(),
                    kernels::weighted_debiased_sum(ft, zero, 1.0, zs, zero, 1.0, {}));
}

LogitTable alpha_mix(const LogitTable& ft, const LogitTable& zs, const AdjustmentSpec& adj,
                     const MixSpec& mix) {
  check_pair(ft, zs);
  mix.validate();
  const std::size_t k = ft.n_classes();
  adj.validate(k);
  const auto& pi_s = required(adj.pi_s, "pi_s");
  const auto& pi_p = required(adj.pi_p, "pi_p");
  return LogitTable(
      ft.n_examples(), k,
      kernels::weighted_debiased_sum(zs, pi_p, 1.0 - mix.alpha, ft, pi_s, mix.alpha, {}));
}

}  // namespace gla
