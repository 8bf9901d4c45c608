#pragma once

// Logit-level combination of a zero-shot and a fine-tuned scorer.
// Everything here returns raw logits; callers take argmax or softmax as needed.

#include <optional>
#include <vector>

#include "gla/numerics.hpp"

namespace gla {

/// Log priors used to debias the two scorers. pi_t empty means a balanced target.
struct AdjustmentSpec {
  std::optional<std::vector<double>> pi_s;
  std::optional<std::vector<double>> pi_p;
  std::optional<std::vector<double>> pi_t;

  /// Checks lengths against k and that each vector exponentiates to a
  /// simplex within 1e-6.
  void validate(std::size_t k) const;
};

struct MixSpec {
  double alpha = 0.5;

  void validate() const;
};

/// zs - pi_p, row-wise.
LogitTable debias_zero_shot(const LogitTable& zs, const std::vector<double>& pi_p);

/// ft - pi_s, row-wise.
LogitTable logit_adjust(const LogitTable& ft, const std::vector<double>& pi_s);

/// ft + zs - pi_s - pi_p (+ pi_t when a non-balanced target prior is given).
LogitTable gla_combine(const LogitTable& ft, const LogitTable& zs, const AdjustmentSpec& adj);

/// ft + zs.
LogitTable naive_ensemble(const LogitTable& ft, const LogitTable& zs);

/// (1 - alpha)(zs - pi_p) + alpha (ft - pi_s).
LogitTable alpha_mix(const LogitTable& ft, const LogitTable& zs, const AdjustmentSpec& adj,
                     const MixSpec& mix);

}  // namespace gla
