#pragma once
/** \file
    Finite-difference checks of the analytic gradients, used by the
    `gradcheck` command. Errors are |analytic - fd| / max(1, |fd|).
*/

#include <cstdint>

namespace drsl {

struct GradcheckResult {
  double max_error = 0.0;
  long coordinates = 0;
};

inline constexpr double kGradBTolerance = 1e-6;
inline constexpr double kBackpropTolerance = 1e-5;

/// Signature gradient on random instances (T=20, V=6, P=3, alpha=10, batch 10),
/// skipping coordinates with |b| <= 1e-3.
GradcheckResult check_grad_b(std::uint64_t seed, int instances = 25);

/// Kernel-loss gradients of random sigmoid/tanh networks no larger than [8,6,5,4].
GradcheckResult check_backprop(std::uint64_t seed, int instances = 10);

}  // namespace drsl
