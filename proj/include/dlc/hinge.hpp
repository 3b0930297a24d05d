#pragma once

#include <cmath>

#include "dlc/errors.hpp"
#include "dlc/prediction.hpp"

namespace dlc {

namespace detail {
inline void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw NumericError(std::string("hinge: non-finite ") + what);
}
}  // namespace detail

/// Minimal slack of the local-minimum constraint h(w*) <= h(w~) + eps.
inline double hinge_con1(double h_star, double h_tilde) {
    detail::require_finite(h_star, "h_star");
    detail::require_finite(h_tilde, "h_tilde");
    return std::max(0.0, h_star - h_tilde);
}

/// Minimal slack of the strong star-convexity lower-envelope constraint
/// h(w*) <= h(w) - (mu/2)|w*-w|^2 + gamma.
inline double hinge_con2(double h_star, double h_omega, double dist_sq, double mu) {
    detail::require_finite(h_star, "h_star");
    detail::require_finite(h_omega, "h_omega");
    if (dist_sq < 0.0) throw ConfigError("hinge_con2: dist_sq must be >= 0");
    if (mu < 0.0) throw ConfigError("hinge_con2: mu must be >= 0");
    return std::max(0.0, h_star - h_omega + 0.5 * mu * dist_sq);
}

/// Minimal slack of the chord constraint
/// h(w~) <= (1-l) h(w*) + l h(w) - (l(1-l)mu/2)|w*-w|^2 + xi.
inline double hinge_con3(double h_tilde, double h_star, double h_omega, double lambda,
                         double dist_sq, double mu) {
    detail::require_finite(h_tilde, "h_tilde");
    detail::require_finite(h_star, "h_star");
    detail::require_finite(h_omega, "h_omega");
    if (lambda < 0.0 || lambda > 1.0) throw ConfigError("hinge_con3: lambda outside [0,1]");
    if (dist_sq < 0.0) throw ConfigError("hinge_con3: dist_sq must be >= 0");
    if (mu < 0.0) throw ConfigError("hinge_con3: mu must be >= 0");
    return std::max(0.0, h_tilde - (1.0 - lambda) * h_star - lambda * h_omega +
                             0.5 * lambda * (1.0 - lambda) * mu * dist_sq);
}

/// Gradient-free variant of the lower-envelope condition evaluated at the
/// interpolant: h(w*) <= h(w~) - (mu/2)|w*-w~|^2. Audited alongside the
/// three training hinges.
inline double hinge_envelope(double h_star, double h_tilde, double dist_sq_tilde, double mu) {
    detail::require_finite(h_star, "h_star");
    detail::require_finite(h_tilde, "h_tilde");
    if (dist_sq_tilde < 0.0) throw ConfigError("hinge_envelope: dist_sq must be >= 0");
    if (mu < 0.0) throw ConfigError("hinge_envelope: mu must be >= 0");
    return std::max(0.0, h_star - h_tilde + 0.5 * mu * dist_sq_tilde);
}

/// The three slack values realized for one sampled omega, with the points
/// they were evaluated at. Each value is exactly 0 when its constraint holds.
struct HingeTriple {
    double epsilon = 0.0;
    double gamma = 0.0;
    double xi = 0.0;
    PredictionVector omega_sample;
    PredictionVector omega_tilde;
};

}  // namespace dlc
