#pragma once

#include <string>
#include <vector>

#include "dlc/forward.hpp"
#include "dlc/param_set.hpp"

namespace dlc {

struct GradCheckEntry {
    std::string where;       // "theta:<name>[k]" or "omega[k]"
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_error = 0.0;
    bool kink = false;       // subgradient point; excluded from pass/fail
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    double max_rel_error = 0.0;  // over non-kink coordinates
    std::size_t kink_count = 0;
    bool pass = false;
};

/// Central-difference check of the reverse-mode gradient over every
/// coordinate of params and omega. Coordinates whose perturbed evaluations
/// pass within `step` of a relu kink (or a max-reduce tie) are flagged as
/// subgradient points and excluded from pass/fail.
GradCheckReport check_gradient(const LossBuilder& builder, const ParamSet& params,
                               const Tensor& omega, double step, double tol);

/// Directional variant: compares grad.dot(v) against a central difference
/// along `n_directions` seeded random unit directions. Used where full
/// per-coordinate sweeps are too slow.
GradCheckReport check_gradient_directional(const LossBuilder& builder, const ParamSet& params,
                                           const Tensor& omega, double step, double tol,
                                           int n_directions, std::uint64_t seed);

}  // namespace dlc
