#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <vector>

#include "dlc/sampler.hpp"
#include "dlc/task.hpp"

namespace dlc {

/// Axis-aligned 2-D slice of the loss landscape around a center prediction.
struct SliceSpec {
    std::size_t dim_x = 0;
    std::size_t dim_y = 1;
    double half_width_x = 1.0;
    double half_width_y = 1.0;
    std::size_t resolution = 41;  // grid points per axis
    PredictionVector center;      // = omega*

    void validate() const {
        if (dim_x == dim_y) throw ConfigError("slice: dim_x must differ from dim_y");
        if (resolution < 3) throw ConfigError("slice: resolution must be >= 3");
        if (!(half_width_x > 0.0) || !(half_width_y > 0.0))
            throw ConfigError("slice: half_width must be positive");
        if (dim_x >= center.dim() || dim_y >= center.dim())
            throw ConfigError("slice: dims outside omega");
    }
};

struct SliceResult {
    SliceSpec spec;
    std::vector<double> values;        // resolution x resolution, row-major (y-major)
    std::vector<bool> finite;          // non-finite cells are flagged, not fatal
    std::vector<std::pair<std::size_t, std::size_t>> local_minima;  // strictly below all 8 neighbors
    std::size_t non_strict_cells = 0;  // interior cells tied with their neighborhood minimum
    double center_value = 0.0;

    double at(std::size_t ix, std::size_t iy) const { return values[iy * spec.resolution + ix]; }
};

SliceResult slice_landscape(const Task& task, std::size_t datapoint, const ParamSet& params,
                            const SliceSpec& spec);

/// CSV rows (dx, dy, loss) with a header.
void write_slice_csv(std::ostream& os, const SliceResult& slice);

/// Grayscale heatmap with the ground truth marked at (0,0) and detected
/// local minima crossed out.
void write_slice_svg(std::ostream& os, const SliceResult& slice);

/// Per-condition star-convexity violation statistics within a sampled
/// neighborhood, plus local estimates of mu and L.
struct AuditReport {
    std::size_t n_rays = 0;
    std::size_t points_per_ray = 0;
    double mu = 0.0;        // the mu the hinges were audited at
    double audit_tol = 0.0;
    double rate_con1 = 0.0;   // over rays x lambda grid
    double rate_con2 = 0.0;   // over rays
    double rate_con3 = 0.0;   // over rays x lambda grid
    double rate_envelope = 0.0;   // over rays x lambda grid
    double max_con1 = 0.0;
    double max_con2 = 0.0;
    double max_con3 = 0.0;
    double max_envelope = 0.0;
    double mu_hat = 0.0;      // largest mu with con2 violation rate < 1%
    bool mu_hat_at_cap = false;
    double l_hat = 0.0;       // max sampled gradient norm (lower estimate)

    std::string to_json() const;
};

/// Evaluates the three training hinges plus the gradient-free local-minimum
/// condition on sampled rays and an even interior lambda grid, and estimates
/// mu by bisection over [0, mu_cap].
AuditReport audit_star_convexity(const Task& task, std::size_t datapoint, const ParamSet& params,
                                 const PredictionVector& omega_star,
                                 const NeighborhoodSampler& sampler, std::size_t n_rays,
                                 std::size_t points_per_ray, double mu, double audit_tol,
                                 RngStream& rng);

/// Empirical local Lipschitz estimate: max gradient norm over sampled
/// omegas including omega* itself. A sampled max under-estimates the true
/// constant, so downstream bound checks are labeled indicative.
double estimate_lipschitz(const Task& task, std::size_t datapoint, const ParamSet& params,
                          const PredictionVector& omega_star, const NeighborhoodSampler& sampler,
                          std::size_t n_samples, RngStream& rng);

/// Near-optimality radius check: 2L/mu, inflated to
/// (L/mu)(1 + sqrt(1 + 2 mu gamma / L^2)) when the constraint is violated.
struct BoundCheck {
    double distance = 0.0;
    double bound_value = 0.0;
    double inflated_bound = 0.0;
    double gamma_observed = 0.0;
    bool satisfied = false;

    std::string to_json() const;
};

BoundCheck check_near_optimality(const PredictionVector& omega_pred, const PredictionVector& omega_star,
                        double l_hat, double mu, double gamma_observed);

struct AveragingCurve {
    std::vector<double> mse;  // index t-1 holds E|mean_t|^2
    double loglog_slope = 0.0;
};

/// Running means of i.i.d. zero-mean errors: the empirical MSE-vs-T curve
/// should decay like 1/T when the errors are uncorrelated.
AveragingCurve simulate_averaging(int t_max, double error_std, std::size_t omega_dim,
                                  int n_trials, RngStream& rng);

}  // namespace dlc
