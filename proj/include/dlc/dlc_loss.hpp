#pragma once

#include <limits>
#include <vector>

#include "dlc/hinge.hpp"
#include "dlc/sampler.hpp"
#include "dlc/task.hpp"

namespace dlc {

/// Hyperparameters of the star-convexity constrained objective.
struct DlcConfig {
    bool enabled = true;      // false: plain task loss, no sampling at all
    double lambda = 0.5;      // interpolation point, fixed unless trainable
    double mu = 4.0;          // surface sharpness
    double rho = 0.2;         // hinge trade-off
    int n_samples = 3;        // neighborhood draws per datapoint
    NeighborhoodSampler sampler;
    /// Reparametrize lambda = sigmoid(a), mu = exp(b) with trainable scalars
    /// "dlc.lambda_raw" / "dlc.mu_raw" in the ParamSet. Off by default so the
    /// audit suite stays deterministic.
    bool trainable = false;

    void validate() const {
        if (lambda < 0.0 || lambda > 1.0) throw ConfigError("DlcConfig: lambda outside [0,1]");
        if (mu < 0.0) throw ConfigError("DlcConfig: mu must be >= 0");
        if (rho < 0.0) throw ConfigError("DlcConfig: rho must be >= 0");
        if (n_samples < 1) throw ConfigError("DlcConfig: n_samples must be >= 1");
    }

    /// Names of the reparametrization scalars when trainable is set.
    static constexpr const char* lambda_param = "dlc.lambda_raw";
    static constexpr const char* mu_param = "dlc.mu_raw";
};

struct DlcLossResult {
    double loss = 0.0;        // base + rho * hinge_mean
    double base = 0.0;        // h_theta(omega*)
    double hinge_mean = 0.0;  // E[eps + gamma + xi] over the drawn samples
    Gradients grads;          // w.r.t. theta (omega* leaf grad also available)
    std::vector<HingeTriple> diagnostics;
    // Kink proximity of the underlying tape (relu inputs / max-reduce gaps);
    // finite-difference checks use these to skip subgradient points.
    double min_relu_input_abs = std::numeric_limits<double>::infinity();
    double min_max_gap = std::numeric_limits<double>::infinity();
};

/// Composite objective h(w*) + rho * mean(eps + gamma + xi) with the slacks
/// realized as hinges on the same tape as h(w*), so gradients flow to theta
/// through every term. With rho == 0 (or enabled == false) this is
/// bit-identical to the plain task loss: no sampling, no hinge subgraph.
DlcLossResult dlc_loss(const Task& task, std::size_t datapoint, const ParamSet& params,
                       const DlcConfig& cfg, RngStream& rng);

/// Variant with the neighborhood samples supplied by the caller (used by
/// tests that force specific omegas).
DlcLossResult dlc_loss_with_samples(const Task& task, std::size_t datapoint,
                                    const ParamSet& params, const DlcConfig& cfg,
                                    const std::vector<PredictionVector>& samples);

}  // namespace dlc
