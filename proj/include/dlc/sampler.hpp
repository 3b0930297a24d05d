#pragma once

#include <vector>

#include "dlc/prediction.hpp"
#include "dlc/rng.hpp"

namespace dlc {

enum class SamplerMode : std::uint8_t {
    gaussian_additive,       // omega = omega* + sigma_seg * N(0,1) per coordinate
    noisy_one_hot_softmax,   // probability segments: softmax(one_hot + sigma * N(0,1))
};

/// Neighborhood of a ground truth in prediction space. sigma is per segment,
/// in task units: radians for angle segments, task length units for
/// translations, logit scale for probabilities.
struct NeighborhoodSampler {
    std::vector<double> sigma;  // one entry per layout segment
    SamplerMode mode = SamplerMode::gaussian_additive;

    void validate(const OmegaLayout& layout) const {
        if (sigma.size() != layout.segments.size())
            throw ConfigError("sampler: sigma count does not match layout segments");
        for (double s : sigma)
            if (!(s > 0.0)) throw ConfigError("sampler: sigma must be positive");
        if (layout.has_kind(SegmentKind::probability) && mode != SamplerMode::noisy_one_hot_softmax)
            throw ConfigError("sampler: probability segments require noisy-one-hot-softmax mode");
        if (!layout.has_kind(SegmentKind::probability) && mode != SamplerMode::gaussian_additive)
            throw ConfigError("sampler: noisy-one-hot-softmax requires a probability segment");
    }
};

/// Draw one neighbor of omega_star. Angle coordinates are re-wrapped into
/// (-pi, pi]; probability segments go through softmax so the sample stays on
/// the simplex.
PredictionVector sample_one(const PredictionVector& omega_star, const NeighborhoodSampler& sampler,
                            RngStream& rng);

/// n independent draws; deterministic given the rng stream state.
std::vector<PredictionVector> sample_neighborhood(const PredictionVector& omega_star,
                                                  const NeighborhoodSampler& sampler, int n,
                                                  RngStream& rng);

}  // namespace dlc
