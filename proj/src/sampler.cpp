#include "dlc/sampler.hpp"

#include <cmath>
#include <limits>

namespace dlc {

PredictionVector sample_one(const PredictionVector& omega_star, const NeighborhoodSampler& sampler,
                            RngStream& rng) {
    sampler.validate(omega_star.layout);
    PredictionVector out = omega_star;
    for (std::size_t si = 0; si < omega_star.layout.segments.size(); ++si) {
        const Segment& seg = omega_star.layout.segments[si];
        const double sigma = sampler.sigma[si];
        switch (seg.kind) {
            case SegmentKind::angle:
                for (std::size_t i = seg.begin; i < seg.end; ++i)
                    out[i] = wrap_angle(omega_star[i] + sigma * rng.normal());
                break;
            case SegmentKind::linear:
                for (std::size_t i = seg.begin; i < seg.end; ++i)
                    out[i] = omega_star[i] + sigma * rng.normal();
                break;
            case SegmentKind::probability: {
                // Noise the (one-hot) segment entries, then re-normalize via
                // softmax so the sample is a valid probability vector.
                double mx = -std::numeric_limits<double>::infinity();
                std::vector<double> noisy(seg.size());
                for (std::size_t i = 0; i < seg.size(); ++i) {
                    noisy[i] = omega_star[seg.begin + i] + sigma * rng.normal();
                    mx = std::max(mx, noisy[i]);
                }
                double denom = 0.0;
                for (double& v : noisy) {
                    v = std::exp(v - mx);
                    denom += v;
                }
                for (std::size_t i = 0; i < seg.size(); ++i) out[seg.begin + i] = noisy[i] / denom;
                break;
            }
        }
    }
    return out;
}

std::vector<PredictionVector> sample_neighborhood(const PredictionVector& omega_star,
                                                  const NeighborhoodSampler& sampler, int n,
                                                  RngStream& rng) {
    if (n < 1) throw ConfigError("sample_neighborhood: n must be >= 1");
    std::vector<PredictionVector> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out.push_back(sample_one(omega_star, sampler, rng));
    return out;
}

}  // namespace dlc
