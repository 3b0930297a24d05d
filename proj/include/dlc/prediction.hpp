#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "dlc/errors.hpp"
#include "dlc/tensor.hpp"

namespace dlc {

enum class SegmentKind : std::uint8_t {
    angle,        // radians, wrapped into (-pi, pi]
    linear,       // translations and other unconstrained coordinates
    probability,  // simplex: non-negative, sums to 1
};

struct Segment {
    SegmentKind kind;
    std::size_t begin;
    std::size_t end;  // exclusive
    std::size_t size() const { return end - begin; }
};

/// Task-declared coordinate map of a prediction vector, e.g.
/// euler[0..3) + translation[3..6), or probs[0..K).
struct OmegaLayout {
    std::vector<Segment> segments;
    std::size_t dim = 0;

    static OmegaLayout rigid(std::size_t n_angles, std::size_t n_trans) {
        OmegaLayout l;
        l.segments.push_back({SegmentKind::angle, 0, n_angles});
        l.segments.push_back({SegmentKind::linear, n_angles, n_angles + n_trans});
        l.dim = n_angles + n_trans;
        return l;
    }

    static OmegaLayout linear_only(std::size_t d) {
        OmegaLayout l;
        l.segments.push_back({SegmentKind::linear, 0, d});
        l.dim = d;
        return l;
    }

    static OmegaLayout probability_only(std::size_t k) {
        OmegaLayout l;
        l.segments.push_back({SegmentKind::probability, 0, k});
        l.dim = k;
        return l;
    }

    bool has_kind(SegmentKind k) const {
        for (const auto& s : segments)
            if (s.kind == k) return true;
        return false;
    }

    bool operator==(const OmegaLayout& o) const {
        if (dim != o.dim || segments.size() != o.segments.size()) return false;
        for (std::size_t i = 0; i < segments.size(); ++i)
            if (segments[i].kind != o.segments[i].kind || segments[i].begin != o.segments[i].begin ||
                segments[i].end != o.segments[i].end)
                return false;
        return true;
    }
};

/// Wrap a radian angle into (-pi, pi].
inline double wrap_angle(double a) {
    const double two_pi = 6.283185307179586476925286766559;
    double r = std::fmod(a, two_pi);
    if (r <= -3.14159265358979323846) r += two_pi;
    if (r > 3.14159265358979323846) r -= two_pi;
    return r;
}

/// Flat prediction vector with its coordinate layout.
struct PredictionVector {
    std::vector<double> values;
    OmegaLayout layout;

    PredictionVector() = default;
    PredictionVector(std::vector<double> v, OmegaLayout l) : values(std::move(v)), layout(std::move(l)) {
        if (values.size() != layout.dim)
            throw ConfigError("PredictionVector: length does not match layout");
    }

    std::size_t dim() const { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }
    double& operator[](std::size_t i) { return values[i]; }

    Tensor as_tensor() const { return Tensor::from_vector(values); }

    void wrap_angles() {
        for (const auto& s : layout.segments)
            if (s.kind == SegmentKind::angle)
                for (std::size_t i = s.begin; i < s.end; ++i) values[i] = wrap_angle(values[i]);
    }

    /// Probability segments must be non-negative and sum to 1 within 1e-9.
    void validate() const {
        for (double v : values)
            if (!std::isfinite(v)) throw NumericError("PredictionVector: non-finite coordinate");
        for (const auto& s : layout.segments) {
            if (s.kind != SegmentKind::probability) continue;
            double sum = 0.0;
            for (std::size_t i = s.begin; i < s.end; ++i) {
                if (values[i] < 0.0)
                    throw ConfigError("PredictionVector: negative probability entry");
                sum += values[i];
            }
            if (std::abs(sum - 1.0) > 1e-9)
                throw ConfigError("PredictionVector: probability segment sums to " +
                                  std::to_string(sum));
        }
    }
};

inline void require_same_layout(const PredictionVector& a, const PredictionVector& b,
                                const char* where) {
    if (!(a.layout == b.layout))
        throw ConfigError(std::string(where) + ": prediction layout mismatch");
}

/// Squared Euclidean distance over the raw coordinate vector (angles in
/// radians); the task's units choice determines the metric.
inline double distance_sq(const PredictionVector& a, const PredictionVector& b) {
    require_same_layout(a, b, "distance_sq");
    double s = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

/// Convex combination (1-lambda) * omega_star + lambda * omega, coordinate
/// by coordinate in the raw space. Linear interpolation preserves the
/// simplex for probability segments.
inline PredictionVector interpolate(const PredictionVector& omega_star,
                                    const PredictionVector& omega, double lambda) {
    require_same_layout(omega_star, omega, "interpolate");
    if (lambda < 0.0 || lambda > 1.0) throw ConfigError("interpolate: lambda outside [0,1]");
    PredictionVector out = omega_star;
    for (std::size_t i = 0; i < out.dim(); ++i)
        out[i] = (1.0 - lambda) * omega_star[i] + lambda * omega[i];
    return out;
}

}  // namespace dlc
