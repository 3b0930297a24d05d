#pragma once

#include <cstddef>
#include <vector>

#include "dlc/errors.hpp"
#include "dlc/prediction.hpp"

namespace dlc {

/// N x D point set, row-major. D in {2, 3}.
struct PointCloud {
    std::size_t dim = 0;
    std::vector<double> xyz;  // n() * dim entries

    PointCloud() = default;
    PointCloud(std::size_t d, std::size_t n) : dim(d), xyz(d * n, 0.0) {}

    std::size_t n() const { return dim == 0 ? 0 : xyz.size() / dim; }
    double at(std::size_t i, std::size_t d) const { return xyz[i * dim + d]; }
    double& at(std::size_t i, std::size_t d) { return xyz[i * dim + d]; }
};

/// Rigid motion: Euler angles in radians (single angle for D=2; ZYX order
/// (z, y, x) for D=3) plus a D-vector translation.
struct RigidMotion {
    std::vector<double> euler;
    std::vector<double> translation;

    std::size_t dim() const { return translation.size(); }

    static RigidMotion identity(std::size_t dim) {
        RigidMotion m;
        m.euler.assign(dim == 2 ? 1 : 3, 0.0);
        m.translation.assign(dim, 0.0);
        return m;
    }

    /// Flat prediction layout: angle segment then translation segment.
    PredictionVector to_omega() const {
        std::vector<double> v = euler;
        v.insert(v.end(), translation.begin(), translation.end());
        return PredictionVector(std::move(v), OmegaLayout::rigid(euler.size(), translation.size()));
    }

    static RigidMotion from_omega(const PredictionVector& omega, std::size_t dim) {
        const std::size_t n_ang = dim == 2 ? 1 : 3;
        if (omega.dim() != n_ang + dim) throw ConfigError("RigidMotion: omega dim mismatch");
        RigidMotion m;
        m.euler.assign(omega.values.begin(), omega.values.begin() + static_cast<long>(n_ang));
        m.translation.assign(omega.values.begin() + static_cast<long>(n_ang), omega.values.end());
        return m;
    }
};

/// Proper rotation matrix (row-major D x D) from Euler angles; ZYX
/// composition R = Rz(a) * Ry(b) * Rx(c) for D=3.
std::vector<double> rotation_matrix(const std::vector<double>& euler);

/// y_i = R x_i + t. Preserves all pairwise distances.
PointCloud apply_transform(const PointCloud& points, const RigidMotion& motion);

/// Inverse motion: x = R^T (y - t).
RigidMotion inverse(const RigidMotion& motion);

/// Angles (ZYX) recovered from a row-major rotation matrix; used by metrics.
std::vector<double> euler_from_matrix(const std::vector<double>& rot, std::size_t dim);

}  // namespace dlc
