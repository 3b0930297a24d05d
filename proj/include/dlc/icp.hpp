#pragma once

#include "dlc/inference.hpp"
#include "dlc/registration.hpp"
#include "dlc/rigid_motion.hpp"

namespace dlc {

/// Least-squares rigid fit of matched rows: argmin over (R, t) of
/// sum |R p_i + t - q_i|^2, via centroid subtraction and an SVD of the
/// cross-covariance with a determinant sign fix (never a reflection).
/// Throws DegenerateGeometryError when the covariance rank is below D-1.
RigidMotion kabsch(const PointCloud& p, const PointCloud& q);

struct IcpResult {
    RigidMotion motion;
    Trajectory trajectory;  // iterates = motion as omega, losses = matched objective
    bool degenerate_warning = false;
    std::size_t iterations = 0;
};

/// Classic point-to-point ICP: alternate brute-force nearest-neighbor
/// matching (ties to the lowest target index) with a Kabsch refit of the
/// full motion. The matched objective (mean squared distance) is
/// non-increasing across iterations; stops when the decrease falls below
/// tol.
IcpResult icp_refine(const PointCloudPair& pair, const PredictionVector& omega_init,
                     int max_iters, double tol);

}  // namespace dlc
