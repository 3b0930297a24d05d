#include "dlc/rigid_motion.hpp"

#include <algorithm>
#include <cmath>

namespace dlc {

std::vector<double> rotation_matrix(const std::vector<double>& euler) {
    for (double a : euler)
        if (!std::isfinite(a)) throw NumericError("rotation_matrix: non-finite angle");
    if (euler.size() == 1) {
        const double c = std::cos(euler[0]), s = std::sin(euler[0]);
        return {c, -s, s, c};
    }
    if (euler.size() == 3) {
        const double ca = std::cos(euler[0]), sa = std::sin(euler[0]);  // z
        const double cb = std::cos(euler[1]), sb = std::sin(euler[1]);  // y
        const double cg = std::cos(euler[2]), sg = std::sin(euler[2]);  // x
        return {ca * cb, ca * sb * sg - sa * cg, ca * sb * cg + sa * sg,
                sa * cb, sa * sb * sg + ca * cg, sa * sb * cg - ca * sg,
                -sb,     cb * sg,                cb * cg};
    }
    throw ConfigError("rotation_matrix: expected 1 or 3 Euler angles");
}

PointCloud apply_transform(const PointCloud& points, const RigidMotion& motion) {
    const std::size_t d = points.dim;
    if (motion.dim() != d) throw ConfigError("apply_transform: dimension mismatch");
    const std::vector<double> rot = rotation_matrix(motion.euler);
    PointCloud out(d, points.n());
    for (std::size_t i = 0; i < points.n(); ++i)
        for (std::size_t r = 0; r < d; ++r) {
            double v = motion.translation[r];
            for (std::size_t c = 0; c < d; ++c) v += rot[r * d + c] * points.at(i, c);
            out.at(i, r) = v;
        }
    return out;
}

RigidMotion inverse(const RigidMotion& motion) {
    const std::size_t d = motion.dim();
    const std::vector<double> rot = rotation_matrix(motion.euler);
    // R^T as a motion: euler(R^T), t' = -R^T t
    std::vector<double> rt(d * d);
    for (std::size_t r = 0; r < d; ++r)
        for (std::size_t c = 0; c < d; ++c) rt[r * d + c] = rot[c * d + r];
    RigidMotion inv;
    inv.euler = euler_from_matrix(rt, d);
    inv.translation.assign(d, 0.0);
    for (std::size_t r = 0; r < d; ++r)
        for (std::size_t c = 0; c < d; ++c) inv.translation[r] -= rt[r * d + c] * motion.translation[c];
    return inv;
}

std::vector<double> euler_from_matrix(const std::vector<double>& rot, std::size_t dim) {
    if (dim == 2) return {std::atan2(rot[2], rot[0])};
    // ZYX: R = Rz(a) Ry(b) Rx(c); r20 = -sin b
    const double sb = -rot[6];
    const double b = std::asin(std::clamp(sb, -1.0, 1.0));
    double a, c;
    if (std::abs(sb) < 1.0 - 1e-12) {
        a = std::atan2(rot[3], rot[0]);
        c = std::atan2(rot[7], rot[8]);
    } else {
        // Gimbal lock: fold everything into a.
        a = std::atan2(-rot[1], rot[4]);
        c = 0.0;
    }
    return {a, b, c};
}

}  // namespace dlc
