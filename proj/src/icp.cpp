#include "dlc/icp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace dlc {

namespace {

// Cyclic Jacobi eigendecomposition of a symmetric d x d matrix (d <= 3).
// Eigenvalues come out descending with matching orthonormal columns in V.
void jacobi_eig(std::size_t d, std::array<double, 9>& a, std::array<double, 9>& v,
                std::array<double, 3>& eig) {
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) v[i * d + j] = i == j ? 1.0 : 0.0;

    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = i + 1; j < d; ++j) off += a[i * d + j] * a[i * d + j];
        if (off < 1e-30) break;
        for (std::size_t p = 0; p < d; ++p)
            for (std::size_t q = p + 1; q < d; ++q) {
                const double apq = a[p * d + q];
                if (std::abs(apq) < 1e-300) continue;
                const double theta = (a[q * d + q] - a[p * d + p]) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < d; ++k) {
                    const double akp = a[k * d + p], akq = a[k * d + q];
                    a[k * d + p] = c * akp - s * akq;
                    a[k * d + q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < d; ++k) {
                    const double apk = a[p * d + k], aqk = a[q * d + k];
                    a[p * d + k] = c * apk - s * aqk;
                    a[q * d + k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < d; ++k) {
                    const double vkp = v[k * d + p], vkq = v[k * d + q];
                    v[k * d + p] = c * vkp - s * vkq;
                    v[k * d + q] = s * vkp + c * vkq;
                }
            }
    }
    for (std::size_t i = 0; i < d; ++i) eig[i] = a[i * d + i];

    // Sort descending, carrying columns of V along.
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j)
            if (eig[j] > eig[i]) {
                std::swap(eig[i], eig[j]);
                for (std::size_t k = 0; k < d; ++k) std::swap(v[k * d + i], v[k * d + j]);
            }
}

double det(std::size_t d, const std::array<double, 9>& m) {
    if (d == 2) return m[0] * m[3] - m[1] * m[2];
    return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
}

}  // namespace

RigidMotion kabsch(const PointCloud& p, const PointCloud& q) {
    const std::size_t d = p.dim;
    const std::size_t n = p.n();
    if (d != q.dim || n != q.n()) throw ConfigError("kabsch: mismatched point sets");
    if (d != 2 && d != 3) throw ConfigError("kabsch: dim must be 2 or 3");
    if (n < d) throw ConfigError("kabsch: need at least D matched points");

    std::array<double, 3> pc{}, qc{};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < d; ++k) {
            pc[k] += p.at(i, k);
            qc[k] += q.at(i, k);
        }
    for (std::size_t k = 0; k < d; ++k) {
        pc[k] /= static_cast<double>(n);
        qc[k] /= static_cast<double>(n);
    }

    // Cross-covariance H = sum (p - pc)(q - qc)^T.
    std::array<double, 9> h{};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t r = 0; r < d; ++r)
            for (std::size_t c = 0; c < d; ++c)
                h[r * d + c] += (p.at(i, r) - pc[r]) * (q.at(i, c) - qc[c]);

    // SVD H = U S V^T via eigendecomposition of H^T H.
    std::array<double, 9> hth{};
    for (std::size_t r = 0; r < d; ++r)
        for (std::size_t c = 0; c < d; ++c) {
            double s = 0.0;
            for (std::size_t k = 0; k < d; ++k) s += h[k * d + r] * h[k * d + c];
            hth[r * d + c] = s;
        }
    std::array<double, 9> vmat{};
    std::array<double, 3> eig{};
    jacobi_eig(d, hth, vmat, eig);

    std::array<double, 3> sigma{};
    for (std::size_t i = 0; i < d; ++i) sigma[i] = std::sqrt(std::max(eig[i], 0.0));
    const double smax = sigma[0];
    if (!(smax > 0.0)) throw DegenerateGeometryError("kabsch: zero covariance");
    const double rank_tol = smax * 1e-9;
    std::size_t rank = 0;
    for (std::size_t i = 0; i < d; ++i)
        if (sigma[i] > rank_tol) ++rank;
    if (rank < d - 1) throw DegenerateGeometryError("kabsch: rank-deficient covariance");

    // U columns: u_i = H v_i / sigma_i; the null direction (rank D-1) is
    // completed orthogonally.
    std::array<double, 9> u{};
    for (std::size_t i = 0; i < d; ++i) {
        if (sigma[i] > rank_tol) {
            for (std::size_t r = 0; r < d; ++r) {
                double s = 0.0;
                for (std::size_t c = 0; c < d; ++c) s += h[r * d + c] * vmat[c * d + i];
                u[r * d + i] = s / sigma[i];
            }
        } else if (d == 2) {
            u[0 * d + i] = -u[1 * d + (1 - i)];
            u[1 * d + i] = u[0 * d + (1 - i)];
        } else {
            // cross product of the two valid columns
            const std::size_t a = (i + 1) % 3, b = (i + 2) % 3;
            u[0 * d + i] = u[1 * d + a] * u[2 * d + b] - u[2 * d + a] * u[1 * d + b];
            u[1 * d + i] = u[2 * d + a] * u[0 * d + b] - u[0 * d + a] * u[2 * d + b];
            u[2 * d + i] = u[0 * d + a] * u[1 * d + b] - u[1 * d + a] * u[0 * d + b];
        }
    }

    // R = V D U^T with D = diag(1, ..., det(V U^T)) to rule out reflections.
    std::array<double, 9> vut{};
    for (std::size_t r = 0; r < d; ++r)
        for (std::size_t c = 0; c < d; ++c) {
            double s = 0.0;
            for (std::size_t k = 0; k < d; ++k) s += vmat[r * d + k] * u[c * d + k];
            vut[r * d + c] = s;
        }
    const double sign = det(d, vut) < 0.0 ? -1.0 : 1.0;

    std::vector<double> rot(d * d, 0.0);
    for (std::size_t r = 0; r < d; ++r)
        for (std::size_t c = 0; c < d; ++c) {
            double s = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double dk = k == d - 1 ? sign : 1.0;
                s += vmat[r * d + k] * dk * u[c * d + k];
            }
            rot[r * d + c] = s;
        }

    RigidMotion m;
    m.euler = euler_from_matrix(rot, d);
    m.translation.assign(d, 0.0);
    for (std::size_t r = 0; r < d; ++r) {
        double s = qc[r];
        for (std::size_t c = 0; c < d; ++c) s -= rot[r * d + c] * pc[c];
        m.translation[r] = s;
    }
    return m;
}

IcpResult icp_refine(const PointCloudPair& pair, const PredictionVector& omega_init,
                     int max_iters, double tol) {
    if (max_iters < 1) throw ConfigError("icp_refine: max_iters must be >= 1");
    if (tol < 0.0) throw ConfigError("icp_refine: tol must be >= 0");
    const std::size_t d = pair.source.dim;
    const std::size_t n_src = pair.source.n();
    const std::size_t n_tgt = pair.target.n();
    if (n_tgt == 0) throw ConfigError("icp_refine: empty target");

    IcpResult result;
    result.motion = RigidMotion::from_omega(omega_init, d);
    double prev_obj = std::numeric_limits<double>::infinity();

    for (int it = 0; it < max_iters; ++it) {
        const PointCloud moved = apply_transform(pair.source, result.motion);

        // Brute-force nearest neighbor from transformed source to target;
        // ties break to the lowest target index.
        std::vector<std::size_t> match(n_src);
        double obj = 0.0;
        for (std::size_t i = 0; i < n_src; ++i) {
            double best = std::numeric_limits<double>::infinity();
            std::size_t arg = 0;
            for (std::size_t j = 0; j < n_tgt; ++j) {
                double dist = 0.0;
                for (std::size_t k = 0; k < d; ++k) {
                    const double dv = moved.at(i, k) - pair.target.at(j, k);
                    dist += dv * dv;
                }
                if (dist < best) {
                    best = dist;
                    arg = j;
                }
            }
            match[i] = arg;
            obj += best;
        }
        obj /= static_cast<double>(n_src);

        ++result.iterations;
        result.trajectory.iterates.push_back(result.motion.to_omega());
        result.trajectory.losses.push_back(obj);
        result.trajectory.wall_time_us.push_back(0.0);

        if (obj <= 1e-30 || prev_obj - obj < tol) break;
        prev_obj = obj;

        PointCloud matched(d, n_src);
        for (std::size_t i = 0; i < n_src; ++i)
            for (std::size_t k = 0; k < d; ++k) matched.at(i, k) = pair.target.at(match[i], k);
        try {
            result.motion = kabsch(pair.source, matched);
        } catch (const DegenerateGeometryError&) {
            result.degenerate_warning = true;
            break;
        }
    }
    return result;
}

}  // namespace dlc
