#include "dlc/analyzer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include <json.hpp>

#include "dlc/csv.hpp"
#include "dlc/hinge.hpp"

namespace dlc {

namespace {

double loss_value(const Task& task, std::size_t datapoint, const ParamSet& params,
                  const PredictionVector& omega) {
    ad::Tape tape;
    BoundParams bound = bind_params(tape, params);
    ad::Var w = tape.leaf(omega.as_tensor(), "omega");
    return tape.value_scalar(task.build_loss(tape, datapoint, bound, w));
}

double grad_norm(const Task& task, std::size_t datapoint, const ParamSet& params,
                 const PredictionVector& omega) {
    ad::Tape tape;
    BoundParams bound = bind_params(tape, params);
    ad::Var w = tape.leaf(omega.as_tensor(), "omega");
    ad::Var loss = task.build_loss(tape, datapoint, bound, w);
    tape.backward(loss);
    const Tensor& g = tape.grad(w);
    double s = 0.0;
    for (double v : g.data) s += v * v;
    return std::sqrt(s);
}

}  // namespace

SliceResult slice_landscape(const Task& task, std::size_t datapoint, const ParamSet& params,
                            const SliceSpec& spec) {
    spec.validate();
    const std::size_t res = spec.resolution;
    SliceResult out;
    out.spec = spec;
    out.values.assign(res * res, 0.0);
    out.finite.assign(res * res, true);

    for (std::size_t iy = 0; iy < res; ++iy)
        for (std::size_t ix = 0; ix < res; ++ix) {
            PredictionVector w = spec.center;
            w[spec.dim_x] += -spec.half_width_x +
                             2.0 * spec.half_width_x * static_cast<double>(ix) /
                                 static_cast<double>(res - 1);
            w[spec.dim_y] += -spec.half_width_y +
                             2.0 * spec.half_width_y * static_cast<double>(iy) /
                                 static_cast<double>(res - 1);
            double v;
            try {
                v = loss_value(task, datapoint, params, w);
            } catch (const NonFiniteError&) {
                v = std::numeric_limits<double>::quiet_NaN();
            }
            out.values[iy * res + ix] = v;
            out.finite[iy * res + ix] = std::isfinite(v);
        }

    out.center_value = out.at(res / 2, res / 2);

    for (std::size_t iy = 1; iy + 1 < res; ++iy)
        for (std::size_t ix = 1; ix + 1 < res; ++ix) {
            if (!out.finite[iy * res + ix]) continue;
            const double v = out.at(ix, iy);
            bool strict = true, weak = true;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    const double nb = out.at(ix + static_cast<std::size_t>(dx),
                                             iy + static_cast<std::size_t>(dy));
                    if (!(v < nb)) strict = false;
                    if (v > nb) weak = false;
                }
            if (strict)
                out.local_minima.emplace_back(ix, iy);
            else if (weak)
                ++out.non_strict_cells;
        }
    return out;
}

void write_slice_csv(std::ostream& os, const SliceResult& slice) {
    CsvWriter csv(os);
    csv.row({"dx", "dy", "loss"});
    const std::size_t res = slice.spec.resolution;
    for (std::size_t iy = 0; iy < res; ++iy)
        for (std::size_t ix = 0; ix < res; ++ix) {
            const double dx = -slice.spec.half_width_x +
                              2.0 * slice.spec.half_width_x * static_cast<double>(ix) /
                                  static_cast<double>(res - 1);
            const double dy = -slice.spec.half_width_y +
                              2.0 * slice.spec.half_width_y * static_cast<double>(iy) /
                                  static_cast<double>(res - 1);
            csv.begin_row();
            csv.field(dx);
            csv.field(dy);
            csv.field(slice.values[iy * res + ix]);
            csv.end_row();
        }
}

void write_slice_svg(std::ostream& os, const SliceResult& slice) {
    const std::size_t res = slice.spec.resolution;
    const double cell = 8.0;
    const double size = cell * static_cast<double>(res);

    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < slice.values.size(); ++i)
        if (slice.finite[i]) {
            lo = std::min(lo, slice.values[i]);
            hi = std::max(hi, slice.values[i]);
        }
    const double span = hi > lo ? hi - lo : 1.0;

    char buf[160];
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size
       << "\" viewBox=\"0 0 " << size << " " << size << "\">\n";
    for (std::size_t iy = 0; iy < res; ++iy)
        for (std::size_t ix = 0; ix < res; ++ix) {
            const std::size_t idx = iy * res + ix;
            int shade = 255;
            if (slice.finite[idx])
                shade = static_cast<int>(235.0 - 220.0 * (slice.values[idx] - lo) / span);
            std::snprintf(buf, sizeof buf,
                          "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" "
                          "fill=\"rgb(%d,%d,%d)\"/>\n",
                          cell * static_cast<double>(ix),
                          size - cell * static_cast<double>(iy + 1), cell, cell,
                          slice.finite[idx] ? shade : 255, slice.finite[idx] ? shade : 0,
                          slice.finite[idx] ? shade : 0);
            os << buf;
        }
    // ground truth at (0,0) = grid center
    const double cx = cell * (static_cast<double>(res / 2) + 0.5);
    const double cy = size - cell * (static_cast<double>(res / 2) + 0.5);
    std::snprintf(buf, sizeof buf,
                  "<circle cx=\"%.1f\" cy=\"%.1f\" r=\"%.1f\" fill=\"none\" stroke=\"red\" "
                  "stroke-width=\"1.5\"/>\n",
                  cx, cy, cell * 0.6);
    os << buf;
    for (const auto& [ix, iy] : slice.local_minima) {
        const double mx = cell * (static_cast<double>(ix) + 0.5);
        const double my = size - cell * (static_cast<double>(iy) + 0.5);
        std::snprintf(buf, sizeof buf,
                      "<path d=\"M %.1f %.1f L %.1f %.1f M %.1f %.1f L %.1f %.1f\" "
                      "stroke=\"blue\" stroke-width=\"1.2\"/>\n",
                      mx - 3.0, my - 3.0, mx + 3.0, my + 3.0, mx - 3.0, my + 3.0, mx + 3.0,
                      my - 3.0);
        os << buf;
    }
    os << "</svg>\n";
}

AuditReport audit_star_convexity(const Task& task, std::size_t datapoint, const ParamSet& params,
                                 const PredictionVector& omega_star,
                                 const NeighborhoodSampler& sampler, std::size_t n_rays,
                                 std::size_t points_per_ray, double mu, double audit_tol,
                                 RngStream& rng) {
    if (n_rays < 1) throw ConfigError("audit: n_rays must be >= 1");
    if (points_per_ray < 2) throw ConfigError("audit: points_per_ray must be >= 2");
    if (audit_tol < 0.0) throw ConfigError("audit: audit_tol must be >= 0");
    if (mu < 0.0) throw ConfigError("audit: mu must be >= 0");

    AuditReport rep;
    rep.n_rays = n_rays;
    rep.points_per_ray = points_per_ray;
    rep.mu = mu;
    rep.audit_tol = audit_tol;

    const double h_star = loss_value(task, datapoint, params, omega_star);
    rep.l_hat = grad_norm(task, datapoint, params, omega_star);

    struct Ray {
        double h_omega;
        double d2;
        std::vector<double> h_tilde;    // per lambda
        std::vector<double> d2_tilde;   // |w* - w~|^2 per lambda
    };
    std::vector<Ray> rays;
    rays.reserve(n_rays);

    std::vector<double> lambdas(points_per_ray);
    for (std::size_t k = 0; k < points_per_ray; ++k)
        lambdas[k] = static_cast<double>(k + 1) / static_cast<double>(points_per_ray + 1);

    for (std::size_t r = 0; r < n_rays; ++r) {
        PredictionVector omega = sample_one(omega_star, sampler, rng);
        Ray ray;
        ray.h_omega = loss_value(task, datapoint, params, omega);
        ray.d2 = distance_sq(omega_star, omega);
        rep.l_hat = std::max(rep.l_hat, grad_norm(task, datapoint, params, omega));
        for (double lam : lambdas) {
            PredictionVector tilde = interpolate(omega_star, omega, lam);
            ray.h_tilde.push_back(loss_value(task, datapoint, params, tilde));
            ray.d2_tilde.push_back(lam * lam * ray.d2);
        }
        rays.push_back(std::move(ray));
    }

    auto rates_at = [&](double mu_probe, AuditReport* fill) {
        std::size_t v1 = 0, v2 = 0, v3 = 0, vl = 0;
        for (const Ray& ray : rays) {
            const double g2 = hinge_con2(h_star, ray.h_omega, ray.d2, mu_probe);
            if (g2 > audit_tol) ++v2;
            if (fill) fill->max_con2 = std::max(fill->max_con2, g2);
            for (std::size_t k = 0; k < lambdas.size(); ++k) {
                const double e1 = hinge_con1(h_star, ray.h_tilde[k]);
                const double x3 = hinge_con3(ray.h_tilde[k], h_star, ray.h_omega, lambdas[k],
                                             ray.d2, mu_probe);
                const double l1 = hinge_envelope(h_star, ray.h_tilde[k], ray.d2_tilde[k], mu_probe);
                if (e1 > audit_tol) ++v1;
                if (x3 > audit_tol) ++v3;
                if (l1 > audit_tol) ++vl;
                if (fill) {
                    fill->max_con1 = std::max(fill->max_con1, e1);
                    fill->max_con3 = std::max(fill->max_con3, x3);
                    fill->max_envelope = std::max(fill->max_envelope, l1);
                }
            }
        }
        const double n_pts = static_cast<double>(rays.size() * lambdas.size());
        if (fill) {
            fill->rate_con1 = static_cast<double>(v1) / n_pts;
            fill->rate_con2 = static_cast<double>(v2) / static_cast<double>(rays.size());
            fill->rate_con3 = static_cast<double>(v3) / n_pts;
            fill->rate_envelope = static_cast<double>(vl) / n_pts;
        }
        return static_cast<double>(v2) / static_cast<double>(rays.size());
    };

    rates_at(mu, &rep);

    // mu_hat: largest mu in [0, cap] whose con2 violation rate stays under
    // 1%, by bisection at 0.05 resolution. The rate is non-decreasing in mu.
    const double mu_cap = 64.0;
    const double threshold = 0.01;
    if (rates_at(mu_cap, nullptr) < threshold) {
        rep.mu_hat = mu_cap;
        rep.mu_hat_at_cap = true;
    } else if (rates_at(0.0, nullptr) >= threshold) {
        rep.mu_hat = 0.0;
    } else {
        double lo = 0.0, hi = mu_cap;
        while (hi - lo > 0.05) {
            const double mid = 0.5 * (lo + hi);
            if (rates_at(mid, nullptr) < threshold)
                lo = mid;
            else
                hi = mid;
        }
        rep.mu_hat = lo;
    }
    return rep;
}

double estimate_lipschitz(const Task& task, std::size_t datapoint, const ParamSet& params,
                          const PredictionVector& omega_star, const NeighborhoodSampler& sampler,
                          std::size_t n_samples, RngStream& rng) {
    if (n_samples < 1) throw ConfigError("estimate_lipschitz: n_samples must be >= 1");
    double l_hat = grad_norm(task, datapoint, params, omega_star);
    for (std::size_t i = 0; i < n_samples; ++i) {
        PredictionVector omega = sample_one(omega_star, sampler, rng);
        l_hat = std::max(l_hat, grad_norm(task, datapoint, params, omega));
    }
    return l_hat;
}

BoundCheck check_near_optimality(const PredictionVector& omega_pred, const PredictionVector& omega_star,
                        double l_hat, double mu, double gamma_observed) {
    if (!(mu > 0.0)) throw ConfigError("check_near_optimality: bound undefined for mu = 0");
    if (l_hat < 0.0) throw ConfigError("check_near_optimality: L must be >= 0");
    if (gamma_observed < 0.0) throw ConfigError("check_near_optimality: gamma must be >= 0");

    BoundCheck b;
    b.distance = std::sqrt(distance_sq(omega_pred, omega_star));
    b.gamma_observed = gamma_observed;
    b.bound_value = 2.0 * l_hat / mu;
    if (l_hat == 0.0)
        // Limit L -> 0 of (L/mu)(1 + sqrt(1 + 2 mu g / L^2)) = sqrt(2 g / mu).
        b.inflated_bound = gamma_observed == 0.0 ? b.bound_value
                                                 : std::sqrt(2.0 * gamma_observed / mu);
    else
        b.inflated_bound =
            (l_hat / mu) *
            (1.0 + std::sqrt(1.0 + 2.0 * mu * gamma_observed / (l_hat * l_hat)));
    const double applicable = gamma_observed > 0.0 ? b.inflated_bound : b.bound_value;
    b.satisfied = b.distance <= applicable;
    return b;
}

AveragingCurve simulate_averaging(int t_max, double error_std, std::size_t omega_dim,
                                  int n_trials, RngStream& rng) {
    if (t_max < 1 || n_trials < 1 || omega_dim < 1)
        throw ConfigError("simulate_averaging: all sizes must be positive");
    if (error_std < 0.0) throw ConfigError("simulate_averaging: error_std must be >= 0");

    AveragingCurve curve;
    curve.mse.assign(static_cast<std::size_t>(t_max), 0.0);
    std::vector<double> sum(omega_dim);
    for (int trial = 0; trial < n_trials; ++trial) {
        std::fill(sum.begin(), sum.end(), 0.0);
        for (int t = 1; t <= t_max; ++t) {
            double norm2 = 0.0;
            for (std::size_t d = 0; d < omega_dim; ++d) {
                sum[d] += error_std * rng.normal();
                const double mean = sum[d] / static_cast<double>(t);
                norm2 += mean * mean;
            }
            curve.mse[static_cast<std::size_t>(t - 1)] += norm2;
        }
    }
    for (double& v : curve.mse) v /= static_cast<double>(n_trials);

    // Least-squares slope of log(mse) vs log(T); degenerate when mse == 0.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t n = 0;
    for (int t = 1; t <= t_max; ++t) {
        const double m = curve.mse[static_cast<std::size_t>(t - 1)];
        if (m <= 0.0) continue;
        const double x = std::log(static_cast<double>(t)), y = std::log(m);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    if (n >= 2) {
        const double dn = static_cast<double>(n);
        curve.loglog_slope = (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
    }
    return curve;
}

std::string AuditReport::to_json() const {
    nlohmann::json j;
    j["n_rays"] = n_rays;
    j["points_per_ray"] = points_per_ray;
    j["mu"] = mu;
    j["audit_tol"] = audit_tol;
    j["violation_rates"] = {{"con1", rate_con1}, {"con2", rate_con2}, {"con3", rate_con3},
                            {"envelope", rate_envelope}};
    j["max_hinges"] = {{"con1", max_con1}, {"con2", max_con2}, {"con3", max_con3},
                       {"envelope", max_envelope}};
    j["mu_hat"] = mu_hat;
    j["mu_hat_at_cap"] = mu_hat_at_cap;
    j["l_hat"] = l_hat;
    j["l_hat_note"] = "empirical lower estimate; bound checks using it are indicative";
    return j.dump(2);
}

std::string BoundCheck::to_json() const {
    nlohmann::json j;
    j["distance"] = distance;
    j["bound_value"] = bound_value;
    j["inflated_bound"] = inflated_bound;
    j["gamma_observed"] = gamma_observed;
    j["satisfied"] = satisfied;
    return j.dump(2);
}

}  // namespace dlc
