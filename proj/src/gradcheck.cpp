#include "dlc/gradcheck.hpp"

#include <cmath>

#include "dlc/rng.hpp"

namespace dlc {

namespace {

struct Eval {
    double loss;
    double min_relu;
    double min_gap;
};

Eval eval_loss(const LossBuilder& builder, const ParamSet& params, const Tensor& omega) {
    ForwardResult fr = forward(builder, params, omega);
    return {fr.loss, fr.tape.min_abs_relu_input(), fr.tape.min_max_gap()};
}

double rel_err(double a, double b) {
    const double denom = std::max({std::abs(a), std::abs(b), 1.0});
    return std::abs(a - b) / denom;
}

}  // namespace

GradCheckReport check_gradient(const LossBuilder& builder, const ParamSet& params,
                               const Tensor& omega, double step, double tol) {
    if (step <= 0.0) throw ConfigError("check_gradient: step must be positive");

    ForwardResult fr = forward(builder, params, omega);
    const double base_min_relu = fr.tape.min_abs_relu_input();
    const double base_min_gap = fr.tape.min_max_gap();
    Gradients grads = backward(fr);

    GradCheckReport report;
    ParamSet p = params;  // perturbed copy
    Tensor w = omega;

    auto probe = [&](double* slot, double analytic, const std::string& where) {
        const double orig = *slot;
        *slot = orig + step;
        Eval up = eval_loss(builder, p, w);
        *slot = orig - step;
        Eval dn = eval_loss(builder, p, w);
        *slot = orig;

        GradCheckEntry e;
        e.where = where;
        e.analytic = analytic;
        e.numeric = (up.loss - dn.loss) / (2.0 * step);
        e.rel_error = rel_err(e.analytic, e.numeric);
        e.kink = std::min({base_min_relu, up.min_relu, dn.min_relu}) < step ||
                 std::min({base_min_gap, up.min_gap, dn.min_gap}) < step;
        if (e.kink)
            ++report.kink_count;
        else
            report.max_rel_error = std::max(report.max_rel_error, e.rel_error);
        report.entries.push_back(std::move(e));
    };

    for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t k = 0; k < p.tensor(i).size(); ++k)
            probe(&p.tensor(i).data[k], grads.by_param[i][k],
                  "theta:" + p.name(i) + "[" + std::to_string(k) + "]");
    for (std::size_t k = 0; k < w.size(); ++k)
        probe(&w.data[k], grads.omega[k], "omega[" + std::to_string(k) + "]");

    report.pass = report.max_rel_error <= tol;
    return report;
}

GradCheckReport check_gradient_directional(const LossBuilder& builder, const ParamSet& params,
                                           const Tensor& omega, double step, double tol,
                                           int n_directions, std::uint64_t seed) {
    if (step <= 0.0) throw ConfigError("check_gradient: step must be positive");

    ForwardResult fr = forward(builder, params, omega);
    const double base_min_relu = fr.tape.min_abs_relu_input();
    const double base_min_gap = fr.tape.min_max_gap();
    Gradients grads = backward(fr);

    GradCheckReport report;
    RngStream rng = RngStream::derived(seed, "gradcheck-directions");

    const std::size_t n_theta = params.total_elements();
    const std::size_t dim = n_theta + omega.size();

    for (int d = 0; d < n_directions; ++d) {
        std::vector<double> v(dim);
        double norm = 0.0;
        for (double& x : v) {
            x = rng.normal();
            norm += x * x;
        }
        norm = std::sqrt(norm);
        for (double& x : v) x /= norm;

        double analytic = 0.0;
        {
            std::size_t j = 0;
            for (std::size_t i = 0; i < params.size(); ++i)
                for (std::size_t k = 0; k < params.tensor(i).size(); ++k)
                    analytic += grads.by_param[i][k] * v[j++];
            for (std::size_t k = 0; k < omega.size(); ++k) analytic += grads.omega[k] * v[j++];
        }

        auto displaced = [&](double sign) {
            ParamSet p = params;
            Tensor w = omega;
            std::size_t j = 0;
            for (std::size_t i = 0; i < p.size(); ++i)
                for (std::size_t k = 0; k < p.tensor(i).size(); ++k)
                    p.tensor(i).data[k] += sign * step * v[j++];
            for (std::size_t k = 0; k < w.size(); ++k) w.data[k] += sign * step * v[j++];
            return eval_loss(builder, p, w);
        };
        Eval up = displaced(+1.0);
        Eval dn = displaced(-1.0);

        GradCheckEntry e;
        e.where = "direction[" + std::to_string(d) + "]";
        e.analytic = analytic;
        e.numeric = (up.loss - dn.loss) / (2.0 * step);
        e.rel_error = rel_err(e.analytic, e.numeric);
        e.kink = std::min({base_min_relu, up.min_relu, dn.min_relu}) < step ||
                 std::min({base_min_gap, up.min_gap, dn.min_gap}) < step;
        if (e.kink)
            ++report.kink_count;
        else
            report.max_rel_error = std::max(report.max_rel_error, e.rel_error);
        report.entries.push_back(std::move(e));
    }

    report.pass = report.max_rel_error <= tol;
    return report;
}

}  // namespace dlc
