#include "dlc/dlc_loss.hpp"

#include <cmath>

namespace dlc {

namespace {

DlcLossResult plain_task_loss(const Task& task, std::size_t datapoint, const ParamSet& params) {
    const PredictionVector& omega_star = task.ground_truth(datapoint);
    ad::Tape tape;
    BoundParams bound = bind_params(tape, params);
    ad::Var w_star = tape.leaf(omega_star.as_tensor(), "omega_star");
    ad::Var loss = task.build_loss(tape, datapoint, bound, w_star);
    DlcLossResult r;
    r.base = tape.value_scalar(loss);
    r.loss = r.base;
    tape.backward(loss);
    r.grads.collect(tape, bound, w_star);
    return r;
}

}  // namespace

DlcLossResult dlc_loss_with_samples(const Task& task, std::size_t datapoint,
                                    const ParamSet& params, const DlcConfig& cfg,
                                    const std::vector<PredictionVector>& samples) {
    cfg.validate();
    if (!cfg.enabled || cfg.rho == 0.0) return plain_task_loss(task, datapoint, params);
    if (samples.empty()) throw ConfigError("dlc_loss: no neighborhood samples");

    const PredictionVector& omega_star = task.ground_truth(datapoint);
    const std::size_t n = samples.size();

    ad::Tape tape;
    BoundParams bound = bind_params(tape, params);
    ad::Var w_star = tape.leaf(omega_star.as_tensor(), "omega_star");
    ad::Var h_star = task.build_loss(tape, datapoint, bound, w_star);

    // lambda / mu enter either as plain constants or as reparametrized
    // trainable scalars: lambda = sigmoid(a) built from tanh, mu = exp(b).
    ad::Var one, lam_var, mu_var;
    if (cfg.trainable) {
        one = tape.leaf_scalar(1.0, "one");
        ad::Var a = bound.var(DlcConfig::lambda_param);
        ad::Var b = bound.var(DlcConfig::mu_param);
        lam_var = tape.scalar_mul(tape.add(tape.tanh(tape.scalar_mul(a, 0.5)), one), 0.5);
        mu_var = tape.exp(b);
    }

    DlcLossResult r;
    ad::Var hinge_sum;
    for (std::size_t s = 0; s < n; ++s) {
        const PredictionVector& omega = samples[s];
        require_same_layout(omega_star, omega, "dlc_loss");
        const double d2 = distance_sq(omega_star, omega);

        ad::Var w_omega = tape.leaf(omega.as_tensor(), "omega_sample");
        ad::Var h_omega = task.build_loss(tape, datapoint, bound, w_omega);

        ad::Var eps, gam, xi;
        PredictionVector omega_tilde;
        if (!cfg.trainable) {
            omega_tilde = interpolate(omega_star, omega, cfg.lambda);
            ad::Var w_tilde = tape.leaf(omega_tilde.as_tensor(), "omega_tilde");
            ad::Var h_tilde = task.build_loss(tape, datapoint, bound, w_tilde);

            eps = tape.relu(tape.sub(h_star, h_tilde));
            gam = tape.relu(tape.add(tape.sub(h_star, h_omega),
                                     tape.leaf_scalar(0.5 * cfg.mu * d2)));
            xi = tape.relu(tape.add(
                tape.sub(tape.sub(h_tilde, tape.scalar_mul(h_star, 1.0 - cfg.lambda)),
                         tape.scalar_mul(h_omega, cfg.lambda)),
                tape.leaf_scalar(0.5 * cfg.lambda * (1.0 - cfg.lambda) * cfg.mu * d2)));
        } else {
            // omega_tilde = omega* + lambda * (omega - omega*), with lambda a
            // tape node so its gradient reaches the reparametrization.
            Tensor delta = omega.as_tensor();
            for (std::size_t i = 0; i < delta.size(); ++i) delta[i] -= omega_star[i];
            ad::Var w_tilde = tape.add(tape.leaf(omega_star.as_tensor(), "omega_star_c"),
                                       tape.mul(lam_var, tape.leaf(std::move(delta))));
            ad::Var h_tilde = task.build_loss(tape, datapoint, bound, w_tilde);

            ad::Var half_d2 = tape.leaf_scalar(0.5 * d2);
            ad::Var one_minus_lam = tape.sub(one, lam_var);
            eps = tape.relu(tape.sub(h_star, h_tilde));
            gam = tape.relu(
                tape.add(tape.sub(h_star, h_omega), tape.mul(mu_var, half_d2)));
            xi = tape.relu(tape.add(
                tape.sub(tape.sub(h_tilde, tape.mul(one_minus_lam, h_star)),
                         tape.mul(lam_var, h_omega)),
                tape.mul(tape.mul(tape.mul(lam_var, one_minus_lam), mu_var), half_d2)));

            const Tensor& tv = tape.value(w_tilde);
            omega_tilde = PredictionVector(tv.data, omega_star.layout);
        }

        HingeTriple triple;
        triple.epsilon = tape.value_scalar(eps);
        triple.gamma = tape.value_scalar(gam);
        triple.xi = tape.value_scalar(xi);
        triple.omega_sample = omega;
        triple.omega_tilde = std::move(omega_tilde);
        r.diagnostics.push_back(std::move(triple));

        ad::Var term = tape.add(tape.add(eps, gam), xi);
        hinge_sum = s == 0 ? term : tape.add(hinge_sum, term);
    }

    ad::Var total = tape.add(h_star, tape.scalar_mul(hinge_sum, cfg.rho / static_cast<double>(n)));

    r.base = tape.value_scalar(h_star);
    r.loss = tape.value_scalar(total);
    r.hinge_mean = tape.value_scalar(hinge_sum) / static_cast<double>(n);
    r.min_relu_input_abs = tape.min_abs_relu_input();
    r.min_max_gap = tape.min_max_gap();

    tape.backward(total);
    r.grads.collect(tape, bound, w_star);
    return r;
}

DlcLossResult dlc_loss(const Task& task, std::size_t datapoint, const ParamSet& params,
                       const DlcConfig& cfg, RngStream& rng) {
    cfg.validate();
    if (!cfg.enabled || cfg.rho == 0.0) return plain_task_loss(task, datapoint, params);
    std::vector<PredictionVector> samples =
        sample_neighborhood(task.ground_truth(datapoint), cfg.sampler, cfg.n_samples, rng);
    return dlc_loss_with_samples(task, datapoint, params, cfg, samples);
}

}  // namespace dlc
