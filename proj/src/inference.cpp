#include "dlc/inference.hpp"

#include <chrono>
#include <cmath>

#include "dlc/csv.hpp"

namespace dlc {

namespace {

double loss_at(const Task& task, std::size_t datapoint, const ParamSet& params,
               const PredictionVector& omega) {
    ad::Tape tape;
    BoundParams bound = bind_params(tape, params);
    ad::Var w = tape.leaf(omega.as_tensor(), "omega");
    return tape.value_scalar(task.build_loss(tape, datapoint, bound, w));
}

}  // namespace

PredictionVector fixed_point_step(const Task& task, std::size_t datapoint,
                                  const PredictionVector& omega_prev, const ParamSet& params,
                                  double eta) {
    if (!(eta > 0.0)) throw ConfigError("fixed_point_step: eta must be positive");
    ad::Tape tape;
    BoundParams bound = bind_params(tape, params);
    ad::Var w = tape.leaf(omega_prev.as_tensor(), "omega");
    ad::Var loss = task.build_loss(tape, datapoint, bound, w);
    tape.backward(loss);
    const Tensor& g = tape.grad(w);
    if (!g.all_finite())
        throw NonFiniteError("fixed_point_step: non-finite gradient");
    PredictionVector next = omega_prev;
    for (std::size_t i = 0; i < next.dim(); ++i) next[i] -= eta * g[i];
    next.wrap_angles();
    return next;
}

std::pair<PredictionVector, Trajectory> infer(const Task& task, std::size_t datapoint,
                                              const ParamSet& params, const InferenceConfig& cfg) {
    cfg.validate();
    PredictionVector current;
    if (cfg.init == InferenceInit::provided) {
        current = *cfg.init_omega;
        require_same_layout(current, task.ground_truth(datapoint), "infer");
    } else {
        current = task.ground_truth(datapoint);
        for (double& v : current.values) v = 0.0;
    }

    Trajectory traj;
    std::vector<double> delta_sum(current.dim(), 0.0);

    for (int t = 1; t <= cfg.max_iters; ++t) {
        const auto t0 = std::chrono::steady_clock::now();
        PredictionVector previous = current;
        try {
            PredictionVector step_out = fixed_point_step(task, datapoint, previous, params,
                                                         cfg.step_size);
            if (cfg.mode == InferenceMode::last_iterate) {
                current = std::move(step_out);
            } else {
                // Averaged iterate: current is the running mean of all map
                // outputs computed at the previous running mean.
                for (std::size_t i = 0; i < delta_sum.size(); ++i) delta_sum[i] += step_out[i];
                for (std::size_t i = 0; i < current.dim(); ++i)
                    current[i] = delta_sum[i] / static_cast<double>(t);
            }
        } catch (const NumericError& e) {
            traj.aborted = true;
            traj.abort_reason = e.what();
            break;
        }
        const auto t1 = std::chrono::steady_clock::now();
        traj.iterates.push_back(current);
        traj.losses.push_back(loss_at(task, datapoint, params, current));
        traj.wall_time_us.push_back(
            std::chrono::duration<double, std::micro>(t1 - t0).count());

        if (cfg.stop_tol > 0.0) {
            double delta = 0.0;
            for (std::size_t i = 0; i < current.dim(); ++i) {
                const double d = current[i] - previous[i];
                delta += d * d;
            }
            if (std::sqrt(delta) < cfg.stop_tol) break;
        }
    }

    PredictionVector result = traj.iterates.empty() ? current : traj.iterates.back();
    return {std::move(result), std::move(traj)};
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    CsvWriter csv(os);
    std::vector<std::string> header = {"iter", "loss"};
    const std::size_t dim = traj.iterates.empty() ? 0 : traj.iterates[0].dim();
    for (std::size_t i = 0; i < dim; ++i) header.push_back("omega_" + std::to_string(i));
    header.push_back("wall_time_us");
    csv.row(header);
    for (std::size_t t = 0; t < traj.iterates.size(); ++t) {
        csv.begin_row();
        csv.field(static_cast<double>(t + 1));
        csv.field(traj.losses[t]);
        for (std::size_t i = 0; i < dim; ++i) csv.field(traj.iterates[t][i]);
        csv.field(traj.wall_time_us[t]);
        csv.end_row();
    }
}

}  // namespace dlc
