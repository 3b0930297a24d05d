#pragma once

#include <optional>
#include <ostream>
#include <utility>
#include <vector>

#include "dlc/task.hpp"

namespace dlc {

enum class InferenceMode : std::uint8_t { last_iterate, averaged };
enum class InferenceInit : std::uint8_t { zero_motion, provided };

struct InferenceConfig {
    int max_iters = 5;
    double step_size = 0.1;
    InferenceMode mode = InferenceMode::averaged;
    InferenceInit init = InferenceInit::zero_motion;
    std::optional<PredictionVector> init_omega;
    double stop_tol = 0.0;  // on |omega_t - omega_{t-1}|

    void validate() const {
        if (max_iters < 1) throw ConfigError("inference: max_iters must be >= 1");
        if (!(step_size > 0.0)) throw ConfigError("inference: step_size must be positive");
        if (stop_tol < 0.0) throw ConfigError("inference: stop_tol must be >= 0");
        if (init == InferenceInit::provided && !init_omega)
            throw ConfigError("inference: init=provided requires init_omega");
    }
};

struct Trajectory {
    std::vector<PredictionVector> iterates;
    std::vector<double> losses;
    std::vector<double> wall_time_us;
    bool aborted = false;
    std::string abort_reason;
};

/// One gradient-descent step of the fixed-point map:
/// omega' = omega - eta * grad_omega h(omega), with angle segments
/// re-wrapped into (-pi, pi].
PredictionVector fixed_point_step(const Task& task, std::size_t datapoint,
                                  const PredictionVector& omega_prev, const ParamSet& params,
                                  double eta);

/// Iterative test-time prediction. last_iterate applies the fixed-point map
/// directly; averaged feeds the running mean back into the map and returns
/// the mean of all map outputs so far.
std::pair<PredictionVector, Trajectory> infer(const Task& task, std::size_t datapoint,
                                              const ParamSet& params, const InferenceConfig& cfg);

/// CSV: iter, loss, omega_0..omega_{d-1}, wall_time_us.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

}  // namespace dlc
