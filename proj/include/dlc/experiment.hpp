#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dlc/inference.hpp"
#include "dlc/train.hpp"

namespace dlc {

/// Registration error metrics: MSE over flattened rotation-matrix entries,
/// MSE over Euler angles in degrees (wrapped differences), MSE over
/// translation entries. Means are over pairs and components.
struct RegistrationMetrics {
    double mse_r = 0.0;
    double mse_euler_deg = 0.0;
    double mse_t = 0.0;
    double mean_loss = 0.0;
};

RegistrationMetrics registration_metrics(const RegistrationTask& task,
                                         const std::vector<PredictionVector>& predictions,
                                         const std::vector<double>& losses);

/// Same formulas over a single pair.
RegistrationMetrics registration_metrics_one(const PointCloudPair& pair,
                                             const PredictionVector& prediction, std::size_t dim);

/// Runs one named experiment and writes its artifact directory: config echo,
/// seeds, CSVs, optional SVGs, and summary.json. Wall-clock data goes to
/// meta/ so everything else is byte-identical across reruns.
/// Names: train-registration, train-sequence, audit, slice, infer-sweep,
/// averaging-sim, icp-ablation, grid-search.
void run_experiment(const std::string& name, const std::string& config_json,
                    const std::filesystem::path& out_dir);

const std::vector<std::string>& experiment_names();

}  // namespace dlc
