#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "dlc/task.hpp"

namespace dlc {

/// Parameter-free analytic test function wrapped as a Task (dataset of one
/// datapoint). Ground truth is the function's global minimizer.
class OracleTask final : public Task {
  public:
    using TapeFn = std::function<ad::Var(ad::Tape&, ad::Var omega)>;

    OracleTask(std::string name, std::size_t dim, std::vector<double> omega_star, TapeFn fn,
               double sampler_sigma = 1.0);

    std::string name() const override { return name_; }
    const OmegaLayout& omega_layout() const override { return layout_; }
    std::size_t dataset_size() const override { return 1; }
    const PredictionVector& ground_truth(std::size_t) const override { return omega_star_; }
    ad::Var build_loss(ad::Tape& tape, std::size_t, const BoundParams&,
                       ad::Var omega) const override {
        return fn_(tape, omega);
    }
    NeighborhoodSampler default_sampler() const override {
        NeighborhoodSampler s;
        s.mode = SamplerMode::gaussian_additive;
        s.sigma = {sigma_};
        return s;
    }
    ParamSet init_params(RngStream&) const override { return {}; }

  private:
    std::string name_;
    OmegaLayout layout_;
    PredictionVector omega_star_;
    TapeFn fn_;
    double sigma_;
};

/// Registry entry: the oracle plus its true strong star-convexity constant
/// (nullopt = not star-convex about its ground truth).
struct OracleInfo {
    std::string name;
    std::optional<double> mu_true;
    std::function<std::shared_ptr<OracleTask>(std::size_t dim, double sampler_sigma)> make;
};

/// Fixed test functions for audits: quadratic |w-c|^2 (mu=2), scaled
/// quadratic, concave -|w-c|^2, radial double-well (|w|^2-1)^2 about a well,
/// and a star-convex-but-nonconvex cusp (mu=0).
const std::vector<OracleInfo>& analytic_oracles();

std::shared_ptr<OracleTask> make_oracle(const std::string& name, std::size_t dim,
                                        double sampler_sigma = 1.0);

}  // namespace dlc
