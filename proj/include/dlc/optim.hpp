#pragma once

#include <vector>

#include "dlc/param_set.hpp"

namespace dlc {

enum class OptimizerKind : std::uint8_t { sgd, adam };

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::adam;
    double lr = 1e-3;
    double weight_decay = 1e-4;  // L2 term added to the gradient
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    void validate() const {
        if (!(lr > 0.0)) throw ConfigError("optimizer: lr must be positive");
        if (weight_decay < 0.0) throw ConfigError("optimizer: weight_decay must be >= 0");
        if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
            throw ConfigError("optimizer: betas must be in [0,1)");
    }
};

/// SGD / Adam over a ParamSet, with first/second moment state aligned to the
/// parameter order.
class Optimizer {
  public:
    Optimizer(OptimizerConfig cfg, const ParamSet& params);

    void step(ParamSet& params, const Gradients& grads);

    std::uint64_t step_count() const { return t_; }

    // Moment state round-trips through checkpoints.
    std::vector<double> serialize_state() const;
    void restore_state(const std::vector<double>& state);

  private:
    OptimizerConfig cfg_;
    std::uint64_t t_ = 0;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

}  // namespace dlc
