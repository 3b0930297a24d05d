#pragma once

#include <cstddef>
#include <memory>
#include <string>

#include "dlc/param_set.hpp"
#include "dlc/prediction.hpp"
#include "dlc/rng.hpp"
#include "dlc/sampler.hpp"
#include "dlc/tape.hpp"

namespace dlc {

/// An iterative-model task: a dataset of (input, ground-truth prediction)
/// pairs and a differentiable loss h_theta(omega) expressed as a tape
/// builder. Datapoints are addressed by index; the task owns its inputs.
class Task {
  public:
    virtual ~Task() = default;

    virtual std::string name() const = 0;
    virtual const OmegaLayout& omega_layout() const = 0;
    virtual std::size_t dataset_size() const = 0;
    virtual const PredictionVector& ground_truth(std::size_t i) const = 0;

    /// Emit the loss subgraph for datapoint i. `omega` may be any node of
    /// the tape (leaf or interior); gradients flow to it and to every bound
    /// parameter.
    virtual ad::Var build_loss(ad::Tape& tape, std::size_t i, const BoundParams& params,
                               ad::Var omega) const = 0;

    virtual NeighborhoodSampler default_sampler() const = 0;

    /// Fresh parameters; empty for parameter-free analytic tasks.
    virtual ParamSet init_params(RngStream& rng) const = 0;
};

}  // namespace dlc
