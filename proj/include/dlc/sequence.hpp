#pragma once

#include <vector>

#include "dlc/task.hpp"

namespace dlc {

/// Scalar sequence with a one-hot class label (K=2: sign of the final
/// drift of the random walk).
struct SequenceSample {
    std::vector<double> sequence;      // T_steps values
    std::vector<double> label_one_hot; // K entries
};

struct SequenceDatasetConfig {
    std::size_t n_samples = 128;
    std::size_t t_steps = 16;
    std::size_t n_classes = 2;
    std::uint64_t seed = 0;
};

/// Random-walk sequences labeled by the sign of the final position.
std::vector<SequenceSample> generate_sequence_dataset(const SequenceDatasetConfig& cfg);

/// Tiny recurrent classifier: a single tanh cell unrolled over the sequence,
/// with a softmax readout. Loss is the cross-entropy between omega (a
/// probability vector) and the predicted distribution.
class SequenceTask final : public Task {
  public:
    SequenceTask(std::vector<SequenceSample> samples, std::size_t state_width = 8);

    std::string name() const override { return "sequence"; }
    const OmegaLayout& omega_layout() const override { return layout_; }
    std::size_t dataset_size() const override { return samples_.size(); }
    const PredictionVector& ground_truth(std::size_t i) const override { return truths_[i]; }
    ad::Var build_loss(ad::Tape& tape, std::size_t i, const BoundParams& params,
                       ad::Var omega) const override;
    NeighborhoodSampler default_sampler() const override;
    ParamSet init_params(RngStream& rng) const override;

    const SequenceSample& sample(std::size_t i) const { return samples_[i]; }

    /// Predicted class distribution for datapoint i (softmax of the readout).
    std::vector<double> predict_distribution(std::size_t i, const ParamSet& params) const;

  private:
    std::vector<SequenceSample> samples_;
    std::vector<PredictionVector> truths_;
    std::size_t state_width_;
    std::size_t n_classes_;
    OmegaLayout layout_;
};

}  // namespace dlc
