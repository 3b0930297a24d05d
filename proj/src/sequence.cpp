#include "dlc/sequence.hpp"

#include <cmath>

namespace dlc {

std::vector<SequenceSample> generate_sequence_dataset(const SequenceDatasetConfig& cfg) {
    if (cfg.n_classes != 2) throw ConfigError("sequence dataset: only K=2 is generated");
    if (cfg.t_steps < 1 || cfg.n_samples < 1)
        throw ConfigError("sequence dataset: sizes must be positive");
    std::vector<SequenceSample> out;
    out.reserve(cfg.n_samples);
    for (std::size_t i = 0; i < cfg.n_samples; ++i) {
        RngStream rng = RngStream::derived(cfg.seed, "seq-" + std::to_string(i));
        SequenceSample s;
        s.sequence.resize(cfg.t_steps);
        double walk = 0.0;
        for (std::size_t t = 0; t < cfg.t_steps; ++t) {
            walk += rng.normal();
            s.sequence[t] = walk;
        }
        s.label_one_hot.assign(cfg.n_classes, 0.0);
        s.label_one_hot[walk > 0.0 ? 1 : 0] = 1.0;
        out.push_back(std::move(s));
    }
    return out;
}

SequenceTask::SequenceTask(std::vector<SequenceSample> samples, std::size_t state_width)
    : samples_(std::move(samples)), state_width_(state_width) {
    if (samples_.empty()) throw ConfigError("SequenceTask: empty dataset");
    n_classes_ = samples_[0].label_one_hot.size();
    layout_ = OmegaLayout::probability_only(n_classes_);
    truths_.reserve(samples_.size());
    for (const auto& s : samples_) {
        PredictionVector pv(s.label_one_hot, layout_);
        pv.validate();
        truths_.push_back(std::move(pv));
    }
}

NeighborhoodSampler SequenceTask::default_sampler() const {
    NeighborhoodSampler s;
    s.mode = SamplerMode::noisy_one_hot_softmax;
    s.sigma = {1.0};
    return s;
}

ParamSet SequenceTask::init_params(RngStream& rng) const {
    ParamSet params;
    const std::size_t w = state_width_, k = n_classes_;
    auto gaussian = [&](std::vector<std::size_t> shape, double stddev) {
        Tensor t(std::move(shape));
        for (double& v : t.data) v = stddev * rng.normal();
        return t;
    };
    params.add("cell.wx", gaussian({1, w}, 1.0));
    params.add("cell.wh", gaussian({w, w}, 1.0 / std::sqrt(static_cast<double>(w))));
    params.add("cell.b", Tensor({1, w}, 0.0));
    params.add("out.w", gaussian({w, k}, 1.0 / std::sqrt(static_cast<double>(w))));
    params.add("out.b", Tensor({1, k}, 0.0));
    return params;
}

ad::Var SequenceTask::build_loss(ad::Tape& tape, std::size_t i, const BoundParams& params,
                                 ad::Var omega) const {
    // omega must be (near) a probability vector. The tolerance is loose
    // enough for finite-difference probes but catches un-normalized input.
    {
        const Tensor& w = tape.value(omega);
        double sum = 0.0;
        for (double v : w.data) {
            if (v < -1e-3) throw ConfigError("sequence_loss: omega is not a probability vector");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-3)
            throw ConfigError("sequence_loss: omega is not a probability vector");
    }
    const SequenceSample& s = samples_[i];
    ad::Var h = tape.leaf(Tensor({1, state_width_}, 0.0));
    for (double x : s.sequence) {
        ad::Var pre = tape.add(tape.matmul(h, params.var("cell.wh")),
                               tape.scalar_mul(params.var("cell.wx"), x));
        h = tape.tanh(tape.add(pre, params.var("cell.b")));
    }
    ad::Var logits = tape.add(tape.matmul(h, params.var("out.w")), params.var("out.b"));
    ad::Var probs = tape.softmax(logits);
    ad::Var log_probs = tape.log(probs);
    // Cross-entropy -sum_k omega_k log p_k, assembled per class so the
    // {1,K} readout and the {K} omega leaf never meet elementwise.
    ad::Var ce;
    for (std::size_t k = 0; k < n_classes_; ++k) {
        ad::Var term = tape.mul(tape.pick(omega, k), tape.pick(log_probs, k));
        ce = k == 0 ? term : tape.add(ce, term);
    }
    return tape.scalar_mul(ce, -1.0);
}

std::vector<double> SequenceTask::predict_distribution(std::size_t i, const ParamSet& params) const {
    ad::Tape tape;
    BoundParams bound = bind_params(tape, params);
    const SequenceSample& s = samples_[i];
    ad::Var h = tape.leaf(Tensor({1, state_width_}, 0.0));
    for (double x : s.sequence) {
        ad::Var pre = tape.add(tape.matmul(h, bound.var("cell.wh")),
                               tape.scalar_mul(bound.var("cell.wx"), x));
        h = tape.tanh(tape.add(pre, bound.var("cell.b")));
    }
    ad::Var logits = tape.add(tape.matmul(h, bound.var("out.w")), bound.var("out.b"));
    ad::Var probs = tape.softmax(logits);
    return tape.value(probs).data;
}

}  // namespace dlc
