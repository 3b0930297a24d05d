#include "dlc/optim.hpp"

#include <cmath>

namespace dlc {

Optimizer::Optimizer(OptimizerConfig cfg, const ParamSet& params) : cfg_(cfg) {
    cfg_.validate();
    if (cfg_.kind == OptimizerKind::adam) {
        m_.resize(params.size());
        v_.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i].assign(params.tensor(i).size(), 0.0);
            v_[i].assign(params.tensor(i).size(), 0.0);
        }
    }
}

void Optimizer::step(ParamSet& params, const Gradients& grads) {
    if (grads.by_param.size() != params.size())
        throw ConfigError("optimizer: gradient/param mismatch");
    ++t_;
    if (cfg_.kind == OptimizerKind::sgd) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            Tensor& w = params.tensor(i);
            const Tensor& g = grads.by_param[i];
            for (std::size_t k = 0; k < w.size(); ++k)
                w[k] -= cfg_.lr * (g[k] + cfg_.weight_decay * w[k]);
        }
        return;
    }
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& w = params.tensor(i);
        const Tensor& g = grads.by_param[i];
        for (std::size_t k = 0; k < w.size(); ++k) {
            const double gk = g[k] + cfg_.weight_decay * w[k];
            m_[i][k] = cfg_.beta1 * m_[i][k] + (1.0 - cfg_.beta1) * gk;
            v_[i][k] = cfg_.beta2 * v_[i][k] + (1.0 - cfg_.beta2) * gk * gk;
            const double mhat = m_[i][k] / bc1;
            const double vhat = v_[i][k] / bc2;
            w[k] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

std::vector<double> Optimizer::serialize_state() const {
    std::vector<double> out;
    out.push_back(static_cast<double>(t_));
    for (const auto& v : m_) out.insert(out.end(), v.begin(), v.end());
    for (const auto& v : v_) out.insert(out.end(), v.begin(), v.end());
    return out;
}

void Optimizer::restore_state(const std::vector<double>& state) {
    std::size_t expect = 1;
    for (const auto& v : m_) expect += v.size();
    for (const auto& v : v_) expect += v.size();
    if (state.size() != expect) throw CheckpointError("optimizer state size mismatch");
    std::size_t j = 0;
    t_ = static_cast<std::uint64_t>(state[j++]);
    for (auto& v : m_)
        for (double& x : v) x = state[j++];
    for (auto& v : v_)
        for (double& x : v) x = state[j++];
}

}  // namespace dlc
