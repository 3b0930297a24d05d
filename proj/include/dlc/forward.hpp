#pragma once

#include <functional>

#include "dlc/param_set.hpp"
#include "dlc/tape.hpp"
#include "dlc/tensor.hpp"

namespace dlc {

/// A loss builder emits the loss subgraph for bound parameters and a
/// prediction node omega (a leaf during training, possibly an interior node
/// for on-tape reparametrizations). Builders must only use the registered
/// tape primitives.
using LossBuilder =
    std::function<ad::Var(ad::Tape&, const BoundParams&, ad::Var omega)>;

struct ForwardResult {
    ad::Tape tape;
    BoundParams bound;
    ad::Var omega_var;
    ad::Var loss_var;
    double loss = 0.0;
};

/// One recorded forward evaluation. Re-running with identical inputs gives a
/// bit-identical loss; the returned tape supports exactly one backward call.
inline ForwardResult forward(const LossBuilder& builder, const ParamSet& params,
                             const Tensor& omega) {
    ForwardResult r;
    r.bound = bind_params(r.tape, params);
    r.omega_var = r.tape.leaf(omega, "omega");
    r.loss_var = builder(r.tape, r.bound, r.omega_var);
    r.loss = r.tape.value_scalar(r.loss_var);
    return r;
}

/// Exact reverse-mode gradients w.r.t. every parameter tensor and omega.
inline Gradients backward(ForwardResult& fr) {
    fr.tape.backward(fr.loss_var);
    Gradients g;
    g.collect(fr.tape, fr.bound, fr.omega_var);
    return g;
}

}  // namespace dlc
