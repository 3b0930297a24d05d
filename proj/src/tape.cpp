#include "dlc/tape.hpp"

#include <algorithm>
#include <cmath>

namespace dlc::ad {

const char* op_name(Op op) {
    switch (op) {
        case Op::leaf: return "leaf";
        case Op::add: return "add";
        case Op::sub: return "sub";
        case Op::scalar_mul: return "scalar_mul";
        case Op::mul: return "mul";
        case Op::div: return "div";
        case Op::matmul: return "matmul";
        case Op::tanh_fn: return "tanh";
        case Op::relu: return "relu";
        case Op::sin_fn: return "sin";
        case Op::cos_fn: return "cos";
        case Op::exp_fn: return "exp";
        case Op::log_fn: return "log";
        case Op::softmax: return "softmax";
        case Op::max_reduce: return "max_reduce";
        case Op::sum_reduce: return "sum_reduce";
        case Op::squared_norm: return "squared_norm";
        case Op::pick: return "pick";
    }
    return "?";
}

const Node& Tape::node(Var v) const {
    if (!v.valid() || static_cast<std::size_t>(v.idx) >= nodes_.size())
        throw TapeUsageError("tape: invalid Var handle");
    return nodes_[static_cast<std::size_t>(v.idx)];
}

Node& Tape::node(Var v) {
    return const_cast<Node&>(static_cast<const Tape*>(this)->node(v));
}

void Tape::shape_fail(Op op, const Tensor& a, const Tensor* b) const {
    std::string msg = "tape: shape mismatch at node " + std::to_string(nodes_.size()) +
                      " (" + op_name(op) + "): " + a.shape_string();
    if (b) msg += " vs " + b->shape_string();
    throw ShapeError(msg);
}

void Tape::require_same_or_scalar(Op op, const Tensor& a, const Tensor& b) const {
    if (!a.same_shape(b) && !a.is_scalar() && !b.is_scalar()) shape_fail(op, a, &b);
}

Var Tape::push(Op op, int a, int b, Tensor value, double coeff) {
    if (backward_done_)
        throw TapeUsageError("tape: cannot extend a tape after backward");
    const int idx = static_cast<int>(nodes_.size());
    if (!value.all_finite())
        throw NonFiniteError("tape: non-finite value at node " + std::to_string(idx) + " (" +
                             op_name(op) + ")");
    Node n;
    n.op = op;
    n.a = a;
    n.b = b;
    n.coeff = coeff;
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return Var{idx};
}

Var Tape::leaf(Tensor t, std::string name) {
    if (t.size() == 0) throw ShapeError("tape: empty leaf '" + name + "'");
    Var v = push(Op::leaf, -1, -1, std::move(t));
    nodes_.back().name = std::move(name);
    return v;
}

Var Tape::leaf_scalar(double v, std::string name) {
    return leaf(Tensor::scalar(v), std::move(name));
}

Var Tape::add(Var a, Var b) {
    const Tensor& ta = node(a).value;
    const Tensor& tb = node(b).value;
    require_same_or_scalar(Op::add, ta, tb);
    const Tensor& big = ta.size() >= tb.size() ? ta : tb;
    Tensor out(big.shape);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = ta[ta.is_scalar() ? 0 : i] + tb[tb.is_scalar() ? 0 : i];
    return push(Op::add, a.idx, b.idx, std::move(out));
}

Var Tape::sub(Var a, Var b) {
    const Tensor& ta = node(a).value;
    const Tensor& tb = node(b).value;
    require_same_or_scalar(Op::sub, ta, tb);
    const Tensor& big = ta.size() >= tb.size() ? ta : tb;
    Tensor out(big.shape);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = ta[ta.is_scalar() ? 0 : i] - tb[tb.is_scalar() ? 0 : i];
    return push(Op::sub, a.idx, b.idx, std::move(out));
}

Var Tape::scalar_mul(Var a, double c) {
    if (!std::isfinite(c))
        throw NonFiniteError("tape: non-finite scalar_mul coefficient");
    const Tensor& ta = node(a).value;
    Tensor out(ta.shape);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * ta[i];
    return push(Op::scalar_mul, a.idx, -1, std::move(out), c);
}

Var Tape::mul(Var a, Var b) {
    const Tensor& ta = node(a).value;
    const Tensor& tb = node(b).value;
    require_same_or_scalar(Op::mul, ta, tb);
    const Tensor& big = ta.size() >= tb.size() ? ta : tb;
    Tensor out(big.shape);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = ta[ta.is_scalar() ? 0 : i] * tb[tb.is_scalar() ? 0 : i];
    return push(Op::mul, a.idx, b.idx, std::move(out));
}

Var Tape::div(Var a, Var b) {
    const Tensor& ta = node(a).value;
    const Tensor& tb = node(b).value;
    require_same_or_scalar(Op::div, ta, tb);
    const Tensor& big = ta.size() >= tb.size() ? ta : tb;
    Tensor out(big.shape);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = ta[ta.is_scalar() ? 0 : i] / tb[tb.is_scalar() ? 0 : i];
    return push(Op::div, a.idx, b.idx, std::move(out));
}

Var Tape::matmul(Var a, Var b) {
    const Tensor& ta = node(a).value;
    const Tensor& tb = node(b).value;
    if (ta.rank() != 2 || tb.rank() != 2 || ta.shape[1] != tb.shape[0])
        shape_fail(Op::matmul, ta, &tb);
    const std::size_t m = ta.shape[0], k = ta.shape[1], n = tb.shape[1];
    Tensor out({m, n});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
            const double av = ta.data[i * k + p];
            for (std::size_t j = 0; j < n; ++j)
                out.data[i * n + j] += av * tb.data[p * n + j];
        }
    return push(Op::matmul, a.idx, b.idx, std::move(out));
}

Var Tape::tanh(Var a) {
    const Tensor& ta = node(a).value;
    Tensor out(ta.shape);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(ta[i]);
    return push(Op::tanh_fn, a.idx, -1, std::move(out));
}

Var Tape::relu(Var a) {
    const Tensor& ta = node(a).value;
    Tensor out(ta.shape);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = ta[i] > 0.0 ? ta[i] : 0.0;
        min_abs_relu_input_ = std::min(min_abs_relu_input_, std::abs(ta[i]));
    }
    return push(Op::relu, a.idx, -1, std::move(out));
}

Var Tape::sin(Var a) {
    const Tensor& ta = node(a).value;
    Tensor out(ta.shape);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::sin(ta[i]);
    return push(Op::sin_fn, a.idx, -1, std::move(out));
}

Var Tape::cos(Var a) {
    const Tensor& ta = node(a).value;
    Tensor out(ta.shape);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::cos(ta[i]);
    return push(Op::cos_fn, a.idx, -1, std::move(out));
}

Var Tape::exp(Var a) {
    const Tensor& ta = node(a).value;
    Tensor out(ta.shape);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(ta[i]);
    return push(Op::exp_fn, a.idx, -1, std::move(out));
}

Var Tape::log(Var a) {
    const Tensor& ta = node(a).value;
    Tensor out(ta.shape);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(ta[i]);
    return push(Op::log_fn, a.idx, -1, std::move(out));
}

Var Tape::softmax(Var a) {
    const Tensor& ta = node(a).value;
    Tensor out(ta.shape);
    double mx = ta[0];
    for (std::size_t i = 1; i < ta.size(); ++i) mx = std::max(mx, ta[i]);
    double denom = 0.0;
    for (std::size_t i = 0; i < ta.size(); ++i) {
        out[i] = std::exp(ta[i] - mx);
        denom += out[i];
    }
    for (std::size_t i = 0; i < out.size(); ++i) out[i] /= denom;
    return push(Op::softmax, a.idx, -1, std::move(out));
}

Var Tape::max_reduce(Var a) {
    const Tensor& ta = node(a).value;
    if (ta.rank() == 1) {
        double best = ta[0], second = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 1; i < ta.size(); ++i) {
            if (ta[i] > best) {
                second = best;
                best = ta[i];
            } else {
                second = std::max(second, ta[i]);
            }
        }
        if (ta.size() > 1) min_max_gap_ = std::min(min_max_gap_, best - second);
        return push(Op::max_reduce, a.idx, -1, Tensor::scalar(best));
    }
    if (ta.rank() == 2) {
        const std::size_t rows = ta.shape[0], cols = ta.shape[1];
        Tensor out({cols});
        for (std::size_t j = 0; j < cols; ++j) {
            double best = ta.at(0, j), second = -std::numeric_limits<double>::infinity();
            for (std::size_t i = 1; i < rows; ++i) {
                const double v = ta.at(i, j);
                if (v > best) {
                    second = best;
                    best = v;
                } else {
                    second = std::max(second, v);
                }
            }
            out[j] = best;
            if (rows > 1) min_max_gap_ = std::min(min_max_gap_, best - second);
        }
        return push(Op::max_reduce, a.idx, -1, std::move(out));
    }
    shape_fail(Op::max_reduce, ta, nullptr);
}

Var Tape::sum_reduce(Var a) {
    const Tensor& ta = node(a).value;
    double s = 0.0;
    for (std::size_t i = 0; i < ta.size(); ++i) s += ta[i];
    return push(Op::sum_reduce, a.idx, -1, Tensor::scalar(s));
}

Var Tape::squared_norm(Var a) {
    const Tensor& ta = node(a).value;
    double s = 0.0;
    for (std::size_t i = 0; i < ta.size(); ++i) s += ta[i] * ta[i];
    return push(Op::squared_norm, a.idx, -1, Tensor::scalar(s));
}

Var Tape::pick(Var a, std::size_t flat_index) {
    const Tensor& ta = node(a).value;
    if (flat_index >= ta.size()) shape_fail(Op::pick, ta, nullptr);
    return push(Op::pick, a.idx, -1, Tensor::scalar(ta[flat_index]),
                static_cast<double>(flat_index));
}

const Tensor& Tape::grad(Var v) const {
    if (!backward_done_) throw TapeUsageError("tape: grad read before backward");
    return node(v).grad;
}

void Tape::backward(Var loss) {
    if (backward_done_) throw TapeUsageError("tape: backward called twice");
    Node& ln = node(loss);
    if (!ln.value.is_scalar()) throw TapeUsageError("tape: loss node is not scalar");

    for (Node& n : nodes_) n.grad = Tensor(n.value.shape, 0.0);
    ln.grad[0] = 1.0;

    for (int i = loss.idx; i >= 0; --i) {
        Node& n = nodes_[static_cast<std::size_t>(i)];
        bool zero = true;
        for (double g : n.grad.data)
            if (g != 0.0) {
                zero = false;
                break;
            }
        if (zero || n.op == Op::leaf) continue;

        Node& pa = nodes_[static_cast<std::size_t>(n.a)];
        const Tensor& g = n.grad;
        switch (n.op) {
            case Op::add: {
                Node& pb = nodes_[static_cast<std::size_t>(n.b)];
                for (std::size_t j = 0; j < g.size(); ++j) {
                    pa.grad[pa.value.is_scalar() ? 0 : j] += g[j];
                    pb.grad[pb.value.is_scalar() ? 0 : j] += g[j];
                }
                break;
            }
            case Op::sub: {
                Node& pb = nodes_[static_cast<std::size_t>(n.b)];
                for (std::size_t j = 0; j < g.size(); ++j) {
                    pa.grad[pa.value.is_scalar() ? 0 : j] += g[j];
                    pb.grad[pb.value.is_scalar() ? 0 : j] -= g[j];
                }
                break;
            }
            case Op::scalar_mul: {
                for (std::size_t j = 0; j < g.size(); ++j) pa.grad[j] += n.coeff * g[j];
                break;
            }
            case Op::mul: {
                Node& pb = nodes_[static_cast<std::size_t>(n.b)];
                for (std::size_t j = 0; j < g.size(); ++j) {
                    const std::size_t ja = pa.value.is_scalar() ? 0 : j;
                    const std::size_t jb = pb.value.is_scalar() ? 0 : j;
                    pa.grad[ja] += g[j] * pb.value[jb];
                    pb.grad[jb] += g[j] * pa.value[ja];
                }
                break;
            }
            case Op::div: {
                Node& pb = nodes_[static_cast<std::size_t>(n.b)];
                for (std::size_t j = 0; j < g.size(); ++j) {
                    const std::size_t ja = pa.value.is_scalar() ? 0 : j;
                    const std::size_t jb = pb.value.is_scalar() ? 0 : j;
                    const double bv = pb.value[jb];
                    pa.grad[ja] += g[j] / bv;
                    pb.grad[jb] -= g[j] * pa.value[ja] / (bv * bv);
                }
                break;
            }
            case Op::matmul: {
                Node& pb = nodes_[static_cast<std::size_t>(n.b)];
                const std::size_t m = pa.value.shape[0], k = pa.value.shape[1],
                                  c = pb.value.shape[1];
                // dA = g . B^T ; dB = A^T . g
                for (std::size_t r = 0; r < m; ++r)
                    for (std::size_t j = 0; j < c; ++j) {
                        const double gv = g.data[r * c + j];
                        if (gv == 0.0) continue;
                        for (std::size_t p = 0; p < k; ++p) {
                            pa.grad.data[r * k + p] += gv * pb.value.data[p * c + j];
                            pb.grad.data[p * c + j] += gv * pa.value.data[r * k + p];
                        }
                    }
                break;
            }
            case Op::tanh_fn: {
                for (std::size_t j = 0; j < g.size(); ++j)
                    pa.grad[j] += g[j] * (1.0 - n.value[j] * n.value[j]);
                break;
            }
            case Op::relu: {
                for (std::size_t j = 0; j < g.size(); ++j)
                    if (pa.value[j] > 0.0) pa.grad[j] += g[j];
                break;
            }
            case Op::sin_fn: {
                for (std::size_t j = 0; j < g.size(); ++j)
                    pa.grad[j] += g[j] * std::cos(pa.value[j]);
                break;
            }
            case Op::cos_fn: {
                for (std::size_t j = 0; j < g.size(); ++j)
                    pa.grad[j] -= g[j] * std::sin(pa.value[j]);
                break;
            }
            case Op::exp_fn: {
                for (std::size_t j = 0; j < g.size(); ++j) pa.grad[j] += g[j] * n.value[j];
                break;
            }
            case Op::log_fn: {
                for (std::size_t j = 0; j < g.size(); ++j) pa.grad[j] += g[j] / pa.value[j];
                break;
            }
            case Op::softmax: {
                double dot = 0.0;
                for (std::size_t j = 0; j < g.size(); ++j) dot += g[j] * n.value[j];
                for (std::size_t j = 0; j < g.size(); ++j)
                    pa.grad[j] += n.value[j] * (g[j] - dot);
                break;
            }
            case Op::max_reduce: {
                // Gradient routes to the argmax entry; ties break to the
                // lowest flat index (matches the forward scan).
                if (pa.value.rank() == 1) {
                    std::size_t arg = 0;
                    for (std::size_t j = 1; j < pa.value.size(); ++j)
                        if (pa.value[j] > pa.value[arg]) arg = j;
                    pa.grad[arg] += g[0];
                } else {
                    const std::size_t rows = pa.value.shape[0], cols = pa.value.shape[1];
                    for (std::size_t j = 0; j < cols; ++j) {
                        std::size_t arg = 0;
                        for (std::size_t r = 1; r < rows; ++r)
                            if (pa.value.at(r, j) > pa.value.at(arg, j)) arg = r;
                        pa.grad.data[arg * cols + j] += g[j];
                    }
                }
                break;
            }
            case Op::sum_reduce: {
                for (std::size_t j = 0; j < pa.value.size(); ++j) pa.grad[j] += g[0];
                break;
            }
            case Op::squared_norm: {
                for (std::size_t j = 0; j < pa.value.size(); ++j)
                    pa.grad[j] += 2.0 * pa.value[j] * g[0];
                break;
            }
            case Op::pick: {
                pa.grad[static_cast<std::size_t>(n.coeff)] += g[0];
                break;
            }
            case Op::leaf:
                break;
        }
    }

    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (!nodes_[i].grad.all_finite())
            throw NonFiniteError("tape: non-finite gradient at node " + std::to_string(i) +
                                 " (" + op_name(nodes_[i].op) + ")");
    backward_done_ = true;
}

}  // namespace dlc::ad
