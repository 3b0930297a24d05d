#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "dlc/errors.hpp"
#include "dlc/tensor.hpp"

namespace dlc::ad {

/// Closed primitive set of the tape. Extending it requires a matching
/// backward rule in Tape::backward and a finite-difference test in
/// tests/test_autodiff.cpp.
enum class Op : std::uint8_t {
    leaf,
    add,
    sub,
    scalar_mul,   // node.coeff holds the constant factor
    mul,          // elementwise; either side may be a scalar
    div,          // elementwise; either side may be a scalar
    matmul,
    tanh_fn,
    relu,         // subgradient at 0 is defined as 0
    sin_fn,
    cos_fn,
    exp_fn,
    log_fn,
    softmax,      // over the flattened tensor
    max_reduce,   // 1-D -> scalar; 2-D -> per-column max over rows
    sum_reduce,   // sum of all entries -> scalar
    squared_norm, // sum of squares -> scalar
    pick,         // node.coeff holds the flat index; -> scalar
};

const char* op_name(Op op);

/// Handle to a node on a Tape. Only meaningful together with the tape that
/// produced it.
struct Var {
    int idx = -1;
    bool valid() const { return idx >= 0; }
};

struct Node {
    Op op = Op::leaf;
    int a = -1;
    int b = -1;
    double coeff = 0.0;
    Tensor value;
    Tensor grad;
    std::string name;  // leaves only; used in error messages
};

/// Record of one differentiable forward evaluation. Nodes are appended in
/// topological order (parents always precede children), so a single reverse
/// sweep fills every grad slot reachable from the loss node.
///
/// Tapes are single-owner and not thread-safe; build, run backward once,
/// then read gradients.
class Tape {
  public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;
    Tape(Tape&&) = default;
    Tape& operator=(Tape&&) = default;

    Var leaf(Tensor t, std::string name = {});
    Var leaf_scalar(double v, std::string name = {});

    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var scalar_mul(Var a, double c);
    Var mul(Var a, Var b);
    Var div(Var a, Var b);
    Var matmul(Var a, Var b);
    Var tanh(Var a);
    Var relu(Var a);
    Var sin(Var a);
    Var cos(Var a);
    Var exp(Var a);
    Var log(Var a);
    Var softmax(Var a);
    Var max_reduce(Var a);
    Var sum_reduce(Var a);
    Var squared_norm(Var a);
    Var pick(Var a, std::size_t flat_index);

    const Tensor& value(Var v) const { return node(v).value; }
    double value_scalar(Var v) const { return node(v).value.scalar_value(); }

    /// Reverse sweep from a scalar loss node. May be called once per tape.
    void backward(Var loss);

    bool backward_done() const { return backward_done_; }
    const Tensor& grad(Var v) const;

    std::size_t node_count() const { return nodes_.size(); }
    Op op_of(Var v) const { return node(v).op; }

    /// Smallest |input entry| seen across all relu nodes, and the smallest
    /// gap between the top-two entries across all max_reduce reductions.
    /// Finite-difference checks use these to flag kink coordinates.
    double min_abs_relu_input() const { return min_abs_relu_input_; }
    double min_max_gap() const { return min_max_gap_; }

  private:
    const Node& node(Var v) const;
    Node& node(Var v);
    Var push(Op op, int a, int b, Tensor value, double coeff = 0.0);
    void require_same_or_scalar(Op op, const Tensor& a, const Tensor& b) const;
    [[noreturn]] void shape_fail(Op op, const Tensor& a, const Tensor* b) const;

    std::vector<Node> nodes_;
    bool backward_done_ = false;
    double min_abs_relu_input_ = std::numeric_limits<double>::infinity();
    double min_max_gap_ = std::numeric_limits<double>::infinity();
};

}  // namespace dlc::ad
