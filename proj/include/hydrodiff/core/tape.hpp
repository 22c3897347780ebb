#pragma once

#include <Eigen/Core>
#include <functional>
#include <span>
#include <vector>

namespace hydrodiff::core {

using Arr = Eigen::ArrayXXd;

class Tape;

/// Handle into a tape. Cheap to copy; only valid for the tape that made it.
struct Var {
    int idx = -1;
    bool valid() const { return idx >= 0; }
};

/// Reverse-mode tape over dense double arrays. Vectors are n-by-1, scalars
/// 1-by-1. Build a graph forward, call backward() on a scalar root, then
/// read grad() of the leaves. One-shot: make a fresh tape per evaluation.
class Tape {
public:
    Var constant(Arr v);
    Var leaf(Arr v);

    const Arr& val(Var v) const;
    /// Gradient accumulated into v by backward(); zeros if v was not reached.
    Arr grad(Var v) const;

    /// Seeds d(root)/d(root) = 1 (root must be 1x1) and sweeps the tape.
    void backward(Var root);
    /// Same with an arbitrary seed of the root's shape.
    void backward_from(Var root, const Arr& seed);

    std::size_t size() const { return nodes_.size(); }

    // elementwise
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var div(Var a, Var b);
    Var neg(Var a);
    Var scale(Var a, double s);
    Var add_scalar(Var a, double s);

    // unary maps
    Var exp_(Var a);
    Var log_(Var a);
    Var sin_(Var a);
    Var cos_(Var a);
    Var tanh_(Var a);
    Var sigmoid(Var a);
    Var softplus(Var a);
    Var gelu(Var a);

    // linear algebra / shaping
    Var matmul(Var a, Var b);
    Var slice_rows(Var a, Eigen::Index r0, Eigen::Index n);
    Var slice_cols(Var a, Eigen::Index c0, Eigen::Index n);
    Var concat_rows(std::span<const Var> parts);
    Var sum(Var a);
    Var mean(Var a);
    Var colsum(Var a);  // sum over rows -> 1 x cols

    /// out(i,j) = m(i,j) * col(i); col is rows x 1.
    Var mul_col_broadcast(Var m, Var col);
    /// out(i,j) = m(i,j) + col(i); col is rows x 1.
    Var add_col_broadcast(Var m, Var col);
    /// Adds col to columns [c0, c0+n) only.
    Var add_col_broadcast_block(Var m, Var col, Eigen::Index c0, Eigen::Index n);
    /// out(i,j) = m(i,j) * s, s a 1x1 var.
    Var mul_scalar_var(Var m, Var s);
    /// out(i,j) = col(i) * row(j); row is a fixed coefficient vector.
    Var outer_const_row(Var col, Eigen::RowVectorXd row);

    /// Per-column layer norm: y(:,j) = gain .* (x(:,j)-mu_j)/sqrt(var_j+eps) + bias.
    Var layernorm_cols(Var x, Var gain, Var bias, double eps = 1e-5);

    /// Row-wise causal linear convolution: out(h,t) = sum_{s<=t} k(h,s)*u(h,t-s).
    /// u and k have identical shapes; FFT-based with cached spectra for backward.
    Var causal_conv_rows(Var u, Var k);

private:
    struct Node {
        Arr value;
        Arr grad;  // empty until first accumulation
        bool requires_grad = false;
        std::function<void(Tape&)> back;
    };

    std::vector<Node> nodes_;

    Var push(Arr value, bool requires_grad, std::function<void(Tape&)> back);
    bool rg(Var v) const { return nodes_[static_cast<std::size_t>(v.idx)].requires_grad; }
    Node& node(Var v) { return nodes_[static_cast<std::size_t>(v.idx)]; }
    const Node& node(Var v) const { return nodes_[static_cast<std::size_t>(v.idx)]; }

    template <class E>
    void add_grad(int idx, const E& contribution) {
        Node& n = nodes_[static_cast<std::size_t>(idx)];
        if (!n.requires_grad) return;
        if (n.grad.size() == 0)
            n.grad = contribution;
        else
            n.grad += contribution;
    }

    void check_same_shape(Var a, Var b, const char* op) const;
};

}  // namespace hydrodiff::core
