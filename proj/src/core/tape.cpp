#include "hydrodiff/core/tape.hpp"

#include <cmath>
#include <memory>
#include <numbers>

#include "hydrodiff/core/errors.hpp"
#include "hydrodiff/core/fft.hpp"

namespace hydrodiff::core {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
}  // namespace

Var Tape::push(Arr value, bool requires_grad, std::function<void(Tape&)> back) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::constant(Arr v) { return push(std::move(v), false, nullptr); }

Var Tape::leaf(Arr v) { return push(std::move(v), true, nullptr); }

const Arr& Tape::val(Var v) const { return node(v).value; }

Arr Tape::grad(Var v) const {
    const Node& n = node(v);
    if (n.grad.size() == 0) return Arr::Zero(n.value.rows(), n.value.cols());
    return n.grad;
}

void Tape::backward(Var root) {
    if (val(root).size() != 1) throw ArgumentError("backward: root must be a scalar");
    backward_from(root, Arr::Constant(1, 1, 1.0));
}

void Tape::backward_from(Var root, const Arr& seed) {
    Node& r = node(root);
    if (seed.rows() != r.value.rows() || seed.cols() != r.value.cols())
        throw ArgumentError("backward_from: seed shape mismatch");
    add_grad(root.idx, seed);
    for (int i = root.idx; i >= 0; --i) {
        Node& n = nodes_[static_cast<std::size_t>(i)];
        if (n.back && n.requires_grad && n.grad.size() != 0) n.back(*this);
    }
}

void Tape::check_same_shape(Var a, Var b, const char* op) const {
    const Arr& x = val(a);
    const Arr& y = val(b);
    if (x.rows() != y.rows() || x.cols() != y.cols())
        throw ArgumentError(std::string(op) + ": shape mismatch (" + std::to_string(x.rows()) +
                            "x" + std::to_string(x.cols()) + " vs " + std::to_string(y.rows()) +
                            "x" + std::to_string(y.cols()) + ")");
}

Var Tape::add(Var a, Var b) {
    check_same_shape(a, b, "add");
    Var out = push(val(a) + val(b), rg(a) || rg(b), nullptr);
    node(out).back = [a, b, out](Tape& t) {
        const Arr& g = t.node(out).grad;
        t.add_grad(a.idx, g);
        t.add_grad(b.idx, g);
    };
    return out;
}

Var Tape::sub(Var a, Var b) {
    check_same_shape(a, b, "sub");
    Var out = push(val(a) - val(b), rg(a) || rg(b), nullptr);
    node(out).back = [a, b, out](Tape& t) {
        const Arr& g = t.node(out).grad;
        t.add_grad(a.idx, g);
        t.add_grad(b.idx, -g);
    };
    return out;
}

Var Tape::mul(Var a, Var b) {
    check_same_shape(a, b, "mul");
    Var out = push(val(a) * val(b), rg(a) || rg(b), nullptr);
    node(out).back = [a, b, out](Tape& t) {
        const Arr& g = t.node(out).grad;
        t.add_grad(a.idx, g * t.val(b));
        t.add_grad(b.idx, g * t.val(a));
    };
    return out;
}

Var Tape::div(Var a, Var b) {
    check_same_shape(a, b, "div");
    Var out = push(val(a) / val(b), rg(a) || rg(b), nullptr);
    node(out).back = [a, b, out](Tape& t) {
        const Arr& g = t.node(out).grad;
        t.add_grad(a.idx, g / t.val(b));
        t.add_grad(b.idx, -g * t.val(out) / t.val(b));
    };
    return out;
}

Var Tape::neg(Var a) { return scale(a, -1.0); }

Var Tape::scale(Var a, double s) {
    Var out = push(val(a) * s, rg(a), nullptr);
    node(out).back = [a, s, out](Tape& t) { t.add_grad(a.idx, t.node(out).grad * s); };
    return out;
}

Var Tape::add_scalar(Var a, double s) {
    Var out = push(val(a) + s, rg(a), nullptr);
    node(out).back = [a, out](Tape& t) { t.add_grad(a.idx, t.node(out).grad); };
    return out;
}

Var Tape::exp_(Var a) {
    Var out = push(val(a).exp(), rg(a), nullptr);
    node(out).back = [a, out](Tape& t) { t.add_grad(a.idx, t.node(out).grad * t.val(out)); };
    return out;
}

Var Tape::log_(Var a) {
    Var out = push(val(a).log(), rg(a), nullptr);
    node(out).back = [a, out](Tape& t) { t.add_grad(a.idx, t.node(out).grad / t.val(a)); };
    return out;
}

Var Tape::sin_(Var a) {
    Var out = push(val(a).sin(), rg(a), nullptr);
    node(out).back = [a, out](Tape& t) { t.add_grad(a.idx, t.node(out).grad * t.val(a).cos()); };
    return out;
}

Var Tape::cos_(Var a) {
    Var out = push(val(a).cos(), rg(a), nullptr);
    node(out).back = [a, out](Tape& t) { t.add_grad(a.idx, -t.node(out).grad * t.val(a).sin()); };
    return out;
}

Var Tape::tanh_(Var a) {
    Var out = push(val(a).tanh(), rg(a), nullptr);
    node(out).back = [a, out](Tape& t) {
        t.add_grad(a.idx, t.node(out).grad * (1.0 - t.val(out).square()));
    };
    return out;
}

Var Tape::sigmoid(Var a) {
    Var out = push(0.5 * (0.5 * val(a)).tanh() + 0.5, rg(a), nullptr);
    node(out).back = [a, out](Tape& t) {
        const Arr& y = t.val(out);
        t.add_grad(a.idx, t.node(out).grad * y * (1.0 - y));
    };
    return out;
}

Var Tape::softplus(Var a) {
    // log(1 + e^x), computed as max(x,0) + log1p(e^{-|x|})
    Arr y = val(a).unaryExpr([](double x) {
        return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
    });
    Var out = push(std::move(y), rg(a), nullptr);
    node(out).back = [a, out](Tape& t) {
        Arr s = t.val(a).unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
        t.add_grad(a.idx, t.node(out).grad * s);
    };
    return out;
}

Var Tape::gelu(Var a) {
    Arr y = val(a).unaryExpr([](double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); });
    Var out = push(std::move(y), rg(a), nullptr);
    node(out).back = [a, out](Tape& t) {
        Arr d = t.val(a).unaryExpr([](double x) {
            return 0.5 * (1.0 + std::erf(x * kInvSqrt2)) +
                   x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
        });
        t.add_grad(a.idx, t.node(out).grad * d);
    };
    return out;
}

Var Tape::matmul(Var a, Var b) {
    const Arr& x = val(a);
    const Arr& y = val(b);
    if (x.cols() != y.rows())
        throw ArgumentError("matmul: inner dimensions " + std::to_string(x.cols()) + " vs " +
                            std::to_string(y.rows()));
    Var out = push((x.matrix() * y.matrix()).array(), rg(a) || rg(b), nullptr);
    node(out).back = [a, b, out](Tape& t) {
        const auto g = t.node(out).grad.matrix();
        if (t.rg(a)) t.add_grad(a.idx, (g * t.val(b).matrix().transpose()).array());
        if (t.rg(b)) t.add_grad(b.idx, (t.val(a).matrix().transpose() * g).array());
    };
    return out;
}

Var Tape::slice_rows(Var a, Eigen::Index r0, Eigen::Index n) {
    const Arr& x = val(a);
    if (r0 < 0 || n < 0 || r0 + n > x.rows()) throw ArgumentError("slice_rows: out of range");
    Var out = push(x.middleRows(r0, n), rg(a), nullptr);
    node(out).back = [a, r0, n, out](Tape& t) {
        Node& pa = t.node(a);
        if (!pa.requires_grad) return;
        if (pa.grad.size() == 0) pa.grad = Arr::Zero(pa.value.rows(), pa.value.cols());
        pa.grad.middleRows(r0, n) += t.node(out).grad;
    };
    return out;
}

Var Tape::slice_cols(Var a, Eigen::Index c0, Eigen::Index n) {
    const Arr& x = val(a);
    if (c0 < 0 || n < 0 || c0 + n > x.cols()) throw ArgumentError("slice_cols: out of range");
    Var out = push(x.middleCols(c0, n), rg(a), nullptr);
    node(out).back = [a, c0, n, out](Tape& t) {
        Node& pa = t.node(a);
        if (!pa.requires_grad) return;
        if (pa.grad.size() == 0) pa.grad = Arr::Zero(pa.value.rows(), pa.value.cols());
        pa.grad.middleCols(c0, n) += t.node(out).grad;
    };
    return out;
}

Var Tape::concat_rows(std::span<const Var> parts) {
    if (parts.empty()) throw ArgumentError("concat_rows: no parts");
    Eigen::Index rows = 0;
    const Eigen::Index cols = val(parts[0]).cols();
    bool any_rg = false;
    for (Var p : parts) {
        if (val(p).cols() != cols) throw ArgumentError("concat_rows: column mismatch");
        rows += val(p).rows();
        any_rg = any_rg || rg(p);
    }
    Arr out(rows, cols);
    Eigen::Index r = 0;
    for (Var p : parts) {
        out.middleRows(r, val(p).rows()) = val(p);
        r += val(p).rows();
    }
    std::vector<Var> ps(parts.begin(), parts.end());
    Var o = push(std::move(out), any_rg, nullptr);
    node(o).back = [ps = std::move(ps), o](Tape& t) {
        const Arr& g = t.node(o).grad;
        Eigen::Index r = 0;
        for (Var p : ps) {
            const Eigen::Index n = t.val(p).rows();
            t.add_grad(p.idx, g.middleRows(r, n));
            r += n;
        }
    };
    return o;
}

Var Tape::sum(Var a) {
    Var out = push(Arr::Constant(1, 1, val(a).sum()), rg(a), nullptr);
    node(out).back = [a, out](Tape& t) {
        const double g = t.node(out).grad(0, 0);
        t.add_grad(a.idx, Arr::Constant(t.val(a).rows(), t.val(a).cols(), g));
    };
    return out;
}

Var Tape::mean(Var a) {
    const double inv = 1.0 / static_cast<double>(val(a).size());
    Var out = push(Arr::Constant(1, 1, val(a).sum() * inv), rg(a), nullptr);
    node(out).back = [a, inv, out](Tape& t) {
        const double g = t.node(out).grad(0, 0) * inv;
        t.add_grad(a.idx, Arr::Constant(t.val(a).rows(), t.val(a).cols(), g));
    };
    return out;
}

Var Tape::colsum(Var a) {
    Var out = push(val(a).colwise().sum(), rg(a), nullptr);
    node(out).back = [a, out](Tape& t) {
        const Arr& g = t.node(out).grad;  // 1 x cols
        t.add_grad(a.idx, g.replicate(t.val(a).rows(), 1));
    };
    return out;
}

Var Tape::mul_col_broadcast(Var m, Var col) {
    const Arr& x = val(m);
    const Arr& c = val(col);
    if (c.cols() != 1 || c.rows() != x.rows())
        throw ArgumentError("mul_col_broadcast: col must be rows x 1");
    Var out = push(x.colwise() * c.col(0), rg(m) || rg(col), nullptr);
    node(out).back = [m, col, out](Tape& t) {
        const Arr& g = t.node(out).grad;
        if (t.rg(m)) t.add_grad(m.idx, g.colwise() * t.val(col).col(0));
        if (t.rg(col)) t.add_grad(col.idx, Arr((g * t.val(m)).rowwise().sum()));
    };
    return out;
}

Var Tape::add_col_broadcast(Var m, Var col) {
    const Arr& x = val(m);
    const Arr& c = val(col);
    if (c.cols() != 1 || c.rows() != x.rows())
        throw ArgumentError("add_col_broadcast: col must be rows x 1");
    Var out = push(x.colwise() + c.col(0), rg(m) || rg(col), nullptr);
    node(out).back = [m, col, out](Tape& t) {
        const Arr& g = t.node(out).grad;
        t.add_grad(m.idx, g);
        if (t.rg(col)) t.add_grad(col.idx, Arr(g.rowwise().sum()));
    };
    return out;
}

Var Tape::add_col_broadcast_block(Var m, Var col, Eigen::Index c0, Eigen::Index n) {
    const Arr& x = val(m);
    const Arr& c = val(col);
    if (c.cols() != 1 || c.rows() != x.rows())
        throw ArgumentError("add_col_broadcast_block: col must be rows x 1");
    if (c0 < 0 || n < 0 || c0 + n > x.cols())
        throw ArgumentError("add_col_broadcast_block: column range out of bounds");
    Arr y = x;
    y.middleCols(c0, n).colwise() += c.col(0);
    Var out = push(std::move(y), rg(m) || rg(col), nullptr);
    node(out).back = [m, col, c0, n, out](Tape& t) {
        const Arr& g = t.node(out).grad;
        t.add_grad(m.idx, g);
        if (t.rg(col)) t.add_grad(col.idx, Arr(g.middleCols(c0, n).rowwise().sum()));
    };
    return out;
}

Var Tape::mul_scalar_var(Var m, Var s) {
    if (val(s).size() != 1) throw ArgumentError("mul_scalar_var: s must be 1x1");
    Var out = push(val(m) * val(s)(0, 0), rg(m) || rg(s), nullptr);
    node(out).back = [m, s, out](Tape& t) {
        const Arr& g = t.node(out).grad;
        if (t.rg(m)) t.add_grad(m.idx, g * t.val(s)(0, 0));
        if (t.rg(s)) t.add_grad(s.idx, Arr::Constant(1, 1, (g * t.val(m)).sum()));
    };
    return out;
}

Var Tape::outer_const_row(Var col, Eigen::RowVectorXd row) {
    const Arr& c = val(col);
    if (c.cols() != 1) throw ArgumentError("outer_const_row: col must be n x 1");
    Arr out = c.col(0).matrix() * row;
    auto row_ptr = std::make_shared<Eigen::RowVectorXd>(std::move(row));
    Var o = push(std::move(out), rg(col), nullptr);
    node(o).back = [col, row_ptr, o](Tape& t) {
        t.add_grad(col.idx, Arr(t.node(o).grad.matrix() * row_ptr->transpose()));
    };
    return o;
}

Var Tape::layernorm_cols(Var x, Var gain, Var bias, double eps) {
    const Arr& v = val(x);
    const Arr& g0 = val(gain);
    const Arr& b0 = val(bias);
    if (g0.cols() != 1 || g0.rows() != v.rows() || b0.cols() != 1 || b0.rows() != v.rows())
        throw ArgumentError("layernorm_cols: gain/bias must be rows x 1");
    const double n = static_cast<double>(v.rows());

    Eigen::RowVectorXd mu = v.colwise().mean();
    Arr centered = v.rowwise() - mu.array();
    Eigen::RowVectorXd var = centered.square().colwise().sum() / n;
    Eigen::RowVectorXd istd = (var.array() + eps).rsqrt();
    auto xhat = std::make_shared<Arr>(centered.rowwise() * istd.array());
    auto istd_ptr = std::make_shared<Eigen::RowVectorXd>(std::move(istd));

    Arr y = (xhat->colwise() * g0.col(0)).colwise() + b0.col(0);
    Var out = push(std::move(y), rg(x) || rg(gain) || rg(bias), nullptr);
    node(out).back = [x, gain, bias, xhat, istd_ptr, n, out](Tape& t) {
        const Arr& gy = t.node(out).grad;
        if (t.rg(gain)) t.add_grad(gain.idx, Arr((gy * (*xhat)).rowwise().sum()));
        if (t.rg(bias)) t.add_grad(bias.idx, Arr(gy.rowwise().sum()));
        if (t.rg(x)) {
            Arr dxhat = gy.colwise() * t.val(gain).col(0);
            Eigen::RowVectorXd m1 = dxhat.colwise().sum() / n;
            Eigen::RowVectorXd m2 = (dxhat * (*xhat)).colwise().sum() / n;
            Arr dx = dxhat;
            dx.rowwise() -= m1.array();
            dx -= xhat->rowwise() * m2.array();
            dx.rowwise() *= istd_ptr->array();
            t.add_grad(x.idx, dx);
        }
    };
    return out;
}

Var Tape::causal_conv_rows(Var u, Var k) {
    check_same_shape(u, k, "causal_conv_rows");
    const Arr& uv = val(u);
    const Arr& kv = val(k);
    const Eigen::Index rows = uv.rows();
    const Eigen::Index L = uv.cols();
    const Eigen::Index nfft = fft_pad_length(std::max<Eigen::Index>(2 * L - 1, 1));

    using Spec = Eigen::ArrayXX<std::complex<double>>;  // nfft x rows
    auto su = std::make_shared<Spec>(nfft, rows);
    auto sk = std::make_shared<Spec>(nfft, rows);
    Arr out(rows, L);
    for (Eigen::Index h = 0; h < rows; ++h) {
        ComplexArray a = fft_real(uv.row(h).transpose(), nfft);
        ComplexArray b = fft_real(kv.row(h).transpose(), nfft);
        su->col(h) = a;
        sk->col(h) = b;
        a *= b;
        fft_inplace(a, true);
        out.row(h) = a.head(L).real().transpose();
    }
    Var o = push(std::move(out), rg(u) || rg(k), nullptr);
    node(o).back = [u, k, su, sk, L, nfft, o](Tape& t) {
        const Arr& g = t.node(o).grad;
        const Eigen::Index rows = g.rows();
        Arr gu(rows, L), gk(rows, L);
        for (Eigen::Index h = 0; h < rows; ++h) {
            ComplexArray gs = fft_real(g.row(h).transpose(), nfft);
            if (t.rg(u)) {
                ComplexArray c = gs * sk->col(h).conjugate();
                fft_inplace(c, true);
                gu.row(h) = c.head(L).real().transpose();
            }
            if (t.rg(k)) {
                ComplexArray c = gs * su->col(h).conjugate();
                fft_inplace(c, true);
                gk.row(h) = c.head(L).real().transpose();
            }
        }
        if (t.rg(u)) t.add_grad(u.idx, gu);
        if (t.rg(k)) t.add_grad(k.idx, gk);
    };
    return o;
}

}  // namespace hydrodiff::core
