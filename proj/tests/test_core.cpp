#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Core>
#include <cmath>

#include "hydrodiff/core/errors.hpp"
#include "hydrodiff/core/fft.hpp"
#include "hydrodiff/core/rng.hpp"
#include "hydrodiff/core/tape.hpp"
#include "support/gradcheck.hpp"

using namespace hydrodiff;
using core::Arr;
using core::RngStream;
using core::Tape;
using core::Var;

namespace {

// O(L^2) reference convolution.
Eigen::ArrayXd direct_convolve(const Eigen::ArrayXd& u, const Eigen::ArrayXd& k) {
    const Eigen::Index L = u.size();
    Eigen::ArrayXd out = Eigen::ArrayXd::Zero(L);
    for (Eigen::Index t = 0; t < L; ++t)
        for (Eigen::Index s = 0; s <= t; ++s) out[t] += k[s] * u[t - s];
    return out;
}

Eigen::ArrayXd random_signal(RngStream& rng, Eigen::Index n, double lo, double hi) {
    Eigen::ArrayXd x(n);
    for (Eigen::Index i = 0; i < n; ++i) x[i] = lo + (hi - lo) * rng.uniform();
    return x;
}

}  // namespace

TEST_CASE("fft convolution: delta kernel is identity") {
    Eigen::ArrayXd u(3), k(3);
    u << 3, 1, 4;
    k << 1, 0, 0;
    Eigen::ArrayXd out = core::fft_linear_convolve(u, k);
    for (int i = 0; i < 3; ++i) CHECK(out[i] == doctest::Approx(u[i]).epsilon(1e-12));
}

TEST_CASE("fft convolution: running-sum example") {
    Eigen::ArrayXd u = Eigen::ArrayXd::Ones(4);
    Eigen::ArrayXd k = Eigen::ArrayXd::Ones(4);
    Eigen::ArrayXd out = core::fft_linear_convolve(u, k);
    Eigen::ArrayXd expect(4);
    expect << 1, 2, 3, 4;
    CHECK((out - expect).abs().maxCoeff() < 1e-12);
}

TEST_CASE("fft convolution matches direct oracle, L=64") {
    RngStream rng(1234);
    Eigen::ArrayXd u = random_signal(rng, 64, -10, 10);
    Eigen::ArrayXd k = random_signal(rng, 64, -10, 10);
    Eigen::ArrayXd a = core::fft_linear_convolve(u, k);
    Eigen::ArrayXd b = direct_convolve(u, k);
    CHECK((a - b).abs().maxCoeff() < 1e-10);
}

TEST_CASE("fft convolution matches direct oracle across lengths up to 1024") {
    RngStream rng(77);
    for (Eigen::Index L : {1, 2, 3, 5, 17, 100, 255, 256, 511, 1024}) {
        Eigen::ArrayXd u = random_signal(rng, L, -10, 10);
        Eigen::ArrayXd k = random_signal(rng, L, -10, 10);
        Eigen::ArrayXd a = core::fft_linear_convolve(u, k);
        Eigen::ArrayXd b = direct_convolve(u, k);
        INFO("L = ", L);
        CHECK((a - b).abs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("fft convolution rejects length mismatch") {
    Eigen::ArrayXd u = Eigen::ArrayXd::Ones(4);
    Eigen::ArrayXd k = Eigen::ArrayXd::Ones(3);
    CHECK_THROWS_AS((void)core::fft_linear_convolve(u, k), ArgumentError);
}

TEST_CASE("rng: same seed bit-identical, different seeds differ") {
    Eigen::ArrayXd a = core::gaussian_sample(100, 42);
    Eigen::ArrayXd b = core::gaussian_sample(100, 42);
    Eigen::ArrayXd c = core::gaussian_sample(100, 43);
    CHECK((a == b).all());
    CHECK_FALSE((a == c).all());
}

TEST_CASE("rng: gaussian moments over 1e6 samples") {
    Eigen::ArrayXd x = core::gaussian_sample(1000000, 7);
    const double mean = x.mean();
    const double var = (x - mean).square().mean();
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(var - 1.0) < 0.01);
}

TEST_CASE("rng: child streams are independent of draw order") {
    RngStream root(99);
    RngStream a = root.child(0);
    RngStream b = root.child(1);
    const double a0 = a.gaussian();
    // draw from b in between; a's next value must not change
    (void)b.gaussian();
    RngStream a2 = RngStream(99).child(0);
    CHECK(a0 == a2.gaussian());
    CHECK(a.gaussian() == a2.gaussian());
}

TEST_CASE("rng: string labels derive distinct streams") {
    RngStream root(5);
    CHECK(root.child("noise").next_u64() != root.child("tau").next_u64());
}

TEST_CASE("tape: sum of squares analytic gradient") {
    Tape t;
    Arr p(2, 1);
    p << 1, -2;
    Var v = t.leaf(p);
    Var loss = t.sum(t.mul(v, v));
    t.backward(loss);
    Arr g = t.grad(v);
    CHECK(g(0, 0) == doctest::Approx(2.0));
    CHECK(g(1, 0) == doctest::Approx(-4.0));
}

TEST_CASE("tape: unused leaf has exactly zero gradient") {
    Tape t;
    Var used = t.leaf(Arr::Constant(2, 1, 1.5));
    Var unused = t.leaf(Arr::Constant(3, 1, 2.5));
    Var loss = t.sum(t.mul(used, used));
    t.backward(loss);
    CHECK((t.grad(unused) == 0.0).all());
}

namespace {

// Builds a scalar loss from a single op applied to leaves, for FD checking.
template <class Build>
hydrodiff::testing::FdReport fd_check_op(Eigen::Index n_params, Build&& build, uint64_t seed) {
    RngStream rng(seed);
    Eigen::VectorXd theta(n_params);
    for (Eigen::Index i = 0; i < n_params; ++i) theta[i] = rng.gaussian() * 0.5 + 0.1;

    auto loss_of = [&](const Eigen::VectorXd& th) -> double {
        Tape t;
        return build(t, th, nullptr);
    };
    Tape t;
    Eigen::VectorXd ad(n_params);
    (void)build(t, theta, &ad);
    return hydrodiff::testing::check_gradient(loss_of, theta, ad, 1e-5);
}

}  // namespace

TEST_CASE("tape: finite-difference check of composite ops") {
    // matmul -> layernorm -> gelu -> conv -> glu-style gate -> mean
    const Eigen::Index H = 3, L = 8, D = 4;
    const Eigen::Index n_params = H * D + H + H + H * L + 2 * H * H;
    auto build = [&](Tape& t, const Eigen::VectorXd& th, Eigen::VectorXd* ad) -> double {
        Eigen::Index off = 0;
        auto take = [&](Eigen::Index r, Eigen::Index c) {
            Arr a(r, c);
            for (Eigen::Index j = 0; j < c; ++j)
                for (Eigen::Index i = 0; i < r; ++i) a(i, j) = th[off++];
            return t.leaf(a);
        };
        Var W = take(H, D);
        Var gain = take(H, 1);
        Var bias = take(H, 1);
        Var K = take(H, L);
        Var Wg = take(2 * H, H);

        RngStream rng(4242);
        Arr X(D, L);
        for (Eigen::Index j = 0; j < L; ++j)
            for (Eigen::Index i = 0; i < D; ++i) X(i, j) = rng.gaussian();
        Var x = t.constant(X);

        Var h = t.matmul(W, x);
        Var ln = t.layernorm_cols(h, gain, bias);
        Var act = t.gelu(ln);
        Var conv = t.causal_conv_rows(act, K);
        Var mixed = t.matmul(Wg, conv);
        Var a = t.slice_rows(mixed, 0, H);
        Var b = t.slice_rows(mixed, H, H);
        Var gated = t.mul(a, t.sigmoid(b));
        Var loss = t.mean(t.mul(gated, gated));
        if (ad) {
            t.backward(loss);
            Eigen::Index o2 = 0;
            for (Var v : {W, gain, bias, K, Wg}) {
                Arr g = t.grad(v);
                for (Eigen::Index j = 0; j < g.cols(); ++j)
                    for (Eigen::Index i = 0; i < g.rows(); ++i) (*ad)[o2++] = g(i, j);
            }
        }
        return t.val(loss)(0, 0);
    };
    auto rep = fd_check_op(n_params, build, 31);
    INFO("worst index ", rep.worst_index, " ad=", rep.ad_at_worst, " fd=", rep.fd_at_worst);
    CHECK(rep.max_rel_err < 1e-6);
}

TEST_CASE("tape: finite-difference check of broadcast and reduction ops") {
    const Eigen::Index R = 4, C = 6;
    const Eigen::Index n_params = R * C + R + R + 1 + R;
    auto build = [&](Tape& t, const Eigen::VectorXd& th, Eigen::VectorXd* ad) -> double {
        Eigen::Index off = 0;
        auto take = [&](Eigen::Index r, Eigen::Index c) {
            Arr a(r, c);
            for (Eigen::Index j = 0; j < c; ++j)
                for (Eigen::Index i = 0; i < r; ++i) a(i, j) = th[off++];
            return t.leaf(a);
        };
        Var M = take(R, C);
        Var colm = take(R, 1);
        Var cola = take(R, 1);
        Var s = take(1, 1);
        Var oc = take(R, 1);

        Eigen::RowVectorXd ramp(C);
        for (Eigen::Index j = 0; j < C; ++j) ramp[j] = 0.3 * static_cast<double>(j) - 0.7;

        Var y = t.mul_col_broadcast(M, colm);
        y = t.add_col_broadcast(y, cola);
        y = t.add_col_broadcast_block(y, cola, 1, 3);
        y = t.mul_scalar_var(y, s);
        y = t.add(y, t.outer_const_row(oc, ramp));
        y = t.div(t.sin_(y), t.add_scalar(t.mul(y, y), 2.0));
        y = t.add(t.softplus(y), t.cos_(y));
        Var cs = t.colsum(y);
        Var loss = t.mean(t.mul(cs, cs));
        if (ad) {
            t.backward(loss);
            Eigen::Index o2 = 0;
            for (Var v : {M, colm, cola, s, oc}) {
                Arr g = t.grad(v);
                for (Eigen::Index j = 0; j < g.cols(); ++j)
                    for (Eigen::Index i = 0; i < g.rows(); ++i) (*ad)[o2++] = g(i, j);
            }
        }
        return t.val(loss)(0, 0);
    };
    auto rep = fd_check_op(n_params, build, 57);
    INFO("worst index ", rep.worst_index, " ad=", rep.ad_at_worst, " fd=", rep.fd_at_worst);
    CHECK(rep.max_rel_err < 1e-6);
}

TEST_CASE("tape: exp/log/tanh/concat/slice adjoints") {
    const Eigen::Index n = 5;
    const Eigen::Index n_params = 2 * n;
    auto build = [&](Tape& t, const Eigen::VectorXd& th, Eigen::VectorXd* ad) -> double {
        Arr a(n, 1), b(n, 1);
        for (Eigen::Index i = 0; i < n; ++i) a(i, 0) = th[i];
        for (Eigen::Index i = 0; i < n; ++i) b(i, 0) = th[n + i];
        Var va = t.leaf(a), vb = t.leaf(b);
        Var e = t.exp_(t.scale(va, 0.3));
        Var l = t.log_(t.add_scalar(t.mul(vb, vb), 1.0));
        std::vector<Var> parts{e, l, t.tanh_(va)};
        Var cat = t.concat_rows(parts);
        Var sl = t.slice_rows(cat, 2, 2 * n);
        Var loss = t.mean(t.mul(sl, sl));
        if (ad) {
            t.backward(loss);
            Eigen::Index o2 = 0;
            for (Var v : {va, vb}) {
                Arr g = t.grad(v);
                for (Eigen::Index i = 0; i < g.rows(); ++i) (*ad)[o2++] = g(i, 0);
            }
        }
        return t.val(loss)(0, 0);
    };
    auto rep = fd_check_op(n_params, build, 91);
    CHECK(rep.max_rel_err < 1e-6);
}
