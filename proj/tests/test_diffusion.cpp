#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hydrodiff/core/errors.hpp"
#include "hydrodiff/core/rng.hpp"
#include "hydrodiff/diffusion/loss.hpp"
#include "hydrodiff/diffusion/sampler.hpp"
#include "hydrodiff/diffusion/schedule.hpp"
#include "support/test_models.hpp"

using namespace hydrodiff;
using namespace hydrodiff::diffusion;
using core::RngStream;
using hydrodiff::testing::OracleDenoiser;
using hydrodiff::testing::ZeroDenoiser;

TEST_CASE("schedule endpoints and midpoint") {
    auto p0 = schedule_at(0.0);
    CHECK(p0.alpha == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(p0.sigma == doctest::Approx(0.0).epsilon(1e-15));
    auto p1 = schedule_at(1.0);
    CHECK(p1.alpha == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(p1.sigma == doctest::Approx(1.0).epsilon(1e-15));
    auto ph = schedule_at(0.5);
    CHECK(ph.alpha == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
    CHECK(ph.sigma == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
}

TEST_CASE("schedule satisfies alpha^2 + sigma^2 = 1 on a grid") {
    for (int i = 0; i <= 10000; ++i) {
        const double tau = i / 10000.0;
        const auto p = schedule_at(tau);
        CHECK(std::abs(p.alpha * p.alpha + p.sigma * p.sigma - 1.0) < 1e-12);
    }
}

TEST_CASE("schedule rejects tau outside [0,1]") {
    CHECK_THROWS_AS((void)schedule_at(-0.01), ArgumentError);
    CHECK_THROWS_AS((void)schedule_at(1.01), ArgumentError);
    CHECK_THROWS_AS((void)schedule_at(std::nan("")), ArgumentError);
}

TEST_CASE("forward_noise endpoints") {
    RngStream rng(3);
    Eigen::ArrayXd x0 = rng.gaussian_vector(8), eps = rng.gaussian_vector(8);
    CHECK(((forward_noise(x0, eps, 0.0) - x0).abs() < 1e-15).all());
    CHECK(((forward_noise(x0, eps, 1.0) - eps).abs() < 1e-15).all());
    Eigen::ArrayXd bad(7);
    CHECK_THROWS_AS((void)forward_noise(x0, bad, 0.5), ArgumentError);
}

TEST_CASE("forward_noise preserves unit variance") {
    RngStream rng(11);
    const int N = 100000;
    for (double tau : {0.2, 0.5, 0.8}) {
        double ss = 0.0, s = 0.0;
        for (int i = 0; i < N; ++i) {
            Eigen::ArrayXd x0(1), eps(1);
            x0[0] = rng.gaussian();
            eps[0] = rng.gaussian();
            const double v = forward_noise(x0, eps, tau)[0];
            s += v;
            ss += v * v;
        }
        const double var = ss / N - (s / N) * (s / N);
        CHECK(std::abs(var - 1.0) < 0.02);
    }
}

TEST_CASE("velocity target endpoints") {
    RngStream rng(5);
    Eigen::ArrayXd x0 = rng.gaussian_vector(8), eps = rng.gaussian_vector(8);
    CHECK(((velocity_target(x0, eps, 0.0) - eps).abs() < 1e-15).all());
    CHECK(((velocity_target(x0, eps, 1.0) + x0).abs() < 1e-15).all());
}

TEST_CASE("clean_estimate endpoints") {
    RngStream rng(6);
    Eigen::ArrayXd x = rng.gaussian_vector(8), v = rng.gaussian_vector(8);
    CHECK(((clean_estimate(x, v, 0.0) - x).abs() < 1e-15).all());
    CHECK(((clean_estimate(x, v, 1.0) + v).abs() < 1e-15).all());
}

TEST_CASE("roundtrip identity over 1e4 random draws") {
    RngStream rng(7);
    for (int i = 0; i < 10000; ++i) {
        Eigen::ArrayXd x0 = rng.gaussian_vector(8), eps = rng.gaussian_vector(8);
        const double tau = rng.uniform();
        Eigen::ArrayXd x_tau = forward_noise(x0, eps, tau);
        Eigen::ArrayXd v = velocity_target(x0, eps, tau);
        Eigen::ArrayXd rec = clean_estimate(x_tau, v, tau);
        CHECK((rec - x0).abs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("velocity_loss: oracle model scores zero") {
    RngStream rng(9);
    Eigen::ArrayXd x0 = rng.gaussian_vector(8);
    OracleDenoiser model(x0);
    data::ConditioningTuple c;
    for (double tau : {0.1, 0.5, 0.9}) {
        Eigen::ArrayXd eps = rng.gaussian_vector(8);
        CHECK(velocity_loss_at(model, x0, c, tau, eps) < 1e-20);
    }
}

TEST_CASE("velocity_loss: zero model at tau=0 equals mean(eps^2)") {
    RngStream rng(10);
    Eigen::ArrayXd x0 = rng.gaussian_vector(8), eps = rng.gaussian_vector(8);
    ZeroDenoiser model(8);
    data::ConditioningTuple c;
    const double loss = velocity_loss_at(model, x0, c, 0.0, eps);
    CHECK(loss == doctest::Approx(eps.square().mean()).epsilon(1e-12));
}

TEST_CASE("velocity_loss: batch mean is non-negative and uses targets") {
    RngStream rng(12);
    std::vector<data::ConditioningTuple> batch;
    for (int i = 0; i < 4; ++i)
        batch.push_back(hydrodiff::testing::random_tuple(3, 7, 2, 3, 100 + i));
    ZeroDenoiser model(8);
    RngStream lr(77);
    CHECK(velocity_loss(model, batch, lr) >= 0.0);
}

TEST_CASE("ddim: single step with oracle recovers x0") {
    RngStream rng(13);
    Eigen::ArrayXd x0 = rng.gaussian_vector(8);
    OracleDenoiser model(x0);
    data::ConditioningTuple c;
    for (auto dir : {NoiseDirection::epsilon_hat, NoiseDirection::literal_velocity}) {
        DiffusionConfig cfg;
        cfg.sample_steps = 1;
        cfg.noise_direction = dir;
        Eigen::ArrayXd out = ddim_sample(model, c, cfg, 555);
        CHECK((out - x0).abs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("ddim: oracle denoising is step-count invariant") {
    RngStream rng(14);
    Eigen::ArrayXd x0 = rng.gaussian_vector(8);
    OracleDenoiser model(x0);
    data::ConditioningTuple c;
    for (int T : {1, 10, 100}) {
        DiffusionConfig cfg;
        cfg.sample_steps = T;
        Eigen::ArrayXd out = ddim_sample(model, c, cfg, 999);
        INFO("T = ", T);
        CHECK((out - x0).abs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("ddim: deterministic for a fixed seed") {
    Eigen::ArrayXd x0 = core::gaussian_sample(8, 21);
    OracleDenoiser model(x0);
    data::ConditioningTuple c;
    DiffusionConfig cfg;
    Eigen::ArrayXd a = ddim_sample(model, c, cfg, 4242);
    Eigen::ArrayXd b = ddim_sample(model, c, cfg, 4242);
    CHECK((a == b).all());
    Eigen::ArrayXd d = ddim_sample(model, c, cfg, 4243);
    CHECK_FALSE((a == d).all());
}

TEST_CASE("ddim: non-finite model output reports the failing step") {
    class NanDenoiser final : public Denoiser {
    public:
        Eigen::Index horizon() const override { return 4; }
        Eigen::ArrayXd velocity(const Eigen::Ref<const Eigen::ArrayXd>&, double,
                                const data::ConditioningTuple&) const override {
            return Eigen::ArrayXd::Constant(4, std::nan(""));
        }
    } model;
    data::ConditioningTuple c;
    DiffusionConfig cfg;
    cfg.sample_steps = 10;
    try {
        (void)ddim_sample(model, c, cfg, 1);
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("step") != std::string::npos);
    }
}

TEST_CASE("ensemble: shape, reproducibility, member independence") {
    Eigen::ArrayXd x0 = core::gaussian_sample(8, 33);
    OracleDenoiser model(x0);
    data::ConditioningTuple c;
    DiffusionConfig cfg;
    Eigen::ArrayXXd one = generate_ensemble(model, c, cfg, 1, 7);
    CHECK(one.rows() == 1);
    CHECK(one.cols() == 8);

    Eigen::ArrayXXd a = generate_ensemble(model, c, cfg, 5, 7);
    Eigen::ArrayXXd b = generate_ensemble(model, c, cfg, 5, 7);
    CHECK((a == b).all());

    // member m alone equals member m inside a larger ensemble (counter RNG)
    core::RngStream root(7);
    const std::uint64_t seed3 = root.child(std::uint64_t{3}).next_u64();
    Eigen::ArrayXd m3 = ddim_sample(model, c, cfg, seed3);
    CHECK((a.row(3).transpose() == m3).all());
}
