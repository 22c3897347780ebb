#pragma once

// Shared test fixtures: oracle denoisers and random conditioning tuples.

#include <Eigen/Core>

#include "hydrodiff/core/rng.hpp"
#include "hydrodiff/data/types.hpp"
#include "hydrodiff/diffusion/denoiser.hpp"
#include "hydrodiff/diffusion/schedule.hpp"

namespace hydrodiff::testing {

/// Knows the true clean sample; returns the exact velocity that makes
/// clean_estimate() recover it. Never valid at tau = 0.
class OracleDenoiser final : public diffusion::Denoiser {
public:
    explicit OracleDenoiser(Eigen::ArrayXd x0) : x0_(std::move(x0)) {}
    Eigen::Index horizon() const override { return x0_.size(); }
    Eigen::ArrayXd velocity(const Eigen::Ref<const Eigen::ArrayXd>& x_tau, double tau,
                            const data::ConditioningTuple&) const override {
        const auto [alpha, sigma] = diffusion::schedule_at(tau);
        return (alpha * x_tau - x0_) / sigma;
    }

private:
    Eigen::ArrayXd x0_;
};

class ZeroDenoiser final : public diffusion::Denoiser {
public:
    explicit ZeroDenoiser(Eigen::Index n) : n_(n) {}
    Eigen::Index horizon() const override { return n_; }
    Eigen::ArrayXd velocity(const Eigen::Ref<const Eigen::ArrayXd>&, double,
                            const data::ConditioningTuple&) const override {
        return Eigen::ArrayXd::Zero(n_);
    }

private:
    Eigen::Index n_;
};

inline data::ConditioningTuple random_tuple(int past_len, int future_len, int n_forcings,
                                            int n_statics, std::uint64_t seed) {
    core::RngStream rng(seed);
    data::ConditioningTuple c;
    c.past = rng.gaussian_matrix(past_len, n_forcings);
    c.future = rng.gaussian_matrix(future_len, n_forcings);
    c.statics = rng.gaussian_vector(n_statics);
    c.target = rng.gaussian_vector(future_len + 1);
    c.init_date = data::Date::from_ymd(1990, 6, 15);
    c.basin_id = "test";
    return c;
}

}  // namespace hydrodiff::testing
