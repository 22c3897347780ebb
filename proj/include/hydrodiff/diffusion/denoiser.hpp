#pragma once

#include <Eigen/Core>
#include <memory>

#include "hydrodiff/data/types.hpp"

namespace hydrodiff::diffusion {

/// Per-conditioning sampler state. Lets a model cache whatever only depends
/// on c (encoder pass, causal prefix) and re-evaluate cheaply across the
/// many (x_tau, tau) queries a sampling run makes.
class SamplerContext {
public:
    virtual ~SamplerContext() = default;
    virtual Eigen::ArrayXd velocity(const Eigen::Ref<const Eigen::ArrayXd>& x_tau,
                                    double tau) const = 0;
};

/// A conditional velocity model v(x_tau, tau, c) over length-L_f trajectories.
class Denoiser {
public:
    virtual ~Denoiser() = default;

    virtual Eigen::Index horizon() const = 0;

    virtual Eigen::ArrayXd velocity(const Eigen::Ref<const Eigen::ArrayXd>& x_tau, double tau,
                                    const data::ConditioningTuple& c) const = 0;

    /// Default context just forwards to velocity(); models override to cache.
    virtual std::unique_ptr<SamplerContext> make_context(const data::ConditioningTuple& c) const;
};

}  // namespace hydrodiff::diffusion
