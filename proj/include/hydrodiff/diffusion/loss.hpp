#pragma once

#include <Eigen/Core>
#include <span>

#include "hydrodiff/core/rng.hpp"
#include "hydrodiff/diffusion/denoiser.hpp"

namespace hydrodiff::diffusion {

/// Squared velocity-matching error for one sample at fixed (tau, eps):
/// mean over the horizon of (v_model(x_tau, tau, c) - v*)^2.
double velocity_loss_at(const Denoiser& model, const Eigen::Ref<const Eigen::ArrayXd>& x0,
                        const data::ConditioningTuple& c, double tau,
                        const Eigen::Ref<const Eigen::ArrayXd>& eps);

/// Monte-Carlo training loss over a batch: per item draws tau ~ U[0,1] and
/// eps ~ N(0,I) from rng, corrupts the target and compares the model output
/// against the velocity target. Returns the batch mean.
double velocity_loss(const Denoiser& model, std::span<const data::ConditioningTuple> batch,
                     core::RngStream& rng);

}  // namespace hydrodiff::diffusion
