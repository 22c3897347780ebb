#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "hydrodiff/diffusion/denoiser.hpp"
#include "hydrodiff/diffusion/schedule.hpp"

namespace hydrodiff::diffusion {

/// Deterministic DDIM integration on the uniform grid tau_t = t/T, from
/// tau_T = 1 down to tau_0 = 0. The start noise comes from `seed` alone,
/// so identical (seed, model, c, cfg) give bit-identical trajectories.
Eigen::ArrayXd ddim_sample(const Denoiser& model, const data::ConditioningTuple& c,
                           const DiffusionConfig& cfg, std::uint64_t seed);

/// Same integration against a prebuilt context (one conditioning, many runs).
Eigen::ArrayXd ddim_sample_with_context(const SamplerContext& ctx, Eigen::Index horizon,
                                        const DiffusionConfig& cfg, std::uint64_t seed);

/// M member trajectories; member m uses the derived stream (root_seed, m).
/// Output is M x L_f, in the model's (normalized) trajectory space.
Eigen::ArrayXXd generate_ensemble(const Denoiser& model, const data::ConditioningTuple& c,
                                  const DiffusionConfig& cfg, int members,
                                  std::uint64_t root_seed);

}  // namespace hydrodiff::diffusion
