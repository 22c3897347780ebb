#pragma once

#include <Eigen/Core>

namespace hydrodiff::diffusion {

/// Point on the variance-preserving noise schedule; alpha^2 + sigma^2 = 1.
struct NoiseSchedulePoint {
    double alpha;
    double sigma;
};

enum class ScheduleKind { cosine };

enum class NoiseDirection {
    epsilon_hat,      // DDIM direction from the reconstructed noise
    literal_velocity  // direction taken as the raw velocity estimate
};

struct DiffusionConfig {
    int sample_steps = 10;  // T
    ScheduleKind schedule = ScheduleKind::cosine;
    NoiseDirection noise_direction = NoiseDirection::epsilon_hat;
};

/// Cosine schedule: alpha = cos(pi*tau/2), sigma = sin(pi*tau/2).
/// tau outside [0, 1] is an argument error.
NoiseSchedulePoint schedule_at(double tau);

/// x_tau = alpha*x0 + sigma*eps.
Eigen::ArrayXd forward_noise(const Eigen::Ref<const Eigen::ArrayXd>& x0,
                             const Eigen::Ref<const Eigen::ArrayXd>& eps, double tau);

/// Training target v* = alpha*eps - sigma*x0. This is the form consistent
/// with clean_estimate: alpha*x_tau - sigma*v* recovers x0 exactly.
Eigen::ArrayXd velocity_target(const Eigen::Ref<const Eigen::ArrayXd>& x0,
                               const Eigen::Ref<const Eigen::ArrayXd>& eps, double tau);

/// x0_hat = alpha*x_tau - sigma*v.
Eigen::ArrayXd clean_estimate(const Eigen::Ref<const Eigen::ArrayXd>& x_tau,
                              const Eigen::Ref<const Eigen::ArrayXd>& v, double tau);

}  // namespace hydrodiff::diffusion
