#include "hydrodiff/diffusion/schedule.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "hydrodiff/core/errors.hpp"

namespace hydrodiff::diffusion {

NoiseSchedulePoint schedule_at(double tau) {
    if (!(tau >= 0.0 && tau <= 1.0))
        throw ArgumentError("schedule_at: tau must be in [0,1], got " + std::to_string(tau));
    const double a = 0.5 * std::numbers::pi * tau;
    return {std::cos(a), std::sin(a)};
}

namespace {
void check_lengths(Eigen::Index a, Eigen::Index b, const char* op) {
    if (a != b)
        throw ArgumentError(std::string(op) + ": length mismatch (" + std::to_string(a) + " vs " +
                            std::to_string(b) + ")");
}
}  // namespace

Eigen::ArrayXd forward_noise(const Eigen::Ref<const Eigen::ArrayXd>& x0,
                             const Eigen::Ref<const Eigen::ArrayXd>& eps, double tau) {
    check_lengths(x0.size(), eps.size(), "forward_noise");
    const auto [alpha, sigma] = schedule_at(tau);
    return alpha * x0 + sigma * eps;
}

Eigen::ArrayXd velocity_target(const Eigen::Ref<const Eigen::ArrayXd>& x0,
                               const Eigen::Ref<const Eigen::ArrayXd>& eps, double tau) {
    check_lengths(x0.size(), eps.size(), "velocity_target");
    const auto [alpha, sigma] = schedule_at(tau);
    return alpha * eps - sigma * x0;
}

Eigen::ArrayXd clean_estimate(const Eigen::Ref<const Eigen::ArrayXd>& x_tau,
                              const Eigen::Ref<const Eigen::ArrayXd>& v, double tau) {
    check_lengths(x_tau.size(), v.size(), "clean_estimate");
    const auto [alpha, sigma] = schedule_at(tau);
    return alpha * x_tau - sigma * v;
}

}  // namespace hydrodiff::diffusion
