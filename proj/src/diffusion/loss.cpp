#include "hydrodiff/diffusion/loss.hpp"

#include "hydrodiff/core/errors.hpp"
#include "hydrodiff/diffusion/schedule.hpp"

namespace hydrodiff::diffusion {

double velocity_loss_at(const Denoiser& model, const Eigen::Ref<const Eigen::ArrayXd>& x0,
                        const data::ConditioningTuple& c, double tau,
                        const Eigen::Ref<const Eigen::ArrayXd>& eps) {
    const Eigen::ArrayXd x_tau = forward_noise(x0, eps, tau);
    const Eigen::ArrayXd v_star = velocity_target(x0, eps, tau);
    const Eigen::ArrayXd v = model.velocity(x_tau, tau, c);
    if (!v.isFinite().all()) throw NumericError("velocity_loss: non-finite model output");
    return (v - v_star).square().mean();
}

double velocity_loss(const Denoiser& model, std::span<const data::ConditioningTuple> batch,
                     core::RngStream& rng) {
    if (batch.empty()) throw ArgumentError("velocity_loss: empty batch");
    const Eigen::Index L = model.horizon();
    double total = 0.0;
    for (const auto& c : batch) {
        if (c.target.size() != L) throw ArgumentError("velocity_loss: target length mismatch");
        if (!c.target.isFinite().all())
            throw ArgumentError("velocity_loss: sample has missing target values");
        const double tau = rng.uniform();
        const Eigen::ArrayXd eps = rng.gaussian_vector(L);
        total += velocity_loss_at(model, c.target, c, tau, eps);
    }
    return total / static_cast<double>(batch.size());
}

}  // namespace hydrodiff::diffusion
