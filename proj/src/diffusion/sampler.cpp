#include "hydrodiff/diffusion/sampler.hpp"

#include <string>

#include "hydrodiff/core/errors.hpp"
#include "hydrodiff/core/rng.hpp"

namespace hydrodiff::diffusion {

std::unique_ptr<SamplerContext> Denoiser::make_context(const data::ConditioningTuple& c) const {
    class Plain final : public SamplerContext {
    public:
        Plain(const Denoiser& m, const data::ConditioningTuple& c) : model_(m), c_(c) {}
        Eigen::ArrayXd velocity(const Eigen::Ref<const Eigen::ArrayXd>& x_tau,
                                double tau) const override {
            return model_.velocity(x_tau, tau, c_);
        }

    private:
        const Denoiser& model_;
        data::ConditioningTuple c_;
    };
    return std::make_unique<Plain>(*this, c);
}

Eigen::ArrayXd ddim_sample_with_context(const SamplerContext& ctx, Eigen::Index horizon,
                                        const DiffusionConfig& cfg, std::uint64_t seed) {
    if (cfg.sample_steps < 1) throw ArgumentError("ddim_sample: sample_steps must be >= 1");
    const int T = cfg.sample_steps;

    Eigen::ArrayXd x = core::RngStream(seed).gaussian_vector(horizon);
    for (int t = T; t >= 1; --t) {
        const double tau = static_cast<double>(t) / T;
        const double tau_prev = static_cast<double>(t - 1) / T;
        const auto [alpha, sigma] = schedule_at(tau);
        const auto [alpha_prev, sigma_prev] = schedule_at(tau_prev);

        const Eigen::ArrayXd v = ctx.velocity(x, tau);
        const Eigen::ArrayXd x0_hat = alpha * x - sigma * v;
        Eigen::ArrayXd direction;
        if (cfg.noise_direction == NoiseDirection::epsilon_hat)
            direction = sigma * x + alpha * v;  // reconstructed noise
        else
            direction = v;
        x = alpha_prev * x0_hat + sigma_prev * direction;

        if (!x.isFinite().all())
            throw NumericError("ddim_sample: non-finite state at step t=" + std::to_string(t) +
                               " (tau=" + std::to_string(tau) + ")");
    }
    return x;
}

Eigen::ArrayXd ddim_sample(const Denoiser& model, const data::ConditioningTuple& c,
                           const DiffusionConfig& cfg, std::uint64_t seed) {
    auto ctx = model.make_context(c);
    return ddim_sample_with_context(*ctx, model.horizon(), cfg, seed);
}

Eigen::ArrayXXd generate_ensemble(const Denoiser& model, const data::ConditioningTuple& c,
                                  const DiffusionConfig& cfg, int members,
                                  std::uint64_t root_seed) {
    if (members < 1) throw ArgumentError("generate_ensemble: members must be >= 1");
    const Eigen::Index L = model.horizon();
    auto ctx = model.make_context(c);
    Eigen::ArrayXXd out(members, L);
    core::RngStream root(root_seed);
    for (int m = 0; m < members; ++m) {
        const std::uint64_t member_seed = root.child(static_cast<std::uint64_t>(m)).next_u64();
        try {
            out.row(m) = ddim_sample_with_context(*ctx, L, cfg, member_seed).transpose();
        } catch (const NumericError& e) {
            throw NumericError("ensemble member " + std::to_string(m) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace hydrodiff::diffusion
