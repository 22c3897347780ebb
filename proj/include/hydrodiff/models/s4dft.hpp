#pragma once

#include <Eigen/Core>
#include <complex>
#include <cstdint>
#include <memory>
#include <vector>

#include "hydrodiff/core/rng.hpp"
#include "hydrodiff/core/tape.hpp"
#include "hydrodiff/data/types.hpp"
#include "hydrodiff/models/trainable.hpp"

namespace hydrodiff::models {

/// A complex sequence stored as separate real and imaginary parts.
struct ComplexSeq {
    Eigen::ArrayXd re;
    Eigen::ArrayXd im;
};

struct BackboneConfig {
    int d_model = 256;   // H
    int d_state = 256;   // n modes (conjugate-pair convention: 2n states)
    int n_layers = 6;
    double cfr = 10.0;   // upper bound of alpha_r init range
    double cfi = 10.0;
    double dropout = 0.2;
    double min_dt = 0.01;
    double max_dt = 0.1;
    int past_len = data::kPastDays;
    int horizon = data::kHorizon;
    int future_len = data::kFutureDays;
    int n_forcings = data::kNumForcings;
    int n_statics = data::kNumStatics;
    bool identity_freq_init = false;  // alpha_r = alpha_i = 1 instead of U(0, cf]

    int seq_len() const { return past_len + future_len; }
    int input_dim() const { return n_forcings + n_statics + 1; }
    int tau_embed_dim() const { return d_model % 2 == 0 ? d_model : d_model + 1; }
    void validate() const;
};

/// Frequency tuning: lambda_j = alpha_r*Re(base_j) + i*alpha_i*Im(base_j).
ComplexSeq tune_frequencies(const ComplexSeq& base, double alpha_r, double alpha_i);

/// Zero-order-hold discretization of one diagonal mode.
/// abar = exp(lambda*dt); bbar_scale = (abar-1)/lambda, with the series
/// limit bbar_scale = dt when |lambda| < 1e-12.
struct Discretized {
    std::complex<double> abar;
    std::complex<double> bbar_scale;
};
Discretized discretize(std::complex<double> lambda, double dt);

/// Per-layer diagonal state-space parameters, already in tuned form.
struct SsmLayerParams {
    ComplexSeq lambda;            // n tuned eigenvalues, Re < 0
    ComplexSeq B;                 // n
    Eigen::ArrayXXd C_re, C_im;   // n x H (per-channel output maps)
    Eigen::ArrayXd D;             // H skip
    Eigen::ArrayXd log_dt;        // H
};

/// Real convolution kernels, one row per channel:
///   K(h, l) = 2*Re( sum_j C(j,h) * abar_j^l * bbar_scale_j * B_j )
/// under the conjugate-pair convention.
Eigen::ArrayXXd ssm_kernel(const SsmLayerParams& p, Eigen::Index L);

/// Fourier features of the diffusion time: [sin(w_k*tau); cos(w_k*tau)]
/// with w_k = (1e4)^(k/(dim/2)), k = 0..dim/2-1. dim must be even.
Eigen::ArrayXd diffusion_time_embedding(double tau, int dim);

/// Fig-1e style input: rows are time (365 past days ending at Day-0, then
/// 7 future days), columns are [5 forcings | 27 statics | noisy target].
/// The target channel is zero for the first 364 rows and carries x_tau on
/// the final 8 (Day-0..Day-7).
Eigen::ArrayXXd assemble_input(const data::ConditioningTuple& c,
                               const Eigen::Ref<const Eigen::ArrayXd>& x_tau);

/// Tape bindings of one layer's pieces as used by the forward pass.
struct S4dftLayerVars {
    core::Var kernel;  // H x L
    core::Var ln_gain, ln_bias;
    core::Var D;
    core::Var tau_bias;  // H x 1, already projected from the embedding
    core::Var glu_W, glu_b;
};

struct LayerOptions {
    bool identity_activation = false;  // replace GELU with identity
    bool gate_open = false;            // bypass the gated output mix
    const core::Arr* dropout_mask = nullptr;
};

/// One S4D-FT block: pre-norm, kernel convolution + D skip, additive tau
/// bias over the final L_f positions, nonlinearity, gated output mix,
/// dropout, residual.
core::Var s4dft_layer_tape(core::Tape& t, core::Var x, const S4dftLayerVars& p,
                           Eigen::Index horizon, const LayerOptions& opt = {});

class S4dftModel final : public TrainableModel {
public:
    S4dftModel(BackboneConfig cfg, std::uint64_t init_seed);

    const BackboneConfig& config() const { return cfg_; }

    // TrainableModel
    ParamStore& params() override { return params_; }
    const ParamStore& params() const override { return params_; }
    std::string kind_name() const override { return "hydrodiffusion"; }
    std::string param_group(const std::string& name) const override;
    core::Var velocity_tape(core::Tape& t, const BoundParams& p,
                            const data::ConditioningTuple& c,
                            const Eigen::Ref<const Eigen::ArrayXd>& x_tau, double tau,
                            bool train_mode, core::RngStream* dropout_rng,
                            const std::vector<core::Var>* shared_kernels) const override;
    std::vector<core::Var> kernels_tape(core::Tape& t, const BoundParams& p) const override;

    // Denoiser
    Eigen::Index horizon() const override { return cfg_.horizon; }
    Eigen::ArrayXd velocity(const Eigen::Ref<const Eigen::ArrayXd>& x_tau, double tau,
                            const data::ConditioningTuple& c) const override;
    std::unique_ptr<diffusion::SamplerContext> make_context(
        const data::ConditioningTuple& c) const override;

    /// Tuned per-layer parameters assembled from the raw parameter arrays.
    SsmLayerParams layer_params(int layer) const;

    /// Kernels evaluated at the current parameters (one H x L array per layer).
    std::vector<Eigen::ArrayXXd> kernels_eval() const;

private:
    BackboneConfig cfg_;
    ParamStore params_;

    friend class S4dftContext;
};

}  // namespace hydrodiff::models
