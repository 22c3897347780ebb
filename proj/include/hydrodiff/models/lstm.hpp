#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>

#include "hydrodiff/core/rng.hpp"
#include "hydrodiff/core/tape.hpp"
#include "hydrodiff/data/types.hpp"
#include "hydrodiff/models/trainable.hpp"

namespace hydrodiff::models {

struct LstmConfig {
    int hidden = 256;
    double dropout = 0.5;
    double forget_gate_bias = 3.0;
    int past_len = data::kPastDays;
    int horizon = data::kHorizon;
    int future_len = data::kFutureDays;
    int n_forcings = data::kNumForcings;
    int n_statics = data::kNumStatics;

    int enc_input_dim() const { return n_forcings + n_statics; }
    int dec_input_dim() const { return n_forcings + n_statics + 1; }
    int seq_len() const { return past_len + future_len; }
    int tau_embed_dim() const { return hidden % 2 == 0 ? hidden : hidden + 1; }
    void validate() const;
};

/// Standard gated update, gate order [input; forget; cell; output]:
///   gates = W x + R h_prev + b
///   c = sigmoid(f) .* c_prev + sigmoid(i) .* tanh(g)
///   h = sigmoid(o) .* tanh(c)
void lstm_cell(const Eigen::Ref<const Eigen::ArrayXd>& x,
               const Eigen::Ref<const Eigen::ArrayXd>& h_prev,
               const Eigen::Ref<const Eigen::ArrayXd>& c_prev,
               const Eigen::Ref<const Eigen::ArrayXXd>& W,
               const Eigen::Ref<const Eigen::ArrayXXd>& R,
               const Eigen::Ref<const Eigen::ArrayXd>& b, Eigen::ArrayXd& h_out,
               Eigen::ArrayXd& c_out);

struct LstmCellVars {
    core::Var W, R, b;
};

/// Tape version of the cell; x, h, c are column vectors.
std::pair<core::Var, core::Var> lstm_cell_tape(core::Tape& t, core::Var x, core::Var h,
                                               core::Var c, const LstmCellVars& p);

/// Encoder-decoder denoiser: the encoder summarizes the 365-day history,
/// diffusion-time embeddings are added to the bottleneck (h and c), and the
/// decoder unrolls the 8-step window on future forcings + statics + x_tau.
class LstmEncDecModel final : public TrainableModel {
public:
    LstmEncDecModel(LstmConfig cfg, std::uint64_t init_seed);

    const LstmConfig& config() const { return cfg_; }

    ParamStore& params() override { return params_; }
    const ParamStore& params() const override { return params_; }
    std::string kind_name() const override { return "diffusion_lstm_encdec"; }
    core::Var velocity_tape(core::Tape& t, const BoundParams& p,
                            const data::ConditioningTuple& c,
                            const Eigen::Ref<const Eigen::ArrayXd>& x_tau, double tau,
                            bool train_mode, core::RngStream* dropout_rng,
                            const std::vector<core::Var>* shared_kernels) const override;

    Eigen::Index horizon() const override { return cfg_.horizon; }
    Eigen::ArrayXd velocity(const Eigen::Ref<const Eigen::ArrayXd>& x_tau, double tau,
                            const data::ConditioningTuple& c) const override;
    std::unique_ptr<diffusion::SamplerContext> make_context(
        const data::ConditioningTuple& c) const override;

private:
    LstmConfig cfg_;
    ParamStore params_;
    friend class LstmEncDecContext;
};

/// Decoder-only denoiser: one recurrent pass over the 372-step assembled
/// input; the diffusion-time embedding is added to the input features at the
/// window boundary (first noisy-target step); the last 8 outputs are used.
class LstmDecOnlyModel final : public TrainableModel {
public:
    LstmDecOnlyModel(LstmConfig cfg, std::uint64_t init_seed);

    const LstmConfig& config() const { return cfg_; }

    ParamStore& params() override { return params_; }
    const ParamStore& params() const override { return params_; }
    std::string kind_name() const override { return "diffusion_lstm_dec"; }
    core::Var velocity_tape(core::Tape& t, const BoundParams& p,
                            const data::ConditioningTuple& c,
                            const Eigen::Ref<const Eigen::ArrayXd>& x_tau, double tau,
                            bool train_mode, core::RngStream* dropout_rng,
                            const std::vector<core::Var>* shared_kernels) const override;

    Eigen::Index horizon() const override { return cfg_.horizon; }
    Eigen::ArrayXd velocity(const Eigen::Ref<const Eigen::ArrayXd>& x_tau, double tau,
                            const data::ConditioningTuple& c) const override;
    std::unique_ptr<diffusion::SamplerContext> make_context(
        const data::ConditioningTuple& c) const override;

private:
    LstmConfig cfg_;
    ParamStore params_;
    friend class LstmDecOnlyContext;
};

}  // namespace hydrodiff::models
