#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "hydrodiff/core/rng.hpp"
#include "hydrodiff/core/tape.hpp"
#include "hydrodiff/data/types.hpp"
#include "hydrodiff/diffusion/denoiser.hpp"
#include "hydrodiff/models/params.hpp"

namespace hydrodiff::models {

/// A denoiser whose forward pass can be recorded on a tape for training.
///
/// Models with expensive input-independent subgraphs (the SSM kernels) can
/// expose them through kernels_tape(); the trainer then evaluates them once
/// per optimizer step, passes the values into per-sample tapes as leaves,
/// and routes the accumulated kernel gradients back through the kernel tape.
class TrainableModel : public diffusion::Denoiser {
public:
    virtual ParamStore& params() = 0;
    virtual const ParamStore& params() const = 0;

    virtual std::string kind_name() const = 0;

    /// Optimizer group for a parameter: "default", "ssm_kernel" or "ssm_dt".
    virtual std::string param_group(const std::string& name) const {
        (void)name;
        return "default";
    }

    /// Velocity estimate as a tape variable (1 x L_f). When shared_kernels
    /// is given, those vars are used instead of building kernels in-graph.
    virtual core::Var velocity_tape(core::Tape& t, const BoundParams& p,
                                    const data::ConditioningTuple& c,
                                    const Eigen::Ref<const Eigen::ArrayXd>& x_tau, double tau,
                                    bool train_mode, core::RngStream* dropout_rng,
                                    const std::vector<core::Var>* shared_kernels) const = 0;

    /// Input-independent shared subgraph; empty if the model has none.
    virtual std::vector<core::Var> kernels_tape(core::Tape& t, const BoundParams& p) const {
        (void)t;
        (void)p;
        return {};
    }
};

}  // namespace hydrodiff::models
