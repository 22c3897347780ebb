#include "hydrodiff/models/s4dft.hpp"

#include <cmath>
#include <numbers>

#include "hydrodiff/core/errors.hpp"
#include "hydrodiff/core/fft.hpp"

namespace hydrodiff::models {

using core::Arr;
using core::Tape;
using core::Var;

void BackboneConfig::validate() const {
    if (d_model < 1 || d_state < 1 || n_layers < 1 || past_len < 1 || horizon < 1 ||
        future_len < 0 || n_forcings < 1 || n_statics < 0)
        throw ArgumentError("BackboneConfig: all sizes must be positive");
    if (horizon != future_len + 1)
        throw ArgumentError("BackboneConfig: horizon must equal future_len + 1");
    if (!(min_dt > 0 && max_dt >= min_dt)) throw ArgumentError("BackboneConfig: bad dt range");
    if (!(dropout >= 0 && dropout < 1)) throw ArgumentError("BackboneConfig: bad dropout");
}

ComplexSeq tune_frequencies(const ComplexSeq& base, double alpha_r, double alpha_i) {
    if (base.re.size() != base.im.size())
        throw ArgumentError("tune_frequencies: re/im length mismatch");
    return {alpha_r * base.re, alpha_i * base.im};
}

Discretized discretize(std::complex<double> lambda, double dt) {
    if (!(dt > 0)) throw ArgumentError("discretize: dt must be positive");
    const std::complex<double> abar = std::exp(lambda * dt);
    if (std::abs(lambda) < 1e-12) return {abar, {dt, 0.0}};
    return {abar, (abar - 1.0) / lambda};
}

Eigen::ArrayXXd ssm_kernel(const SsmLayerParams& p, Eigen::Index L) {
    if (L < 1) throw ArgumentError("ssm_kernel: L must be >= 1");
    const Eigen::Index n = p.lambda.re.size();
    const Eigen::Index H = p.log_dt.size();
    Eigen::ArrayXXd K(H, L);
    Eigen::ArrayXcd a(n), w(n), cur(n);
    for (Eigen::Index h = 0; h < H; ++h) {
        const double dt = std::exp(p.log_dt[h]);
        for (Eigen::Index j = 0; j < n; ++j) {
            const std::complex<double> lam(p.lambda.re[j], p.lambda.im[j]);
            const Discretized d = discretize(lam, dt);
            a[j] = d.abar;
            const std::complex<double> b(p.B.re[j], p.B.im[j]);
            const std::complex<double> c(p.C_re(j, h), p.C_im(j, h));
            w[j] = c * b * d.bbar_scale;
        }
        cur = w;
        for (Eigen::Index l = 0; l < L; ++l) {
            K(h, l) = 2.0 * cur.real().sum();
            cur *= a;
        }
    }
    if (!K.isFinite().all()) throw NumericError("ssm_kernel: non-finite kernel");
    return K;
}

Eigen::ArrayXd diffusion_time_embedding(double tau, int dim) {
    if (dim < 2 || dim % 2 != 0)
        throw ArgumentError("diffusion_time_embedding: dim must be even and >= 2");
    const int m = dim / 2;
    Eigen::ArrayXd out(dim);
    const double log_max = std::log(1e4);
    for (int k = 0; k < m; ++k) {
        const double w = std::exp(log_max * static_cast<double>(k) / static_cast<double>(m));
        out[k] = std::sin(w * tau);
        out[m + k] = std::cos(w * tau);
    }
    return out;
}

Eigen::ArrayXXd assemble_input(const data::ConditioningTuple& c,
                               const Eigen::Ref<const Eigen::ArrayXd>& x_tau) {
    const Eigen::Index Lp = c.past.rows();
    const Eigen::Index Lff = c.future.rows();
    const Eigen::Index dz = c.past.cols();
    const Eigen::Index ds = c.statics.size();
    if (c.future.cols() != dz) throw ArgumentError("assemble_input: forcing width mismatch");
    if (x_tau.size() != Lff + 1)
        throw ArgumentError("assemble_input: x_tau length " + std::to_string(x_tau.size()) +
                            " != horizon " + std::to_string(Lff + 1));

    const Eigen::Index L = Lp + Lff;
    Eigen::ArrayXXd out = Eigen::ArrayXXd::Zero(L, dz + ds + 1);
    out.block(0, 0, Lp, dz) = c.past;
    out.block(Lp, 0, Lff, dz) = c.future;
    out.block(0, dz, L, ds) = c.statics.transpose().replicate(L, 1);
    out.col(dz + ds).tail(Lff + 1) = x_tau;
    return out;
}

Var s4dft_layer_tape(Tape& t, Var x, const S4dftLayerVars& p, Eigen::Index horizon,
                     const LayerOptions& opt) {
    const Eigen::Index H = t.val(x).rows();
    const Eigen::Index L = t.val(x).cols();
    Var h = t.layernorm_cols(x, p.ln_gain, p.ln_bias);
    Var z = t.causal_conv_rows(h, p.kernel);
    z = t.add(z, t.mul_col_broadcast(h, p.D));
    z = t.add_col_broadcast_block(z, p.tau_bias, L - horizon, horizon);
    Var act = opt.identity_activation ? z : t.gelu(z);
    Var g = act;
    if (!opt.gate_open) {
        Var m = t.add_col_broadcast(t.matmul(p.glu_W, act), p.glu_b);
        Var a = t.slice_rows(m, 0, H);
        Var b = t.slice_rows(m, H, H);
        g = t.mul(a, t.sigmoid(b));
    }
    if (opt.dropout_mask) g = t.mul(g, t.constant(*opt.dropout_mask));
    return t.add(x, g);
}

namespace {

std::string layer_prefix(int i) { return "layer" + std::to_string(i) + "."; }

Arr col_from(const Eigen::ArrayXd& v) {
    return Eigen::Map<const Arr>(v.data(), v.size(), 1);
}

}  // namespace

S4dftModel::S4dftModel(BackboneConfig cfg, std::uint64_t init_seed) : cfg_(cfg) {
    cfg_.validate();
    const int H = cfg_.d_model;
    const int n = cfg_.d_state;
    const int din = cfg_.input_dim();
    const int emb = cfg_.tau_embed_dim();
    core::RngStream root(init_seed);

    auto gauss = [](core::RngStream s, Eigen::Index r, Eigen::Index c, double scale) {
        return Arr(s.gaussian_matrix(r, c) * scale);
    };

    params_.add("in_proj.W", gauss(root.child("in_proj.W"), H, din, 1.0 / std::sqrt(double(din))));
    params_.add("in_proj.b", Arr::Zero(H, 1));

    const double theta0 = std::log(std::exp(0.5) - 1.0);  // softplus(theta0) = 1/2
    for (int i = 0; i < cfg_.n_layers; ++i) {
        const std::string pre = layer_prefix(i);
        core::RngStream lr = root.child(pre);

        params_.add(pre + "theta_re", Arr::Constant(n, 1, theta0));
        Arr im(n, 1);
        for (int j = 0; j < n; ++j) im(j, 0) = std::numbers::pi * j;  // S4D-Lin
        params_.add(pre + "im_base", im);

        double ar = 1.0, ai = 1.0;
        if (!cfg_.identity_freq_init) {
            core::RngStream s = lr.child("alpha");
            ar = (1.0 - s.uniform()) * cfg_.cfr;  // U(0, cfr]
            ai = (1.0 - s.uniform()) * cfg_.cfi;
        }
        params_.add(pre + "log_alpha_r", Arr::Constant(1, 1, std::log(ar)));
        params_.add(pre + "alpha_i", Arr::Constant(1, 1, ai));

        params_.add(pre + "B_re", Arr::Ones(n, 1));
        params_.add(pre + "B_im", Arr::Zero(n, 1));
        const double cstd = 1.0 / std::sqrt(2.0);
        params_.add(pre + "C_re", gauss(lr.child("C_re"), n, H, cstd));
        params_.add(pre + "C_im", gauss(lr.child("C_im"), n, H, cstd));
        params_.add(pre + "D", Arr::Ones(H, 1));

        Arr log_dt(H, 1);
        core::RngStream s = lr.child("dt");
        const double lo = std::log(cfg_.min_dt), hi = std::log(cfg_.max_dt);
        for (int h = 0; h < H; ++h) log_dt(h, 0) = lo + (hi - lo) * s.uniform();
        params_.add(pre + "log_dt", log_dt);

        params_.add(pre + "ln_gain", Arr::Ones(H, 1));
        params_.add(pre + "ln_bias", Arr::Zero(H, 1));
        params_.add(pre + "tau_proj.W", gauss(lr.child("tau_proj"), H, emb, 1.0 / std::sqrt(double(emb))));
        params_.add(pre + "tau_proj.b", Arr::Zero(H, 1));
        params_.add(pre + "glu.W", gauss(lr.child("glu"), 2 * H, H, 1.0 / std::sqrt(double(H))));
        params_.add(pre + "glu.b", Arr::Zero(2 * H, 1));
    }

    params_.add("out_proj.W", gauss(root.child("out_proj.W"), 1, H, 1.0 / std::sqrt(double(H))));
    params_.add("out_proj.b", Arr::Zero(1, 1));
}

std::string S4dftModel::param_group(const std::string& name) const {
    const auto has = [&](const char* suffix) {
        const std::string s(suffix);
        return name.size() >= s.size() && name.compare(name.size() - s.size(), s.size(), s) == 0;
    };
    if (has(".theta_re") || has(".im_base") || has(".log_alpha_r") || has(".alpha_i") ||
        has(".B_re") || has(".B_im") || has(".C_re") || has(".C_im"))
        return "ssm_kernel";
    if (has(".log_dt")) return "ssm_dt";
    return "default";
}

SsmLayerParams S4dftModel::layer_params(int layer) const {
    const std::string pre = layer_prefix(layer);
    SsmLayerParams p;
    const Arr& theta = params_.at(pre + "theta_re");
    const double ar = std::exp(params_.at(pre + "log_alpha_r")(0, 0));
    const double ai = params_.at(pre + "alpha_i")(0, 0);
    ComplexSeq base;
    base.re = -theta.col(0).unaryExpr(
        [](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); });
    base.im = params_.at(pre + "im_base").col(0);
    p.lambda = tune_frequencies(base, ar, ai);
    p.B = {params_.at(pre + "B_re").col(0), params_.at(pre + "B_im").col(0)};
    p.C_re = params_.at(pre + "C_re");
    p.C_im = params_.at(pre + "C_im");
    p.D = params_.at(pre + "D").col(0);
    p.log_dt = params_.at(pre + "log_dt").col(0);
    return p;
}

std::vector<Eigen::ArrayXXd> S4dftModel::kernels_eval() const {
    std::vector<Eigen::ArrayXXd> ks;
    ks.reserve(cfg_.n_layers);
    for (int i = 0; i < cfg_.n_layers; ++i) ks.push_back(ssm_kernel(layer_params(i), cfg_.seq_len()));
    return ks;
}

std::vector<Var> S4dftModel::kernels_tape(Tape& t, const BoundParams& p) const {
    const int H = cfg_.d_model;
    const Eigen::Index L = cfg_.seq_len();
    Eigen::RowVectorXd ramp(L);
    for (Eigen::Index l = 0; l < L; ++l) ramp[l] = static_cast<double>(l);

    std::vector<Var> kernels;
    kernels.reserve(cfg_.n_layers);
    for (int i = 0; i < cfg_.n_layers; ++i) {
        const std::string pre = layer_prefix(i);
        Var re_base = t.neg(t.softplus(p.at(pre + "theta_re")));          // n x 1, < 0
        Var alpha_r = t.exp_(p.at(pre + "log_alpha_r"));                  // 1 x 1, > 0
        Var re_t = t.mul_scalar_var(re_base, alpha_r);                    // tuned Re(lambda)
        Var im_t = t.mul_scalar_var(p.at(pre + "im_base"), p.at(pre + "alpha_i"));
        Var den = t.add(t.mul(re_t, re_t), t.mul(im_t, im_t));            // |lambda|^2
        Var B_re = p.at(pre + "B_re"), B_im = p.at(pre + "B_im");
        Var C_re = p.at(pre + "C_re"), C_im = p.at(pre + "C_im");
        Var log_dt = p.at(pre + "log_dt");

        std::vector<Var> rows;
        rows.reserve(H);
        for (int h = 0; h < H; ++h) {
            Var dt = t.exp_(t.slice_rows(log_dt, h, 1));                  // 1 x 1
            Var re_l = t.mul_scalar_var(re_t, dt);                        // lambda_re * dt
            Var im_l = t.mul_scalar_var(im_t, dt);
            // abar = exp(lambda dt): one step of the power series below at l=1
            Var er = t.exp_(re_l);
            Var are = t.mul(er, t.cos_(im_l));
            Var aim = t.mul(er, t.sin_(im_l));
            // bbar_scale = (abar - 1)/lambda
            Var arm1 = t.add_scalar(are, -1.0);
            Var bs_re = t.div(t.add(t.mul(arm1, re_t), t.mul(aim, im_t)), den);
            Var bs_im = t.div(t.sub(t.mul(aim, re_t), t.mul(arm1, im_t)), den);
            // B * bbar_scale
            Var bt_re = t.sub(t.mul(B_re, bs_re), t.mul(B_im, bs_im));
            Var bt_im = t.add(t.mul(B_re, bs_im), t.mul(B_im, bs_re));
            // W = C_h * (B * bbar_scale)
            Var c_re = t.slice_cols(C_re, h, 1);
            Var c_im = t.slice_cols(C_im, h, 1);
            Var w_re = t.sub(t.mul(c_re, bt_re), t.mul(c_im, bt_im));
            Var w_im = t.add(t.mul(c_re, bt_im), t.mul(c_im, bt_re));
            // P(j,l) = abar_j^l = exp(lambda_j dt l)
            Var re_arg = t.outer_const_row(re_l, ramp);                   // n x L
            Var im_arg = t.outer_const_row(im_l, ramp);
            Var e = t.exp_(re_arg);
            Var pc = t.mul(e, t.cos_(im_arg));
            Var ps = t.mul(e, t.sin_(im_arg));
            Var contrib = t.sub(t.mul_col_broadcast(pc, w_re), t.mul_col_broadcast(ps, w_im));
            rows.push_back(t.scale(t.colsum(contrib), 2.0));              // 1 x L
        }
        kernels.push_back(t.concat_rows(rows));
    }
    return kernels;
}

Var S4dftModel::velocity_tape(Tape& t, const BoundParams& p, const data::ConditioningTuple& c,
                              const Eigen::Ref<const Eigen::ArrayXd>& x_tau, double tau,
                              bool train_mode, core::RngStream* dropout_rng,
                              const std::vector<Var>* shared_kernels) const {
    const Eigen::Index L = cfg_.seq_len();
    const Eigen::Index H = cfg_.d_model;

    Var X = t.constant(assemble_input(c, x_tau).transpose());  // din x L
    Var h = t.add_col_broadcast(t.matmul(p.at("in_proj.W"), X), p.at("in_proj.b"));

    Var emb = t.constant(col_from(diffusion_time_embedding(tau, cfg_.tau_embed_dim())));

    std::vector<Var> kernels;
    const std::vector<Var>* ks = shared_kernels;
    if (!ks) {
        kernels = kernels_tape(t, p);
        ks = &kernels;
    }

    for (int i = 0; i < cfg_.n_layers; ++i) {
        const std::string pre = layer_prefix(i);
        S4dftLayerVars lv;
        lv.kernel = (*ks)[static_cast<std::size_t>(i)];
        lv.ln_gain = p.at(pre + "ln_gain");
        lv.ln_bias = p.at(pre + "ln_bias");
        lv.D = p.at(pre + "D");
        lv.tau_bias = t.add(t.matmul(p.at(pre + "tau_proj.W"), emb), p.at(pre + "tau_proj.b"));
        lv.glu_W = p.at(pre + "glu.W");
        lv.glu_b = p.at(pre + "glu.b");

        LayerOptions opt;
        Arr mask;
        if (train_mode && cfg_.dropout > 0 && dropout_rng) {
            mask = Arr(H, L);
            const double keep = 1.0 - cfg_.dropout;
            for (Eigen::Index jc = 0; jc < L; ++jc)
                for (Eigen::Index ir = 0; ir < H; ++ir)
                    mask(ir, jc) = dropout_rng->uniform() < keep ? 1.0 / keep : 0.0;
            opt.dropout_mask = &mask;
        }
        h = s4dft_layer_tape(t, h, lv, cfg_.horizon, opt);
    }

    Var y = t.add_col_broadcast(t.matmul(p.at("out_proj.W"), h), p.at("out_proj.b"));  // 1 x L
    return t.slice_cols(y, L - cfg_.horizon, cfg_.horizon);
}

Eigen::ArrayXd S4dftModel::velocity(const Eigen::Ref<const Eigen::ArrayXd>& x_tau, double tau,
                                    const data::ConditioningTuple& c) const {
    Tape t;
    BoundParams p = bind_params(t, params_, /*as_leaves=*/false);
    Var v = velocity_tape(t, p, c, x_tau, tau, /*train_mode=*/false, nullptr, nullptr);
    return t.val(v).row(0).transpose();
}

// ---------------------------------------------------------------------------
// Incremental sampling context.
//
// Everything left of the forecast window is independent of (x_tau, tau): the
// noisy channel only occupies the final L_f positions and the tau bias is
// only added there, so with causal convolutions the first L-L_f columns of
// every layer are fixed per conditioning. We run them once and per query
// recompute just the final L_f columns.
// ---------------------------------------------------------------------------

class S4dftContext final : public diffusion::SamplerContext {
public:
    S4dftContext(const S4dftModel& m, const data::ConditioningTuple& c) : cfg_(m.config()) {
        const Eigen::Index L = cfg_.seq_len();
        const Eigen::Index Lf = cfg_.horizon;
        const Eigen::Index P = L - Lf;  // fixed prefix length
        const auto& ps = m.params();

        kernels_ = m.kernels_eval();
        in_W_ = ps.at("in_proj.W");
        out_W_ = ps.at("out_proj.W");
        out_b_ = ps.at("out_proj.b")(0, 0);

        Eigen::ArrayXXd X =
            assemble_input(c, Eigen::ArrayXd::Zero(Lf)).transpose();  // din x L
        Eigen::ArrayXXd h_base =
            ((in_W_.matrix() * X.matrix()).colwise() + ps.at("in_proj.b").matrix().col(0)).array();
        w_target_ = in_W_.col(in_W_.cols() - 1);
        suffix_base_ = h_base.rightCols(Lf);

        Eigen::ArrayXXd pref = h_base.leftCols(P);  // layer input, prefix columns
        layers_.resize(static_cast<std::size_t>(cfg_.n_layers));
        for (int i = 0; i < cfg_.n_layers; ++i) {
            const std::string pre = "layer" + std::to_string(i) + ".";
            LayerState& st = layers_[static_cast<std::size_t>(i)];
            st.ln_gain = ps.at(pre + "ln_gain").col(0);
            st.ln_bias = ps.at(pre + "ln_bias").col(0);
            st.D = ps.at(pre + "D").col(0);
            st.tau_W = ps.at(pre + "tau_proj.W");
            st.tau_b = ps.at(pre + "tau_proj.b").col(0);
            st.glu_W = ps.at(pre + "glu.W");
            st.glu_b = ps.at(pre + "glu.b").col(0);

            const Eigen::ArrayXXd& K = kernels_[static_cast<std::size_t>(i)];
            Eigen::ArrayXXd ln = layernorm_plain(pref, st.ln_gain, st.ln_bias);

            // One FFT conv of the zero-suffixed prefix yields both the
            // prefix outputs and the prefix->suffix spill-over.
            Eigen::ArrayXXd padded = Eigen::ArrayXXd::Zero(ln.rows(), L);
            padded.leftCols(P) = ln;
            Eigen::ArrayXXd conv(ln.rows(), L);
            for (Eigen::Index hh = 0; hh < ln.rows(); ++hh)
                conv.row(hh) =
                    core::fft_linear_convolve(padded.row(hh).transpose(), K.row(hh).transpose())
                        .transpose();
            st.suffix_spill = conv.rightCols(Lf);

            // finish the prefix forward for the next layer's input
            Eigen::ArrayXXd z = conv.leftCols(P) + (ln.colwise() * st.D);
            Eigen::ArrayXXd act = gelu_plain(z);
            Eigen::ArrayXXd mix =
                ((st.glu_W.matrix() * act.matrix()).colwise() + st.glu_b.matrix()).array();
            const Eigen::Index Hn = ln.rows();
            Eigen::ArrayXXd gated =
                mix.topRows(Hn) * mix.bottomRows(Hn).unaryExpr(
                                      [](double x) { return 1.0 / (1.0 + std::exp(-x)); });
            pref += gated;
        }
    }

    Eigen::ArrayXd velocity(const Eigen::Ref<const Eigen::ArrayXd>& x_tau,
                            double tau) const override {
        const Eigen::Index Lf = cfg_.horizon;
        const Eigen::Index Hn = cfg_.d_model;
        Eigen::ArrayXXd suf = suffix_base_;
        for (Eigen::Index j = 0; j < Lf; ++j) suf.col(j) += w_target_ * x_tau[j];

        const Eigen::ArrayXd emb = diffusion_time_embedding(tau, cfg_.tau_embed_dim());
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            const LayerState& st = layers_[i];
            const Eigen::ArrayXXd& K = kernels_[i];
            Eigen::ArrayXXd ln = layernorm_plain(suf, st.ln_gain, st.ln_bias);
            Eigen::ArrayXXd z = st.suffix_spill;
            for (Eigen::Index jc = 0; jc < Lf; ++jc)
                for (Eigen::Index s = 0; s <= jc; ++s) z.col(jc) += K.col(jc - s) * ln.col(s);
            z += ln.colwise() * st.D;
            const Eigen::ArrayXd bias = (st.tau_W.matrix() * emb.matrix()).array() + st.tau_b;
            z.colwise() += bias;
            Eigen::ArrayXXd act = gelu_plain(z);
            Eigen::ArrayXXd mix =
                ((st.glu_W.matrix() * act.matrix()).colwise() + st.glu_b.matrix()).array();
            suf += (mix.topRows(Hn) * mix.bottomRows(Hn).unaryExpr([](double x) {
                return 1.0 / (1.0 + std::exp(-x));
            })).eval();
        }
        Eigen::ArrayXd v = (out_W_.matrix() * suf.matrix()).row(0).transpose().array() + out_b_;
        return v;
    }

private:
    struct LayerState {
        Eigen::ArrayXd ln_gain, ln_bias, D, tau_b, glu_b;
        Eigen::ArrayXXd tau_W, glu_W;
        Eigen::ArrayXXd suffix_spill;  // H x L_f prefix contribution to the window
    };

    static Eigen::ArrayXXd layernorm_plain(const Eigen::ArrayXXd& x, const Eigen::ArrayXd& gain,
                                           const Eigen::ArrayXd& bias, double eps = 1e-5) {
        const double n = static_cast<double>(x.rows());
        Eigen::RowVectorXd mu = x.matrix().colwise().mean();
        Eigen::ArrayXXd centered = x.rowwise() - mu.array();
        Eigen::RowVectorXd istd =
            (centered.square().colwise().sum() / n + eps).rsqrt().matrix();
        return ((centered.rowwise() * istd.array()).colwise() * gain).colwise() + bias;
    }

    static Eigen::ArrayXXd gelu_plain(const Eigen::ArrayXXd& x) {
        return x.unaryExpr(
            [](double v) { return 0.5 * v * (1.0 + std::erf(v * 0.70710678118654752440)); });
    }

    BackboneConfig cfg_;
    std::vector<Eigen::ArrayXXd> kernels_;
    Eigen::ArrayXXd in_W_, out_W_;
    double out_b_;
    Eigen::ArrayXd w_target_;
    Eigen::ArrayXXd suffix_base_;  // H x L_f input-projection columns at x_tau = 0
    std::vector<LayerState> layers_;
};

std::unique_ptr<diffusion::SamplerContext> S4dftModel::make_context(
    const data::ConditioningTuple& c) const {
    return std::make_unique<S4dftContext>(*this, c);
}

}  // namespace hydrodiff::models
