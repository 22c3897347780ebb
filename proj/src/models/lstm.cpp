#include "hydrodiff/models/lstm.hpp"

#include <cmath>

#include "hydrodiff/core/errors.hpp"
#include "hydrodiff/models/s4dft.hpp"  // assemble_input, diffusion_time_embedding

namespace hydrodiff::models {

using core::Arr;
using core::Tape;
using core::Var;

void LstmConfig::validate() const {
    if (hidden < 1 || past_len < 1 || horizon < 1 || future_len < 0 || n_forcings < 1)
        throw ArgumentError("LstmConfig: all sizes must be positive");
    if (horizon != future_len + 1)
        throw ArgumentError("LstmConfig: horizon must equal future_len + 1");
    if (!(dropout >= 0 && dropout < 1)) throw ArgumentError("LstmConfig: bad dropout");
}

namespace {

inline Eigen::ArrayXd sigm(const Eigen::ArrayXd& x) {
    return x.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

Arr col_from(const Eigen::ArrayXd& v) { return Eigen::Map<const Arr>(v.data(), v.size(), 1); }

}  // namespace

void lstm_cell(const Eigen::Ref<const Eigen::ArrayXd>& x,
               const Eigen::Ref<const Eigen::ArrayXd>& h_prev,
               const Eigen::Ref<const Eigen::ArrayXd>& c_prev,
               const Eigen::Ref<const Eigen::ArrayXXd>& W,
               const Eigen::Ref<const Eigen::ArrayXXd>& R,
               const Eigen::Ref<const Eigen::ArrayXd>& b, Eigen::ArrayXd& h_out,
               Eigen::ArrayXd& c_out) {
    const Eigen::Index H = h_prev.size();
    if (W.rows() != 4 * H || R.rows() != 4 * H || R.cols() != H || b.size() != 4 * H ||
        W.cols() != x.size() || c_prev.size() != H)
        throw ArgumentError("lstm_cell: inconsistent gate dimensions");
    Eigen::ArrayXd gates =
        (W.matrix() * x.matrix()).array() + (R.matrix() * h_prev.matrix()).array() + b;
    const Eigen::ArrayXd i = sigm(gates.segment(0, H));
    const Eigen::ArrayXd f = sigm(gates.segment(H, H));
    const Eigen::ArrayXd g = gates.segment(2 * H, H).tanh();
    const Eigen::ArrayXd o = sigm(gates.segment(3 * H, H));
    c_out = f * c_prev + i * g;
    h_out = o * c_out.tanh();
}

std::pair<Var, Var> lstm_cell_tape(Tape& t, Var x, Var h, Var c, const LstmCellVars& p) {
    const Eigen::Index H = t.val(h).rows();
    Var gates = t.add(t.add(t.matmul(p.W, x), t.matmul(p.R, h)), p.b);
    Var i = t.sigmoid(t.slice_rows(gates, 0, H));
    Var f = t.sigmoid(t.slice_rows(gates, H, H));
    Var g = t.tanh_(t.slice_rows(gates, 2 * H, H));
    Var o = t.sigmoid(t.slice_rows(gates, 3 * H, H));
    Var c_new = t.add(t.mul(f, c), t.mul(i, g));
    Var h_new = t.mul(o, t.tanh_(c_new));
    return {h_new, c_new};
}

namespace {

void init_lstm_block(ParamStore& ps, const std::string& prefix, int in_dim, int H,
                     double forget_bias, core::RngStream rng) {
    const double ws = 1.0 / std::sqrt(static_cast<double>(in_dim));
    const double rs = 1.0 / std::sqrt(static_cast<double>(H));
    ps.add(prefix + ".W", Arr(rng.child("W").gaussian_matrix(4 * H, in_dim) * ws));
    ps.add(prefix + ".R", Arr(rng.child("R").gaussian_matrix(4 * H, H) * rs));
    Arr b = Arr::Zero(4 * H, 1);
    b.middleRows(H, H).setConstant(forget_bias);
    ps.add(prefix + ".b", b);
}

// Forcing vector for decoder step s (0 = Day-0): Day-0 uses the last past
// row, later steps the corresponding future row.
Eigen::ArrayXd step_forcing(const data::ConditioningTuple& c, int s) {
    if (s == 0) return c.past.row(c.past.rows() - 1).transpose();
    return c.future.row(s - 1).transpose();
}

Arr dropout_mask(core::RngStream* rng, Eigen::Index n, double p) {
    Arr m(n, 1);
    const double keep = 1.0 - p;
    for (Eigen::Index i = 0; i < n; ++i) m(i, 0) = rng->uniform() < keep ? 1.0 / keep : 0.0;
    return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// Encoder-decoder
// ---------------------------------------------------------------------------

LstmEncDecModel::LstmEncDecModel(LstmConfig cfg, std::uint64_t init_seed) : cfg_(cfg) {
    cfg_.validate();
    const int H = cfg_.hidden;
    const int emb = cfg_.tau_embed_dim();
    core::RngStream root(init_seed);
    init_lstm_block(params_, "enc", cfg_.enc_input_dim(), H, cfg_.forget_gate_bias,
                    root.child("enc"));
    init_lstm_block(params_, "dec", cfg_.dec_input_dim(), H, cfg_.forget_gate_bias,
                    root.child("dec"));
    const double es = 1.0 / std::sqrt(static_cast<double>(emb));
    params_.add("tau_h.W", Arr(root.child("tau_h").gaussian_matrix(H, emb) * es));
    params_.add("tau_h.b", Arr::Zero(H, 1));
    params_.add("tau_c.W", Arr(root.child("tau_c").gaussian_matrix(H, emb) * es));
    params_.add("tau_c.b", Arr::Zero(H, 1));
    const double hs = 1.0 / std::sqrt(static_cast<double>(H));
    params_.add("head.W", Arr(root.child("head").gaussian_matrix(1, H) * hs));
    params_.add("head.b", Arr::Zero(1, 1));
}

Var LstmEncDecModel::velocity_tape(Tape& t, const BoundParams& p,
                                   const data::ConditioningTuple& c,
                                   const Eigen::Ref<const Eigen::ArrayXd>& x_tau, double tau,
                                   bool train_mode, core::RngStream* dropout_rng,
                                   const std::vector<Var>* shared_kernels) const {
    (void)shared_kernels;
    const int H = cfg_.hidden;
    if (c.past.rows() != cfg_.past_len || c.future.rows() != cfg_.future_len ||
        x_tau.size() != cfg_.horizon)
        throw ArgumentError("LstmEncDecModel: conditioning shape mismatch");

    LstmCellVars enc{p.at("enc.W"), p.at("enc.R"), p.at("enc.b")};
    LstmCellVars dec{p.at("dec.W"), p.at("dec.R"), p.at("dec.b")};

    Var h = t.constant(Arr::Zero(H, 1));
    Var cc = t.constant(Arr::Zero(H, 1));
    Eigen::ArrayXd xin(cfg_.enc_input_dim());
    for (int s = 0; s < cfg_.past_len; ++s) {
        xin.head(cfg_.n_forcings) = c.past.row(s).transpose();
        xin.tail(cfg_.n_statics) = c.statics;
        std::tie(h, cc) = lstm_cell_tape(t, t.constant(col_from(xin)), h, cc, enc);
    }

    Var emb = t.constant(col_from(diffusion_time_embedding(tau, cfg_.tau_embed_dim())));
    h = t.add(h, t.add(t.matmul(p.at("tau_h.W"), emb), p.at("tau_h.b")));
    cc = t.add(cc, t.add(t.matmul(p.at("tau_c.W"), emb), p.at("tau_c.b")));

    std::vector<Var> outs;
    outs.reserve(cfg_.horizon);
    Eigen::ArrayXd din(cfg_.dec_input_dim());
    for (int s = 0; s < cfg_.horizon; ++s) {
        din.head(cfg_.n_forcings) = step_forcing(c, s);
        din.segment(cfg_.n_forcings, cfg_.n_statics) = c.statics;
        din[cfg_.dec_input_dim() - 1] = x_tau[s];
        std::tie(h, cc) = lstm_cell_tape(t, t.constant(col_from(din)), h, cc, dec);
        Var ho = h;
        if (train_mode && cfg_.dropout > 0 && dropout_rng)
            ho = t.mul(ho, t.constant(dropout_mask(dropout_rng, H, cfg_.dropout)));
        outs.push_back(t.add(t.matmul(p.at("head.W"), ho), p.at("head.b")));
    }
    return t.concat_rows(outs);  // L_f x 1
}

Eigen::ArrayXd LstmEncDecModel::velocity(const Eigen::Ref<const Eigen::ArrayXd>& x_tau,
                                         double tau, const data::ConditioningTuple& c) const {
    Tape t;
    BoundParams p = bind_params(t, params_, false);
    Var v = velocity_tape(t, p, c, x_tau, tau, false, nullptr, nullptr);
    return t.val(v).col(0);
}

class LstmEncDecContext final : public diffusion::SamplerContext {
public:
    LstmEncDecContext(const LstmEncDecModel& m, const data::ConditioningTuple& c)
        : cfg_(m.config()), c_(c) {
        const auto& ps = m.params();
        encW_ = ps.at("enc.W");
        encR_ = ps.at("enc.R");
        encb_ = ps.at("enc.b").col(0);
        decW_ = ps.at("dec.W");
        decR_ = ps.at("dec.R");
        decb_ = ps.at("dec.b").col(0);
        tauhW_ = ps.at("tau_h.W");
        tauhb_ = ps.at("tau_h.b").col(0);
        taucW_ = ps.at("tau_c.W");
        taucb_ = ps.at("tau_c.b").col(0);
        headW_ = ps.at("head.W");
        headb_ = ps.at("head.b")(0, 0);

        const int H = cfg_.hidden;
        h_enc_ = Eigen::ArrayXd::Zero(H);
        c_enc_ = Eigen::ArrayXd::Zero(H);
        Eigen::ArrayXd xin(cfg_.enc_input_dim()), hn, cn;
        for (int s = 0; s < cfg_.past_len; ++s) {
            xin.head(cfg_.n_forcings) = c.past.row(s).transpose();
            xin.tail(cfg_.n_statics) = c.statics;
            lstm_cell(xin, h_enc_, c_enc_, encW_, encR_, encb_, hn, cn);
            h_enc_ = hn;
            c_enc_ = cn;
        }
    }

    Eigen::ArrayXd velocity(const Eigen::Ref<const Eigen::ArrayXd>& x_tau,
                            double tau) const override {
        const Eigen::ArrayXd emb = diffusion_time_embedding(tau, cfg_.tau_embed_dim());
        Eigen::ArrayXd h = h_enc_ + (tauhW_.matrix() * emb.matrix()).array() + tauhb_;
        Eigen::ArrayXd c = c_enc_ + (taucW_.matrix() * emb.matrix()).array() + taucb_;
        Eigen::ArrayXd out(cfg_.horizon), din(cfg_.dec_input_dim()), hn, cn;
        for (int s = 0; s < cfg_.horizon; ++s) {
            din.head(cfg_.n_forcings) = step_forcing(c_, s);
            din.segment(cfg_.n_forcings, cfg_.n_statics) = c_.statics;
            din[cfg_.dec_input_dim() - 1] = x_tau[s];
            lstm_cell(din, h, c, decW_, decR_, decb_, hn, cn);
            h = hn;
            c = cn;
            out[s] = (headW_.matrix() * h.matrix())(0, 0) + headb_;
        }
        return out;
    }

private:
    LstmConfig cfg_;
    data::ConditioningTuple c_;
    Eigen::ArrayXXd encW_, encR_, decW_, decR_, tauhW_, taucW_, headW_;
    Eigen::ArrayXd encb_, decb_, tauhb_, taucb_;
    double headb_;
    Eigen::ArrayXd h_enc_, c_enc_;
};

std::unique_ptr<diffusion::SamplerContext> LstmEncDecModel::make_context(
    const data::ConditioningTuple& c) const {
    return std::make_unique<LstmEncDecContext>(*this, c);
}

// ---------------------------------------------------------------------------
// Decoder-only
// ---------------------------------------------------------------------------

LstmDecOnlyModel::LstmDecOnlyModel(LstmConfig cfg, std::uint64_t init_seed) : cfg_(cfg) {
    cfg_.validate();
    const int H = cfg_.hidden;
    const int din = cfg_.dec_input_dim();
    const int emb = cfg_.tau_embed_dim();
    core::RngStream root(init_seed);
    init_lstm_block(params_, "dec", din, H, cfg_.forget_gate_bias, root.child("dec"));
    const double es = 1.0 / std::sqrt(static_cast<double>(emb));
    params_.add("tau_in.W", Arr(root.child("tau_in").gaussian_matrix(din, emb) * es));
    params_.add("tau_in.b", Arr::Zero(din, 1));
    const double hs = 1.0 / std::sqrt(static_cast<double>(H));
    params_.add("head.W", Arr(root.child("head").gaussian_matrix(1, H) * hs));
    params_.add("head.b", Arr::Zero(1, 1));
}

Var LstmDecOnlyModel::velocity_tape(Tape& t, const BoundParams& p,
                                    const data::ConditioningTuple& c,
                                    const Eigen::Ref<const Eigen::ArrayXd>& x_tau, double tau,
                                    bool train_mode, core::RngStream* dropout_rng,
                                    const std::vector<Var>* shared_kernels) const {
    (void)shared_kernels;
    const int H = cfg_.hidden;
    const Eigen::Index L = cfg_.seq_len();
    const Eigen::Index boundary = cfg_.past_len - 1;  // first noisy-target step (Day-0)

    const Eigen::ArrayXXd X = assemble_input(c, x_tau);  // L x din
    LstmCellVars cell{p.at("dec.W"), p.at("dec.R"), p.at("dec.b")};
    Var emb = t.constant(col_from(diffusion_time_embedding(tau, cfg_.tau_embed_dim())));
    Var tau_in = t.add(t.matmul(p.at("tau_in.W"), emb), p.at("tau_in.b"));

    Var h = t.constant(Arr::Zero(H, 1));
    Var cc = t.constant(Arr::Zero(H, 1));
    std::vector<Var> outs;
    outs.reserve(cfg_.horizon);
    for (Eigen::Index s = 0; s < L; ++s) {
        Var x = t.constant(Arr(X.row(s).transpose()));
        if (s == boundary) x = t.add(x, tau_in);
        std::tie(h, cc) = lstm_cell_tape(t, x, h, cc, cell);
        if (s >= boundary) {
            Var ho = h;
            if (train_mode && cfg_.dropout > 0 && dropout_rng)
                ho = t.mul(ho, t.constant(dropout_mask(dropout_rng, H, cfg_.dropout)));
            outs.push_back(t.add(t.matmul(p.at("head.W"), ho), p.at("head.b")));
        }
    }
    return t.concat_rows(outs);  // L_f x 1
}

Eigen::ArrayXd LstmDecOnlyModel::velocity(const Eigen::Ref<const Eigen::ArrayXd>& x_tau,
                                          double tau, const data::ConditioningTuple& c) const {
    Tape t;
    BoundParams p = bind_params(t, params_, false);
    Var v = velocity_tape(t, p, c, x_tau, tau, false, nullptr, nullptr);
    return t.val(v).col(0);
}

class LstmDecOnlyContext final : public diffusion::SamplerContext {
public:
    LstmDecOnlyContext(const LstmDecOnlyModel& m, const data::ConditioningTuple& c)
        : cfg_(m.config()) {
        const auto& ps = m.params();
        W_ = ps.at("dec.W");
        R_ = ps.at("dec.R");
        b_ = ps.at("dec.b").col(0);
        tauW_ = ps.at("tau_in.W");
        taub_ = ps.at("tau_in.b").col(0);
        headW_ = ps.at("head.W");
        headb_ = ps.at("head.b")(0, 0);

        X_ = assemble_input(c, Eigen::ArrayXd::Zero(cfg_.horizon));  // L x din
        const int H = cfg_.hidden;
        h0_ = Eigen::ArrayXd::Zero(H);
        c0_ = Eigen::ArrayXd::Zero(H);
        Eigen::ArrayXd hn, cn;
        for (Eigen::Index s = 0; s + 1 < cfg_.past_len; ++s) {  // steps before the boundary
            Eigen::ArrayXd x = X_.row(s).transpose();
            lstm_cell(x, h0_, c0_, W_, R_, b_, hn, cn);
            h0_ = hn;
            c0_ = cn;
        }
    }

    Eigen::ArrayXd velocity(const Eigen::Ref<const Eigen::ArrayXd>& x_tau,
                            double tau) const override {
        const Eigen::Index boundary = cfg_.past_len - 1;
        const Eigen::ArrayXd emb = diffusion_time_embedding(tau, cfg_.tau_embed_dim());
        const Eigen::ArrayXd tau_add = (tauW_.matrix() * emb.matrix()).array() + taub_;
        Eigen::ArrayXd h = h0_, c = c0_, hn, cn;
        Eigen::ArrayXd out(cfg_.horizon);
        for (int s = 0; s < cfg_.horizon; ++s) {
            Eigen::ArrayXd x = X_.row(boundary + s).transpose();
            x[x.size() - 1] = x_tau[s];
            if (s == 0) x += tau_add;
            lstm_cell(x, h, c, W_, R_, b_, hn, cn);
            h = hn;
            c = cn;
            out[s] = (headW_.matrix() * h.matrix())(0, 0) + headb_;
        }
        return out;
    }

private:
    LstmConfig cfg_;
    Eigen::ArrayXXd W_, R_, tauW_, headW_, X_;
    Eigen::ArrayXd b_, taub_, h0_, c0_;
    double headb_;
};

std::unique_ptr<diffusion::SamplerContext> LstmDecOnlyModel::make_context(
    const data::ConditioningTuple& c) const {
    return std::make_unique<LstmDecOnlyContext>(*this, c);
}

}  // namespace hydrodiff::models
