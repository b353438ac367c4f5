#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sigma/blas.hpp"
#include "sigma/model.hpp"
#include "sigma/rng.hpp"

namespace sigma {

struct TensorInfo {
    std::string name;
    std::vector<uint32_t> shape;
    size_t offset = 0;
    size_t size = 0;
};

// Flat parameter vector with named tensor views. Tensor order and names are
// fixed and part of the checkpoint contract.
struct ParamLayout {
    std::vector<TensorInfo> tensors;
    size_t total = 0;

    void add(std::string name, std::vector<uint32_t> shape) {
        size_t n = 1;
        for (uint32_t s : shape) n *= s;
        tensors.push_back({std::move(name), std::move(shape), total, n});
        total += n;
    }

    const TensorInfo& find(const std::string& name) const {
        for (const auto& t : tensors)
            if (t.name == name) return t;
        throw std::invalid_argument("param layout: no tensor named \"" + name + "\"");
    }

    static ParamLayout for_config(const ModelConfig& cfg) {
        ParamLayout layout;
        const uint32_t d = cfg.d_model;
        layout.add("tok_embed", {cfg.vocab_size, cfg.token_dim()});
        layout.add("in_proj.w", {d, d});
        layout.add("in_proj.b", {d});
        for (uint32_t l = 0; l < cfg.n_layers; l++) {
            const std::string p = "layers." + std::to_string(l) + ".";
            layout.add(p + "ln1.g", {d});
            layout.add(p + "ln1.b", {d});
            layout.add(p + "attn.qkv.w", {d, 3 * d});
            layout.add(p + "attn.qkv.b", {3 * d});
            layout.add(p + "attn.out.w", {d, d});
            layout.add(p + "attn.out.b", {d});
            layout.add(p + "ln2.g", {d});
            layout.add(p + "ln2.b", {d});
            layout.add(p + "mlp.fc.w", {d, cfg.d_ff});
            layout.add(p + "mlp.fc.b", {cfg.d_ff});
            layout.add(p + "mlp.proj.w", {cfg.d_ff, d});
            layout.add(p + "mlp.proj.b", {d});
        }
        layout.add("lnf.g", {d});
        layout.add("lnf.b", {d});
        layout.add("head.w", {d, cfg.vocab_size});
        layout.add("head.b", {cfg.vocab_size});
        return layout;
    }
};

inline constexpr double LAYER_NORM_EPS = 1e-5;

template <typename Real>
void layer_norm_forward(const Real* x, const Real* g, const Real* b, int n_rows, int d, Real* y,
                        Real* mean_out, Real* rstd_out) {
    for (int r = 0; r < n_rows; r++) {
        const Real* xr = x + static_cast<size_t>(r) * d;
        Real* yr = y + static_cast<size_t>(r) * d;
        Real mean = 0;
        for (int i = 0; i < d; i++) mean += xr[i];
        mean /= Real(d);
        Real var = 0;
        for (int i = 0; i < d; i++) {
            const Real c = xr[i] - mean;
            var += c * c;
        }
        var /= Real(d);
        const Real rstd = Real(1) / std::sqrt(var + Real(LAYER_NORM_EPS));
        for (int i = 0; i < d; i++) yr[i] = (xr[i] - mean) * rstd * g[i] + b[i];
        if (mean_out) mean_out[r] = mean;
        if (rstd_out) rstd_out[r] = rstd;
    }
}

// dx is written, dg/db are accumulated. dx must not alias dy.
template <typename Real>
void layer_norm_backward(const Real* x, const Real* g, const Real* mean, const Real* rstd,
                         const Real* dy, int n_rows, int d, Real* dx, Real* dg, Real* db) {
    for (int r = 0; r < n_rows; r++) {
        const Real* xr = x + static_cast<size_t>(r) * d;
        const Real* dyr = dy + static_cast<size_t>(r) * d;
        Real* dxr = dx + static_cast<size_t>(r) * d;
        const Real mu = mean[r];
        const Real rs = rstd[r];
        Real m1 = 0;
        Real m2 = 0;
        for (int i = 0; i < d; i++) {
            const Real xhat = (xr[i] - mu) * rs;
            const Real dxhat = dyr[i] * g[i];
            m1 += dxhat;
            m2 += dxhat * xhat;
            dg[i] += dyr[i] * xhat;
            db[i] += dyr[i];
        }
        m1 /= Real(d);
        m2 /= Real(d);
        for (int i = 0; i < d; i++) {
            const Real xhat = (xr[i] - mu) * rs;
            const Real dxhat = dyr[i] * g[i];
            dxr[i] = rs * (dxhat - m1 - xhat * m2);
        }
    }
}

template <typename Real>
Real gelu(Real v) {
    return Real(0.5) * v * (Real(1) + std::erf(v * Real(0.7071067811865476)));
}

template <typename Real>
Real gelu_grad(Real v) {
    const Real cdf = Real(0.5) * (Real(1) + std::erf(v * Real(0.7071067811865476)));
    const Real pdf = Real(0.3989422804014327) * std::exp(Real(-0.5) * v * v);
    return cdf + v * pdf;
}

template <typename Real>
void add_bias(Real* y, const Real* b, int n_rows, int d) {
    for (int r = 0; r < n_rows; r++) {
        Real* yr = y + static_cast<size_t>(r) * d;
        for (int i = 0; i < d; i++) yr[i] += b[i];
    }
}

template <typename Real>
void bias_grad_acc(const Real* dy, int n_rows, int d, Real* db) {
    for (int r = 0; r < n_rows; r++) {
        const Real* dyr = dy + static_cast<size_t>(r) * d;
        for (int i = 0; i < d; i++) db[i] += dyr[i];
    }
}

// Causal transformer over shuffled-order slots. Each slot embeds
// concat(token, input position code, output position code), projected to
// d_model, then pre-norm attention/MLP blocks with a strict j <= t attention
// bound, so a slot's output never depends on later slots. Templated on the
// scalar type; double instantiations back the finite-difference checks.
template <typename Real>
class Transformer {
public:
    explicit Transformer(const ModelConfig& config)
        : cfg_(config.resolved()), layout_(ParamLayout::for_config(cfg_)), params_(layout_.total, Real(0)) {
        pe_in_.resize(static_cast<size_t>(cfg_.max_len + 1) * cfg_.pe_dim_in);
        for (uint32_t p = 0; p <= cfg_.max_len; p++) {
            const auto pe = sinusoidal_pe(p, cfg_.pe_dim_in);
            for (uint32_t i = 0; i < cfg_.pe_dim_in; i++)
                pe_in_[static_cast<size_t>(p) * cfg_.pe_dim_in + i] = static_cast<Real>(pe[i]);
        }
        pe_out_.resize(static_cast<size_t>(cfg_.max_len) * cfg_.pe_dim_out);
        for (uint32_t p = 0; p < cfg_.max_len; p++) {
            const auto pe = sinusoidal_pe(p, cfg_.pe_dim_out);
            for (uint32_t i = 0; i < cfg_.pe_dim_out; i++)
                pe_out_[static_cast<size_t>(p) * cfg_.pe_dim_out + i] = static_cast<Real>(pe[i]);
        }
    }

    const ModelConfig& config() const { return cfg_; }
    const ParamLayout& layout() const { return layout_; }
    std::vector<Real>& params() { return params_; }
    const std::vector<Real>& params() const { return params_; }
    Real* param(const std::string& name) { return params_.data() + layout_.find(name).offset; }
    const Real* param(const std::string& name) const { return params_.data() + layout_.find(name).offset; }

    // Input position codes; row max_len is the begin-of-sequence sentinel.
    const Real* pe_in_row(uint32_t pos) const {
        if (pos > cfg_.max_len) throw std::invalid_argument("pe_in_row: position out of range");
        return pe_in_.data() + static_cast<size_t>(pos) * cfg_.pe_dim_in;
    }
    const Real* pe_out_row(uint32_t pos) const {
        if (pos >= cfg_.max_len) throw std::invalid_argument("pe_out_row: position out of range");
        return pe_out_.data() + static_cast<size_t>(pos) * cfg_.pe_dim_out;
    }

    // Weights: normal(0, 0.02), with residual output projections shrunk by
    // 1/sqrt(2 * n_layers). Norm gains start at one, every bias at zero.
    void init_params(Rng& rng) {
        const double base = 0.02;
        const double resid = base / std::sqrt(2.0 * cfg_.n_layers);
        auto ends_with = [](const std::string& s, const std::string& suf) {
            return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
        };
        for (const auto& t : layout_.tensors) {
            Real* p = params_.data() + t.offset;
            if (ends_with(t.name, ".g")) {
                for (size_t i = 0; i < t.size; i++) p[i] = Real(1);
            } else if (ends_with(t.name, ".b")) {
                for (size_t i = 0; i < t.size; i++) p[i] = Real(0);
            } else {
                const double sd = (ends_with(t.name, "attn.out.w") || ends_with(t.name, "mlp.proj.w"))
                                      ? resid
                                      : base;
                for (size_t i = 0; i < t.size; i++) p[i] = static_cast<Real>(rng.normal() * sd);
            }
        }
    }

    // Mean cross-entropy over all B*T slots under the full-vocabulary softmax
    // (the training objective; the reserved BOS id keeps a logit).
    double loss(const ShuffledBatch& batch) {
        forward(batch);
        return mean_xent(batch);
    }

    double loss_and_grad(const ShuffledBatch& batch, std::vector<Real>& grad) {
        forward(batch);
        const double l = mean_xent(batch);
        backward(batch, grad);
        return l;
    }

    // Raw logits for every slot, row-major [B*T, vocab_size].
    void forward_logits(const ShuffledBatch& batch, std::vector<Real>& logits_out) {
        forward(batch);
        logits_out = ws_.logits;
    }

    // Per-slot negative log-likelihood of each target in nats, normalised
    // over data tokens only (the BOS logit is excluded), matching how the
    // decoders normalise their probabilities.
    void nll_per_slot(const ShuffledBatch& batch, std::vector<double>& out) {
        forward(batch);
        const int S = static_cast<int>(batch.B) * static_cast<int>(batch.T);
        const int V = static_cast<int>(cfg_.vocab_size);
        const int data_v = V - 1;
        out.resize(S);
        for (int s = 0; s < S; s++) {
            const Real* row = ws_.logits.data() + static_cast<size_t>(s) * V;
            double mx = row[0];
            for (int v = 1; v < data_v; v++) mx = std::max(mx, static_cast<double>(row[v]));
            double denom = 0;
            for (int v = 0; v < data_v; v++) denom += std::exp(static_cast<double>(row[v]) - mx);
            const double lse = mx + std::log(denom);
            out[s] = lse - static_cast<double>(row[batch.targets[s]]);
        }
    }

private:
    ModelConfig cfg_;
    ParamLayout layout_;
    std::vector<Real> params_;
    std::vector<Real> pe_in_, pe_out_;

    struct Workspace {
        std::vector<Real> x0;
        std::vector<std::vector<Real>> res;                      // n_layers + 1 streams
        std::vector<std::vector<Real>> ln1_out, ln1_mean, ln1_rstd;
        std::vector<std::vector<Real>> qkv, att_probs, ctx, hmid;
        std::vector<std::vector<Real>> ln2_out, ln2_mean, ln2_rstd;
        std::vector<std::vector<Real>> fc_pre, fc_act;
        std::vector<Real> lnf_out, lnf_mean, lnf_rstd;
        std::vector<Real> logits, sm;
        std::vector<Real> dres, tmp1, tmp2, dctx, dqkv, dfc, dx0, dprow;
    };
    Workspace ws_;

    void ensure_workspace(uint32_t B, uint32_t T) {
        const size_t S = static_cast<size_t>(B) * T;
        const uint32_t L = cfg_.n_layers;
        const size_t sd = S * cfg_.d_model;
        auto fit = [](std::vector<std::vector<Real>>& v, uint32_t n, size_t len) {
            v.resize(n);
            for (auto& e : v) e.resize(len);
        };
        ws_.x0.resize(sd);
        fit(ws_.res, L + 1, sd);
        fit(ws_.ln1_out, L, sd);
        fit(ws_.ln1_mean, L, S);
        fit(ws_.ln1_rstd, L, S);
        fit(ws_.qkv, L, S * 3 * cfg_.d_model);
        fit(ws_.att_probs, L, static_cast<size_t>(B) * cfg_.n_heads * T * T);
        fit(ws_.ctx, L, sd);
        fit(ws_.hmid, L, sd);
        fit(ws_.ln2_out, L, sd);
        fit(ws_.ln2_mean, L, S);
        fit(ws_.ln2_rstd, L, S);
        fit(ws_.fc_pre, L, S * cfg_.d_ff);
        fit(ws_.fc_act, L, S * cfg_.d_ff);
        ws_.lnf_out.resize(sd);
        ws_.lnf_mean.resize(S);
        ws_.lnf_rstd.resize(S);
        ws_.logits.resize(S * cfg_.vocab_size);
        ws_.sm.resize(S * cfg_.vocab_size);
        ws_.dres.resize(sd);
        ws_.tmp1.resize(sd);
        ws_.tmp2.resize(sd);
        ws_.dctx.resize(sd);
        ws_.dqkv.resize(S * 3 * cfg_.d_model);
        ws_.dfc.resize(S * cfg_.d_ff);
        ws_.dx0.resize(sd);
        ws_.dprow.resize(T);
    }

    void validate_batch(const ShuffledBatch& batch) const {
        const size_t S = static_cast<size_t>(batch.B) * batch.T;
        if (batch.B == 0 || batch.T == 0 || batch.T > cfg_.max_len)
            throw std::invalid_argument("transformer: batch shape out of range");
        if (batch.values.size() != S || batch.in_pos.size() != S || batch.out_pos.size() != S ||
            batch.targets.size() != S)
            throw std::invalid_argument("transformer: batch buffers do not match B*T");
        for (size_t s = 0; s < S; s++) {
            if (batch.values[s] < 0 || batch.values[s] >= static_cast<int32_t>(cfg_.vocab_size) ||
                batch.targets[s] < 0 || batch.targets[s] >= static_cast<int32_t>(cfg_.vocab_size) ||
                batch.in_pos[s] < 0 || batch.in_pos[s] > static_cast<int32_t>(cfg_.max_len) ||
                batch.out_pos[s] < 0 || batch.out_pos[s] >= static_cast<int32_t>(cfg_.max_len))
                throw std::invalid_argument("transformer: batch entry out of range");
        }
    }

    void forward(const ShuffledBatch& batch) {
        validate_batch(batch);
        ensure_workspace(batch.B, batch.T);
        const int B = batch.B, T = batch.T;
        const int S = B * T;
        const int d = cfg_.d_model;
        const int etok = cfg_.token_dim();
        const int pin = cfg_.pe_dim_in;
        const int pout = cfg_.pe_dim_out;

        const Real* tok_embed = param("tok_embed");
        for (int s = 0; s < S; s++) {
            Real* row = ws_.x0.data() + static_cast<size_t>(s) * d;
            const Real* emb = tok_embed + static_cast<size_t>(batch.values[s]) * etok;
            for (int i = 0; i < etok; i++) row[i] = emb[i];
            const Real* pi = pe_in_row(static_cast<uint32_t>(batch.in_pos[s]));
            for (int i = 0; i < pin; i++) row[etok + i] = pi[i];
            const Real* po = pe_out_row(static_cast<uint32_t>(batch.out_pos[s]));
            for (int i = 0; i < pout; i++) row[etok + pin + i] = po[i];
        }
        matmul(S, d, d, ws_.x0.data(), param("in_proj.w"), ws_.res[0].data());
        add_bias(ws_.res[0].data(), param("in_proj.b"), S, d);

        for (uint32_t l = 0; l < cfg_.n_layers; l++) layer_forward(l, B, T);

        layer_norm_forward(ws_.res[cfg_.n_layers].data(), param("lnf.g"), param("lnf.b"), S, d,
                           ws_.lnf_out.data(), ws_.lnf_mean.data(), ws_.lnf_rstd.data());
        matmul(S, static_cast<int>(cfg_.vocab_size), d, ws_.lnf_out.data(), param("head.w"),
               ws_.logits.data());
        add_bias(ws_.logits.data(), param("head.b"), S, cfg_.vocab_size);
    }

    void layer_forward(uint32_t l, int B, int T) {
        const int S = B * T;
        const int d = cfg_.d_model;
        const int F = cfg_.d_ff;
        const int H = cfg_.n_heads;
        const int hd = cfg_.head_dim();
        const std::string p = "layers." + std::to_string(l) + ".";

        layer_norm_forward(ws_.res[l].data(), param(p + "ln1.g"), param(p + "ln1.b"), S, d,
                           ws_.ln1_out[l].data(), ws_.ln1_mean[l].data(), ws_.ln1_rstd[l].data());
        matmul(S, 3 * d, d, ws_.ln1_out[l].data(), param(p + "attn.qkv.w"), ws_.qkv[l].data());
        add_bias(ws_.qkv[l].data(), param(p + "attn.qkv.b"), S, 3 * d);

        const Real scale = Real(1) / std::sqrt(Real(hd));
        const Real* qkv = ws_.qkv[l].data();
        Real* probs = ws_.att_probs[l].data();
        Real* ctx = ws_.ctx[l].data();
        for (int b = 0; b < B; b++) {
            for (int h = 0; h < H; h++) {
                Real* pr = probs + (static_cast<size_t>(b) * H + h) * T * T;
                for (int t = 0; t < T; t++) {
                    const Real* q = qkv + static_cast<size_t>(b * T + t) * 3 * d + h * hd;
                    Real* prow = pr + static_cast<size_t>(t) * T;
                    Real mx = 0;
                    for (int j = 0; j <= t; j++) {
                        const Real* k = qkv + static_cast<size_t>(b * T + j) * 3 * d + d + h * hd;
                        Real acc = 0;
                        for (int i = 0; i < hd; i++) acc += q[i] * k[i];
                        prow[j] = acc * scale;
                        if (j == 0 || prow[j] > mx) mx = prow[j];
                    }
                    Real denom = 0;
                    for (int j = 0; j <= t; j++) {
                        prow[j] = std::exp(prow[j] - mx);
                        denom += prow[j];
                    }
                    const Real inv = Real(1) / denom;
                    Real* c = ctx + static_cast<size_t>(b * T + t) * d + h * hd;
                    for (int i = 0; i < hd; i++) c[i] = 0;
                    for (int j = 0; j <= t; j++) {
                        prow[j] *= inv;
                        const Real w = prow[j];
                        const Real* v = qkv + static_cast<size_t>(b * T + j) * 3 * d + 2 * d + h * hd;
                        for (int i = 0; i < hd; i++) c[i] += w * v[i];
                    }
                }
            }
        }

        matmul(S, d, d, ctx, param(p + "attn.out.w"), ws_.hmid[l].data());
        add_bias(ws_.hmid[l].data(), param(p + "attn.out.b"), S, d);
        {
            const Real* r = ws_.res[l].data();
            Real* hm = ws_.hmid[l].data();
            for (int i = 0; i < S * d; i++) hm[i] += r[i];
        }

        layer_norm_forward(ws_.hmid[l].data(), param(p + "ln2.g"), param(p + "ln2.b"), S, d,
                           ws_.ln2_out[l].data(), ws_.ln2_mean[l].data(), ws_.ln2_rstd[l].data());
        matmul(S, F, d, ws_.ln2_out[l].data(), param(p + "mlp.fc.w"), ws_.fc_pre[l].data());
        add_bias(ws_.fc_pre[l].data(), param(p + "mlp.fc.b"), S, F);
        {
            const Real* u = ws_.fc_pre[l].data();
            Real* a = ws_.fc_act[l].data();
            for (size_t i = 0; i < static_cast<size_t>(S) * F; i++) a[i] = gelu(u[i]);
        }
        matmul(S, d, F, ws_.fc_act[l].data(), param(p + "mlp.proj.w"), ws_.res[l + 1].data());
        add_bias(ws_.res[l + 1].data(), param(p + "mlp.proj.b"), S, d);
        {
            const Real* hm = ws_.hmid[l].data();
            Real* r = ws_.res[l + 1].data();
            for (int i = 0; i < S * d; i++) r[i] += hm[i];
        }
    }

    double mean_xent(const ShuffledBatch& batch) {
        const int S = static_cast<int>(batch.B) * static_cast<int>(batch.T);
        const int V = cfg_.vocab_size;
        double total = 0;
        for (int s = 0; s < S; s++) {
            const Real* row = ws_.logits.data() + static_cast<size_t>(s) * V;
            Real* smrow = ws_.sm.data() + static_cast<size_t>(s) * V;
            double mx = row[0];
            for (int v = 1; v < V; v++) mx = std::max(mx, static_cast<double>(row[v]));
            double denom = 0;
            for (int v = 0; v < V; v++) denom += std::exp(static_cast<double>(row[v]) - mx);
            const double lse = mx + std::log(denom);
            for (int v = 0; v < V; v++)
                smrow[v] = static_cast<Real>(std::exp(static_cast<double>(row[v]) - lse));
            total += lse - static_cast<double>(row[batch.targets[s]]);
        }
        return total / S;
    }

    void backward(const ShuffledBatch& batch, std::vector<Real>& grad) {
        const int B = batch.B, T = batch.T;
        const int S = B * T;
        const int d = cfg_.d_model;
        const int F = cfg_.d_ff;
        const int V = cfg_.vocab_size;
        const int H = cfg_.n_heads;
        const int hd = cfg_.head_dim();
        grad.assign(layout_.total, Real(0));
        auto g = [&](const std::string& name) { return grad.data() + layout_.find(name).offset; };

        // d(loss)/d(logits) = (softmax - onehot) / S, written over the
        // softmax cache.
        const Real invS = Real(1) / Real(S);
        for (int s = 0; s < S; s++) {
            Real* row = ws_.sm.data() + static_cast<size_t>(s) * V;
            row[batch.targets[s]] -= Real(1);
            for (int v = 0; v < V; v++) row[v] *= invS;
        }

        matmul_tn_acc(S, V, d, ws_.lnf_out.data(), ws_.sm.data(), g("head.w"));
        bias_grad_acc(ws_.sm.data(), S, V, g("head.b"));
        matmul_nt(S, V, d, ws_.sm.data(), param("head.w"), ws_.tmp1.data());
        layer_norm_backward(ws_.res[cfg_.n_layers].data(), param("lnf.g"), ws_.lnf_mean.data(),
                            ws_.lnf_rstd.data(), ws_.tmp1.data(), S, d, ws_.dres.data(), g("lnf.g"),
                            g("lnf.b"));

        for (int l = static_cast<int>(cfg_.n_layers) - 1; l >= 0; l--) {
            const std::string p = "layers." + std::to_string(l) + ".";

            // res[l+1] = hmid + proj(gelu(fc(ln2(hmid)))).
            matmul_tn_acc(S, d, F, ws_.fc_act[l].data(), ws_.dres.data(), g(p + "mlp.proj.w"));
            bias_grad_acc(ws_.dres.data(), S, d, g(p + "mlp.proj.b"));
            matmul_nt(S, d, F, ws_.dres.data(), param(p + "mlp.proj.w"), ws_.dfc.data());
            {
                const Real* u = ws_.fc_pre[l].data();
                Real* df = ws_.dfc.data();
                for (size_t i = 0; i < static_cast<size_t>(S) * F; i++) df[i] *= gelu_grad(u[i]);
            }
            matmul_tn_acc(S, F, d, ws_.ln2_out[l].data(), ws_.dfc.data(), g(p + "mlp.fc.w"));
            bias_grad_acc(ws_.dfc.data(), S, F, g(p + "mlp.fc.b"));
            matmul_nt(S, F, d, ws_.dfc.data(), param(p + "mlp.fc.w"), ws_.tmp1.data());
            layer_norm_backward(ws_.hmid[l].data(), param(p + "ln2.g"), ws_.ln2_mean[l].data(),
                                ws_.ln2_rstd[l].data(), ws_.tmp1.data(), S, d, ws_.tmp2.data(),
                                g(p + "ln2.g"), g(p + "ln2.b"));
            {
                const Real* dr = ws_.dres.data();
                Real* t2 = ws_.tmp2.data();
                for (int i = 0; i < S * d; i++) t2[i] += dr[i];  // tmp2 = d(hmid)
            }

            // hmid = res[l] + out_proj(attention(ln1(res[l]))).
            matmul_tn_acc(S, d, d, ws_.ctx[l].data(), ws_.tmp2.data(), g(p + "attn.out.w"));
            bias_grad_acc(ws_.tmp2.data(), S, d, g(p + "attn.out.b"));
            matmul_nt(S, d, d, ws_.tmp2.data(), param(p + "attn.out.w"), ws_.dctx.data());

            std::fill(ws_.dqkv.begin(), ws_.dqkv.end(), Real(0));
            const Real scale = Real(1) / std::sqrt(Real(hd));
            const Real* qkv = ws_.qkv[l].data();
            const Real* probs = ws_.att_probs[l].data();
            for (int b = 0; b < B; b++) {
                for (int h = 0; h < H; h++) {
                    const Real* pr = probs + (static_cast<size_t>(b) * H + h) * T * T;
                    for (int t = 0; t < T; t++) {
                        const Real* dct = ws_.dctx.data() + static_cast<size_t>(b * T + t) * d + h * hd;
                        const Real* prow = pr + static_cast<size_t>(t) * T;
                        Real acc = 0;
                        for (int j = 0; j <= t; j++) {
                            const Real* v =
                                qkv + static_cast<size_t>(b * T + j) * 3 * d + 2 * d + h * hd;
                            Real dp = 0;
                            for (int i = 0; i < hd; i++) dp += dct[i] * v[i];
                            ws_.dprow[j] = dp;
                            acc += prow[j] * dp;
                            Real* dv = ws_.dqkv.data() + static_cast<size_t>(b * T + j) * 3 * d +
                                       2 * d + h * hd;
                            const Real w = prow[j];
                            for (int i = 0; i < hd; i++) dv[i] += w * dct[i];
                        }
                        const Real* q = qkv + static_cast<size_t>(b * T + t) * 3 * d + h * hd;
                        Real* dq = ws_.dqkv.data() + static_cast<size_t>(b * T + t) * 3 * d + h * hd;
                        for (int j = 0; j <= t; j++) {
                            const Real ds = prow[j] * (ws_.dprow[j] - acc) * scale;
                            const Real* k = qkv + static_cast<size_t>(b * T + j) * 3 * d + d + h * hd;
                            Real* dk =
                                ws_.dqkv.data() + static_cast<size_t>(b * T + j) * 3 * d + d + h * hd;
                            for (int i = 0; i < hd; i++) {
                                dq[i] += ds * k[i];
                                dk[i] += ds * q[i];
                            }
                        }
                    }
                }
            }

            matmul_tn_acc(S, 3 * d, d, ws_.ln1_out[l].data(), ws_.dqkv.data(), g(p + "attn.qkv.w"));
            bias_grad_acc(ws_.dqkv.data(), S, 3 * d, g(p + "attn.qkv.b"));
            matmul_nt(S, 3 * d, d, ws_.dqkv.data(), param(p + "attn.qkv.w"), ws_.tmp1.data());
            layer_norm_backward(ws_.res[l].data(), param(p + "ln1.g"), ws_.ln1_mean[l].data(),
                                ws_.ln1_rstd[l].data(), ws_.tmp1.data(), S, d, ws_.dres.data(),
                                g(p + "ln1.g"), g(p + "ln1.b"));
            {
                const Real* t2 = ws_.tmp2.data();
                Real* dr = ws_.dres.data();
                for (int i = 0; i < S * d; i++) dr[i] += t2[i];  // + residual path
            }
        }

        matmul_tn_acc(S, d, d, ws_.x0.data(), ws_.dres.data(), g("in_proj.w"));
        bias_grad_acc(ws_.dres.data(), S, d, g("in_proj.b"));
        matmul_nt(S, d, d, ws_.dres.data(), param("in_proj.w"), ws_.dx0.data());

        const int etok = cfg_.token_dim();
        Real* dtok = g("tok_embed");
        for (int s = 0; s < S; s++) {
            const Real* row = ws_.dx0.data() + static_cast<size_t>(s) * d;
            Real* dst = dtok + static_cast<size_t>(batch.values[s]) * etok;
            for (int i = 0; i < etok; i++) dst[i] += row[i];
        }
    }
};

}  // namespace sigma
