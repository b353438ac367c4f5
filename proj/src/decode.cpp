#include "sigma/decode.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace sigma {

namespace {

// Softmax over the data vocabulary (the reserved last logit is dropped)
// after temperature scaling. Both the probe and chain paths go through this
// helper, so equal logits give bitwise equal probabilities.
void data_softmax(const float* logits, uint32_t vocab_size, double temperature, double* out) {
    const uint32_t dv = vocab_size - 1;
    double mx = static_cast<double>(logits[0]) / temperature;
    for (uint32_t v = 1; v < dv; v++)
        mx = std::max(mx, static_cast<double>(logits[v]) / temperature);
    double denom = 0;
    for (uint32_t v = 0; v < dv; v++) {
        out[v] = std::exp(static_cast<double>(logits[v]) / temperature - mx);
        denom += out[v];
    }
    for (uint32_t v = 0; v < dv; v++) out[v] /= denom;
}

float dotf(const float* a, const float* b, int n) {
    float acc = 0;
    for (int i = 0; i < n; i++) acc += a[i] * b[i];
    return acc;
}

}  // namespace

void DecodeSession::reset(std::span<const PositionToken> known) {
    committed_.assign(seq_len(), false);
    committed_count_ = 0;
    query_calls_ = chain_calls_ = append_calls_ = 0;
    check_chain(known, "reset");
    do_reset(known);
    for (const auto& kt : known) committed_[kt.pos] = true;
    committed_count_ = static_cast<uint32_t>(known.size());
}

void DecodeSession::append(std::span<const PositionToken> chain) {
    if (committed_.empty()) committed_.assign(seq_len(), false);
    if (chain.empty()) throw std::invalid_argument("append: empty chain");
    check_chain(chain, "append");
    do_append(chain);
    for (const auto& c : chain) committed_[c.pos] = true;
    committed_count_ += static_cast<uint32_t>(chain.size());
    append_calls_++;
}

void DecodeSession::query_probs(std::span<const uint32_t> positions, double temperature,
                                std::vector<double>& probs) {
    if (committed_.empty()) committed_.assign(seq_len(), false);
    if (positions.empty()) throw std::invalid_argument("query_probs: no positions");
    if (!(temperature > 0)) throw std::invalid_argument("query_probs: temperature must be positive");
    for (uint32_t pos : positions) {
        if (pos >= seq_len()) throw std::invalid_argument("query_probs: position out of range");
        if (committed_[pos]) throw std::invalid_argument("query_probs: position already committed");
    }
    do_query(positions, temperature, probs);
    query_calls_++;
}

void DecodeSession::chain_probs(std::span<const PositionToken> chain, double temperature,
                                std::vector<double>& probs) {
    if (committed_.empty()) committed_.assign(seq_len(), false);
    if (chain.empty()) throw std::invalid_argument("chain_probs: empty chain");
    if (!(temperature > 0)) throw std::invalid_argument("chain_probs: temperature must be positive");
    check_chain(chain, "chain_probs");
    do_chain(chain, temperature, probs);
    chain_calls_++;
}

void DecodeSession::check_chain(std::span<const PositionToken> chain, const char* what) const {
    std::vector<bool> seen = committed_;
    if (seen.empty()) seen.assign(seq_len(), false);
    for (const auto& c : chain) {
        if (c.pos >= seq_len())
            throw std::invalid_argument(std::string(what) + ": position out of range");
        if (c.tok >= data_vocab())
            throw std::invalid_argument(std::string(what) + ": token out of range");
        if (seen[c.pos])
            throw std::invalid_argument(std::string(what) + ": position repeated or already committed");
        seen[c.pos] = true;
    }
}

TransformerSession::TransformerSession(const Transformer<float>& model, uint32_t seq_len)
    : model_(model), T_(seq_len) {
    const ModelConfig& cfg = model_.config();
    if (seq_len == 0 || seq_len > cfg.max_len)
        throw std::invalid_argument("session: seq_len must be in [1, max_len]");
    const uint32_t L = cfg.n_layers;
    kcache_.resize(L);
    vcache_.resize(L);
    bk_.resize(L);
    bv_.resize(L);
    for (uint32_t l = 0; l < L; l++) {
        kcache_[l].resize(static_cast<size_t>(T_) * cfg.d_model);
        vcache_[l].resize(static_cast<size_t>(T_) * cfg.d_model);
    }
    lp_.resize(L);
    for (uint32_t l = 0; l < L; l++) {
        const std::string p = "layers." + std::to_string(l) + ".";
        lp_[l] = {model_.param(p + "ln1.g"),      model_.param(p + "ln1.b"),
                  model_.param(p + "attn.qkv.w"), model_.param(p + "attn.qkv.b"),
                  model_.param(p + "attn.out.w"), model_.param(p + "attn.out.b"),
                  model_.param(p + "ln2.g"),      model_.param(p + "ln2.b"),
                  model_.param(p + "mlp.fc.w"),   model_.param(p + "mlp.fc.b"),
                  model_.param(p + "mlp.proj.w"), model_.param(p + "mlp.proj.b")};
    }
    tok_embed_ = model_.param("tok_embed");
    inw_ = model_.param("in_proj.w");
    inb_ = model_.param("in_proj.b");
    lnfg_ = model_.param("lnf.g");
    lnfb_ = model_.param("lnf.b");
    headw_ = model_.param("head.w");
    headb_ = model_.param("head.b");
    frontier_tok_ = static_cast<int32_t>(cfg.bos_id());
    frontier_pos_ = static_cast<int32_t>(cfg.in_pos_sentinel());
}

void TransformerSession::do_reset(std::span<const PositionToken> known) {
    cached_ = 0;
    frontier_tok_ = static_cast<int32_t>(model_.config().bos_id());
    frontier_pos_ = static_cast<int32_t>(model_.config().in_pos_sentinel());
    if (!known.empty()) do_append(known);
}

void TransformerSession::do_append(std::span<const PositionToken> chain) {
    const uint32_t n = static_cast<uint32_t>(chain.size());
    std::vector<int32_t> values(n), in_pos(n), out_pos(n);
    values[0] = frontier_tok_;
    in_pos[0] = frontier_pos_;
    out_pos[0] = static_cast<int32_t>(chain[0].pos);
    for (uint32_t r = 1; r < n; r++) {
        values[r] = chain[r - 1].tok;
        in_pos[r] = static_cast<int32_t>(chain[r - 1].pos);
        out_pos[r] = static_cast<int32_t>(chain[r].pos);
    }
    forward_block(values, in_pos, out_pos, true, true);
    frontier_tok_ = chain.back().tok;
    frontier_pos_ = static_cast<int32_t>(chain.back().pos);
}

void TransformerSession::do_query(std::span<const uint32_t> positions, double temperature,
                                  std::vector<double>& probs) {
    const uint32_t n = static_cast<uint32_t>(positions.size());
    std::vector<int32_t> values(n, frontier_tok_), in_pos(n, frontier_pos_), out_pos(n);
    for (uint32_t r = 0; r < n; r++) out_pos[r] = static_cast<int32_t>(positions[r]);
    forward_block(values, in_pos, out_pos, false, false);
    const uint32_t V = model_.config().vocab_size;
    probs.resize(static_cast<size_t>(n) * (V - 1));
    for (uint32_t r = 0; r < n; r++)
        data_softmax(logits_.data() + static_cast<size_t>(r) * V, V, temperature,
                     probs.data() + static_cast<size_t>(r) * (V - 1));
}

void TransformerSession::do_chain(std::span<const PositionToken> chain, double temperature,
                                  std::vector<double>& probs) {
    const uint32_t n = static_cast<uint32_t>(chain.size());
    std::vector<int32_t> values(n), in_pos(n), out_pos(n);
    values[0] = frontier_tok_;
    in_pos[0] = frontier_pos_;
    out_pos[0] = static_cast<int32_t>(chain[0].pos);
    for (uint32_t r = 1; r < n; r++) {
        values[r] = chain[r - 1].tok;
        in_pos[r] = static_cast<int32_t>(chain[r - 1].pos);
        out_pos[r] = static_cast<int32_t>(chain[r].pos);
    }
    forward_block(values, in_pos, out_pos, true, false);
    const uint32_t V = model_.config().vocab_size;
    std::vector<double> row(V - 1);
    probs.resize(n);
    for (uint32_t r = 0; r < n; r++) {
        data_softmax(logits_.data() + static_cast<size_t>(r) * V, V, temperature, row.data());
        probs[r] = row[chain[r].tok];
    }
}

void TransformerSession::forward_block(std::span<const int32_t> values,
                                       std::span<const int32_t> in_pos,
                                       std::span<const int32_t> out_pos, bool causal, bool commit) {
    const ModelConfig& cfg = model_.config();
    const int n = static_cast<int>(values.size());
    const int d = cfg.d_model, H = cfg.n_heads, hd = cfg.head_dim(), F = cfg.d_ff;
    const int V = cfg.vocab_size;
    const int L = cfg.n_layers;
    const int etok = cfg.token_dim(), pin = cfg.pe_dim_in, pout = cfg.pe_dim_out;
    const float scale = 1.0f / std::sqrt(static_cast<float>(hd));

    for (int l = 0; l < L; l++) {
        bk_[l].resize(static_cast<size_t>(n) * d);
        bv_[l].resize(static_cast<size_t>(n) * d);
    }
    logits_.resize(static_cast<size_t>(n) * V);
    x0_.resize(d);
    h_.resize(d);
    a_.resize(d);
    qkv_.resize(3 * d);
    ctx_.resize(d);
    fc_.resize(F);
    scores_.resize(cached_ + n);

    for (int r = 0; r < n; r++) {
        const float* emb = tok_embed_ + static_cast<size_t>(values[r]) * etok;
        std::memcpy(x0_.data(), emb, sizeof(float) * etok);
        std::memcpy(x0_.data() + etok, model_.pe_in_row(static_cast<uint32_t>(in_pos[r])),
                    sizeof(float) * pin);
        std::memcpy(x0_.data() + etok + pin, model_.pe_out_row(static_cast<uint32_t>(out_pos[r])),
                    sizeof(float) * pout);
        blas_row_times_matrix(d, d, x0_.data(), inw_, h_.data());
        for (int i = 0; i < d; i++) h_[i] += inb_[i];

        for (int l = 0; l < L; l++) {
            const LayerPtrs& lp = lp_[l];
            layer_norm_forward<float>(h_.data(), lp.ln1g, lp.ln1b, 1, d, a_.data(), nullptr, nullptr);
            blas_row_times_matrix(d, 3 * d, a_.data(), lp.qkvw, qkv_.data());
            for (int i = 0; i < 3 * d; i++) qkv_[i] += lp.qkvb[i];
            std::memcpy(bk_[l].data() + static_cast<size_t>(r) * d, qkv_.data() + d,
                        sizeof(float) * d);
            std::memcpy(bv_[l].data() + static_cast<size_t>(r) * d, qkv_.data() + 2 * d,
                        sizeof(float) * d);

            const int j0 = causal ? 0 : r;
            for (int head = 0; head < H; head++) {
                const float* q = qkv_.data() + head * hd;
                int m = 0;
                for (uint32_t j = 0; j < cached_; j++)
                    scores_[m++] = scale * dotf(q, kcache_[l].data() + static_cast<size_t>(j) * d +
                                                       head * hd, hd);
                for (int j = j0; j <= r; j++)
                    scores_[m++] = scale *
                                   dotf(q, bk_[l].data() + static_cast<size_t>(j) * d + head * hd, hd);
                float mx = scores_[0];
                for (int i = 1; i < m; i++) mx = std::max(mx, scores_[i]);
                float denom = 0;
                for (int i = 0; i < m; i++) {
                    scores_[i] = std::exp(scores_[i] - mx);
                    denom += scores_[i];
                }
                const float inv = 1.0f / denom;
                float* c = ctx_.data() + head * hd;
                for (int i = 0; i < hd; i++) c[i] = 0;
                int idx = 0;
                for (uint32_t j = 0; j < cached_; j++) {
                    const float w = scores_[idx++] * inv;
                    const float* v = vcache_[l].data() + static_cast<size_t>(j) * d + head * hd;
                    for (int i = 0; i < hd; i++) c[i] += w * v[i];
                }
                for (int j = j0; j <= r; j++) {
                    const float w = scores_[idx++] * inv;
                    const float* v = bv_[l].data() + static_cast<size_t>(j) * d + head * hd;
                    for (int i = 0; i < hd; i++) c[i] += w * v[i];
                }
            }
            blas_row_times_matrix(d, d, ctx_.data(), lp.outw, a_.data());
            for (int i = 0; i < d; i++) h_[i] += a_[i] + lp.outb[i];

            layer_norm_forward<float>(h_.data(), lp.ln2g, lp.ln2b, 1, d, a_.data(), nullptr, nullptr);
            blas_row_times_matrix(d, F, a_.data(), lp.fcw, fc_.data());
            for (int i = 0; i < F; i++) fc_[i] = gelu(fc_[i] + lp.fcb[i]);
            blas_row_times_matrix(F, d, fc_.data(), lp.projw, a_.data());
            for (int i = 0; i < d; i++) h_[i] += a_[i] + lp.projb[i];
        }

        layer_norm_forward<float>(h_.data(), lnfg_, lnfb_, 1, d, a_.data(), nullptr, nullptr);
        float* lrow = logits_.data() + static_cast<size_t>(r) * V;
        blas_row_times_matrix(d, V, a_.data(), headw_, lrow);
        for (int v = 0; v < V; v++) lrow[v] += headb_[v];
    }

    if (commit) {
        for (int l = 0; l < L; l++) {
            std::memcpy(kcache_[l].data() + static_cast<size_t>(cached_) * d, bk_[l].data(),
                        sizeof(float) * n * d);
            std::memcpy(vcache_[l].data() + static_cast<size_t>(cached_) * d, bv_[l].data(),
                        sizeof(float) * n * d);
        }
        cached_ += n;
    }
}

uint16_t sample_from_probs(std::span<const double> probs, Rng& rng) {
    double total = 0;
    int64_t last_positive = -1;
    for (size_t i = 0; i < probs.size(); i++) {
        if (probs[i] > 0) last_positive = static_cast<int64_t>(i);
        total += probs[i];
    }
    if (last_positive < 0 || !(total > 0))
        throw std::runtime_error("sample_from_probs: no probability mass");
    const double u = rng.uniform() * total;
    double cum = 0;
    for (size_t i = 0; i < probs.size(); i++) {
        cum += probs[i];
        if (u < cum && probs[i] > 0) return static_cast<uint16_t>(i);
    }
    return static_cast<uint16_t>(last_positive);
}

GenerateResult generate(DecodeSession& session, std::span<const PositionToken> known,
                        const Order& order, double temperature, Rng& rng) {
    const uint32_t T = session.seq_len();
    if (order.size() != T) throw std::invalid_argument("generate: order length must match seq_len");
    if (!is_permutation(order.perm)) throw std::invalid_argument("generate: order is not a permutation");
    session.reset(known);
    GenerateResult res;
    res.sequence.assign(T, 0);
    for (const auto& k : known) res.sequence[k.pos] = k.tok;
    std::vector<double> probs;
    for (const uint32_t pos : order.perm) {
        if (session.is_committed(pos)) continue;
        const uint32_t query[1] = {pos};
        session.query_probs(query, temperature, probs);
        const uint16_t tok = sample_from_probs(probs, rng);
        const PositionToken step[1] = {{pos, tok}};
        session.append(step);
        res.sequence[pos] = tok;
        res.steps.push_back({pos, tok, probs[tok]});
        res.log_prob += std::log(probs[tok]);
    }
    return res;
}

BurstResult burst_rejection_sample(DecodeSession& session, std::span<const PositionToken> known,
                                   const BurstConfig& cfg, Rng& rng) {
    if (cfg.n_orders == 0) throw std::invalid_argument("burst: need at least one order");
    if (!(cfg.temperature > 0)) throw std::invalid_argument("burst: temperature must be positive");
    const uint32_t T = session.seq_len();
    session.reset(known);

    BurstResult res;
    res.sequence.assign(T, 0);
    for (const auto& k : known) res.sequence[k.pos] = k.tok;
    std::vector<uint32_t> open;
    for (uint32_t i = 0; i < T; i++)
        if (!session.is_committed(i)) open.push_back(i);

    std::vector<double> probe, q, p_of, noise, order_noise;
    std::vector<uint16_t> proposal;
    std::vector<PositionToken> chain, best_chain;
    const uint32_t dv = session.data_vocab();

    while (!open.empty()) {
        const uint32_t m = static_cast<uint32_t>(open.size());
        session.query_probs(open, cfg.temperature, probe);
        proposal.resize(m);
        p_of.resize(m);
        for (uint32_t i = 0; i < m; i++) {
            const std::span<const double> row(probe.data() + static_cast<size_t>(i) * dv, dv);
            proposal[i] = sample_from_probs(row, rng);
            p_of[i] = row[proposal[i]];
        }
        if (cfg.shared_noise) {
            noise.resize(m);
            for (auto& u : noise) u = rng.uniform();
        }

        uint32_t best_acc = 0, best_k = 0;
        for (uint32_t k = 0; k < cfg.n_orders; k++) {
            const Order ord = uniform_random_order(m, rng);
            if (!cfg.shared_noise) {
                order_noise.resize(m);
                for (auto& u : order_noise) u = rng.uniform();
            }
            chain.resize(m);
            for (uint32_t t = 0; t < m; t++)
                chain[t] = {open[ord.perm[t]], proposal[ord.perm[t]]};
            session.chain_probs(chain, cfg.temperature, q);
            uint32_t acc = 0;
            for (uint32_t t = 0; t < m; t++) {
                const uint32_t idx = ord.perm[t];
                const double u = cfg.shared_noise ? noise[idx] : order_noise[t];
                const double ratio = std::min(1.0, q[t] / p_of[idx]);
                if (u < ratio)
                    acc++;
                else
                    break;
            }
            if (acc > best_acc) {
                best_acc = acc;
                best_k = k;
                best_chain.assign(chain.begin(), chain.begin() + acc);
            }
        }
        if (best_acc == 0)
            throw std::runtime_error("burst: no order accepted its first token; inconsistent session");

        session.append(best_chain);
        std::vector<bool> taken(T, false);
        for (const auto& c : best_chain) {
            res.sequence[c.pos] = c.tok;
            taken[c.pos] = true;
        }
        open.erase(std::remove_if(open.begin(), open.end(),
                                  [&](uint32_t pos) { return taken[pos]; }),
                   open.end());
        res.rounds.push_back({m, cfg.n_orders, best_acc, best_k});
        res.probe_passes++;
        res.chain_passes += cfg.n_orders;
    }
    return res;
}

void write_burst_trace_csv(const std::string& path, const BurstResult& result) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open trace file " + path);
    out << "round,n_open,n_orders,accepted,chosen_order_index\n";
    for (size_t i = 0; i < result.rounds.size(); i++) {
        const BurstRound& r = result.rounds[i];
        out << (i + 1) << ',' << r.n_open << ',' << r.n_orders << ',' << r.accepted << ','
            << r.chosen_order << '\n';
    }
    if (!out) throw std::runtime_error("trace write failed: " + path);
}

}  // namespace sigma
