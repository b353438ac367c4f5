#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sigma/orders.hpp"
#include "sigma/rng.hpp"
#include "sigma/transformer.hpp"

namespace sigma {

struct PositionToken {
    uint32_t pos = 0;
    uint16_t tok = 0;
    bool operator==(const PositionToken&) const = default;
};

// A conditional sequence model being decoded. The session holds a growing
// set of committed (position, token) pairs; queries return conditionals given
// exactly that set. All probabilities are over data tokens, normalised after
// temperature scaling, and query/chain calls never change the session state.
//
// The base class validates arguments, tracks which positions are committed
// and counts calls; implementations fill in the do_* hooks.
class DecodeSession {
public:
    virtual ~DecodeSession() = default;

    virtual uint32_t seq_len() const = 0;
    virtual uint32_t data_vocab() const = 0;

    // Starts a fresh decode conditioned on a scattered prompt, committed in
    // the given order. Also clears the call counters.
    void reset(std::span<const PositionToken> known);

    // Commits tokens, extending the conditioning set in chain order.
    void append(std::span<const PositionToken> chain);

    // One conditional distribution per queried position, row-major
    // [positions.size(), data_vocab]. Positions may repeat; each row
    // conditions on the committed set only.
    void query_probs(std::span<const uint32_t> positions, double temperature,
                     std::vector<double>& probs);

    // probs[t] = P(x at chain[t].pos equals chain[t].tok | committed set plus
    // chain[0..t)), evaluated for the whole chain in one pass.
    void chain_probs(std::span<const PositionToken> chain, double temperature,
                     std::vector<double>& probs);

    bool is_committed(uint32_t pos) const { return committed_.at(pos); }
    uint32_t committed_count() const { return committed_count_; }

    uint64_t query_calls() const { return query_calls_; }
    uint64_t chain_calls() const { return chain_calls_; }
    uint64_t append_calls() const { return append_calls_; }

protected:
    virtual void do_reset(std::span<const PositionToken> known) = 0;
    virtual void do_append(std::span<const PositionToken> chain) = 0;
    virtual void do_query(std::span<const uint32_t> positions, double temperature,
                          std::vector<double>& probs) = 0;
    virtual void do_chain(std::span<const PositionToken> chain, double temperature,
                          std::vector<double>& probs) = 0;

private:
    void check_chain(std::span<const PositionToken> chain, const char* what) const;

    std::vector<bool> committed_;
    uint32_t committed_count_ = 0;
    uint64_t query_calls_ = 0, chain_calls_ = 0, append_calls_ = 0;
};

// Decodes a trained shuffled-order transformer with a KV cache.
//
// The cache holds one entry per committed token: the slot that carried the
// previous token and predicted this one. The newest committed token cannot be
// cached yet (its slot needs the next queried position), so it rides along as
// the frontier and becomes the first row of every query or chain block. All
// per-row linear algebra uses single-row products, which makes a row's output
// independent of the surrounding block; a chain's first row therefore scores
// its token with bitwise the same probability a probe of that position
// returns, which guarantees the burst decoder accepts at least one token per
// round.
class TransformerSession final : public DecodeSession {
public:
    // The model must outlive the session. seq_len may be below max_len.
    TransformerSession(const Transformer<float>& model, uint32_t seq_len);

    uint32_t seq_len() const override { return T_; }
    uint32_t data_vocab() const override { return model_.config().vocab_size - 1; }

protected:
    void do_reset(std::span<const PositionToken> known) override;
    void do_append(std::span<const PositionToken> chain) override;
    void do_query(std::span<const uint32_t> positions, double temperature,
                  std::vector<double>& probs) override;
    void do_chain(std::span<const PositionToken> chain, double temperature,
                  std::vector<double>& probs) override;

private:
    struct LayerPtrs {
        const float *ln1g, *ln1b, *qkvw, *qkvb, *outw, *outb;
        const float *ln2g, *ln2b, *fcw, *fcb, *projw, *projb;
    };

    void forward_block(std::span<const int32_t> values, std::span<const int32_t> in_pos,
                       std::span<const int32_t> out_pos, bool causal, bool commit);

    const Transformer<float>& model_;
    uint32_t T_;
    uint32_t cached_ = 0;
    int32_t frontier_tok_ = 0, frontier_pos_ = 0;
    std::vector<LayerPtrs> lp_;
    const float *tok_embed_ = nullptr, *inw_ = nullptr, *inb_ = nullptr;
    const float *lnfg_ = nullptr, *lnfb_ = nullptr, *headw_ = nullptr, *headb_ = nullptr;
    std::vector<std::vector<float>> kcache_, vcache_;  // per layer, cached_ * d_model
    std::vector<std::vector<float>> bk_, bv_;          // per layer, block rows * d_model
    std::vector<float> x0_, h_, a_, qkv_, ctx_, fc_, scores_;
    std::vector<float> logits_;  // block rows * vocab
};

struct StepRecord {
    uint32_t pos = 0;
    uint16_t tok = 0;
    double prob = 0.0;
};

struct GenerateResult {
    std::vector<uint16_t> sequence;  // all seq_len positions
    std::vector<StepRecord> steps;   // generated tokens, in generation order
    double log_prob = 0.0;           // sum of log prob of the generated tokens
};

// One token at a time: visits order.perm, skips known positions, samples each
// open position from its conditional and commits it.
GenerateResult generate(DecodeSession& session, std::span<const PositionToken> known,
                        const Order& order, double temperature, Rng& rng);

struct BurstConfig {
    uint32_t n_orders = 4;
    double temperature = 1.0;
    // One uniform draw per open position, shared by every order of the round
    // (the default). When false each order draws its own noise.
    bool shared_noise = true;
};

struct BurstRound {
    uint32_t n_open = 0;
    uint32_t n_orders = 0;
    uint32_t accepted = 0;
    uint32_t chosen_order = 0;  // index of the winning order
};

struct BurstResult {
    std::vector<uint16_t> sequence;
    std::vector<BurstRound> rounds;
    uint64_t probe_passes = 0;  // one per round
    uint64_t chain_passes = 0;  // n_orders per round
};

// Burst decoding. Each round proposes a token at every open position from its
// probe conditional, scores the proposals under n_orders random chains, and
// commits the longest run that a chain accepts before its first rejection
// (ties keep the lowest order index). A proposal at the head of a chain is
// always accepted, so every round commits at least one token.
BurstResult burst_rejection_sample(DecodeSession& session, std::span<const PositionToken> known,
                                   const BurstConfig& cfg, Rng& rng);

// One line per round: round,n_open,n_orders,accepted,chosen_order_index.
void write_burst_trace_csv(const std::string& path, const BurstResult& result);

// Cumulative inverse transform; throws if no entry is positive.
uint16_t sample_from_probs(std::span<const double> probs, Rng& rng);

}  // namespace sigma
