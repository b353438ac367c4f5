#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "sigma/decode.hpp"

namespace sigma {

// Raises every entry to 1/temperature and renormalises. This is exactly what
// dividing logits by the temperature before a softmax does, so tempered exact
// models stay comparable with tempered transformer output. All-zero input is
// left untouched.
void power_normalize(std::span<double> probs, double temperature);

// A joint distribution over fixed-length sequences given by an explicit
// support list with normalised probabilities. Small enough tasks can be
// written down this way and used as exact oracles for decoding.
struct SupportJoint {
    uint32_t seq_len = 0;
    uint32_t vocab = 0;  // data vocabulary
    std::vector<std::vector<uint16_t>> seqs;
    std::vector<double> probs;

    static SupportJoint from_members(uint32_t vocab, std::vector<std::vector<uint16_t>> seqs,
                                     std::vector<double> weights);
    static SupportJoint uniform(uint32_t vocab, std::vector<std::vector<uint16_t>> seqs);
    // All 2^T bit strings, independent Bernoulli(p) per position. T capped at 20.
    static SupportJoint bernoulli_product(uint32_t T, double p);
    // All T! orderings of the classes 0..T-1, uniform. T capped at 8.
    static SupportJoint all_permutations(uint32_t T);
    // The step task: zeros except one run of step_len ones, run offset
    // uniform over [0, T - step_len].
    static SupportJoint step_sequences(uint32_t T, uint32_t step_len);
    // All 2^T bit strings with seed-derived weights 0.2 + u, u uniform in
    // [0, 1), normalised. Dense support with irregular conditionals. T capped
    // at 12.
    static SupportJoint random_binary(uint32_t T, uint64_t seed);

    // Index of the sequence in the support, or -1.
    int64_t find(std::span<const uint16_t> seq) const;
    double sequence_prob(std::span<const uint16_t> seq) const;
    // P(x at pos | x agrees with fixed), untempered. Zeros everywhere when the
    // conditioning event has no mass. fixed must not include pos.
    std::vector<double> conditional(std::span<const PositionToken> fixed, uint32_t pos) const;
};

// Decode session backed by a SupportJoint: keeps the list of support members
// consistent with the committed set and marginalises over it.
class SupportSession final : public DecodeSession {
public:
    // The joint must outlive the session.
    explicit SupportSession(const SupportJoint& joint);
    // Shares ownership of the joint.
    explicit SupportSession(std::shared_ptr<const SupportJoint> joint);

    uint32_t seq_len() const override { return joint_->seq_len; }
    uint32_t data_vocab() const override { return joint_->vocab; }

protected:
    void do_reset(std::span<const PositionToken> known) override;
    void do_append(std::span<const PositionToken> chain) override;
    void do_query(std::span<const uint32_t> positions, double temperature,
                  std::vector<double>& probs) override;
    void do_chain(std::span<const PositionToken> chain, double temperature,
                  std::vector<double>& probs) override;

private:
    static void filter(std::vector<uint32_t>& live, const SupportJoint& joint, uint32_t pos,
                       uint16_t tok);

    std::shared_ptr<const SupportJoint> joint_;
    std::vector<uint32_t> live_;  // indices of members consistent with the committed set
};

// Independent Bernoulli(p) bits; every conditional is the marginal.
class ProductSession final : public DecodeSession {
public:
    ProductSession(uint32_t seq_len, double p);

    uint32_t seq_len() const override { return T_; }
    uint32_t data_vocab() const override { return 2; }

protected:
    void do_reset(std::span<const PositionToken> known) override;
    void do_append(std::span<const PositionToken> chain) override;
    void do_query(std::span<const uint32_t> positions, double temperature,
                  std::vector<double>& probs) override;
    void do_chain(std::span<const PositionToken> chain, double temperature,
                  std::vector<double>& probs) override;

private:
    uint32_t T_;
    double p_;
};

// Uniform distribution over permutations of the classes 0..T-1: conditionals
// are uniform over the classes not yet placed.
class PermutationSession final : public DecodeSession {
public:
    explicit PermutationSession(uint32_t seq_len);

    uint32_t seq_len() const override { return T_; }
    uint32_t data_vocab() const override { return T_; }

protected:
    void do_reset(std::span<const PositionToken> known) override;
    void do_append(std::span<const PositionToken> chain) override;
    void do_query(std::span<const uint32_t> positions, double temperature,
                  std::vector<double>& probs) override;
    void do_chain(std::span<const PositionToken> chain, double temperature,
                  std::vector<double>& probs) override;

private:
    uint32_t T_;
    std::vector<char> used_;  // per class
    uint32_t n_used_ = 0;
};

}  // namespace sigma
