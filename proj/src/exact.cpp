#include "sigma/exact.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace sigma {

void power_normalize(std::span<double> probs, double temperature) {
    if (!(temperature > 0)) throw std::invalid_argument("power_normalize: temperature must be positive");
    double total = 0;
    for (auto& p : probs) {
        if (p < 0) throw std::invalid_argument("power_normalize: negative probability");
        if (p > 0 && temperature != 1.0) p = std::pow(p, 1.0 / temperature);
        total += p;
    }
    if (total == 0) return;
    for (auto& p : probs) p /= total;
}

SupportJoint SupportJoint::from_members(uint32_t vocab, std::vector<std::vector<uint16_t>> seqs,
                                        std::vector<double> weights) {
    if (seqs.empty()) throw std::invalid_argument("support: no members");
    if (weights.size() != seqs.size())
        throw std::invalid_argument("support: weights do not match members");
    if (vocab < 1) throw std::invalid_argument("support: vocab must be positive");
    SupportJoint joint;
    joint.seq_len = static_cast<uint32_t>(seqs[0].size());
    if (joint.seq_len == 0) throw std::invalid_argument("support: empty sequences");
    joint.vocab = vocab;
    for (const auto& s : seqs) {
        if (s.size() != joint.seq_len) throw std::invalid_argument("support: ragged members");
        for (uint16_t tok : s)
            if (tok >= vocab) throw std::invalid_argument("support: token out of range");
    }
    double total = 0;
    for (double w : weights) {
        if (!(w > 0)) throw std::invalid_argument("support: weights must be positive");
        total += w;
    }
    joint.seqs = std::move(seqs);
    joint.probs = std::move(weights);
    for (auto& p : joint.probs) p /= total;
    return joint;
}

SupportJoint SupportJoint::uniform(uint32_t vocab, std::vector<std::vector<uint16_t>> seqs) {
    std::vector<double> weights(seqs.size(), 1.0);
    return from_members(vocab, std::move(seqs), std::move(weights));
}

SupportJoint SupportJoint::bernoulli_product(uint32_t T, double p) {
    if (T == 0 || T > 20) throw std::invalid_argument("bernoulli_product: T must be in [1, 20]");
    if (!(p > 0) || !(p < 1)) throw std::invalid_argument("bernoulli_product: p must be in (0, 1)");
    const uint32_t count = 1u << T;
    std::vector<std::vector<uint16_t>> seqs(count);
    std::vector<double> weights(count);
    for (uint32_t i = 0; i < count; i++) {
        seqs[i].resize(T);
        double w = 1.0;
        for (uint32_t t = 0; t < T; t++) {
            const uint16_t bit = static_cast<uint16_t>((i >> t) & 1u);
            seqs[i][t] = bit;
            w *= bit ? p : 1.0 - p;
        }
        weights[i] = w;
    }
    return from_members(2, std::move(seqs), std::move(weights));
}

SupportJoint SupportJoint::all_permutations(uint32_t T) {
    if (T == 0 || T > 8) throw std::invalid_argument("all_permutations: T must be in [1, 8]");
    std::vector<uint16_t> base(T);
    std::iota(base.begin(), base.end(), static_cast<uint16_t>(0));
    std::vector<std::vector<uint16_t>> seqs;
    do {
        seqs.push_back(base);
    } while (std::next_permutation(base.begin(), base.end()));
    return uniform(T, std::move(seqs));
}

SupportJoint SupportJoint::step_sequences(uint32_t T, uint32_t step_len) {
    if (T == 0) throw std::invalid_argument("step_sequences: T must be positive");
    if (step_len == 0 || step_len > T)
        throw std::invalid_argument("step_sequences: step_len must be in [1, T]");
    std::vector<std::vector<uint16_t>> seqs;
    for (uint32_t offset = 0; offset + step_len <= T; offset++) {
        std::vector<uint16_t> s(T, 0);
        for (uint32_t t = offset; t < offset + step_len; t++) s[t] = 1;
        seqs.push_back(std::move(s));
    }
    return uniform(2, std::move(seqs));
}

SupportJoint SupportJoint::random_binary(uint32_t T, uint64_t seed) {
    if (T == 0 || T > 12) throw std::invalid_argument("random_binary: T must be in [1, 12]");
    const uint32_t count = 1u << T;
    std::vector<std::vector<uint16_t>> seqs(count);
    std::vector<double> weights(count);
    Rng rng(seed);
    for (uint32_t i = 0; i < count; i++) {
        seqs[i].resize(T);
        for (uint32_t t = 0; t < T; t++) seqs[i][t] = static_cast<uint16_t>((i >> t) & 1u);
        weights[i] = 0.2 + rng.uniform();
    }
    return from_members(2, std::move(seqs), std::move(weights));
}

int64_t SupportJoint::find(std::span<const uint16_t> seq) const {
    for (size_t i = 0; i < seqs.size(); i++) {
        if (seqs[i].size() == seq.size() && std::equal(seq.begin(), seq.end(), seqs[i].begin()))
            return static_cast<int64_t>(i);
    }
    return -1;
}

double SupportJoint::sequence_prob(std::span<const uint16_t> seq) const {
    const int64_t i = find(seq);
    return i < 0 ? 0.0 : probs[static_cast<size_t>(i)];
}

std::vector<double> SupportJoint::conditional(std::span<const PositionToken> fixed,
                                              uint32_t pos) const {
    if (pos >= seq_len) throw std::invalid_argument("conditional: position out of range");
    for (const auto& f : fixed) {
        if (f.pos >= seq_len) throw std::invalid_argument("conditional: fixed position out of range");
        if (f.pos == pos) throw std::invalid_argument("conditional: position is fixed");
    }
    std::vector<double> cond(vocab, 0.0);
    for (size_t i = 0; i < seqs.size(); i++) {
        bool ok = true;
        for (const auto& f : fixed) {
            if (seqs[i][f.pos] != f.tok) {
                ok = false;
                break;
            }
        }
        if (ok) cond[seqs[i][pos]] += probs[i];
    }
    const double total = std::accumulate(cond.begin(), cond.end(), 0.0);
    if (total > 0)
        for (auto& c : cond) c /= total;
    return cond;
}

SupportSession::SupportSession(const SupportJoint& joint)
    : SupportSession(std::shared_ptr<const SupportJoint>(std::shared_ptr<const void>(), &joint)) {}

SupportSession::SupportSession(std::shared_ptr<const SupportJoint> joint) : joint_(std::move(joint)) {
    if (!joint_ || joint_->seqs.empty() || joint_->seqs.size() != joint_->probs.size())
        throw std::invalid_argument("support session: malformed joint");
}

void SupportSession::filter(std::vector<uint32_t>& live, const SupportJoint& joint, uint32_t pos,
                            uint16_t tok) {
    live.erase(std::remove_if(live.begin(), live.end(),
                              [&](uint32_t i) { return joint.seqs[i][pos] != tok; }),
               live.end());
}

void SupportSession::do_reset(std::span<const PositionToken> known) {
    live_.resize(joint_->seqs.size());
    std::iota(live_.begin(), live_.end(), 0u);
    for (const auto& k : known) filter(live_, *joint_, k.pos, k.tok);
    if (live_.empty()) throw std::runtime_error("support session: prompt has no support");
}

void SupportSession::do_append(std::span<const PositionToken> chain) {
    for (const auto& c : chain) filter(live_, *joint_, c.pos, c.tok);
    if (live_.empty()) throw std::runtime_error("support session: committed set has no support");
}

void SupportSession::do_query(std::span<const uint32_t> positions, double temperature,
                              std::vector<double>& probs) {
    const uint32_t dv = joint_->vocab;
    probs.assign(static_cast<size_t>(positions.size()) * dv, 0.0);
    for (size_t r = 0; r < positions.size(); r++) {
        double* row = probs.data() + r * dv;
        for (uint32_t i : live_) row[joint_->seqs[i][positions[r]]] += joint_->probs[i];
        power_normalize(std::span<double>(row, dv), temperature);
    }
}

void SupportSession::do_chain(std::span<const PositionToken> chain, double temperature,
                              std::vector<double>& probs) {
    std::vector<uint32_t> scratch = live_;
    const uint32_t dv = joint_->vocab;
    std::vector<double> row(dv);
    probs.resize(chain.size());
    for (size_t t = 0; t < chain.size(); t++) {
        std::fill(row.begin(), row.end(), 0.0);
        for (uint32_t i : scratch) row[joint_->seqs[i][chain[t].pos]] += joint_->probs[i];
        power_normalize(row, temperature);
        probs[t] = row[chain[t].tok];
        filter(scratch, *joint_, chain[t].pos, chain[t].tok);
    }
}

ProductSession::ProductSession(uint32_t seq_len, double p) : T_(seq_len), p_(p) {
    if (seq_len == 0) throw std::invalid_argument("product session: seq_len must be positive");
    if (!(p > 0) || !(p < 1)) throw std::invalid_argument("product session: p must be in (0, 1)");
}

void ProductSession::do_reset(std::span<const PositionToken>) {}

void ProductSession::do_append(std::span<const PositionToken>) {}

void ProductSession::do_query(std::span<const uint32_t> positions, double temperature,
                              std::vector<double>& probs) {
    probs.resize(positions.size() * 2);
    for (size_t r = 0; r < positions.size(); r++) {
        double* row = probs.data() + r * 2;
        row[0] = 1.0 - p_;
        row[1] = p_;
        power_normalize(std::span<double>(row, 2), temperature);
    }
}

void ProductSession::do_chain(std::span<const PositionToken> chain, double temperature,
                              std::vector<double>& probs) {
    double row[2] = {1.0 - p_, p_};
    power_normalize(std::span<double>(row, 2), temperature);
    probs.resize(chain.size());
    for (size_t t = 0; t < chain.size(); t++) probs[t] = row[chain[t].tok];
}

PermutationSession::PermutationSession(uint32_t seq_len) : T_(seq_len) {
    if (seq_len == 0) throw std::invalid_argument("permutation session: seq_len must be positive");
    used_.assign(T_, 0);
}

void PermutationSession::do_reset(std::span<const PositionToken> known) {
    used_.assign(T_, 0);
    n_used_ = 0;
    for (const auto& k : known) {
        if (used_[k.tok]) throw std::runtime_error("permutation session: prompt repeats a class");
        used_[k.tok] = 1;
        n_used_++;
    }
}

void PermutationSession::do_append(std::span<const PositionToken> chain) {
    for (const auto& c : chain) {
        if (used_[c.tok]) throw std::runtime_error("permutation session: class already placed");
        used_[c.tok] = 1;
        n_used_++;
    }
}

void PermutationSession::do_query(std::span<const uint32_t> positions, double temperature,
                                  std::vector<double>& probs) {
    // A tempered uniform distribution is still uniform, so the temperature
    // only needs validating (the base class already did).
    (void)temperature;
    const double w = 1.0 / (T_ - n_used_);
    probs.assign(static_cast<size_t>(positions.size()) * T_, 0.0);
    for (size_t r = 0; r < positions.size(); r++) {
        double* row = probs.data() + r * T_;
        for (uint32_t v = 0; v < T_; v++)
            if (!used_[v]) row[v] = w;
    }
}

void PermutationSession::do_chain(std::span<const PositionToken> chain, double temperature,
                                  std::vector<double>& probs) {
    (void)temperature;
    std::vector<char> scratch = used_;
    uint32_t placed = n_used_;
    bool dead = false;
    probs.resize(chain.size());
    for (size_t t = 0; t < chain.size(); t++) {
        if (dead || scratch[chain[t].tok]) {
            probs[t] = 0.0;
            dead = true;
            continue;
        }
        probs[t] = 1.0 / (T_ - placed);
        scratch[chain[t].tok] = 1;
        placed++;
    }
}

}  // namespace sigma
