#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sigma/orders.hpp"

namespace sigma {

// Geometry of the shuffled-order transformer. The vocabulary includes one
// reserved begin-of-sequence id (the last id, vocab_size - 1); data tokens
// live in [0, vocab_size - 2]. Each input slot embeds its token together with
// two sinusoidal position codes, the slot's own sequence position and the
// position it predicts next, concatenated and projected to d_model.
struct ModelConfig {
    uint32_t vocab_size = 0;  // data vocabulary + 1 reserved BOS id
    uint32_t max_len = 0;     // longest supported sequence length
    uint32_t d_model = 96;
    uint32_t n_layers = 3;
    uint32_t n_heads = 4;
    uint32_t d_ff = 384;
    double dropout = 0.0;
    uint32_t pe_dim_in = 0;   // 0 = pick the default split
    uint32_t pe_dim_out = 0;

    uint32_t token_dim() const { return d_model - pe_dim_in - pe_dim_out; }
    uint32_t head_dim() const { return d_model / n_heads; }
    uint32_t bos_id() const { return vocab_size - 1; }
    uint32_t in_pos_sentinel() const { return max_len; }  // BOS carries this input position

    // Resolves defaulted pe dims (roughly equal thirds, even) and validates.
    ModelConfig resolved() const;
    void validate() const;

    static ModelConfig from_json(const std::string& json_text);
    std::string to_json() const;
};

// pe[2i] = sin(pos / 10000^(2i/dim)), pe[2i+1] = cos(pos / 10000^(2i/dim)).
std::vector<double> sinusoidal_pe(uint32_t position, uint32_t dim);

// One training batch of shuffled sequences. Slot 0 carries BOS with a
// sentinel input position; slot t >= 1 carries the token at position
// order[t-1]. Slot t's output position is order[t] and its target is the
// token there, so each slot predicts the next position in the order.
struct ShuffledBatch {
    uint32_t B = 0;
    uint32_t T = 0;
    std::vector<int32_t> values;   // B*T token ids fed to the embedding
    std::vector<int32_t> in_pos;   // B*T input positions (sentinel for BOS)
    std::vector<int32_t> out_pos;  // B*T predicted positions
    std::vector<int32_t> targets;  // B*T target token ids
};

// tokens is row-major [B, T] with data tokens only (BOS is added here).
ShuffledBatch build_shuffled_batch(std::span<const uint16_t> tokens, uint32_t B, uint32_t T,
                                   std::span<const Order> orders, const ModelConfig& cfg);

// Probability that a sequence keeps the identity order at this training step:
// c0 * (1 - step / total_steps).
double curriculum_fraction(uint64_t step, uint64_t total_steps, double c0);

enum class OrderMode { curriculum, left_to_right, random, fractal };

OrderMode order_mode_from_string(const std::string& name);
std::string order_mode_to_string(OrderMode mode);

struct TrainConfig {
    uint64_t steps = 1000;
    uint32_t batch_size = 64;
    double lr = 1e-3;
    double warmup_frac = 0.05;    // linear warmup over the first fraction of steps
    double final_lr_frac = 0.1;   // cosine decay floor, as a fraction of lr
    double grad_clip = 1.0;
    double weight_decay = 0.0;
    double beta1 = 0.9;
    double beta2 = 0.95;
    double adam_eps = 1e-8;
    OrderMode order_mode = OrderMode::curriculum;
    double curriculum_start = 0.5;  // identity fraction at step 0 under curriculum
    uint32_t fixed_prefix = 0;      // positions [0, fixed_prefix) always come first, in natural order
    uint64_t seed = 0;
    bool seed_set = false;          // seeds are mandatory; no wall-clock fallback
    uint32_t log_interval = 50;
    uint32_t eval_interval = 200;

    void validate() const;
    static TrainConfig from_json(const std::string& json_text);
    std::string to_json() const;
};

struct TrainPoint {
    uint64_t step = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double val_nll = 0.0;   // mean nats per token under left-to-right eval orders
    bool has_val = false;
};

struct TrainResult {
    std::vector<TrainPoint> log;
    double final_train_loss = 0.0;
    double final_val_nll = 0.0;
    bool has_val = false;
};

}  // namespace sigma
