#include "sigma/model.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace sigma {

ModelConfig ModelConfig::resolved() const {
    ModelConfig cfg = *this;
    if (cfg.pe_dim_in == 0 && cfg.pe_dim_out == 0) {
        uint32_t third = cfg.d_model / 3;
        third -= third % 2;
        cfg.pe_dim_in = third;
        cfg.pe_dim_out = third;
    }
    cfg.validate();
    return cfg;
}

void ModelConfig::validate() const {
    if (vocab_size < 2) throw std::invalid_argument("model config: vocab_size must be at least 2");
    if (max_len < 2) throw std::invalid_argument("model config: max_len must be at least 2");
    if (d_model == 0 || n_heads == 0 || d_model % n_heads != 0)
        throw std::invalid_argument("model config: d_model must be a positive multiple of n_heads");
    if (n_layers == 0) throw std::invalid_argument("model config: n_layers must be positive");
    if (d_ff == 0) throw std::invalid_argument("model config: d_ff must be positive");
    if (pe_dim_in == 0 || pe_dim_out == 0 || pe_dim_in % 2 != 0 || pe_dim_out % 2 != 0)
        throw std::invalid_argument("model config: position code dims must be positive and even");
    if (pe_dim_in + pe_dim_out >= d_model)
        throw std::invalid_argument("model config: token embedding dim must stay positive");
    if (!(dropout >= 0.0 && dropout < 1.0))
        throw std::invalid_argument("model config: dropout must be in [0, 1)");
}

ModelConfig ModelConfig::from_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("model config json: ") + e.what());
    }
    ModelConfig cfg;
    cfg.vocab_size = j.value("vocab_size", cfg.vocab_size);
    cfg.max_len = j.value("max_len", cfg.max_len);
    cfg.d_model = j.value("d_model", cfg.d_model);
    cfg.n_layers = j.value("n_layers", cfg.n_layers);
    cfg.n_heads = j.value("n_heads", cfg.n_heads);
    cfg.d_ff = j.value("d_ff", cfg.d_ff);
    cfg.dropout = j.value("dropout", cfg.dropout);
    cfg.pe_dim_in = j.value("pe_dim_in", cfg.pe_dim_in);
    cfg.pe_dim_out = j.value("pe_dim_out", cfg.pe_dim_out);
    return cfg.resolved();
}

std::string ModelConfig::to_json() const {
    nlohmann::json j;
    j["vocab_size"] = vocab_size;
    j["max_len"] = max_len;
    j["d_model"] = d_model;
    j["n_layers"] = n_layers;
    j["n_heads"] = n_heads;
    j["d_ff"] = d_ff;
    j["dropout"] = dropout;
    j["pe_dim_in"] = pe_dim_in;
    j["pe_dim_out"] = pe_dim_out;
    return j.dump();
}

std::vector<double> sinusoidal_pe(uint32_t position, uint32_t dim) {
    if (dim == 0 || dim % 2 != 0) throw std::invalid_argument("sinusoidal_pe: dim must be positive and even");
    std::vector<double> pe(dim);
    for (uint32_t i = 0; i < dim / 2; i++) {
        const double freq = std::pow(10000.0, -2.0 * static_cast<double>(i) / static_cast<double>(dim));
        const double angle = static_cast<double>(position) * freq;
        pe[2 * i] = std::sin(angle);
        pe[2 * i + 1] = std::cos(angle);
    }
    return pe;
}

ShuffledBatch build_shuffled_batch(std::span<const uint16_t> tokens, uint32_t B, uint32_t T,
                                   std::span<const Order> orders, const ModelConfig& cfg) {
    if (T == 0 || B == 0) throw std::invalid_argument("build_shuffled_batch: empty batch");
    if (tokens.size() != static_cast<size_t>(B) * T)
        throw std::invalid_argument("build_shuffled_batch: token buffer does not match B*T");
    if (orders.size() != B) throw std::invalid_argument("build_shuffled_batch: need one order per row");
    if (T > cfg.max_len) throw std::invalid_argument("build_shuffled_batch: T exceeds model max_len");

    ShuffledBatch batch;
    batch.B = B;
    batch.T = T;
    batch.values.resize(static_cast<size_t>(B) * T);
    batch.in_pos.resize(batch.values.size());
    batch.out_pos.resize(batch.values.size());
    batch.targets.resize(batch.values.size());

    for (uint32_t b = 0; b < B; b++) {
        const Order& order = orders[b];
        if (order.size() != T)
            throw std::invalid_argument("build_shuffled_batch: order length does not match T");
        const uint16_t* row = tokens.data() + static_cast<size_t>(b) * T;
        int32_t* values = batch.values.data() + static_cast<size_t>(b) * T;
        int32_t* in_pos = batch.in_pos.data() + static_cast<size_t>(b) * T;
        int32_t* out_pos = batch.out_pos.data() + static_cast<size_t>(b) * T;
        int32_t* targets = batch.targets.data() + static_cast<size_t>(b) * T;
        for (uint32_t t = 0; t < T; t++) {
            if (row[t] >= cfg.bos_id())
                throw std::invalid_argument("build_shuffled_batch: data token collides with the BOS id");
            if (t == 0) {
                values[0] = static_cast<int32_t>(cfg.bos_id());
                in_pos[0] = static_cast<int32_t>(cfg.in_pos_sentinel());
            } else {
                values[t] = row[order.perm[t - 1]];
                in_pos[t] = static_cast<int32_t>(order.perm[t - 1]);
            }
            out_pos[t] = static_cast<int32_t>(order.perm[t]);
            targets[t] = row[order.perm[t]];
        }
    }
    return batch;
}

double curriculum_fraction(uint64_t step, uint64_t total_steps, double c0) {
    if (total_steps == 0) throw std::invalid_argument("curriculum_fraction: total_steps must be positive");
    if (step > total_steps) throw std::invalid_argument("curriculum_fraction: step beyond total_steps");
    if (!(c0 >= 0.0 && c0 <= 1.0)) throw std::invalid_argument("curriculum_fraction: c0 must be in [0, 1]");
    return c0 * (1.0 - static_cast<double>(step) / static_cast<double>(total_steps));
}

OrderMode order_mode_from_string(const std::string& name) {
    if (name == "curriculum") return OrderMode::curriculum;
    if (name == "ltr") return OrderMode::left_to_right;
    if (name == "random") return OrderMode::random;
    if (name == "fractal") return OrderMode::fractal;
    throw std::invalid_argument("order mode must be one of curriculum|ltr|random|fractal, got \"" + name + "\"");
}

std::string order_mode_to_string(OrderMode mode) {
    switch (mode) {
        case OrderMode::curriculum: return "curriculum";
        case OrderMode::left_to_right: return "ltr";
        case OrderMode::random: return "random";
        case OrderMode::fractal: return "fractal";
    }
    throw std::logic_error("order_mode_to_string: unknown mode");
}

void TrainConfig::validate() const {
    if (!seed_set) throw std::invalid_argument("train config: seed is mandatory");
    if (steps == 0) throw std::invalid_argument("train config: steps must be positive");
    if (batch_size == 0) throw std::invalid_argument("train config: batch_size must be positive");
    if (!(lr > 0.0)) throw std::invalid_argument("train config: lr must be positive");
    if (!(warmup_frac >= 0.0 && warmup_frac <= 0.5))
        throw std::invalid_argument("train config: warmup_frac must be in [0, 0.5]");
    if (!(final_lr_frac >= 0.0 && final_lr_frac <= 1.0))
        throw std::invalid_argument("train config: final_lr_frac must be in [0, 1]");
    if (!(curriculum_start >= 0.0 && curriculum_start <= 1.0))
        throw std::invalid_argument("train config: curriculum_start must be in [0, 1]");
    if (log_interval == 0 || eval_interval == 0)
        throw std::invalid_argument("train config: intervals must be positive");
}

TrainConfig TrainConfig::from_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("train config json: ") + e.what());
    }
    TrainConfig cfg;
    cfg.steps = j.value("steps", cfg.steps);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.lr = j.value("lr", cfg.lr);
    cfg.warmup_frac = j.value("warmup_frac", cfg.warmup_frac);
    cfg.final_lr_frac = j.value("final_lr_frac", cfg.final_lr_frac);
    cfg.grad_clip = j.value("grad_clip", cfg.grad_clip);
    cfg.weight_decay = j.value("weight_decay", cfg.weight_decay);
    cfg.beta1 = j.value("beta1", cfg.beta1);
    cfg.beta2 = j.value("beta2", cfg.beta2);
    cfg.adam_eps = j.value("adam_eps", cfg.adam_eps);
    if (j.contains("order_mode")) cfg.order_mode = order_mode_from_string(j.at("order_mode"));
    cfg.curriculum_start = j.value("curriculum_start", cfg.curriculum_start);
    cfg.fixed_prefix = j.value("fixed_prefix", cfg.fixed_prefix);
    if (j.contains("seed")) {
        cfg.seed = j.at("seed").get<uint64_t>();
        cfg.seed_set = true;
    }
    cfg.log_interval = j.value("log_interval", cfg.log_interval);
    cfg.eval_interval = j.value("eval_interval", cfg.eval_interval);
    cfg.validate();
    return cfg;
}

std::string TrainConfig::to_json() const {
    nlohmann::json j;
    j["steps"] = steps;
    j["batch_size"] = batch_size;
    j["lr"] = lr;
    j["warmup_frac"] = warmup_frac;
    j["final_lr_frac"] = final_lr_frac;
    j["grad_clip"] = grad_clip;
    j["weight_decay"] = weight_decay;
    j["beta1"] = beta1;
    j["beta2"] = beta2;
    j["adam_eps"] = adam_eps;
    j["order_mode"] = order_mode_to_string(order_mode);
    j["curriculum_start"] = curriculum_start;
    j["fixed_prefix"] = fixed_prefix;
    if (seed_set) j["seed"] = seed;
    j["log_interval"] = log_interval;
    j["eval_interval"] = eval_interval;
    return j.dump();
}

}  // namespace sigma
