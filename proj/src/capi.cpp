#include "sigma_gpt.h"

#include <cstring>
#include <fstream>
#include <iostream>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sigma/checkpoint.hpp"
#include "sigma/dataset.hpp"
#include "sigma/decode.hpp"
#include "sigma/eval.hpp"
#include "sigma/exact.hpp"
#include "sigma/model.hpp"
#include "sigma/orders.hpp"
#include "sigma/runtime.hpp"
#include "sigma/tasks.hpp"
#include "sigma/train.hpp"
#include "sigma/transformer.hpp"
#include "sigma/walk.hpp"

struct sg_dataset {
    sigma::Dataset data;
};

struct sg_model {
    std::shared_ptr<sigma::Transformer<float>> model;
};

struct sg_session {
    std::shared_ptr<const void> keepalive;  // model backing a transformer session, if any
    std::unique_ptr<sigma::DecodeSession> impl;
};

namespace {

thread_local std::string t_error;

template <typename Fn>
sg_status guarded(Fn&& fn) {
    try {
        fn();
        return SG_OK;
    } catch (const std::invalid_argument& e) {
        t_error = e.what();
        return SG_ERR_ARG;
    } catch (const std::exception& e) {
        t_error = e.what();
        return SG_ERR_RUNTIME;
    } catch (...) {
        t_error = "unknown error";
        return SG_ERR_RUNTIME;
    }
}

void need(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

std::vector<sigma::PositionToken> to_pairs(const uint32_t* pos, const uint16_t* tok, size_t n) {
    need(n == 0 || (pos != nullptr && tok != nullptr), "position/token arrays are null");
    std::vector<sigma::PositionToken> pairs(n);
    for (size_t i = 0; i < n; i++) pairs[i] = {pos[i], tok[i]};
    return pairs;
}

sigma::OrderMode decode_order_mode(const char* name) {
    need(name != nullptr, "order mode is null");
    const sigma::OrderMode mode = sigma::order_mode_from_string(name);
    need(mode != sigma::OrderMode::curriculum, "order mode must be ltr, random or fractal");
    return mode;
}

sigma::WalkParams walk_params_for(std::vector<int32_t> starts, double p_move, double p_stay,
                                  uint32_t T) {
    sigma::WalkParams params;
    params.starts = std::move(starts);
    params.p_move = p_move;
    params.p_stay = p_stay;
    params.T = T;
    return params;
}

void copy_pmf(const sigma::WalkPmf& pmf, int32_t* out_min, double* out_p, size_t cap,
              size_t* out_len) {
    need(out_min != nullptr && out_p != nullptr && out_len != nullptr, "output pointers are null");
    need(pmf.p.size() <= cap, "pmf longer than the output buffer");
    *out_min = pmf.min_value;
    *out_len = pmf.p.size();
    std::memcpy(out_p, pmf.p.data(), pmf.p.size() * sizeof(double));
}

}  // namespace

extern "C" {

const char* sg_last_error(void) { return t_error.c_str(); }

void sg_set_threads(int n) { sigma::set_threads(n); }

sg_status sg_identity_order(uint32_t n, uint32_t* out) {
    return guarded([&] {
        need(out != nullptr, "out is null");
        const sigma::Order order = sigma::identity_order(n);
        std::memcpy(out, order.perm.data(), n * sizeof(uint32_t));
    });
}

sg_status sg_fractal_order(uint32_t n, uint32_t* out) {
    return guarded([&] {
        need(out != nullptr, "out is null");
        const sigma::Order order = sigma::fractal_order(n);
        std::memcpy(out, order.perm.data(), n * sizeof(uint32_t));
    });
}

sg_status sg_random_order(uint32_t n, uint64_t seed, uint32_t* out) {
    return guarded([&] {
        need(out != nullptr, "out is null");
        sigma::Rng rng(seed);
        const sigma::Order order = sigma::uniform_random_order(n, rng);
        std::memcpy(out, order.perm.data(), n * sizeof(uint32_t));
    });
}

sg_status sg_curriculum_fraction(uint64_t step, uint64_t total_steps, double c0, double* out) {
    return guarded([&] {
        need(out != nullptr, "out is null");
        *out = sigma::curriculum_fraction(step, total_steps, c0);
    });
}

sg_status sg_dataset_generate(const char* task_json, uint64_t count, uint64_t seed,
                              sg_dataset** out) {
    return guarded([&] {
        need(task_json != nullptr && out != nullptr, "task_json/out is null");
        const sigma::TaskSpec spec = sigma::TaskSpec::from_json(task_json);
        *out = new sg_dataset{sigma::generate_dataset(spec, count, seed)};
    });
}

sg_status sg_dataset_read(const char* path, sg_dataset** out) {
    return guarded([&] {
        need(path != nullptr && out != nullptr, "path/out is null");
        *out = new sg_dataset{sigma::read_dataset(path)};
    });
}

sg_status sg_dataset_write(const sg_dataset* data, const char* path) {
    return guarded([&] {
        need(data != nullptr && path != nullptr, "dataset/path is null");
        sigma::write_dataset(data->data, path);
    });
}

sg_status sg_dataset_generate_file(const char* task_json, uint64_t count, uint64_t seed,
                                   const char* path) {
    return guarded([&] {
        need(task_json != nullptr && path != nullptr, "task_json/path is null");
        const sigma::TaskSpec spec = sigma::TaskSpec::from_json(task_json);
        sigma::generate_dataset_file(spec, count, seed, path);
    });
}

sg_status sg_dataset_info(const sg_dataset* data, uint32_t* vocab_size, uint32_t* seq_len,
                          uint64_t* count) {
    return guarded([&] {
        need(data != nullptr, "dataset is null");
        if (vocab_size) *vocab_size = data->data.vocab_size;
        if (seq_len) *seq_len = data->data.seq_len;
        if (count) *count = data->data.count();
    });
}

sg_status sg_dataset_row(const sg_dataset* data, uint64_t index, uint16_t* out) {
    return guarded([&] {
        need(data != nullptr && out != nullptr, "dataset/out is null");
        need(index < data->data.count(), "row index out of range");
        const auto row = data->data.row(index);
        std::memcpy(out, row.data(), row.size() * sizeof(uint16_t));
    });
}

void sg_dataset_free(sg_dataset* data) { delete data; }

sg_status sg_model_create(const char* model_json, uint64_t init_seed, sg_model** out) {
    return guarded([&] {
        need(model_json != nullptr && out != nullptr, "model_json/out is null");
        const sigma::ModelConfig cfg = sigma::ModelConfig::from_json(model_json);
        auto model = std::make_shared<sigma::Transformer<float>>(cfg);
        sigma::Rng rng(init_seed);
        model->init_params(rng);
        *out = new sg_model{std::move(model)};
    });
}

sg_status sg_model_load(const char* path, sg_model** out) {
    return guarded([&] {
        need(path != nullptr && out != nullptr, "path/out is null");
        *out = new sg_model{
            std::make_shared<sigma::Transformer<float>>(sigma::load_model(path))};
    });
}

sg_status sg_model_save(const sg_model* model, const char* path) {
    return guarded([&] {
        need(model != nullptr && path != nullptr, "model/path is null");
        sigma::save_model(path, *model->model);
    });
}

sg_status sg_model_info(const sg_model* model, uint32_t* vocab_size, uint32_t* max_len,
                        uint64_t* n_params) {
    return guarded([&] {
        need(model != nullptr, "model is null");
        const sigma::ModelConfig& cfg = model->model->config();
        if (vocab_size) *vocab_size = cfg.vocab_size;
        if (max_len) *max_len = cfg.max_len;
        if (n_params) *n_params = model->model->layout().total;
    });
}

sg_status sg_model_train(sg_model* model, const sg_dataset* train_data,
                         const sg_dataset* val_data, const char* train_json,
                         const char* log_path, double* out_final_loss,
                         double* out_final_val_nll) {
    return guarded([&] {
        need(model != nullptr && train_data != nullptr && train_json != nullptr,
             "model/train_data/train_json is null");
        const sigma::TrainConfig cfg = sigma::TrainConfig::from_json(train_json);
        const sigma::Dataset* val = val_data ? &val_data->data : nullptr;

        std::ofstream log_file;
        std::ostream* log = nullptr;
        if (log_path != nullptr) {
            if (std::strcmp(log_path, "-") == 0) {
                log = &std::cout;
            } else {
                log_file.open(log_path, std::ios::trunc);
                if (!log_file) throw std::runtime_error(std::string("cannot open log file ") + log_path);
                log = &log_file;
            }
        }
        const sigma::TrainResult res =
            sigma::train_model(*model->model, train_data->data, val, cfg, log);
        if (out_final_loss) *out_final_loss = res.final_train_loss;
        if (out_final_val_nll) *out_final_val_nll = res.has_val ? res.final_val_nll : 0.0;
    });
}

sg_status sg_model_perplexity(sg_model* model, const sg_dataset* data, const char* order_mode,
                              uint64_t seed, uint32_t batch_size, double* out) {
    return guarded([&] {
        need(model != nullptr && data != nullptr && out != nullptr, "model/data/out is null");
        const sigma::OrderMode mode = decode_order_mode(order_mode);
        *out = sigma::perplexity(*model->model, data->data, mode, seed, batch_size);
    });
}

void sg_model_free(sg_model* model) { delete model; }

sg_status sg_session_from_model(const sg_model* model, uint32_t seq_len, sg_session** out) {
    return guarded([&] {
        need(model != nullptr && out != nullptr, "model/out is null");
        const uint32_t T = seq_len == 0 ? model->model->config().max_len : seq_len;
        auto impl = std::make_unique<sigma::TransformerSession>(*model->model, T);
        *out = new sg_session{model->model, std::move(impl)};
    });
}

sg_status sg_session_from_checkpoint(const char* path, uint32_t seq_len, sg_session** out) {
    return guarded([&] {
        need(path != nullptr && out != nullptr, "path/out is null");
        auto model = std::make_shared<sigma::Transformer<float>>(sigma::load_model(path));
        const uint32_t T = seq_len == 0 ? model->config().max_len : seq_len;
        auto impl = std::make_unique<sigma::TransformerSession>(*model, T);
        *out = new sg_session{std::move(model), std::move(impl)};
    });
}

sg_status sg_session_from_task(const char* task_json, sg_session** out) {
    return guarded([&] {
        need(task_json != nullptr && out != nullptr, "task_json/out is null");
        const sigma::TaskSpec spec = sigma::TaskSpec::from_json(task_json);
        *out = new sg_session{nullptr, sigma::exact_session_for_task(spec)};
    });
}

sg_status sg_session_info(const sg_session* session, uint32_t* seq_len, uint32_t* data_vocab) {
    return guarded([&] {
        need(session != nullptr, "session is null");
        if (seq_len) *seq_len = session->impl->seq_len();
        if (data_vocab) *data_vocab = session->impl->data_vocab();
    });
}

void sg_session_free(sg_session* session) { delete session; }

sg_status sg_session_reset(sg_session* session, const uint32_t* pos, const uint16_t* tok,
                           size_t n) {
    return guarded([&] {
        need(session != nullptr, "session is null");
        session->impl->reset(to_pairs(pos, tok, n));
    });
}

sg_status sg_session_append(sg_session* session, const uint32_t* pos, const uint16_t* tok,
                            size_t n) {
    return guarded([&] {
        need(session != nullptr, "session is null");
        session->impl->append(to_pairs(pos, tok, n));
    });
}

sg_status sg_session_query(sg_session* session, const uint32_t* positions, size_t n,
                           double temperature, double* out) {
    return guarded([&] {
        need(session != nullptr && out != nullptr, "session/out is null");
        need(n == 0 || positions != nullptr, "positions is null");
        std::vector<double> probs;
        session->impl->query_probs(std::span<const uint32_t>(positions, n), temperature, probs);
        std::memcpy(out, probs.data(), probs.size() * sizeof(double));
    });
}

sg_status sg_session_chain(sg_session* session, const uint32_t* pos, const uint16_t* tok,
                           size_t n, double temperature, double* out) {
    return guarded([&] {
        need(session != nullptr && out != nullptr, "session/out is null");
        std::vector<double> probs;
        session->impl->chain_probs(to_pairs(pos, tok, n), temperature, probs);
        std::memcpy(out, probs.data(), probs.size() * sizeof(double));
    });
}

sg_status sg_generate(sg_session* session, const uint32_t* known_pos, const uint16_t* known_tok,
                      size_t n_known, const char* order_mode, double temperature, uint64_t seed,
                      uint16_t* out_sequence, double* out_log_prob) {
    return guarded([&] {
        need(session != nullptr && out_sequence != nullptr, "session/out_sequence is null");
        const sigma::OrderMode mode = decode_order_mode(order_mode);
        const auto known = to_pairs(known_pos, known_tok, n_known);
        sigma::Rng rng(seed);
        const sigma::Order order = sigma::order_for_mode(mode, session->impl->seq_len(), rng);
        const sigma::GenerateResult res =
            sigma::generate(*session->impl, known, order, temperature, rng);
        std::memcpy(out_sequence, res.sequence.data(), res.sequence.size() * sizeof(uint16_t));
        if (out_log_prob) *out_log_prob = res.log_prob;
    });
}

sg_status sg_burst(sg_session* session, const uint32_t* known_pos, const uint16_t* known_tok,
                   size_t n_known, uint32_t n_orders, double temperature, int shared_noise,
                   uint64_t seed, uint16_t* out_sequence, uint32_t* out_rounds,
                   const char* trace_csv_path) {
    return guarded([&] {
        need(session != nullptr && out_sequence != nullptr, "session/out_sequence is null");
        const auto known = to_pairs(known_pos, known_tok, n_known);
        sigma::BurstConfig cfg;
        cfg.n_orders = n_orders;
        cfg.temperature = temperature;
        cfg.shared_noise = shared_noise != 0;
        sigma::Rng rng(seed);
        const sigma::BurstResult res = sigma::burst_rejection_sample(*session->impl, known, cfg, rng);
        std::memcpy(out_sequence, res.sequence.data(), res.sequence.size() * sizeof(uint16_t));
        if (out_rounds) *out_rounds = static_cast<uint32_t>(res.rounds.size());
        if (trace_csv_path) sigma::write_burst_trace_csv(trace_csv_path, res);
    });
}

sg_status sg_density(sg_session* session, const uint32_t* known_pos, const uint16_t* known_tok,
                     size_t n_known, const uint32_t* queries, size_t n_queries,
                     double temperature, double* out) {
    return guarded([&] {
        need(session != nullptr && out != nullptr, "session/out is null");
        need(n_queries == 0 || queries != nullptr, "queries is null");
        session->impl->reset(to_pairs(known_pos, known_tok, n_known));
        std::vector<double> probs;
        session->impl->query_probs(std::span<const uint32_t>(queries, n_queries), temperature,
                                   probs);
        std::memcpy(out, probs.data(), probs.size() * sizeof(double));
    });
}

sg_status sg_chain_rule_spread(sg_session* session, const uint16_t* sequence, size_t len,
                               uint32_t n_orders, uint64_t seed, double* out_spread) {
    return guarded([&] {
        need(session != nullptr && sequence != nullptr && out_spread != nullptr,
             "session/sequence/out_spread is null");
        *out_spread = sigma::chain_rule_check(
            *session->impl, std::span<const uint16_t>(sequence, len), n_orders, seed);
    });
}

sg_status sg_maze_eval(const sg_model* model, uint32_t width, uint32_t height,
                       uint32_t barriers, const char* layout, uint32_t n_mazes, int use_burst,
                       uint32_t n_orders, double temperature, const char* ar_order,
                       uint64_t seed, double* out_valid_rate, double* out_optimal_rate,
                       double* out_mean_rounds, double* out_mean_steps) {
    return guarded([&] {
        need(model != nullptr && layout != nullptr, "model/layout is null");
        sigma::MazeEvalParams params;
        params.maze = {width, height, barriers};
        if (std::strcmp(layout, "solved") == 0) params.layout = sigma::MazeLayout::solved;
        else if (std::strcmp(layout, "concat") == 0) params.layout = sigma::MazeLayout::concat;
        else throw std::invalid_argument("layout must be \"solved\" or \"concat\"");
        params.n_mazes = n_mazes;
        params.use_burst = use_burst != 0;
        params.burst.n_orders = n_orders;
        params.burst.temperature = temperature;
        params.temperature = temperature;
        params.ar_order = ar_order ? decode_order_mode(ar_order) : sigma::OrderMode::random;
        const sigma::MazeEvalResult res = sigma::maze_eval(*model->model, params, seed);
        if (out_valid_rate) *out_valid_rate = res.valid_rate;
        if (out_optimal_rate) *out_optimal_rate = res.optimal_rate;
        if (out_mean_rounds) *out_mean_rounds = res.mean_rounds;
        if (out_mean_steps) *out_mean_steps = res.mean_steps;
    });
}

sg_status sg_oracle_burst_curve(const char* task_json, const uint32_t* n_orders_list,
                                size_t n_configs, uint32_t n_samples,
                                int include_autoregressive, const char* ar_order,
                                double temperature, uint64_t seed, const char* csv_path) {
    return guarded([&] {
        need(task_json != nullptr && csv_path != nullptr, "task_json/csv_path is null");
        need(n_configs == 0 || n_orders_list != nullptr, "n_orders_list is null");
        const sigma::TaskSpec spec = sigma::TaskSpec::from_json(task_json);
        sigma::BurstBenchmarkParams params;
        params.n_orders.assign(n_orders_list, n_orders_list + n_configs);
        params.n_samples = n_samples;
        params.temperature = temperature;
        params.include_autoregressive = include_autoregressive != 0;
        params.ar_order = ar_order ? decode_order_mode(ar_order) : sigma::OrderMode::random;
        const auto points = sigma::oracle_burst_curve(spec, params, seed);
        sigma::write_step_curve_csv(csv_path, points);
    });
}

sg_status sg_walk_forward(double p_move, double p_stay, int32_t x0, uint32_t n_steps,
                          int32_t* out_min, double* out_p, size_t cap, size_t* out_len) {
    return guarded([&] {
        const sigma::WalkParams params = walk_params_for({x0}, p_move, p_stay, n_steps + 1);
        copy_pmf(sigma::walk_forward_pmf(params, x0, n_steps), out_min, out_p, cap, out_len);
    });
}

sg_status sg_walk_backward(const int32_t* starts, size_t n_starts, double p_move, double p_stay,
                           uint32_t t1, uint32_t t2, int32_t x_t2, int32_t* out_min,
                           double* out_p, size_t cap, size_t* out_len) {
    return guarded([&] {
        need(n_starts > 0 && starts != nullptr, "starts is empty");
        const sigma::WalkParams params =
            walk_params_for({starts, starts + n_starts}, p_move, p_stay, t2 + 1);
        copy_pmf(sigma::walk_backward_pmf(params, t1, t2, x_t2), out_min, out_p, cap, out_len);
    });
}

sg_status sg_class_count_pmf(uint32_t T, double* out) {
    return guarded([&] {
        need(out != nullptr, "out is null");
        const std::vector<double> pmf = sigma::class_count_pmf(T);
        std::memcpy(out, pmf.data(), pmf.size() * sizeof(double));
    });
}

sg_status sg_expected_incoherent(uint32_t T, double* out) {
    return guarded([&] {
        need(out != nullptr, "out is null");
        *out = sigma::expected_incoherent(T);
    });
}

sg_status sg_ideal_permutation_rounds(uint32_t T, uint64_t seed, uint32_t n_sims,
                                      double* out_mean, double* out_std) {
    return guarded([&] {
        need(out_mean != nullptr && out_std != nullptr, "output pointers are null");
        const sigma::MeanStd res = sigma::ideal_permutation_rounds(T, seed, n_sims);
        *out_mean = res.mean;
        *out_std = res.std_dev;
    });
}

}  // extern "C"
