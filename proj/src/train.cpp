#include "sigma/train.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "sigma/orders.hpp"
#include "sigma/rng.hpp"

namespace sigma {

double lr_at_step(const TrainConfig& cfg, uint64_t step) {
    const uint64_t warmup = static_cast<uint64_t>(std::llround(cfg.warmup_frac * cfg.steps));
    if (warmup > 0 && step < warmup)
        return cfg.lr * static_cast<double>(step + 1) / static_cast<double>(warmup);
    const double lr_final = cfg.lr * cfg.final_lr_frac;
    const uint64_t span = cfg.steps - warmup;
    if (span == 0) return lr_final;
    const double progress = static_cast<double>(step - warmup) / static_cast<double>(span);
    return lr_final + 0.5 * (cfg.lr - lr_final) * (1.0 + std::cos(progress * 3.14159265358979323846));
}

namespace {

struct Adam {
    std::vector<float> m, v;
    uint64_t t = 0;

    explicit Adam(size_t n) : m(n, 0.0f), v(n, 0.0f) {}

    void update(std::vector<float>& params, const std::vector<float>& grad, double lr,
                const TrainConfig& cfg) {
        t++;
        const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
        for (size_t i = 0; i < params.size(); i++) {
            const double gi = grad[i];
            const double mi = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
            const double vi = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
            m[i] = static_cast<float>(mi);
            v[i] = static_cast<float>(vi);
            const double step_i = (mi / bc1) / (std::sqrt(vi / bc2) + cfg.adam_eps);
            params[i] = static_cast<float>(params[i] - lr * (step_i + cfg.weight_decay * params[i]));
        }
    }
};

double grad_norm(const std::vector<float>& grad) {
    double acc = 0;
    for (float g : grad) acc += static_cast<double>(g) * g;
    return std::sqrt(acc);
}

}  // namespace

Order draw_training_order(const TrainConfig& cfg, uint32_t T, double identity_frac, Rng& rng) {
    if (cfg.fixed_prefix > T)
        throw std::invalid_argument("draw_training_order: fixed_prefix exceeds sequence length");
    if (cfg.fixed_prefix == T) return identity_order(T);
    const uint32_t p = cfg.fixed_prefix;
    const auto with_tail = [&](const Order& tail) {
        Order order = identity_order(T);
        for (uint32_t t = p; t < T; t++) order.perm[t] = p + tail.perm[t - p];
        return order;
    };
    switch (cfg.order_mode) {
        case OrderMode::left_to_right:
            return identity_order(T);
        case OrderMode::fractal:
            return with_tail(fractal_order(T - p));
        case OrderMode::random:
            return with_tail(uniform_random_order(T - p, rng));
        case OrderMode::curriculum:
            if (rng.uniform() < identity_frac) return identity_order(T);
            return with_tail(uniform_random_order(T - p, rng));
    }
    throw std::logic_error("draw_training_order: unknown order mode");
}

double dataset_nll(Transformer<float>& model, const Dataset& data, uint32_t batch_size) {
    if (data.count() == 0) throw std::invalid_argument("dataset_nll: empty dataset");
    const uint32_t T = data.seq_len;
    std::vector<Order> orders;
    std::vector<uint16_t> tokens;
    std::vector<double> nll;
    double total = 0;
    uint64_t slots = 0;
    for (uint64_t start = 0; start < data.count(); start += batch_size) {
        const uint32_t B = static_cast<uint32_t>(std::min<uint64_t>(batch_size, data.count() - start));
        tokens.resize(static_cast<size_t>(B) * T);
        orders.assign(B, identity_order(T));
        for (uint32_t b = 0; b < B; b++) {
            auto row = data.row(start + b);
            std::copy(row.begin(), row.end(), tokens.begin() + static_cast<size_t>(b) * T);
        }
        const ShuffledBatch batch = build_shuffled_batch(tokens, B, T, orders, model.config());
        model.nll_per_slot(batch, nll);
        for (double x : nll) total += x;
        slots += static_cast<uint64_t>(B) * T;
    }
    return total / static_cast<double>(slots);
}

TrainResult train_model(Transformer<float>& model, const Dataset& train_data,
                        const Dataset* val_data, const TrainConfig& cfg, std::ostream* log) {
    cfg.validate();
    if (train_data.count() == 0) throw std::invalid_argument("train_model: empty dataset");
    if (train_data.vocab_size + 1 != model.config().vocab_size)
        throw std::invalid_argument(
            "train_model: model vocab must be dataset vocab plus the reserved BOS id");
    if (train_data.seq_len > model.config().max_len)
        throw std::invalid_argument("train_model: dataset rows exceed model max_len");
    if (cfg.fixed_prefix > train_data.seq_len)
        throw std::invalid_argument("train_model: fixed_prefix exceeds row length");
    if (val_data && (val_data->vocab_size != train_data.vocab_size ||
                     val_data->seq_len != train_data.seq_len))
        throw std::invalid_argument("train_model: val geometry does not match train geometry");

    const uint32_t T = train_data.seq_len;
    const uint32_t B = cfg.batch_size;
    Rng batch_rng = Rng(cfg.seed).fork(1);

    Adam adam(model.params().size());
    std::vector<float> grad;
    std::vector<uint16_t> tokens(static_cast<size_t>(B) * T);
    std::vector<Order> orders(B);

    TrainResult result;
    char line[160];
    for (uint64_t s = 0; s < cfg.steps; s++) {
        const double identity_frac = cfg.order_mode == OrderMode::curriculum
                                         ? curriculum_fraction(s, cfg.steps, cfg.curriculum_start)
                                         : 0.0;
        for (uint32_t b = 0; b < B; b++) {
            const uint64_t idx = batch_rng.uniform_int(train_data.count());
            auto row = train_data.row(idx);
            std::copy(row.begin(), row.end(), tokens.begin() + static_cast<size_t>(b) * T);
            orders[b] = draw_training_order(cfg, T, identity_frac, batch_rng);
        }
        const ShuffledBatch batch = build_shuffled_batch(tokens, B, T, orders, model.config());
        const double loss = model.loss_and_grad(batch, grad);
        const double gnorm = grad_norm(grad);
        if (!std::isfinite(loss) || !std::isfinite(gnorm)) {
            snprintf(line, sizeof(line),
                     "training diverged at step %llu: loss=%g grad_norm=%g",
                     static_cast<unsigned long long>(s + 1), loss, gnorm);
            throw std::runtime_error(line);
        }
        if (cfg.grad_clip > 0 && gnorm > cfg.grad_clip) {
            const float scale = static_cast<float>(cfg.grad_clip / gnorm);
            for (float& g : grad) g *= scale;
        }
        const double lr = lr_at_step(cfg, s);
        adam.update(model.params(), grad, lr, cfg);

        const bool last = s + 1 == cfg.steps;
        const bool log_now = s == 0 || (s + 1) % cfg.log_interval == 0 || last;
        const bool eval_now = val_data && ((s + 1) % cfg.eval_interval == 0 || last);
        result.final_train_loss = loss;
        if (log_now || eval_now) {
            TrainPoint point;
            point.step = s + 1;
            point.lr = lr;
            point.train_loss = loss;
            if (eval_now) {
                point.val_nll = dataset_nll(model, *val_data, B);
                point.has_val = true;
                result.final_val_nll = point.val_nll;
                result.has_val = true;
            }
            result.log.push_back(point);
            if (log) {
                snprintf(line, sizeof(line), "step %llu/%llu lr %.6e loss %.6f",
                         static_cast<unsigned long long>(s + 1),
                         static_cast<unsigned long long>(cfg.steps), lr, loss);
                *log << line;
                if (point.has_val) {
                    snprintf(line, sizeof(line), " val_nll %.6f", point.val_nll);
                    *log << line;
                }
                *log << '\n';
            }
        }
    }
    return result;
}

}  // namespace sigma
