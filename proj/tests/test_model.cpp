#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sigma/checkpoint.hpp"
#include "sigma/dataset.hpp"
#include "sigma/model.hpp"
#include "sigma/orders.hpp"
#include "sigma/rng.hpp"
#include "sigma/train.hpp"
#include "sigma/transformer.hpp"

using namespace sigma;

namespace {

ModelConfig tiny_config(uint32_t vocab, uint32_t max_len) {
    ModelConfig cfg;
    cfg.vocab_size = vocab;
    cfg.max_len = max_len;
    cfg.d_model = 18;
    cfg.n_layers = 2;
    cfg.n_heads = 3;
    cfg.d_ff = 24;
    return cfg.resolved();
}

ShuffledBatch batch_from_rows(const std::vector<std::vector<uint16_t>>& rows,
                              const std::vector<Order>& orders, const ModelConfig& cfg) {
    const uint32_t B = static_cast<uint32_t>(rows.size());
    const uint32_t T = static_cast<uint32_t>(rows[0].size());
    std::vector<uint16_t> flat;
    for (const auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
    return build_shuffled_batch(flat, B, T, orders, cfg);
}

// Straight-line reference forward pass: plain loops, no shared code with the
// library beyond the parameter vector and the position-code closed form.
std::vector<double> naive_linear(const std::vector<double>& x, const double* w, const double* b,
                                 int rows, int in, int out) {
    std::vector<double> y(static_cast<size_t>(rows) * out, 0.0);
    for (int r = 0; r < rows; r++)
        for (int o = 0; o < out; o++) {
            double acc = b ? b[o] : 0.0;
            for (int i = 0; i < in; i++) acc += x[r * in + i] * w[i * out + o];
            y[r * out + o] = acc;
        }
    return y;
}

std::vector<double> naive_layer_norm(const std::vector<double>& x, const double* g, const double* b,
                                     int rows, int d) {
    std::vector<double> y(x.size());
    for (int r = 0; r < rows; r++) {
        double mean = 0;
        for (int i = 0; i < d; i++) mean += x[r * d + i];
        mean /= d;
        double var = 0;
        for (int i = 0; i < d; i++) var += (x[r * d + i] - mean) * (x[r * d + i] - mean);
        var /= d;
        const double rstd = 1.0 / std::sqrt(var + 1e-5);
        for (int i = 0; i < d; i++) y[r * d + i] = (x[r * d + i] - mean) * rstd * g[i] + b[i];
    }
    return y;
}

double naive_forward(const Transformer<double>& m, const ShuffledBatch& batch,
                     std::vector<double>& logits_out) {
    const ModelConfig& cfg = m.config();
    const int T = batch.T;
    const int d = cfg.d_model, H = cfg.n_heads, hd = cfg.head_dim();
    const int etok = cfg.token_dim(), pin = cfg.pe_dim_in, pout = cfg.pe_dim_out;
    const int V = cfg.vocab_size, F = cfg.d_ff;
    logits_out.assign(static_cast<size_t>(batch.B) * T * V, 0.0);
    double total = 0;
    for (int b = 0; b < static_cast<int>(batch.B); b++) {
        std::vector<double> x(static_cast<size_t>(T) * d);
        for (int t = 0; t < T; t++) {
            const int s = b * T + t;
            const double* emb = m.param("tok_embed") + batch.values[s] * etok;
            for (int i = 0; i < etok; i++) x[t * d + i] = emb[i];
            const auto pi = sinusoidal_pe(batch.in_pos[s], pin);
            for (int i = 0; i < pin; i++) x[t * d + etok + i] = pi[i];
            const auto po = sinusoidal_pe(batch.out_pos[s], pout);
            for (int i = 0; i < pout; i++) x[t * d + etok + pin + i] = po[i];
        }
        auto h = naive_linear(x, m.param("in_proj.w"), m.param("in_proj.b"), T, d, d);
        for (uint32_t l = 0; l < cfg.n_layers; l++) {
            const std::string p = "layers." + std::to_string(l) + ".";
            auto a = naive_layer_norm(h, m.param(p + "ln1.g"), m.param(p + "ln1.b"), T, d);
            auto qkv =
                naive_linear(a, m.param(p + "attn.qkv.w"), m.param(p + "attn.qkv.b"), T, d, 3 * d);
            std::vector<double> ctx(static_cast<size_t>(T) * d, 0.0);
            for (int head = 0; head < H; head++) {
                for (int t = 0; t < T; t++) {
                    std::vector<double> w(t + 1);
                    double denom = 0;
                    for (int j = 0; j <= t; j++) {
                        double s = 0;
                        for (int i = 0; i < hd; i++)
                            s += qkv[t * 3 * d + head * hd + i] * qkv[j * 3 * d + d + head * hd + i];
                        w[j] = std::exp(s / std::sqrt(static_cast<double>(hd)));
                        denom += w[j];
                    }
                    for (int j = 0; j <= t; j++)
                        for (int i = 0; i < hd; i++)
                            ctx[t * d + head * hd + i] +=
                                w[j] / denom * qkv[j * 3 * d + 2 * d + head * hd + i];
                }
            }
            auto attn =
                naive_linear(ctx, m.param(p + "attn.out.w"), m.param(p + "attn.out.b"), T, d, d);
            for (int i = 0; i < T * d; i++) h[i] += attn[i];
            auto n2 = naive_layer_norm(h, m.param(p + "ln2.g"), m.param(p + "ln2.b"), T, d);
            auto u = naive_linear(n2, m.param(p + "mlp.fc.w"), m.param(p + "mlp.fc.b"), T, d, F);
            for (double& e : u) e = 0.5 * e * (1.0 + std::erf(e / std::sqrt(2.0)));
            auto mlp = naive_linear(u, m.param(p + "mlp.proj.w"), m.param(p + "mlp.proj.b"), T, F, d);
            for (int i = 0; i < T * d; i++) h[i] += mlp[i];
        }
        auto f = naive_layer_norm(h, m.param("lnf.g"), m.param("lnf.b"), T, d);
        auto logits = naive_linear(f, m.param("head.w"), m.param("head.b"), T, d, V);
        for (int t = 0; t < T; t++) {
            double denom = 0;
            for (int v = 0; v < V; v++) denom += std::exp(logits[t * V + v]);
            total += std::log(denom) - logits[t * V + batch.targets[b * T + t]];
            for (int v = 0; v < V; v++)
                logits_out[(static_cast<size_t>(b) * T + t) * V + v] = logits[t * V + v];
        }
    }
    return total / (batch.B * T);
}

ShuffledBatch random_batch(const ModelConfig& cfg, uint32_t B, uint32_t T, Rng& rng) {
    std::vector<std::vector<uint16_t>> rows(B, std::vector<uint16_t>(T));
    std::vector<Order> orders;
    for (uint32_t b = 0; b < B; b++) {
        for (auto& t : rows[b]) t = static_cast<uint16_t>(rng.uniform_int(cfg.vocab_size - 1));
        orders.push_back(b == 0 ? identity_order(T) : uniform_random_order(T, rng));
    }
    return batch_from_rows(rows, orders, cfg);
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("model config resolves defaults and validates") {
    ModelConfig cfg;
    cfg.vocab_size = 11;
    cfg.max_len = 16;
    ModelConfig r = cfg.resolved();
    CHECK(r.pe_dim_in == 32);
    CHECK(r.pe_dim_out == 32);
    CHECK(r.token_dim() == 32);
    CHECK(r.bos_id() == 10);
    CHECK(r.in_pos_sentinel() == 16);

    cfg.d_model = 20;
    r = cfg.resolved();
    CHECK(r.pe_dim_in == 6);
    CHECK(r.token_dim() == 8);

    cfg.d_model = 16;
    r = cfg.resolved();
    CHECK(r.pe_dim_in == 4);  // a third of 16 rounded down to even
    CHECK(r.token_dim() == 8);

    ModelConfig bad = r;
    bad.pe_dim_in = 3;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = r;
    bad.d_model = 15;
    CHECK_THROWS_AS(bad.resolved(), std::invalid_argument);
    bad = r;
    bad.pe_dim_in = 8;
    bad.pe_dim_out = 8;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = r;
    bad.vocab_size = 1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = r;
    bad.dropout = 1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    const ModelConfig back = ModelConfig::from_json(r.to_json());
    CHECK(back.to_json() == r.to_json());
    CHECK_THROWS_AS(ModelConfig::from_json("{not json"), std::invalid_argument);
}

TEST_CASE("sinusoidal position codes match the closed form") {
    const auto zero = sinusoidal_pe(0, 6);
    CHECK(zero == std::vector<double>{0, 1, 0, 1, 0, 1});

    const auto one = sinusoidal_pe(1, 4);
    CHECK(one[0] == doctest::Approx(0.8414709848078965).epsilon(1e-15));
    CHECK(one[1] == doctest::Approx(0.5403023058681398).epsilon(1e-15));
    CHECK(one[2] == doctest::Approx(0.009999833334166664).epsilon(1e-12));
    CHECK(one[3] == doctest::Approx(0.9999500004166653).epsilon(1e-12));

    CHECK_THROWS_AS(sinusoidal_pe(1, 3), std::invalid_argument);
    CHECK_THROWS_AS(sinusoidal_pe(1, 0), std::invalid_argument);
}

TEST_CASE("shuffled batch carries the previous token and the next position") {
    ModelConfig cfg;
    cfg.vocab_size = 11;
    cfg.max_len = 8;
    const std::vector<uint16_t> tokens = {5, 7, 9};
    const std::vector<Order> orders = {Order{{2, 0, 1}}};
    const ShuffledBatch batch = build_shuffled_batch(tokens, 1, 3, orders, cfg);
    CHECK(batch.values == std::vector<int32_t>{10, 9, 5});
    CHECK(batch.in_pos == std::vector<int32_t>{8, 2, 0});
    CHECK(batch.out_pos == std::vector<int32_t>{2, 0, 1});
    CHECK(batch.targets == std::vector<int32_t>{9, 5, 7});

    const std::vector<uint16_t> bos_clash = {5, 10, 9};
    CHECK_THROWS_AS(build_shuffled_batch(bos_clash, 1, 3, orders, cfg), std::invalid_argument);
    CHECK_THROWS_AS(build_shuffled_batch(tokens, 1, 2, orders, cfg), std::invalid_argument);
    const std::vector<Order> short_order = {Order{{1, 0}}};
    CHECK_THROWS_AS(build_shuffled_batch(tokens, 1, 3, short_order, cfg), std::invalid_argument);
    ModelConfig narrow = cfg;
    narrow.max_len = 2;
    CHECK_THROWS_AS(build_shuffled_batch(tokens, 1, 3, orders, narrow), std::invalid_argument);
}

TEST_CASE("curriculum fraction decays linearly to zero") {
    CHECK(curriculum_fraction(0, 100, 0.5) == 0.5);
    CHECK(curriculum_fraction(50, 100, 0.5) == 0.25);
    CHECK(curriculum_fraction(100, 100, 0.5) == 0.0);
    CHECK(curriculum_fraction(0, 7, 1.0) == 1.0);
    CHECK_THROWS_AS(curriculum_fraction(0, 0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(curriculum_fraction(11, 10, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(curriculum_fraction(0, 10, 1.5), std::invalid_argument);
}

TEST_CASE("order mode names round trip") {
    for (OrderMode mode : {OrderMode::curriculum, OrderMode::left_to_right, OrderMode::random,
                           OrderMode::fractal})
        CHECK(order_mode_from_string(order_mode_to_string(mode)) == mode);
    CHECK(order_mode_to_string(OrderMode::left_to_right) == "ltr");
    CHECK_THROWS_AS(order_mode_from_string("sorted"), std::invalid_argument);
}

TEST_CASE("train config json round trip and seed requirement") {
    TrainConfig cfg;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);  // no seed
    cfg = TrainConfig::from_json(R"({"steps": 20, "seed": 9, "order_mode": "random"})");
    CHECK(cfg.steps == 20);
    CHECK(cfg.seed == 9);
    CHECK(cfg.order_mode == OrderMode::random);
    const TrainConfig back = TrainConfig::from_json(cfg.to_json());
    CHECK(back.to_json() == cfg.to_json());
    CHECK_THROWS_AS(TrainConfig::from_json(R"({"steps": 20})"), std::invalid_argument);
    CHECK_THROWS_AS(TrainConfig::from_json(R"({"seed": 1, "order_mode": "sorted"})"),
                    std::invalid_argument);
}

TEST_CASE("training orders pin the fixed prefix and shuffle the tail") {
    TrainConfig cfg;
    cfg.seed = 4;
    cfg.seed_set = true;
    cfg.fixed_prefix = 5;
    const uint32_t T = 12;
    Rng rng(31);
    for (OrderMode mode : {OrderMode::left_to_right, OrderMode::random, OrderMode::fractal,
                           OrderMode::curriculum}) {
        cfg.order_mode = mode;
        for (int rep = 0; rep < 20; rep++) {
            const Order order = draw_training_order(cfg, T, 0.0, rng);
            REQUIRE(is_permutation(order.perm));
            for (uint32_t t = 0; t < cfg.fixed_prefix; t++) REQUIRE(order.perm[t] == t);
        }
    }

    cfg.order_mode = OrderMode::left_to_right;
    CHECK(draw_training_order(cfg, T, 0.0, rng) == identity_order(T));
    cfg.order_mode = OrderMode::curriculum;
    CHECK(draw_training_order(cfg, T, 1.0, rng) == identity_order(T));

    cfg.order_mode = OrderMode::fractal;
    const Order shifted = draw_training_order(cfg, T, 0.0, rng);
    const Order tail = fractal_order(T - cfg.fixed_prefix);
    for (uint32_t t = cfg.fixed_prefix; t < T; t++)
        CHECK(shifted.perm[t] == cfg.fixed_prefix + tail.perm[t - cfg.fixed_prefix]);

    cfg.order_mode = OrderMode::random;
    bool tail_moves = false;
    for (int rep = 0; rep < 40 && !tail_moves; rep++)
        tail_moves = draw_training_order(cfg, T, 0.0, rng) != identity_order(T);
    CHECK(tail_moves);

    cfg.fixed_prefix = T;
    CHECK(draw_training_order(cfg, T, 0.0, rng) == identity_order(T));
    cfg.fixed_prefix = T + 1;
    CHECK_THROWS_AS(draw_training_order(cfg, T, 0.0, rng), std::invalid_argument);

    cfg.fixed_prefix = 0;
    Rng fresh_a(77), fresh_b(77);
    const Order full = draw_training_order(cfg, T, 0.0, fresh_a);
    CHECK(full == uniform_random_order(T, fresh_b));
}

TEST_CASE("all-zero parameters score every target at log vocab") {
    ModelConfig cfg = tiny_config(5, 6);
    Transformer<double> m(cfg);
    Rng rng(3);
    const ShuffledBatch batch = random_batch(cfg, 2, 4, rng);
    CHECK(m.loss(batch) == doctest::Approx(std::log(5.0)).epsilon(1e-14));
}

TEST_CASE("head bias alone reproduces the two-logit loss") {
    ModelConfig cfg = tiny_config(2, 4);
    Transformer<double> m(cfg);
    m.param("head.b")[0] = 1.0;
    const std::vector<std::vector<uint16_t>> rows = {{0, 0, 0}};
    const std::vector<Order> orders = {identity_order(3)};
    const ShuffledBatch batch = batch_from_rows(rows, orders, cfg);
    CHECK(m.loss(batch) == doctest::Approx(0.31326168751822286).epsilon(1e-14));
}

TEST_CASE("forward matches a straight-line reference") {
    ModelConfig cfg = tiny_config(9, 7);
    Transformer<double> m(cfg);
    Rng rng(11);
    m.init_params(rng);
    const ShuffledBatch batch = random_batch(cfg, 2, 5, rng);

    std::vector<double> want_logits;
    const double want_loss = naive_forward(m, batch, want_logits);
    const double got_loss = m.loss(batch);
    CHECK(got_loss == doctest::Approx(want_loss).epsilon(1e-10));

    std::vector<double> got_logits;
    m.forward_logits(batch, got_logits);
    REQUIRE(got_logits.size() == want_logits.size());
    double max_diff = 0;
    for (size_t i = 0; i < got_logits.size(); i++)
        max_diff = std::max(max_diff, std::abs(got_logits[i] - want_logits[i]));
    CHECK(max_diff < 1e-9);

    std::vector<double> nll;
    m.nll_per_slot(batch, nll);
    REQUIRE(nll.size() == 10);
    // Per-slot NLL normalises over data tokens only, so it differs from the
    // full-softmax loss by the mass the model puts on the reserved id.
    const int V = cfg.vocab_size;
    for (size_t s = 0; s < nll.size(); s++) {
        double denom = 0;
        for (int v = 0; v < V - 1; v++) denom += std::exp(want_logits[s * V + v]);
        const double want = std::log(denom) - want_logits[s * V + batch.targets[s]];
        CHECK(nll[s] == doctest::Approx(want).epsilon(1e-10));
    }
}

TEST_CASE("float and double towers agree closely") {
    ModelConfig cfg = tiny_config(9, 7);
    Transformer<double> md(cfg);
    Rng rng(13);
    md.init_params(rng);
    const ShuffledBatch batch = random_batch(cfg, 2, 5, rng);

    Transformer<float> mf(cfg);
    for (size_t i = 0; i < md.params().size(); i++)
        mf.params()[i] = static_cast<float>(md.params()[i]);

    CHECK(mf.loss(batch) == doctest::Approx(md.loss(batch)).epsilon(1e-4));
    std::vector<float> lf;
    std::vector<double> ld;
    mf.forward_logits(batch, lf);
    md.forward_logits(batch, ld);
    double max_diff = 0;
    for (size_t i = 0; i < lf.size(); i++)
        max_diff = std::max(max_diff, std::abs(static_cast<double>(lf[i]) - ld[i]));
    CHECK(max_diff < 1e-2);
}

TEST_CASE("slot outputs are bitwise independent of later slots") {
    ModelConfig cfg = tiny_config(9, 8);
    Transformer<float> m(cfg);
    Rng rng(17);
    m.init_params(rng);
    const uint32_t T = 8;
    ShuffledBatch a = random_batch(cfg, 2, T, rng);
    ShuffledBatch b = a;
    // Rewrite everything after slot 3 of row 0, and all of row 1.
    for (size_t s : {4u, 5u, 6u, 7u, 8u, 9u, 10u, 11u, 12u, 13u, 14u, 15u}) {
        b.values[s] = static_cast<int32_t>(rng.uniform_int(cfg.vocab_size));
        b.in_pos[s] = static_cast<int32_t>(rng.uniform_int(cfg.max_len + 1));
        b.out_pos[s] = static_cast<int32_t>(rng.uniform_int(cfg.max_len));
        b.targets[s] = static_cast<int32_t>(rng.uniform_int(cfg.vocab_size));
    }
    std::vector<float> la, lb;
    m.forward_logits(a, la);
    m.forward_logits(b, lb);
    const int V = cfg.vocab_size;
    for (int s = 0; s < 4; s++)
        for (int v = 0; v < V; v++)
            CHECK(la[s * V + v] == lb[s * V + v]);  // exact float equality
}

TEST_CASE("analytic gradients match finite differences") {
    ModelConfig cfg;
    cfg.vocab_size = 7;
    cfg.max_len = 4;
    cfg.d_model = 12;
    cfg.n_layers = 1;
    cfg.n_heads = 2;
    cfg.d_ff = 16;
    cfg = cfg.resolved();
    Transformer<double> m(cfg);
    Rng rng(23);
    m.init_params(rng);
    const ShuffledBatch batch = random_batch(cfg, 2, 4, rng);

    std::vector<double> grad;
    m.loss_and_grad(batch, grad);
    REQUIRE(grad.size() == m.layout().total);

    const double h = 1e-5;
    for (const auto& tensor : m.layout().tensors) {
        double max_rel = 0;
        for (size_t i = tensor.offset; i < tensor.offset + tensor.size; i++) {
            const double keep = m.params()[i];
            m.params()[i] = keep + h;
            const double up = m.loss(batch);
            m.params()[i] = keep - h;
            const double down = m.loss(batch);
            m.params()[i] = keep;
            const double fd = (up - down) / (2 * h);
            const double rel =
                std::abs(grad[i] - fd) / std::max({1e-6, std::abs(grad[i]), std::abs(fd)});
            max_rel = std::max(max_rel, rel);
        }
        INFO("tensor ", tensor.name);
        CHECK(max_rel < 1e-4);
    }
}

TEST_CASE("parameter init is deterministic with sane statistics") {
    ModelConfig cfg;
    cfg.vocab_size = 50;
    cfg.max_len = 8;
    cfg.d_model = 48;
    cfg.n_layers = 2;
    cfg.n_heads = 4;
    cfg.d_ff = 64;
    cfg = cfg.resolved();
    Transformer<float> m1(cfg), m2(cfg);
    Rng r1(5), r2(5);
    m1.init_params(r1);
    m2.init_params(r2);
    CHECK(m1.params() == m2.params());

    auto sd_of = [&](const char* name) {
        const auto& t = m1.layout().find(name);
        double acc = 0;
        for (size_t i = 0; i < t.size; i++) {
            const double v = m1.params()[t.offset + i];
            acc += v * v;
        }
        return std::sqrt(acc / t.size);
    };
    CHECK(sd_of("tok_embed") == doctest::Approx(0.02).epsilon(0.15));
    CHECK(sd_of("layers.0.attn.out.w") == doctest::Approx(0.01).epsilon(0.15));
    const auto& g = m1.layout().find("layers.1.ln1.g");
    for (size_t i = 0; i < g.size; i++) CHECK(m1.params()[g.offset + i] == 1.0f);
    const auto& b = m1.layout().find("head.b");
    for (size_t i = 0; i < b.size; i++) CHECK(m1.params()[b.offset + i] == 0.0f);
}

TEST_CASE("learning rate warms up then decays on a cosine") {
    TrainConfig cfg;
    cfg.steps = 100;
    cfg.lr = 1e-3;
    cfg.seed = 1;
    cfg.seed_set = true;
    CHECK(lr_at_step(cfg, 0) == doctest::Approx(2e-4));
    CHECK(lr_at_step(cfg, 4) == doctest::Approx(1e-3));
    CHECK(lr_at_step(cfg, 5) == doctest::Approx(1e-3));
    for (uint64_t s = 5; s + 1 < 100; s++) CHECK(lr_at_step(cfg, s + 1) <= lr_at_step(cfg, s));
    CHECK(lr_at_step(cfg, 99) >= 1e-4);
    CHECK(lr_at_step(cfg, 99) < 1.01e-4);

    cfg.warmup_frac = 0.0;
    CHECK(lr_at_step(cfg, 0) == doctest::Approx(1e-3));
}

TEST_CASE("short training run reduces loss deterministically") {
    TaskSpec spec;
    spec.kind = TaskKind::product;
    spec.product = {8, 0.3};
    const Dataset train = generate_dataset(spec, 64, 101);
    const Dataset val = generate_dataset(spec, 16, 202);

    ModelConfig cfg;
    cfg.vocab_size = train.vocab_size + 1;
    cfg.max_len = train.seq_len;
    cfg.d_model = 24;
    cfg.n_layers = 1;
    cfg.n_heads = 2;
    cfg.d_ff = 32;
    cfg = cfg.resolved();

    TrainConfig tcfg;
    tcfg.steps = 30;
    tcfg.batch_size = 16;
    tcfg.lr = 3e-3;
    tcfg.order_mode = OrderMode::random;
    tcfg.seed = 77;
    tcfg.seed_set = true;
    tcfg.log_interval = 10;
    tcfg.eval_interval = 15;

    auto run = [&]() {
        Transformer<float> m(cfg);
        Rng rng(42);
        m.init_params(rng);
        std::ostringstream log;
        const TrainResult res = train_model(m, train, &val, tcfg, &log);
        return std::pair<TrainResult, std::string>(res, log.str());
    };
    const auto [res1, log1] = run();
    const auto [res2, log2] = run();
    CHECK(log1 == log2);
    CHECK(!log1.empty());
    REQUIRE(!res1.log.empty());
    CHECK(res1.final_train_loss < res1.log.front().train_loss);
    CHECK(res1.has_val);
    CHECK(std::isfinite(res1.final_val_nll));
    CHECK(res1.log.back().step == 30);
}

TEST_CASE("training aborts on non-finite loss") {
    TaskSpec spec;
    spec.kind = TaskKind::product;
    spec.product = {6, 0.5};
    const Dataset train = generate_dataset(spec, 8, 5);

    ModelConfig cfg;
    cfg.vocab_size = train.vocab_size + 1;
    cfg.max_len = train.seq_len;
    cfg.d_model = 12;
    cfg.n_layers = 1;
    cfg.n_heads = 2;
    cfg.d_ff = 16;
    cfg = cfg.resolved();
    Transformer<float> m(cfg);
    for (auto& p : m.params()) p = 1e30f;

    TrainConfig tcfg;
    tcfg.steps = 3;
    tcfg.batch_size = 4;
    tcfg.seed = 1;
    tcfg.seed_set = true;
    CHECK_THROWS_WITH_AS(train_model(m, train, nullptr, tcfg, nullptr),
                         doctest::Contains("diverged"), std::runtime_error);
}

TEST_CASE("dataset nll of the zero model is log data vocab") {
    TaskSpec spec;
    spec.kind = TaskKind::product;
    spec.product = {4, 0.2};
    const Dataset data = generate_dataset(spec, 10, 7);
    ModelConfig cfg = tiny_config(data.vocab_size + 1, data.seq_len);
    Transformer<float> m(cfg);
    CHECK(dataset_nll(m, data, 4) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("checkpoint round trips and rejects tampering") {
    ModelConfig cfg = tiny_config(9, 7);
    Transformer<float> m(cfg);
    Rng rng(31);
    m.init_params(rng);
    const std::string path = temp_path("sigma_test_ckpt.bin");
    save_model(path, m);

    const Transformer<float> back = load_model(path);
    CHECK(back.config().to_json() == m.config().to_json());
    CHECK(back.params() == m.params());

    // Flip a tensor name inside the manifest.
    {
        std::ifstream in(path, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        const size_t at = bytes.find("tok_embed");
        REQUIRE(at != std::string::npos);
        bytes[at] = 'x';
        const std::string bad = temp_path("sigma_test_ckpt_name.bin");
        std::ofstream(bad, std::ios::binary).write(bytes.data(), bytes.size());
        CHECK_THROWS_AS(load_model(bad), std::runtime_error);

        const std::string trunc = temp_path("sigma_test_ckpt_trunc.bin");
        std::ofstream(trunc, std::ios::binary).write(bytes.data(), 100);
        CHECK_THROWS_AS(load_model(trunc), std::runtime_error);

        std::string wrong_magic = bytes;
        wrong_magic[0] = 'Z';
        const std::string magicp = temp_path("sigma_test_ckpt_magic.bin");
        std::ofstream(magicp, std::ios::binary).write(wrong_magic.data(), wrong_magic.size());
        CHECK_THROWS_AS(load_model(magicp), std::runtime_error);
    }
    CHECK_THROWS_AS(load_model(temp_path("sigma_no_such_ckpt.bin")), std::runtime_error);
}

TEST_CASE("position code tables cover the sentinel row only on the input side") {
    ModelConfig cfg = tiny_config(5, 6);
    Transformer<float> m(cfg);
    CHECK(m.pe_in_row(6) != nullptr);
    CHECK_THROWS_AS(m.pe_in_row(7), std::invalid_argument);
    CHECK(m.pe_out_row(5) != nullptr);
    CHECK_THROWS_AS(m.pe_out_row(6), std::invalid_argument);
    CHECK(m.pe_in_row(0)[0] == 0.0f);
    CHECK(m.pe_in_row(0)[1] == 1.0f);
}
