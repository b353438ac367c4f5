// Command-line front end: data generation, training, decoding and evaluation
// as subcommands over the C API. Every run is reproducible from its flags;
// all randomness derives from --seed.
#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sigma_gpt.h"

namespace {

// Bad flag values and malformed configs exit 2; numeric/runtime failures 3.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void check(sg_status status) {
    if (status == SG_OK) return;
    const std::string msg = sg_last_error();
    if (status == SG_ERR_ARG) throw UsageError(msg);
    throw std::runtime_error(msg);
}

struct DatasetHandle {
    sg_dataset* p = nullptr;
    ~DatasetHandle() { sg_dataset_free(p); }
};

struct ModelHandle {
    sg_model* p = nullptr;
    ~ModelHandle() { sg_model_free(p); }
};

struct SessionHandle {
    sg_session* p = nullptr;
    ~SessionHandle() { sg_session_free(p); }
};

uint64_t parse_u64(const std::string& text, const char* what) {
    try {
        size_t used = 0;
        const uint64_t v = std::stoull(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw UsageError(std::string(what) + ": expected an unsigned integer, got \"" + text + "\"");
    }
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* what) {
    std::vector<T> out;
    if (text.empty()) return out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const uint64_t v = parse_u64(item, what);
        out.push_back(static_cast<T>(v));
    }
    if (out.empty()) throw UsageError(std::string(what) + ": empty list");
    return out;
}

std::vector<int32_t> parse_i32_list(const std::string& text, const char* what) {
    std::vector<int32_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            size_t used = 0;
            const long v = std::stol(item, &used);
            if (used != item.size()) throw std::invalid_argument(item);
            out.push_back(static_cast<int32_t>(v));
        } catch (const std::exception&) {
            throw UsageError(std::string(what) + ": expected integers, got \"" + item + "\"");
        }
    }
    if (out.empty()) throw UsageError(std::string(what) + ": empty list");
    return out;
}

// "pos:tok,pos:tok,..."; empty means no prompt.
void parse_known(const std::string& text, std::vector<uint32_t>& pos, std::vector<uint16_t>& tok) {
    pos.clear();
    tok.clear();
    if (text.empty()) return;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const size_t colon = item.find(':');
        if (colon == std::string::npos)
            throw UsageError("--known: expected pos:tok pairs, got \"" + item + "\"");
        const uint64_t p = parse_u64(item.substr(0, colon), "--known position");
        const uint64_t t = parse_u64(item.substr(colon + 1), "--known token");
        if (t > 0xffff) throw UsageError("--known: token " + std::to_string(t) + " exceeds 16 bits");
        pos.push_back(static_cast<uint32_t>(p));
        tok.push_back(static_cast<uint16_t>(t));
    }
}

// Either a trained checkpoint or an exact task-law oracle backs a session.
SessionHandle open_session(const std::string& ckpt, const std::string& oracle_task,
                           uint32_t seq_len) {
    if (ckpt.empty() == oracle_task.empty())
        throw UsageError("exactly one of --ckpt and --oracle-task is required");
    SessionHandle session;
    if (!ckpt.empty())
        check(sg_session_from_checkpoint(ckpt.c_str(), seq_len, &session.p));
    else
        check(sg_session_from_task(oracle_task.c_str(), &session.p));
    return session;
}

void print_sequence(const std::vector<uint16_t>& seq) {
    for (size_t i = 0; i < seq.size(); i++) std::printf(i == 0 ? "%u" : " %u", seq[i]);
    std::printf("\n");
}

// --- subcommand state + actions ---

struct GenDataArgs {
    std::string task, out, layout = "solved", starts = "100,120,130,140";
    uint64_t n = 0, seed = 0;
    uint32_t T = 100, step_len = 10, width = 7, height = 7, barriers = 6;
    double p = 0.1, p_move = 0.4, p_stay = 0.2;
};

std::string task_json_from_flags(const GenDataArgs& a) {
    nlohmann::json j;
    j["task"] = a.task;
    if (a.task == "product") {
        j["T"] = a.T;
        j["p"] = a.p;
    } else if (a.task == "step") {
        j["T"] = a.T;
        j["step_len"] = a.step_len;
    } else if (a.task == "perm") {
        j["T"] = a.T;
    } else if (a.task == "walk") {
        j["T"] = a.T;
        j["starts"] = parse_i32_list(a.starts, "--starts");
        j["p_move"] = a.p_move;
        j["p_stay"] = a.p_stay;
    } else {
        j["width"] = a.width;
        j["height"] = a.height;
        j["barriers"] = a.barriers;
        j["layout"] = a.layout;
    }
    return j.dump();
}

void run_gen_data(const GenDataArgs& a) {
    const std::string task_json = task_json_from_flags(a);
    check(sg_dataset_generate_file(task_json.c_str(), a.n, a.seed, a.out.c_str()));
    std::printf("wrote %" PRIu64 " sequences to %s\n", a.n, a.out.c_str());
}

struct TrainArgs {
    std::string config, data, val, ckpt_out;
    // flag overrides for the config file; -1 = keep the file's value
    int64_t steps = -1, batch_size = -1, seed = -1;
    double lr = -1;
    std::string order_mode;
};

void run_train(const TrainArgs& a) {
    std::ifstream in(a.config);
    if (!in) throw UsageError("cannot open config file " + a.config);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("config file " + a.config + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("model") || !j.contains("train"))
        throw UsageError("config file needs \"model\" and \"train\" objects");

    if (a.steps >= 0) j["train"]["steps"] = a.steps;
    if (a.batch_size >= 0) j["train"]["batch_size"] = a.batch_size;
    if (a.seed >= 0) j["train"]["seed"] = a.seed;
    if (a.lr >= 0) j["train"]["lr"] = a.lr;
    if (!a.order_mode.empty()) j["train"]["order_mode"] = a.order_mode;
    if (!j["train"].contains("seed")) throw UsageError("train config needs a seed");
    const uint64_t seed = j["train"]["seed"].get<uint64_t>();

    const std::string model_json = j["model"].dump();
    const std::string train_json = j["train"].dump();

    DatasetHandle train_data;
    check(sg_dataset_read(a.data.c_str(), &train_data.p));
    DatasetHandle val_data;
    if (!a.val.empty()) check(sg_dataset_read(a.val.c_str(), &val_data.p));

    ModelHandle model;
    check(sg_model_create(model_json.c_str(), seed, &model.p));
    double final_loss = 0, final_val = 0;
    check(sg_model_train(model.p, train_data.p, val_data.p, train_json.c_str(), "-", &final_loss,
                         &final_val));
    check(sg_model_save(model.p, a.ckpt_out.c_str()));
    std::printf("final_train_loss=%.6f\n", final_loss);
    if (val_data.p) std::printf("final_val_nll=%.6f\n", final_val);
    std::printf("saved checkpoint to %s\n", a.ckpt_out.c_str());
}

struct DecodeArgs {
    std::string ckpt, oracle_task, known, order = "random", trace_out, queries, out;
    uint32_t seq_len = 0, orders = 4;
    double temperature = 1.0;
    uint64_t seed = 0;
    bool per_order_noise = false;
};

void run_sample(const DecodeArgs& a) {
    SessionHandle session = open_session(a.ckpt, a.oracle_task, a.seq_len);
    uint32_t T = 0;
    check(sg_session_info(session.p, &T, nullptr));
    std::vector<uint32_t> kpos;
    std::vector<uint16_t> ktok;
    parse_known(a.known, kpos, ktok);
    std::vector<uint16_t> seq(T);
    double log_prob = 0;
    check(sg_generate(session.p, kpos.data(), ktok.data(), kpos.size(), a.order.c_str(),
                      a.temperature, a.seed, seq.data(), &log_prob));
    print_sequence(seq);
    std::printf("log_prob=%.6f\n", log_prob);
}

void run_burst(const DecodeArgs& a) {
    SessionHandle session = open_session(a.ckpt, a.oracle_task, a.seq_len);
    uint32_t T = 0;
    check(sg_session_info(session.p, &T, nullptr));
    std::vector<uint32_t> kpos;
    std::vector<uint16_t> ktok;
    parse_known(a.known, kpos, ktok);
    std::vector<uint16_t> seq(T);
    uint32_t rounds = 0;
    check(sg_burst(session.p, kpos.data(), ktok.data(), kpos.size(), a.orders, a.temperature,
                   a.per_order_noise ? 0 : 1, a.seed, seq.data(), &rounds,
                   a.trace_out.empty() ? nullptr : a.trace_out.c_str()));
    print_sequence(seq);
    std::printf("rounds=%u\n", rounds);
}

void run_density(const DecodeArgs& a) {
    SessionHandle session = open_session(a.ckpt, a.oracle_task, a.seq_len);
    uint32_t vocab = 0;
    check(sg_session_info(session.p, nullptr, &vocab));
    std::vector<uint32_t> kpos;
    std::vector<uint16_t> ktok;
    parse_known(a.known, kpos, ktok);
    const std::vector<uint32_t> queries = parse_list<uint32_t>(a.queries, "--queries");
    std::vector<double> probs(queries.size() * vocab);
    check(sg_density(session.p, kpos.data(), ktok.data(), kpos.size(), queries.data(),
                     queries.size(), a.temperature, probs.data()));
    std::FILE* out = std::fopen(a.out.c_str(), "w");
    if (!out) throw std::runtime_error("cannot open output file " + a.out);
    std::fprintf(out, "position,token,prob\n");
    for (size_t q = 0; q < queries.size(); q++)
        for (uint32_t v = 0; v < vocab; v++)
            std::fprintf(out, "%u,%u,%.12g\n", queries[q], v, probs[q * vocab + v]);
    std::fclose(out);
}

struct EvalArgs {
    std::string metric, ckpt, oracle_task, data, order = "random", layout = "concat", out;
    std::string orders_list = "1,2,4";
    uint32_t batch_size = 64, width = 7, height = 7, barriers = 6, n = 100, orders = 4,
             n_orders = 20, rows = 100;
    uint64_t seed = 0;
    double temperature = 1.0;
    bool burst = false;
};

void run_eval_perplexity(const EvalArgs& a) {
    if (a.ckpt.empty() || a.data.empty()) throw UsageError("perplexity needs --ckpt and --data");
    ModelHandle model;
    check(sg_model_load(a.ckpt.c_str(), &model.p));
    DatasetHandle data;
    check(sg_dataset_read(a.data.c_str(), &data.p));
    double ppl = 0;
    check(sg_model_perplexity(model.p, data.p, a.order.c_str(), a.seed, a.batch_size, &ppl));
    std::printf("perplexity=%.6f\n", ppl);
}

void run_eval_maze_acc(const EvalArgs& a) {
    if (a.ckpt.empty()) throw UsageError("maze-acc needs --ckpt");
    ModelHandle model;
    check(sg_model_load(a.ckpt.c_str(), &model.p));
    double valid = 0, optimal = 0, rounds = 0, steps = 0;
    check(sg_maze_eval(model.p, a.width, a.height, a.barriers, a.layout.c_str(), a.n,
                       a.burst ? 1 : 0, a.orders, a.temperature, a.order.c_str(), a.seed, &valid,
                       &optimal, &rounds, &steps));
    std::printf("valid_rate=%.4f optimal_rate=%.4f mean_steps=%.2f", valid, optimal, steps);
    if (a.burst) std::printf(" mean_rounds=%.2f", rounds);
    std::printf("\n");
}

void run_eval_burst_curve(const EvalArgs& a) {
    if (a.out.empty()) throw UsageError("burst-curve needs --out");
    const std::vector<uint32_t> orders = parse_list<uint32_t>(a.orders_list, "--orders-list");
    if (!a.oracle_task.empty()) {
        check(sg_oracle_burst_curve(a.oracle_task.c_str(), orders.data(), orders.size(), a.n, 1,
                                    a.order.c_str(), a.temperature, a.seed, a.out.c_str()));
        return;
    }
    if (a.ckpt.empty()) throw UsageError("burst-curve needs --ckpt or --oracle-task");
    // Model curve on fresh mazes: the baseline decodes one token per pass,
    // each burst config reports its mean rounds.
    ModelHandle model;
    check(sg_model_load(a.ckpt.c_str(), &model.p));
    std::FILE* out = std::fopen(a.out.c_str(), "w");
    if (!out) throw std::runtime_error("cannot open output file " + a.out);
    std::fprintf(out, "method,n_orders,steps,quality\n");
    double valid = 0, rounds = 0, steps = 0;
    check(sg_maze_eval(model.p, a.width, a.height, a.barriers, a.layout.c_str(), a.n, 0, 0,
                       a.temperature, a.order.c_str(), a.seed, &valid, nullptr, nullptr, &steps));
    std::fprintf(out, "autoregressive,0,%.6f,%.6f\n", steps, valid);
    for (const uint32_t n_orders : orders) {
        check(sg_maze_eval(model.p, a.width, a.height, a.barriers, a.layout.c_str(), a.n, 1,
                           n_orders, a.temperature, a.order.c_str(), a.seed, &valid, nullptr,
                           &rounds, nullptr));
        std::fprintf(out, "burst,%u,%.6f,%.6f\n", n_orders, rounds, valid);
    }
    std::fclose(out);
}

void run_eval_chain_rule(const EvalArgs& a) {
    if (a.data.empty()) throw UsageError("chain-rule needs --data");
    DatasetHandle data;
    check(sg_dataset_read(a.data.c_str(), &data.p));
    uint32_t seq_len = 0;
    uint64_t count = 0;
    check(sg_dataset_info(data.p, nullptr, &seq_len, &count));
    SessionHandle session = open_session(a.ckpt, a.oracle_task, seq_len);

    const uint64_t rows = count < a.rows ? count : a.rows;
    if (rows == 0) throw UsageError("chain-rule: dataset is empty");
    std::vector<uint16_t> row(seq_len);
    double max_spread = 0, sum_spread = 0;
    for (uint64_t i = 0; i < rows; i++) {
        check(sg_dataset_row(data.p, i, row.data()));
        double spread = 0;
        check(sg_chain_rule_spread(session.p, row.data(), row.size(), a.n_orders, a.seed, &spread));
        if (spread > max_spread) max_spread = spread;
        sum_spread += spread;
    }
    std::printf("rows=%" PRIu64 " max_spread=%.12g mean_spread=%.12g\n", rows, max_spread,
                sum_spread / static_cast<double>(rows));
}

struct OracleArgs {
    std::string task, starts = "100,120,130,140";
    uint32_t T = 100, n = 1, t1 = 0, t2 = 0, sims = 100000;
    int32_t x0 = 0, x = 0;
    double p_move = 0.4, p_stay = 0.2;
    uint64_t seed = 0;
};

void run_oracle(const OracleArgs& a) {
    if (a.task == "class-pmf") {
        std::vector<double> pmf(static_cast<size_t>(a.T) + 1);
        check(sg_class_count_pmf(a.T, pmf.data()));
        for (uint32_t k = 1; k <= a.T; k++) std::printf("p(%u)=%g\n", k, pmf[k]);
    } else if (a.task == "perm-steps") {
        double mean = 0, sd = 0;
        check(sg_ideal_permutation_rounds(a.T, a.seed, a.sims, &mean, &sd));
        std::printf("mean=%.6g std=%.6g\n", mean, sd);
    } else if (a.task == "walk-fwd") {
        std::vector<double> pmf(2 * static_cast<size_t>(a.n) + 3);
        int32_t min_v = 0;
        size_t len = 0;
        check(sg_walk_forward(a.p_move, a.p_stay, a.x0, a.n, &min_v, pmf.data(), pmf.size(), &len));
        for (size_t i = 0; i < len; i++)
            std::printf("p(%d)=%g\n", min_v + static_cast<int32_t>(i), pmf[i]);
    } else {  // walk-bwd
        const std::vector<int32_t> starts = parse_i32_list(a.starts, "--starts");
        int32_t lo = starts[0], hi = starts[0];
        for (const int32_t s : starts) {
            if (s < lo) lo = s;
            if (s > hi) hi = s;
        }
        std::vector<double> pmf(static_cast<size_t>(hi - lo) + 2 * static_cast<size_t>(a.t1) + 3);
        int32_t min_v = 0;
        size_t len = 0;
        check(sg_walk_backward(starts.data(), starts.size(), a.p_move, a.p_stay, a.t1, a.t2, a.x,
                               &min_v, pmf.data(), pmf.size(), &len));
        for (size_t i = 0; i < len; i++)
            std::printf("p(%d)=%g\n", min_v + static_cast<int32_t>(i), pmf[i]);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"shuffled-order transformer: data, training, decoding and evaluation"};
    app.name("sigma");  // keep --help output independent of the invocation path
    app.require_subcommand(1);
    sg_set_threads(1);

    GenDataArgs gd;
    CLI::App* gen = app.add_subcommand("gen-data", "generate a dataset file from a task law");
    gen->add_option("--task", gd.task, "task: product|step|perm|walk|maze")
        ->required()
        ->check(CLI::IsMember({"product", "step", "perm", "walk", "maze"}));
    gen->add_option("--n", gd.n, "number of sequences")->required();
    gen->add_option("--seed", gd.seed, "rng seed")->required();
    gen->add_option("--out", gd.out, "output dataset path")->required();
    gen->add_option("--T", gd.T, "sequence length (product/step/perm/walk)");
    gen->add_option("--p", gd.p, "product: P(token = 1)");
    gen->add_option("--step-len", gd.step_len, "step: run length");
    gen->add_option("--starts", gd.starts, "walk: comma-separated start altitudes");
    gen->add_option("--p-move", gd.p_move, "walk: P(step down) = P(step up)");
    gen->add_option("--p-stay", gd.p_stay, "walk: P(stay)");
    gen->add_option("--width", gd.width, "maze: grid width");
    gen->add_option("--height", gd.height, "maze: grid height");
    gen->add_option("--barriers", gd.barriers, "maze: barrier count");
    gen->add_option("--layout", gd.layout, "maze: solved|concat")
        ->check(CLI::IsMember({"solved", "concat"}));
    gen->callback([&] { run_gen_data(gd); });

    TrainArgs tr;
    CLI::App* train = app.add_subcommand("train", "train a model from a JSON config");
    train->add_option("--config", tr.config, "JSON config with \"model\" and \"train\" objects")
        ->required();
    train->add_option("--data", tr.data, "training dataset path")->required();
    train->add_option("--val", tr.val, "validation dataset path");
    train->add_option("--ckpt-out", tr.ckpt_out, "checkpoint output path")->required();
    train->add_option("--steps", tr.steps, "override train.steps");
    train->add_option("--batch-size", tr.batch_size, "override train.batch_size");
    train->add_option("--seed", tr.seed, "override train.seed");
    train->add_option("--lr", tr.lr, "override train.lr");
    train->add_option("--order-mode", tr.order_mode,
                      "override train.order_mode: curriculum|ltr|random|fractal")
        ->check(CLI::IsMember({"curriculum", "ltr", "random", "fractal"}));
    train->callback([&] { run_train(tr); });

    DecodeArgs sa;
    CLI::App* sample = app.add_subcommand("sample", "sample one sequence, one token per pass");
    sample->add_option("--ckpt", sa.ckpt, "model checkpoint path");
    sample->add_option("--oracle-task", sa.oracle_task, "exact task-law session, JSON");
    sample->add_option("--order", sa.order, "decode order: ltr|random|fractal")
        ->check(CLI::IsMember({"ltr", "random", "fractal"}));
    sample->add_option("--known", sa.known, "prompt as pos:tok,pos:tok,...");
    sample->add_option("--temperature", sa.temperature, "softmax temperature");
    sample->add_option("--seed", sa.seed, "rng seed")->required();
    sample->add_option("--seq-len", sa.seq_len, "sequence length (0 = model max_len)");
    sample->callback([&] { run_sample(sa); });

    DecodeArgs ba;
    CLI::App* burst = app.add_subcommand("burst", "sample many tokens per pass by burst decoding");
    burst->add_option("--ckpt", ba.ckpt, "model checkpoint path");
    burst->add_option("--oracle-task", ba.oracle_task, "exact task-law session, JSON");
    burst->add_option("--orders", ba.orders, "evaluation orders per round");
    burst->add_option("--known", ba.known, "prompt as pos:tok,pos:tok,...");
    burst->add_option("--temperature", ba.temperature, "softmax temperature");
    burst->add_option("--seed", ba.seed, "rng seed")->required();
    burst->add_option("--seq-len", ba.seq_len, "sequence length (0 = model max_len)");
    burst->add_option("--trace-out", ba.trace_out, "per-round trace CSV path");
    burst->add_flag("--per-order-noise", ba.per_order_noise,
                    "draw fresh acceptance noise per order instead of sharing it");
    burst->callback([&] { run_burst(ba); });

    DecodeArgs da;
    CLI::App* density = app.add_subcommand("density",
                                           "conditional probabilities at chosen positions");
    density->add_option("--ckpt", da.ckpt, "model checkpoint path");
    density->add_option("--oracle-task", da.oracle_task, "exact task-law session, JSON");
    density->add_option("--known", da.known, "prompt as pos:tok,pos:tok,...");
    density->add_option("--queries", da.queries, "positions to score, comma-separated")->required();
    density->add_option("--temperature", da.temperature, "softmax temperature");
    density->add_option("--out", da.out, "output CSV path (position,token,prob)")->required();
    density->add_option("--seq-len", da.seq_len, "sequence length (0 = model max_len)");
    density->callback([&] { run_density(da); });

    EvalArgs ev;
    CLI::App* eval = app.add_subcommand("eval", "scored evaluation harnesses");
    eval->add_option("--metric", ev.metric, "perplexity|maze-acc|burst-curve|chain-rule")
        ->required()
        ->check(CLI::IsMember({"perplexity", "maze-acc", "burst-curve", "chain-rule"}));
    eval->add_option("--ckpt", ev.ckpt, "model checkpoint path");
    eval->add_option("--oracle-task", ev.oracle_task,
                     "exact task-law session, JSON (burst-curve/chain-rule)");
    eval->add_option("--data", ev.data, "dataset path (perplexity/chain-rule)");
    eval->add_option("--order", ev.order, "decode order: ltr|random|fractal")
        ->check(CLI::IsMember({"ltr", "random", "fractal"}));
    eval->add_option("--seed", ev.seed, "rng seed")->required();
    eval->add_option("--batch-size", ev.batch_size, "perplexity batch size");
    eval->add_option("--width", ev.width, "maze grid width");
    eval->add_option("--height", ev.height, "maze grid height");
    eval->add_option("--barriers", ev.barriers, "maze barrier count");
    eval->add_option("--layout", ev.layout, "maze layout: solved|concat")
        ->check(CLI::IsMember({"solved", "concat"}));
    eval->add_option("--n", ev.n, "samples per configuration");
    eval->add_flag("--burst", ev.burst, "maze-acc: decode by bursts instead of one per pass");
    eval->add_option("--orders", ev.orders, "maze-acc: burst evaluation orders");
    eval->add_option("--orders-list", ev.orders_list, "burst-curve: comma-separated order counts");
    eval->add_option("--n-orders", ev.n_orders, "chain-rule: factorisation orders per row");
    eval->add_option("--rows", ev.rows, "chain-rule: dataset rows to score");
    eval->add_option("--temperature", ev.temperature, "softmax temperature");
    eval->add_option("--out", ev.out, "output CSV path (burst-curve)");
    eval->callback([&] {
        if (ev.metric == "perplexity") run_eval_perplexity(ev);
        else if (ev.metric == "maze-acc") run_eval_maze_acc(ev);
        else if (ev.metric == "burst-curve") run_eval_burst_curve(ev);
        else run_eval_chain_rule(ev);
    });

    OracleArgs oa;
    CLI::App* oracle = app.add_subcommand("oracle", "closed-form and simulated reference values");
    oracle->add_option("--task", oa.task, "walk-fwd|walk-bwd|perm-steps|class-pmf")
        ->required()
        ->check(CLI::IsMember({"walk-fwd", "walk-bwd", "perm-steps", "class-pmf"}));
    oracle->add_option("--T", oa.T, "class count (class-pmf) or positions (perm-steps)");
    oracle->add_option("--sims", oa.sims, "perm-steps: simulation count");
    oracle->add_option("--seed", oa.seed, "perm-steps: rng seed");
    oracle->add_option("--x0", oa.x0, "walk-fwd: start altitude");
    oracle->add_option("--n", oa.n, "walk-fwd: step count");
    oracle->add_option("--t1", oa.t1, "walk-bwd: query time");
    oracle->add_option("--t2", oa.t2, "walk-bwd: observation time");
    oracle->add_option("--x", oa.x, "walk-bwd: observed altitude");
    oracle->add_option("--starts", oa.starts, "walk-bwd: comma-separated start altitudes");
    oracle->add_option("--p-move", oa.p_move, "walk: P(step down) = P(step up)");
    oracle->add_option("--p-stay", oa.p_stay, "walk: P(stay)");
    oracle->callback([&] { run_oracle(oa); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
