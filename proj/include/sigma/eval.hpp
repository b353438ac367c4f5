#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sigma/dataset.hpp"
#include "sigma/decode.hpp"
#include "sigma/exact.hpp"
#include "sigma/model.hpp"
#include "sigma/tasks.hpp"
#include "sigma/transformer.hpp"

namespace sigma {

struct MeanStd {
    double mean = 0.0;
    double std_dev = 0.0;  // population
};

MeanStd mean_std(std::span<const double> xs);

// left_to_right -> identity, fractal -> fractal, random/curriculum -> a fresh
// uniform draw from rng.
Order order_for_mode(OrderMode mode, uint32_t T, Rng& rng);

// exp(mean token NLL) over the dataset, with one order per sequence drawn by
// order mode (left_to_right means the identity order; curriculum is invalid
// here). Deterministic in the seed.
double perplexity(Transformer<float>& model, const Dataset& data, OrderMode mode, uint64_t seed,
                  uint32_t batch_size = 64);

// Same metric through a decode session's chain pass, so exact oracle sessions
// can be scored on data too. Zero-probability tokens make the result infinite.
double session_perplexity(DecodeSession& session, const Dataset& data, OrderMode mode,
                          uint64_t seed);

// The task law written out as an explicit support table. Only small state
// spaces are accepted: product (T <= 20), step (any T), permutation (T <= 8),
// walk and maze capped by enumeration size.
SupportJoint tabular_model_from_task(const TaskSpec& spec);

// Exact decode session for a task law, choosing the cheapest representation:
// closed-form sessions for product and permutation (any T), a support table
// for the rest. The session owns everything it needs.
std::unique_ptr<DecodeSession> exact_session_for_task(const TaskSpec& spec);

// Distribution of the number of distinct classes hit by T uniform draws over
// T classes; entry k of the returned vector (size T + 1) is P(k distinct).
// Computed in log space so T = 100 works.
std::vector<double> class_count_pmf(uint32_t T);

// Expected number of classes missed by T uniform draws over T classes:
// T * ((T - 1) / T)^T.
double expected_incoherent(uint32_t T);

// Idealised burst decoding of the permutation task under perfect
// conditionals: each round draws the r remaining positions uniformly over the
// r remaining classes and commits every first occurrence of a class. Returns
// mean and std of the number of rounds until none remain.
MeanStd ideal_permutation_rounds(uint32_t T, uint64_t seed, uint32_t n_sims);

struct StepCurvePoint {
    std::string method;   // "autoregressive" or "burst"
    uint32_t n_orders = 0;  // 0 for the autoregressive baseline
    double steps = 0.0;     // mean model passes per sample (rounds for burst)
    double quality = 0.0;   // mean sample validity
};

// One decoding problem: a session, a prompt and a validity check for the
// finished sequence. Benchmarks pull a fresh case per sample so prompts can
// vary (for mazes) or stay fixed (for the synthetic tasks).
struct BenchmarkCase {
    DecodeSession* session = nullptr;
    std::vector<PositionToken> known;
    std::function<bool(std::span<const uint16_t>)> valid;
};

using CaseProvider = std::function<BenchmarkCase(uint32_t sample_index, Rng& case_rng)>;

struct BurstBenchmarkParams {
    std::vector<uint32_t> n_orders{1, 2, 4};
    uint32_t n_samples = 200;
    double temperature = 1.0;
    bool include_autoregressive = true;
    OrderMode ar_order = OrderMode::random;
    bool shared_noise = true;
};

// Decodes the same per-sample cases once per configuration (case streams are
// shared across configurations, decode streams are not) and reports the mean
// steps/quality curve.
std::vector<StepCurvePoint> burst_benchmark(const CaseProvider& provider,
                                            const BurstBenchmarkParams& params, uint64_t seed);

// burst_benchmark against the exact session for a task, with no prompt and
// validity = positive probability under the task law.
std::vector<StepCurvePoint> oracle_burst_curve(const TaskSpec& spec,
                                               const BurstBenchmarkParams& params, uint64_t seed);

// Header: method,n_orders,steps,quality
void write_step_curve_csv(const std::string& path, std::span<const StepCurvePoint> points);

struct MazeEvalParams {
    MazeParams maze;
    MazeLayout layout = MazeLayout::concat;
    uint32_t n_mazes = 100;
    bool use_burst = false;
    BurstConfig burst;
    double temperature = 1.0;
    OrderMode ar_order = OrderMode::random;  // ignored when use_burst
};

struct MazeEvalResult {
    double valid_rate = 0.0;
    double optimal_rate = 0.0;
    double mean_rounds = 0.0;  // burst only
    double mean_steps = 0.0;   // committed tokens per maze
    uint32_t n_mazes = 0;
};

// Solves fresh mazes with the model and scores them with validate_maze_path.
// concat layout prompts with the first-half unsolved grid; solved layout
// prompts with the scattered non-empty cells.
MazeEvalResult maze_eval(const Transformer<float>& model, const MazeEvalParams& params,
                         uint64_t seed);

struct MemorizationCell {
    uint32_t dataset_size = 0;
    OrderMode order_mode = OrderMode::left_to_right;
    double train_acc = 0.0;  // valid-path rate on training mazes
    double val_acc = 0.0;    // valid-path rate on fresh mazes
    double final_train_loss = 0.0;
};

struct MemorizationParams {
    MazeParams maze;
    std::vector<uint32_t> sizes;
    std::vector<OrderMode> modes;
    ModelConfig model;
    TrainConfig train;     // order_mode and seed are set per cell
    uint32_t n_eval = 50;  // mazes scored per split
};

// Trains one model per (dataset size, order mode) cell under the same budget
// and scores path validity on the training mazes versus fresh ones. The train
// sets are nested across sizes and shared across modes.
std::vector<MemorizationCell> memorization_sweep(const MemorizationParams& params, uint64_t seed);

// Header: dataset_size,order_mode,train_acc,val_acc,final_train_loss
void write_memorization_csv(const std::string& path, std::span<const MemorizationCell> cells);

// Scores the sequence's log likelihood under n_orders random decomposition
// orders and returns the spread (max - min). An identity for exact
// conditionals; a calibration diagnostic for trained models.
double chain_rule_check(DecodeSession& session, std::span<const uint16_t> sequence,
                        uint32_t n_orders, uint64_t seed);

// KL(empirical counts || expected) in nats; cells with observations need
// positive expected probability.
double empirical_kl(std::span<const int64_t> counts, std::span<const double> expected);

// JSON reproducibility record: name, seed, the config payload and its
// 64-bit FNV-1a content hash.
void write_run_manifest(const std::string& path, const std::string& name, uint64_t seed,
                        const std::string& config_json);

}  // namespace sigma
