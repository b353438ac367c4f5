#include "sigma/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "sigma/orders.hpp"
#include "sigma/stats.hpp"
#include "sigma/train.hpp"

namespace sigma {

namespace {

constexpr double NEG_INF = -std::numeric_limits<double>::infinity();

double log_sum_exp(double a, double b) {
    if (a == NEG_INF) return b;
    if (b == NEG_INF) return a;
    const double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

void check_eval_order_mode(OrderMode mode) {
    if (mode == OrderMode::curriculum)
        throw std::invalid_argument("perplexity: order mode must be ltr, random or fractal");
}

SupportJoint tabular_walk(const WalkParams& params) {
    const uint32_t T = params.T;
    const double n_paths =
        static_cast<double>(params.starts.size()) * std::pow(3.0, static_cast<double>(T - 1));
    if (n_paths > 2e6) throw std::invalid_argument("tabular walk: state space too large");
    const int32_t offset = walk_token_offset(params);
    const uint32_t vocab = walk_vocab(params);
    const double start_w = 1.0 / static_cast<double>(params.starts.size());

    std::vector<std::vector<uint16_t>> seqs;
    std::vector<double> weights;
    std::vector<uint32_t> digits(T - 1, 0);  // 0 down, 1 stay, 2 up
    for (const int32_t start : params.starts) {
        std::fill(digits.begin(), digits.end(), 0u);
        while (true) {
            double w = start_w;
            std::vector<uint16_t> seq(T);
            int32_t altitude = start;
            seq[0] = static_cast<uint16_t>(altitude + offset);
            for (uint32_t t = 1; t < T; t++) {
                const uint32_t d = digits[t - 1];
                altitude += d == 0 ? -1 : d == 1 ? 0 : 1;
                seq[t] = static_cast<uint16_t>(altitude + offset);
                w *= d == 1 ? params.p_stay : params.p_move;
            }
            if (w > 0) {
                seqs.push_back(std::move(seq));
                weights.push_back(w);
            }
            uint32_t t = 0;
            while (t < digits.size() && digits[t] == 2) digits[t++] = 0;
            if (t == digits.size()) break;
            digits[t]++;
        }
    }
    return SupportJoint::from_members(vocab, std::move(seqs), std::move(weights));
}

SupportJoint tabular_maze(const MazeParams& params, MazeLayout layout) {
    const uint32_t cells = params.width * params.height;
    if (params.width == 0 || params.height == 0 || cells < 3)
        throw std::invalid_argument("tabular maze: grid must have at least 3 cells");
    if (params.barriers + 2 >= cells)
        throw std::invalid_argument("tabular maze: too many barriers for the grid");
    const uint32_t free_count = cells - params.barriers;
    double n_configs = static_cast<double>(free_count) * (free_count - 1);
    for (uint32_t i = 0; i < params.barriers; i++)
        n_configs *= static_cast<double>(cells - i) / static_cast<double>(i + 1);
    if (n_configs > 2e6) throw std::invalid_argument("tabular maze: state space too large");

    std::vector<std::vector<uint16_t>> seqs;
    std::vector<uint32_t> barrier_cells(params.barriers);
    for (uint32_t i = 0; i < params.barriers; i++) barrier_cells[i] = i;
    while (true) {
        std::vector<uint8_t> walls(cells, 0);
        for (const uint32_t b : barrier_cells) walls[b] = 1;
        for (uint32_t start = 0; start < cells; start++) {
            if (walls[start]) continue;
            for (uint32_t end = 0; end < cells; end++) {
                if (end == start || walls[end]) continue;
                auto path = maze_bfs_path(params.width, params.height, walls, start, end);
                if (path.empty()) continue;
                Maze maze{params.width, params.height, walls, start, end, std::move(path)};
                std::vector<uint16_t> seq;
                if (layout == MazeLayout::concat) {
                    seq = maze_input_tokens(maze);
                    const auto target = maze_target_tokens(maze);
                    seq.insert(seq.end(), target.begin(), target.end());
                } else {
                    seq = maze_target_tokens(maze);
                }
                seqs.push_back(std::move(seq));
            }
        }
        // next barrier combination, lexicographic
        if (params.barriers == 0) break;
        uint32_t i = params.barriers;
        while (i > 0 && barrier_cells[i - 1] == cells - (params.barriers - (i - 1))) i--;
        if (i == 0) break;
        barrier_cells[i - 1]++;
        for (uint32_t j = i; j < params.barriers; j++) barrier_cells[j] = barrier_cells[j - 1] + 1;
    }
    return SupportJoint::uniform(MAZE_VOCAB, std::move(seqs));
}

// Prompt and scored span for one maze decode. concat layout: prompt is the
// whole first (unsolved) half and the second half is scored. solved layout:
// prompt is every non-empty input cell and the whole grid is scored.
struct MazePrompt {
    std::vector<PositionToken> known;
    uint32_t score_begin = 0;
    uint32_t T = 0;
};

MazePrompt maze_prompt(const Maze& maze, MazeLayout layout) {
    MazePrompt prompt;
    const std::vector<uint16_t> input = maze_input_tokens(maze);
    const uint32_t cells = maze.cells();
    if (layout == MazeLayout::concat) {
        prompt.T = 2 * cells;
        prompt.score_begin = cells;
        for (uint32_t t = 0; t < cells; t++) prompt.known.push_back({t, input[t]});
    } else {
        prompt.T = cells;
        prompt.score_begin = 0;
        for (uint32_t t = 0; t < cells; t++)
            if (input[t] != MAZE_EMPTY) prompt.known.push_back({t, input[t]});
    }
    return prompt;
}

}  // namespace

Order order_for_mode(OrderMode mode, uint32_t T, Rng& rng) {
    switch (mode) {
        case OrderMode::left_to_right: return identity_order(T);
        case OrderMode::fractal: return fractal_order(T);
        default: return uniform_random_order(T, rng);
    }
}

MeanStd mean_std(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("mean_std: no values");
    double sum = 0, sum_sq = 0;
    for (const double x : xs) {
        sum += x;
        sum_sq += x * x;
    }
    MeanStd out;
    out.mean = sum / static_cast<double>(xs.size());
    const double var = sum_sq / static_cast<double>(xs.size()) - out.mean * out.mean;
    out.std_dev = std::sqrt(std::max(0.0, var));
    return out;
}

double perplexity(Transformer<float>& model, const Dataset& data, OrderMode mode, uint64_t seed,
                  uint32_t batch_size) {
    check_eval_order_mode(mode);
    if (data.count() == 0) throw std::invalid_argument("perplexity: dataset is empty");
    if (batch_size == 0) throw std::invalid_argument("perplexity: batch size must be positive");
    const ModelConfig& cfg = model.config();
    if (cfg.vocab_size != data.vocab_size + 1)
        throw std::invalid_argument("perplexity: model vocab does not match dataset");
    const uint32_t T = data.seq_len;
    if (T > cfg.max_len) throw std::invalid_argument("perplexity: sequences exceed max_len");

    Rng rng(seed);
    double total = 0;
    uint64_t n_tokens = 0;
    std::vector<double> nll;
    for (uint64_t begin = 0; begin < data.count(); begin += batch_size) {
        const uint32_t B = static_cast<uint32_t>(std::min<uint64_t>(batch_size, data.count() - begin));
        std::vector<Order> orders;
        orders.reserve(B);
        for (uint32_t b = 0; b < B; b++) orders.push_back(order_for_mode(mode, T, rng));
        const auto chunk = std::span<const uint16_t>(data.tokens)
                               .subspan(begin * T, static_cast<size_t>(B) * T);
        const ShuffledBatch batch = build_shuffled_batch(chunk, B, T, orders, cfg);
        model.nll_per_slot(batch, nll);
        for (const double v : nll) total += v;
        n_tokens += static_cast<uint64_t>(B) * T;
    }
    return std::exp(total / static_cast<double>(n_tokens));
}

double session_perplexity(DecodeSession& session, const Dataset& data, OrderMode mode,
                          uint64_t seed) {
    check_eval_order_mode(mode);
    if (data.count() == 0) throw std::invalid_argument("perplexity: dataset is empty");
    if (session.seq_len() != data.seq_len)
        throw std::invalid_argument("perplexity: session length does not match dataset");
    if (session.data_vocab() < data.vocab_size)
        throw std::invalid_argument("perplexity: session vocab does not match dataset");

    Rng rng(seed);
    const uint32_t T = data.seq_len;
    double total = 0;
    std::vector<double> probs;
    std::vector<PositionToken> chain(T);
    for (uint64_t i = 0; i < data.count(); i++) {
        const Order order = order_for_mode(mode, T, rng);
        const auto row = data.row(i);
        for (uint32_t t = 0; t < T; t++) chain[t] = {order.perm[t], row[order.perm[t]]};
        session.reset({});
        session.chain_probs(chain, 1.0, probs);
        for (const double p : probs) total -= std::log(p);
    }
    return std::exp(total / static_cast<double>(data.count() * T));
}

SupportJoint tabular_model_from_task(const TaskSpec& spec) {
    switch (spec.kind) {
        case TaskKind::product:
            return SupportJoint::bernoulli_product(spec.product.T, spec.product.p);
        case TaskKind::step:
            return SupportJoint::step_sequences(spec.step.T, spec.step.step_len);
        case TaskKind::permutation:
            return SupportJoint::all_permutations(spec.permutation.T);
        case TaskKind::walk:
            return tabular_walk(spec.walk);
        case TaskKind::maze:
            return tabular_maze(spec.maze, spec.maze_layout);
    }
    throw std::invalid_argument("tabular_model_from_task: unknown task");
}

std::unique_ptr<DecodeSession> exact_session_for_task(const TaskSpec& spec) {
    switch (spec.kind) {
        case TaskKind::product:
            return std::make_unique<ProductSession>(spec.product.T, spec.product.p);
        case TaskKind::permutation:
            return std::make_unique<PermutationSession>(spec.permutation.T);
        default:
            return std::make_unique<SupportSession>(
                std::make_shared<const SupportJoint>(tabular_model_from_task(spec)));
    }
}

std::vector<double> class_count_pmf(uint32_t T) {
    if (T == 0) throw std::invalid_argument("class_count_pmf: T must be positive");
    // log S(n, k) via S(n,k) = k S(n-1,k) + S(n-1,k-1), all in log space.
    std::vector<double> prev(T + 1, NEG_INF), cur(T + 1, NEG_INF);
    prev[0] = 0.0;
    for (uint32_t n = 1; n <= T; n++) {
        cur.assign(T + 1, NEG_INF);
        for (uint32_t k = 1; k <= n; k++)
            cur[k] = log_sum_exp(std::log(static_cast<double>(k)) + prev[k], prev[k - 1]);
        prev = cur;
    }
    const double log_T = std::log(static_cast<double>(T));
    std::vector<double> pmf(T + 1, 0.0);
    for (uint32_t k = 1; k <= T; k++) {
        // C(T,k) * k! = T! / (T-k)!
        const double log_coeff = std::lgamma(static_cast<double>(T) + 1.0) -
                                 std::lgamma(static_cast<double>(T - k) + 1.0);
        pmf[k] = std::exp(log_coeff + prev[k] - static_cast<double>(T) * log_T);
    }
    return pmf;
}

double expected_incoherent(uint32_t T) {
    if (T == 0) throw std::invalid_argument("expected_incoherent: T must be positive");
    return static_cast<double>(T) *
           std::pow(static_cast<double>(T - 1) / static_cast<double>(T), static_cast<double>(T));
}

MeanStd ideal_permutation_rounds(uint32_t T, uint64_t seed, uint32_t n_sims) {
    if (T == 0) throw std::invalid_argument("ideal_permutation_rounds: T must be positive");
    if (n_sims == 0) throw std::invalid_argument("ideal_permutation_rounds: need at least one sim");
    Rng rng(seed);
    std::vector<uint64_t> stamp(T, 0);
    uint64_t epoch = 0;
    double sum = 0, sum_sq = 0;
    for (uint32_t s = 0; s < n_sims; s++) {
        uint32_t remaining = T;
        uint32_t rounds = 0;
        while (remaining > 0) {
            epoch++;
            uint32_t distinct = 0;
            for (uint32_t i = 0; i < remaining; i++) {
                const uint32_t cls = rng.uniform_int(remaining);
                if (stamp[cls] != epoch) {
                    stamp[cls] = epoch;
                    distinct++;
                }
            }
            remaining -= distinct;
            rounds++;
        }
        sum += rounds;
        sum_sq += static_cast<double>(rounds) * rounds;
    }
    MeanStd out;
    out.mean = sum / n_sims;
    out.std_dev = std::sqrt(std::max(0.0, sum_sq / n_sims - out.mean * out.mean));
    return out;
}

std::vector<StepCurvePoint> burst_benchmark(const CaseProvider& provider,
                                            const BurstBenchmarkParams& params, uint64_t seed) {
    if (params.n_samples == 0) throw std::invalid_argument("burst_benchmark: need samples");
    std::vector<StepCurvePoint> points;
    const Rng case_base = Rng(seed).fork(7);

    uint32_t config_idx = 0;
    auto run_config = [&](bool use_burst, uint32_t n_orders) {
        const Rng decode_base = Rng(seed).fork(100 + config_idx);
        config_idx++;
        double steps_sum = 0, quality_sum = 0;
        for (uint32_t s = 0; s < params.n_samples; s++) {
            Rng case_rng = case_base.fork(s);
            Rng decode_rng = decode_base.fork(s);
            BenchmarkCase bc = provider(s, case_rng);
            if (bc.session == nullptr) throw std::invalid_argument("burst_benchmark: no session");
            std::vector<uint16_t> sequence;
            if (use_burst) {
                BurstConfig cfg;
                cfg.n_orders = n_orders;
                cfg.temperature = params.temperature;
                cfg.shared_noise = params.shared_noise;
                BurstResult res = burst_rejection_sample(*bc.session, bc.known, cfg, decode_rng);
                steps_sum += static_cast<double>(res.rounds.size());
                sequence = std::move(res.sequence);
            } else {
                const Order order =
                    order_for_mode(params.ar_order, bc.session->seq_len(), decode_rng);
                GenerateResult res =
                    generate(*bc.session, bc.known, order, params.temperature, decode_rng);
                steps_sum += static_cast<double>(res.steps.size());
                sequence = std::move(res.sequence);
            }
            quality_sum += bc.valid && bc.valid(sequence) ? 1.0 : 0.0;
        }
        StepCurvePoint point;
        point.method = use_burst ? "burst" : "autoregressive";
        point.n_orders = use_burst ? n_orders : 0;
        point.steps = steps_sum / params.n_samples;
        point.quality = quality_sum / params.n_samples;
        points.push_back(std::move(point));
    };

    if (params.include_autoregressive) run_config(false, 0);
    for (const uint32_t n_orders : params.n_orders) run_config(true, n_orders);
    return points;
}

std::vector<StepCurvePoint> oracle_burst_curve(const TaskSpec& spec,
                                               const BurstBenchmarkParams& params, uint64_t seed) {
    std::unique_ptr<DecodeSession> session;
    std::function<bool(std::span<const uint16_t>)> valid;
    switch (spec.kind) {
        case TaskKind::product:
            session = std::make_unique<ProductSession>(spec.product.T, spec.product.p);
            valid = [](std::span<const uint16_t>) { return true; };
            break;
        case TaskKind::permutation:
            session = std::make_unique<PermutationSession>(spec.permutation.T);
            valid = [](std::span<const uint16_t> seq) {
                const std::vector<uint32_t> perm(seq.begin(), seq.end());
                return is_permutation(perm);
            };
            break;
        default: {
            auto joint = std::make_shared<const SupportJoint>(tabular_model_from_task(spec));
            session = std::make_unique<SupportSession>(joint);
            valid = [joint](std::span<const uint16_t> seq) { return joint->sequence_prob(seq) > 0; };
            break;
        }
    }
    const CaseProvider provider = [&](uint32_t, Rng&) {
        return BenchmarkCase{session.get(), {}, valid};
    };
    return burst_benchmark(provider, params, seed);
}

void write_step_curve_csv(const std::string& path, std::span<const StepCurvePoint> points) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open curve file " + path);
    out << "method,n_orders,steps,quality\n";
    char line[160];
    for (const auto& p : points) {
        std::snprintf(line, sizeof(line), "%s,%u,%.6f,%.6f\n", p.method.c_str(), p.n_orders,
                      p.steps, p.quality);
        out << line;
    }
    if (!out) throw std::runtime_error("curve write failed: " + path);
}

MazeEvalResult maze_eval(const Transformer<float>& model, const MazeEvalParams& params,
                         uint64_t seed) {
    if (params.n_mazes == 0) throw std::invalid_argument("maze_eval: need mazes");
    const ModelConfig& cfg = model.config();
    if (cfg.vocab_size != MAZE_VOCAB + 1)
        throw std::invalid_argument("maze_eval: model vocab does not match the maze alphabet");
    const uint32_t cells = params.maze.width * params.maze.height;
    const uint32_t T = params.layout == MazeLayout::concat ? 2 * cells : cells;
    if (T > cfg.max_len) throw std::invalid_argument("maze_eval: sequence exceeds max_len");

    TransformerSession session(model, T);
    MazeEvalResult out;
    out.n_mazes = params.n_mazes;
    const Rng base(seed);
    for (uint32_t i = 0; i < params.n_mazes; i++) {
        Rng maze_rng = base.fork(2 * i);
        Rng decode_rng = base.fork(2 * i + 1);
        const Maze maze = gen_maze(params.maze, maze_rng);
        const MazePrompt prompt = maze_prompt(maze, params.layout);

        std::vector<uint16_t> sequence;
        if (params.use_burst) {
            BurstConfig cfg_b = params.burst;
            cfg_b.temperature = params.temperature;
            BurstResult res = burst_rejection_sample(session, prompt.known, cfg_b, decode_rng);
            out.mean_rounds += static_cast<double>(res.rounds.size());
            out.mean_steps += static_cast<double>(res.rounds.size());
            sequence = std::move(res.sequence);
        } else {
            const Order order = order_for_mode(params.ar_order, T, decode_rng);
            GenerateResult res =
                generate(session, prompt.known, order, params.temperature, decode_rng);
            out.mean_steps += static_cast<double>(res.steps.size());
            sequence = std::move(res.sequence);
        }
        const auto grid = std::span<const uint16_t>(sequence).subspan(prompt.score_begin, cells);
        const PathCheck check = validate_maze_path(maze, grid);
        out.valid_rate += check.valid ? 1.0 : 0.0;
        out.optimal_rate += check.optimal ? 1.0 : 0.0;
    }
    out.valid_rate /= params.n_mazes;
    out.optimal_rate /= params.n_mazes;
    out.mean_rounds /= params.n_mazes;
    out.mean_steps /= params.n_mazes;
    return out;
}

std::vector<MemorizationCell> memorization_sweep(const MemorizationParams& params, uint64_t seed) {
    if (params.sizes.empty() || params.modes.empty())
        throw std::invalid_argument("memorization_sweep: need sizes and modes");
    const uint32_t cells = params.maze.width * params.maze.height;
    const uint32_t T = 2 * cells;  // concat layout throughout
    const uint32_t max_size = *std::max_element(params.sizes.begin(), params.sizes.end());

    const Rng base(seed);
    // One nested pool of training mazes shared by every cell, and one fresh
    // evaluation set.
    std::vector<Maze> train_mazes;
    train_mazes.reserve(max_size);
    for (uint32_t i = 0; i < max_size; i++) {
        Rng rng = base.fork(10 + i);
        train_mazes.push_back(gen_maze(params.maze, rng));
    }
    std::vector<Maze> val_mazes;
    for (uint32_t i = 0; i < params.n_eval; i++) {
        Rng rng = base.fork(1000000 + i);
        val_mazes.push_back(gen_maze(params.maze, rng));
    }

    auto row_of = [](const Maze& maze) {
        std::vector<uint16_t> row = maze_input_tokens(maze);
        const auto target = maze_target_tokens(maze);
        row.insert(row.end(), target.begin(), target.end());
        return row;
    };

    auto accuracy_on = [&](const Transformer<float>& model, std::span<const Maze> mazes,
                           OrderMode mode, uint64_t decode_seed) {
        TransformerSession session(model, T);
        Rng rng(decode_seed);
        double valid = 0;
        for (const Maze& maze : mazes) {
            const MazePrompt prompt = maze_prompt(maze, MazeLayout::concat);
            const Order order = order_for_mode(mode, T, rng);
            const GenerateResult res = generate(session, prompt.known, order, 1.0, rng);
            const auto grid = std::span<const uint16_t>(res.sequence).subspan(cells, cells);
            valid += validate_maze_path(maze, grid).valid ? 1.0 : 0.0;
        }
        return mazes.empty() ? 0.0 : valid / static_cast<double>(mazes.size());
    };

    std::vector<MemorizationCell> table;
    uint32_t cell_idx = 0;
    for (const uint32_t size : params.sizes) {
        if (size == 0) throw std::invalid_argument("memorization_sweep: empty train size");
        Dataset train_data;
        train_data.vocab_size = MAZE_VOCAB;
        train_data.seq_len = T;
        for (uint32_t i = 0; i < size; i++) {
            const auto row = row_of(train_mazes[i]);
            train_data.tokens.insert(train_data.tokens.end(), row.begin(), row.end());
        }
        for (const OrderMode mode : params.modes) {
            cell_idx++;
            ModelConfig mc = params.model;
            mc.vocab_size = MAZE_VOCAB + 1;
            Transformer<float> model(mc.resolved());
            Rng init_rng = base.fork(2000000 + cell_idx);
            model.init_params(init_rng);
            TrainConfig tc = params.train;
            tc.order_mode = mode;
            tc.seed = seed ^ (0x100000001b3ull * cell_idx);
            tc.seed_set = true;
            const TrainResult trained = train_model(model, train_data, nullptr, tc, nullptr);

            MemorizationCell cell;
            cell.dataset_size = size;
            cell.order_mode = mode;
            const OrderMode decode_mode =
                mode == OrderMode::curriculum ? OrderMode::random : mode;
            const uint32_t n_train_eval = std::min<uint32_t>(params.n_eval, size);
            cell.train_acc = accuracy_on(
                model, std::span<const Maze>(train_mazes.data(), n_train_eval), decode_mode,
                seed ^ (3000000 + cell_idx));
            cell.val_acc = accuracy_on(model, val_mazes, decode_mode, seed ^ (4000000 + cell_idx));
            cell.final_train_loss = trained.final_train_loss;
            table.push_back(cell);
        }
    }
    return table;
}

void write_memorization_csv(const std::string& path, std::span<const MemorizationCell> cells) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open sweep file " + path);
    out << "dataset_size,order_mode,train_acc,val_acc,final_train_loss\n";
    char line[160];
    for (const auto& c : cells) {
        std::snprintf(line, sizeof(line), "%u,%s,%.6f,%.6f,%.6f\n", c.dataset_size,
                      order_mode_to_string(c.order_mode).c_str(), c.train_acc, c.val_acc,
                      c.final_train_loss);
        out << line;
    }
    if (!out) throw std::runtime_error("sweep write failed: " + path);
}

double chain_rule_check(DecodeSession& session, std::span<const uint16_t> sequence,
                        uint32_t n_orders, uint64_t seed) {
    const uint32_t T = session.seq_len();
    if (sequence.size() != T)
        throw std::invalid_argument("chain_rule_check: sequence length does not match session");
    if (n_orders == 0) throw std::invalid_argument("chain_rule_check: need at least one order");

    Rng rng(seed);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    std::vector<double> probs;
    std::vector<PositionToken> chain(T);
    for (uint32_t k = 0; k < n_orders; k++) {
        const Order order = uniform_random_order(T, rng);
        for (uint32_t t = 0; t < T; t++) chain[t] = {order.perm[t], sequence[order.perm[t]]};
        session.reset({});
        session.chain_probs(chain, 1.0, probs);
        double ll = 0;
        for (const double p : probs) ll += std::log(p);
        lo = std::min(lo, ll);
        hi = std::max(hi, ll);
    }
    return hi - lo;
}

double empirical_kl(std::span<const int64_t> counts, std::span<const double> expected) {
    if (counts.size() != expected.size())
        throw std::invalid_argument("empirical_kl: size mismatch");
    int64_t n = 0;
    for (const int64_t c : counts) {
        if (c < 0) throw std::invalid_argument("empirical_kl: negative count");
        n += c;
    }
    if (n == 0) throw std::invalid_argument("empirical_kl: no observations");
    double kl = 0;
    for (size_t i = 0; i < counts.size(); i++) {
        if (counts[i] == 0) continue;
        if (!(expected[i] > 0))
            throw std::invalid_argument("empirical_kl: observation in a zero-probability cell");
        const double q = static_cast<double>(counts[i]) / static_cast<double>(n);
        kl += q * std::log(q / expected[i]);
    }
    return kl;
}

void write_run_manifest(const std::string& path, const std::string& name, uint64_t seed,
                        const std::string& config_json) {
    nlohmann::json config = nlohmann::json::parse(config_json);
    nlohmann::json manifest;
    manifest["name"] = name;
    manifest["seed"] = seed;
    manifest["config"] = std::move(config);
    manifest["config_hash"] = fnv1a_hex(config_json);
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open manifest file " + path);
    out << manifest.dump(2) << '\n';
    if (!out) throw std::runtime_error("manifest write failed: " + path);
}

}  // namespace sigma
