#include "sigma/tasks.hpp"

#include <algorithm>
#include <stdexcept>

#include <json.hpp>

namespace sigma {

std::vector<uint16_t> gen_product(const ProductParams& params, Rng& rng) {
    if (params.T == 0) throw std::invalid_argument("gen_product: T must be positive");
    if (!(params.p >= 0.0 && params.p <= 1.0)) throw std::invalid_argument("gen_product: p must be in [0, 1]");
    std::vector<uint16_t> tokens(params.T);
    for (auto& t : tokens) t = rng.uniform() < params.p ? 1 : 0;
    return tokens;
}

StepSample gen_step(const StepParams& params, Rng& rng) {
    if (params.step_len == 0 || params.step_len > params.T)
        throw std::invalid_argument("gen_step: need 1 <= step_len <= T");
    StepSample s;
    s.offset = rng.uniform_int(params.T - params.step_len + 1);
    s.tokens.assign(params.T, 0);
    std::fill(s.tokens.begin() + s.offset, s.tokens.begin() + s.offset + params.step_len, uint16_t{1});
    return s;
}

std::vector<uint16_t> gen_permutation(const PermutationParams& params, Rng& rng) {
    if (params.T == 0 || params.T > 65536)
        throw std::invalid_argument("gen_permutation: need 1 <= T <= 65536");
    std::vector<uint16_t> tokens(params.T);
    for (uint32_t i = 0; i < params.T; i++) tokens[i] = static_cast<uint16_t>(i);
    for (uint32_t i = params.T - 1; i > 0; i--)
        std::swap(tokens[i], tokens[rng.uniform_int(i + 1)]);
    return tokens;
}

namespace {

void check_walk_params(const WalkParams& params) {
    if (params.T == 0) throw std::invalid_argument("walk: T must be positive");
    if (params.starts.empty()) throw std::invalid_argument("walk: starts must be nonempty");
    if (!(params.p_move >= 0.0 && params.p_stay >= 0.0))
        throw std::invalid_argument("walk: probabilities must be non-negative");
    if (std::abs(2.0 * params.p_move + params.p_stay - 1.0) > 1e-12)
        throw std::invalid_argument("walk: 2*p_move + p_stay must equal 1");
}

}  // namespace

int32_t walk_token_offset(const WalkParams& params) {
    check_walk_params(params);
    const int32_t min_start = *std::min_element(params.starts.begin(), params.starts.end());
    const int32_t lowest = min_start - static_cast<int32_t>(params.T - 1);
    return lowest < 0 ? -lowest : 0;
}

uint32_t walk_vocab(const WalkParams& params) {
    check_walk_params(params);
    const int32_t max_start = *std::max_element(params.starts.begin(), params.starts.end());
    const int32_t highest = max_start + static_cast<int32_t>(params.T - 1) + walk_token_offset(params);
    if (highest + 1 > 65536) throw std::invalid_argument("walk: altitude range exceeds u16 tokens");
    return static_cast<uint32_t>(highest + 1);
}

WalkSample gen_lazy_walk(const WalkParams& params, Rng& rng) {
    check_walk_params(params);
    WalkSample s;
    s.token_offset = walk_token_offset(params);
    s.altitudes.resize(params.T);
    s.altitudes[0] = params.starts[rng.uniform_int(static_cast<uint32_t>(params.starts.size()))];
    for (uint32_t t = 1; t < params.T; t++) {
        const double r = rng.uniform();
        int32_t delta = 0;
        if (r < params.p_move) delta = -1;
        else if (r < 2.0 * params.p_move) delta = 1;
        s.altitudes[t] = s.altitudes[t - 1] + delta;
    }
    s.tokens.resize(params.T);
    for (uint32_t t = 0; t < params.T; t++)
        s.tokens[t] = static_cast<uint16_t>(s.altitudes[t] + s.token_offset);
    return s;
}

uint32_t TaskSpec::seq_len() const {
    switch (kind) {
        case TaskKind::product: return product.T;
        case TaskKind::step: return step.T;
        case TaskKind::permutation: return permutation.T;
        case TaskKind::walk: return walk.T;
        case TaskKind::maze: {
            const uint32_t cells = maze.width * maze.height;
            return maze_layout == MazeLayout::concat ? 2 * cells : cells;
        }
    }
    throw std::logic_error("TaskSpec::seq_len: unknown kind");
}

uint32_t TaskSpec::vocab() const {
    switch (kind) {
        case TaskKind::product: return 2;
        case TaskKind::step: return 2;
        case TaskKind::permutation: return permutation.T;
        case TaskKind::walk: return walk_vocab(walk);
        case TaskKind::maze: return MAZE_VOCAB;
    }
    throw std::logic_error("TaskSpec::vocab: unknown kind");
}

std::string TaskSpec::name() const {
    switch (kind) {
        case TaskKind::product: return "product";
        case TaskKind::step: return "step";
        case TaskKind::permutation: return "perm";
        case TaskKind::walk: return "walk";
        case TaskKind::maze: return "maze";
    }
    throw std::logic_error("TaskSpec::name: unknown kind");
}

TaskSpec TaskSpec::from_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("task json: ") + e.what());
    }
    if (!j.is_object() || !j.contains("task"))
        throw std::invalid_argument("task json: expected an object with a \"task\" field");

    TaskSpec spec;
    const std::string task = j.at("task").get<std::string>();
    if (task == "product") {
        spec.kind = TaskKind::product;
        spec.product.T = j.value("T", spec.product.T);
        spec.product.p = j.value("p", spec.product.p);
    } else if (task == "step") {
        spec.kind = TaskKind::step;
        spec.step.T = j.value("T", spec.step.T);
        spec.step.step_len = j.value("step_len", spec.step.step_len);
    } else if (task == "perm") {
        spec.kind = TaskKind::permutation;
        spec.permutation.T = j.value("T", spec.permutation.T);
    } else if (task == "walk") {
        spec.kind = TaskKind::walk;
        spec.walk.T = j.value("T", spec.walk.T);
        if (j.contains("starts")) spec.walk.starts = j.at("starts").get<std::vector<int32_t>>();
        spec.walk.p_move = j.value("p_move", spec.walk.p_move);
        spec.walk.p_stay = j.value("p_stay", spec.walk.p_stay);
    } else if (task == "maze") {
        spec.kind = TaskKind::maze;
        spec.maze.width = j.value("width", spec.maze.width);
        spec.maze.height = j.value("height", spec.maze.height);
        spec.maze.barriers = j.value("barriers", spec.maze.barriers);
        const std::string layout = j.value("layout", std::string("solved"));
        if (layout == "solved") spec.maze_layout = MazeLayout::solved;
        else if (layout == "concat") spec.maze_layout = MazeLayout::concat;
        else throw std::invalid_argument("task json: maze layout must be \"solved\" or \"concat\"");
    } else {
        throw std::invalid_argument("task json: unknown task \"" + task + "\"");
    }
    spec.seq_len();
    spec.vocab();
    return spec;
}

std::string TaskSpec::to_json() const {
    nlohmann::json j;
    j["task"] = name();
    switch (kind) {
        case TaskKind::product:
            j["T"] = product.T;
            j["p"] = product.p;
            break;
        case TaskKind::step:
            j["T"] = step.T;
            j["step_len"] = step.step_len;
            break;
        case TaskKind::permutation:
            j["T"] = permutation.T;
            break;
        case TaskKind::walk:
            j["T"] = walk.T;
            j["starts"] = walk.starts;
            j["p_move"] = walk.p_move;
            j["p_stay"] = walk.p_stay;
            break;
        case TaskKind::maze:
            j["width"] = maze.width;
            j["height"] = maze.height;
            j["barriers"] = maze.barriers;
            j["layout"] = maze_layout == MazeLayout::concat ? "concat" : "solved";
            break;
    }
    return j.dump();
}

std::vector<uint16_t> sample_task_tokens(const TaskSpec& spec, Rng& rng) {
    switch (spec.kind) {
        case TaskKind::product: return gen_product(spec.product, rng);
        case TaskKind::step: return gen_step(spec.step, rng).tokens;
        case TaskKind::permutation: return gen_permutation(spec.permutation, rng);
        case TaskKind::walk: return gen_lazy_walk(spec.walk, rng).tokens;
        case TaskKind::maze: {
            const Maze maze = gen_maze(spec.maze, rng);
            std::vector<uint16_t> tokens = maze_target_tokens(maze);
            if (spec.maze_layout == MazeLayout::concat) {
                std::vector<uint16_t> both = maze_input_tokens(maze);
                both.insert(both.end(), tokens.begin(), tokens.end());
                return both;
            }
            return tokens;
        }
    }
    throw std::logic_error("sample_task_tokens: unknown kind");
}

}  // namespace sigma
