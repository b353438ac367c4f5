#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sigma/rng.hpp"

namespace sigma {

// --- synthetic sequence generators ---

struct ProductParams {
    uint32_t T = 100;
    double p = 0.1;
};

struct StepParams {
    uint32_t T = 100;
    uint32_t step_len = 10;
};

struct PermutationParams {
    uint32_t T = 100;
};

struct WalkParams {
    std::vector<int32_t> starts{100, 120, 130, 140};
    double p_move = 0.4;  // probability of one step down, and of one step up
    double p_stay = 0.2;
    uint32_t T = 100;
};

// Independent Bernoulli(p) bits.
std::vector<uint16_t> gen_product(const ProductParams& params, Rng& rng);

// Zeros except one run of step_len ones; the run offset is uniform over
// [0, T - step_len].
struct StepSample {
    std::vector<uint16_t> tokens;
    uint32_t offset = 0;
};
StepSample gen_step(const StepParams& params, Rng& rng);

// A uniformly random permutation of the classes 0..T-1.
std::vector<uint16_t> gen_permutation(const PermutationParams& params, Rng& rng);

// Lazy random walk: start uniform over starts, then T-1 increments from
// {-1, 0, +1} with probabilities (p_move, p_stay, p_move). Tokens are the
// altitudes shifted into a non-negative range.
struct WalkSample {
    std::vector<int32_t> altitudes;
    std::vector<uint16_t> tokens;
    int32_t token_offset = 0;
};
WalkSample gen_lazy_walk(const WalkParams& params, Rng& rng);

// Shift that maps every reachable altitude into [0, walk_vocab).
int32_t walk_token_offset(const WalkParams& params);
uint32_t walk_vocab(const WalkParams& params);

// --- mazes ---

inline constexpr uint16_t MAZE_EMPTY = 0;
inline constexpr uint16_t MAZE_WALL = 1;
inline constexpr uint16_t MAZE_START = 2;
inline constexpr uint16_t MAZE_END = 3;
inline constexpr uint16_t MAZE_PATH = 4;
inline constexpr uint32_t MAZE_VOCAB = 5;

struct MazeParams {
    uint32_t width = 7;
    uint32_t height = 7;
    uint32_t barriers = 6;
};

struct Maze {
    uint32_t width = 0;
    uint32_t height = 0;
    std::vector<uint8_t> walls;          // one byte per cell, raster order
    uint32_t start = 0;                  // raster index
    uint32_t end = 0;                    // raster index
    std::vector<uint32_t> optimal_path;  // BFS shortest path, start..end inclusive

    uint32_t cells() const { return width * height; }
};

// Rejection-samples barrier placements until start and end are connected.
Maze gen_maze(const MazeParams& params, Rng& rng);

// Raster-scan token grids. The target variant marks the optimal path with
// MAZE_PATH; the input variant leaves those cells MAZE_EMPTY.
std::vector<uint16_t> maze_target_tokens(const Maze& maze);
std::vector<uint16_t> maze_input_tokens(const Maze& maze);

// Shortest start-to-end distance in cells (start and end included), by BFS.
uint32_t maze_shortest_path_cells(const Maze& maze);

// The deterministic BFS shortest path start..end inclusive (fixed neighbor
// visit order), or empty if unreachable. This is the path gen_maze marks.
std::vector<uint32_t> maze_bfs_path(uint32_t width, uint32_t height,
                                    std::span<const uint8_t> walls, uint32_t start, uint32_t end);

struct PathCheck {
    bool valid = false;
    bool optimal = false;
    std::string reason;
};

// Checks that a generated token grid keeps the prompt cells intact and that
// its MAZE_PATH cells, together with start and end, form one simple connected
// start-to-end path. optimal additionally requires BFS-shortest length.
PathCheck validate_maze_path(const Maze& maze, std::span<const uint16_t> tokens);

// --- task descriptions for datasets, oracles and the CLI ---

enum class TaskKind { product, step, permutation, walk, maze };

// Maze sequences can be emitted as the solved grid alone, or as the unsolved
// grid concatenated with the solved grid (prompt-friendly for left-to-right
// models).
enum class MazeLayout { solved, concat };

struct TaskSpec {
    TaskKind kind = TaskKind::product;
    ProductParams product;
    StepParams step;
    PermutationParams permutation;
    WalkParams walk;
    MazeParams maze;
    MazeLayout maze_layout = MazeLayout::solved;

    uint32_t seq_len() const;
    uint32_t vocab() const;
    std::string name() const;

    static TaskSpec from_json(const std::string& json_text);
    std::string to_json() const;
};

// One token sequence drawn from the task law.
std::vector<uint16_t> sample_task_tokens(const TaskSpec& spec, Rng& rng);

}  // namespace sigma
