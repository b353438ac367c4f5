#include <algorithm>
#include <array>
#include <deque>
#include <numeric>
#include <stdexcept>

#include "sigma/tasks.hpp"

namespace sigma {

namespace {

// Fixed neighbor visit order (up, down, left, right) keeps BFS parents, and
// therefore the extracted shortest path, deterministic.
template <typename Fn>
void for_each_neighbor(uint32_t cell, uint32_t width, uint32_t height, Fn&& fn) {
    const uint32_t r = cell / width, c = cell % width;
    if (r > 0) fn(cell - width);
    if (r + 1 < height) fn(cell + width);
    if (c > 0) fn(cell - 1);
    if (c + 1 < width) fn(cell + 1);
}

// Shortest path start..end avoiding walls; empty if unreachable.
std::vector<uint32_t> bfs_path(uint32_t width, uint32_t height, const std::vector<uint8_t>& walls,
                               uint32_t start, uint32_t end) {
    const uint32_t n = width * height;
    std::vector<int32_t> parent(n, -1);
    std::deque<uint32_t> frontier{start};
    parent[start] = static_cast<int32_t>(start);
    while (!frontier.empty() && parent[end] < 0) {
        const uint32_t cur = frontier.front();
        frontier.pop_front();
        for_each_neighbor(cur, width, height, [&](uint32_t next) {
            if (parent[next] < 0 && !walls[next]) {
                parent[next] = static_cast<int32_t>(cur);
                frontier.push_back(next);
            }
        });
    }
    if (parent[end] < 0) return {};
    std::vector<uint32_t> path{end};
    while (path.back() != start) path.push_back(static_cast<uint32_t>(parent[path.back()]));
    std::reverse(path.begin(), path.end());
    return path;
}

}  // namespace

std::vector<uint32_t> maze_bfs_path(uint32_t width, uint32_t height,
                                    std::span<const uint8_t> walls, uint32_t start, uint32_t end) {
    const uint32_t n = width * height;
    if (walls.size() != n) throw std::invalid_argument("maze_bfs_path: wall grid has wrong size");
    if (start >= n || end >= n) throw std::invalid_argument("maze_bfs_path: cell out of range");
    return bfs_path(width, height, std::vector<uint8_t>(walls.begin(), walls.end()), start, end);
}

Maze gen_maze(const MazeParams& params, Rng& rng) {
    const uint32_t cells = params.width * params.height;
    if (params.width == 0 || params.height == 0 || cells < 3)
        throw std::invalid_argument("gen_maze: grid must have at least 3 cells");
    if (params.barriers + 2 >= cells)
        throw std::invalid_argument("gen_maze: too many barriers for the grid");

    std::vector<uint32_t> pool(cells);
    for (int attempt = 0; attempt < 100000; attempt++) {
        Maze maze;
        maze.width = params.width;
        maze.height = params.height;
        maze.walls.assign(cells, 0);

        // Partial Fisher-Yates: a uniform set of barrier cells, then a uniform
        // ordered pair of distinct free cells for start and end.
        std::iota(pool.begin(), pool.end(), 0u);
        for (uint32_t i = 0; i < params.barriers; i++) {
            const uint32_t j = i + rng.uniform_int(cells - i);
            std::swap(pool[i], pool[j]);
            maze.walls[pool[i]] = 1;
        }
        const uint32_t free_count = cells - params.barriers;
        const uint32_t si = params.barriers + rng.uniform_int(free_count);
        std::swap(pool[params.barriers], pool[si]);
        maze.start = pool[params.barriers];
        const uint32_t ei = params.barriers + 1 + rng.uniform_int(free_count - 1);
        std::swap(pool[params.barriers + 1], pool[ei]);
        maze.end = pool[params.barriers + 1];

        maze.optimal_path = bfs_path(maze.width, maze.height, maze.walls, maze.start, maze.end);
        if (!maze.optimal_path.empty()) return maze;
    }
    throw std::runtime_error("gen_maze: no solvable configuration found");
}

std::vector<uint16_t> maze_target_tokens(const Maze& maze) {
    std::vector<uint16_t> tokens(maze.cells(), MAZE_EMPTY);
    for (uint32_t i = 0; i < maze.cells(); i++)
        if (maze.walls[i]) tokens[i] = MAZE_WALL;
    for (uint32_t cell : maze.optimal_path) tokens[cell] = MAZE_PATH;
    tokens[maze.start] = MAZE_START;
    tokens[maze.end] = MAZE_END;
    return tokens;
}

std::vector<uint16_t> maze_input_tokens(const Maze& maze) {
    std::vector<uint16_t> tokens = maze_target_tokens(maze);
    for (auto& t : tokens)
        if (t == MAZE_PATH) t = MAZE_EMPTY;
    return tokens;
}

uint32_t maze_shortest_path_cells(const Maze& maze) {
    const auto path = bfs_path(maze.width, maze.height, maze.walls, maze.start, maze.end);
    if (path.empty()) throw std::invalid_argument("maze_shortest_path_cells: maze is not solvable");
    return static_cast<uint32_t>(path.size());
}

PathCheck validate_maze_path(const Maze& maze, std::span<const uint16_t> tokens) {
    PathCheck check;
    if (tokens.size() != maze.cells()) {
        check.reason = "token grid has wrong size";
        return check;
    }
    for (uint32_t i = 0; i < maze.cells(); i++) {
        const uint16_t expected = maze.walls[i] ? MAZE_WALL
                                : i == maze.start ? MAZE_START
                                : i == maze.end   ? MAZE_END
                                                  : uint16_t{0xffff};
        if (expected != 0xffff) {
            if (tokens[i] != expected) {
                check.reason = "prompt cell altered";
                return check;
            }
        } else if (tokens[i] != MAZE_EMPTY && tokens[i] != MAZE_PATH) {
            check.reason = "unexpected token class on a free cell";
            return check;
        }
    }

    // The path cells plus start and end must induce one simple chain: start
    // and end of degree 1, every path cell of degree 2, all connected.
    std::vector<uint8_t> in_set(maze.cells(), 0);
    uint32_t path_cells = 0;
    for (uint32_t i = 0; i < maze.cells(); i++) {
        if (tokens[i] == MAZE_PATH) {
            in_set[i] = 1;
            path_cells++;
        }
    }
    in_set[maze.start] = 1;
    in_set[maze.end] = 1;

    auto degree = [&](uint32_t cell) {
        uint32_t d = 0;
        for_each_neighbor(cell, maze.width, maze.height, [&](uint32_t n) { d += in_set[n]; });
        return d;
    };
    if (degree(maze.start) != 1 || degree(maze.end) != 1) {
        check.reason = "start or end does not have exactly one path neighbor";
        return check;
    }
    for (uint32_t i = 0; i < maze.cells(); i++) {
        if (tokens[i] == MAZE_PATH && degree(i) != 2) {
            check.reason = "path cell does not have exactly two path neighbors";
            return check;
        }
    }

    // Walk the chain from start; with the degree constraints above it is a
    // path if and only if it reaches end after visiting every member.
    uint32_t visited = 1;
    uint32_t prev = maze.start, cur = maze.start;
    while (cur != maze.end) {
        uint32_t next = cur;
        for_each_neighbor(cur, maze.width, maze.height, [&](uint32_t n) {
            if (in_set[n] && n != prev) next = n;
        });
        if (next == cur) break;  // dead end (cannot happen if degrees hold)
        prev = cur;
        cur = next;
        visited++;
    }
    if (cur != maze.end || visited != path_cells + 2) {
        check.reason = "path cells are disconnected from the start-end chain";
        return check;
    }

    check.valid = true;
    check.optimal = path_cells + 2 == maze_shortest_path_cells(maze);
    if (!check.optimal) check.reason = "valid but longer than the shortest path";
    return check;
}

}  // namespace sigma
