#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <set>

#include "sigma/dataset.hpp"
#include "sigma/stats.hpp"
#include "sigma/tasks.hpp"

using namespace sigma;

TEST_CASE("product task: parameter checks and empirical rate") {
    Rng rng(1);
    CHECK_THROWS_AS(gen_product({0, 0.1}, rng), std::invalid_argument);
    CHECK_THROWS_AS(gen_product({10, 1.5}, rng), std::invalid_argument);

    const ProductParams params{100, 0.1};
    int64_t ones = 0;
    const int runs = 100000;
    for (int i = 0; i < runs; i++) {
        for (uint16_t t : gen_product(params, rng)) {
            CHECK(t <= 1);
            ones += t;
        }
    }
    const double mean_ones = static_cast<double>(ones) / runs;
    CHECK(std::abs(mean_ones - 10.0) < 0.1);
}

TEST_CASE("step task: exact shape and uniform offset") {
    Rng rng(2);
    CHECK_THROWS_AS(gen_step({10, 0}, rng), std::invalid_argument);
    CHECK_THROWS_AS(gen_step({10, 11}, rng), std::invalid_argument);

    const StepParams params{100, 10};
    std::vector<int64_t> offset_counts(params.T - params.step_len + 1, 0);
    for (int i = 0; i < 50000; i++) {
        const StepSample s = gen_step(params, rng);
        offset_counts[s.offset]++;
        // exactly one run of exactly step_len ones, at the reported offset
        for (uint32_t t = 0; t < params.T; t++) {
            const bool inside = t >= s.offset && t < s.offset + params.step_len;
            REQUIRE(s.tokens[t] == (inside ? 1 : 0));
        }
    }
    const std::vector<double> uniform(offset_counts.size(), 1.0 / static_cast<double>(offset_counts.size()));
    CHECK(chi_square_test(offset_counts, uniform).p_value > 0.01);
}

TEST_CASE("permutation task: always a bijection, uniform over length-4 arrangements") {
    Rng rng(3);
    for (int i = 0; i < 1000; i++) {
        const auto tokens = gen_permutation({50}, rng);
        std::set<uint16_t> distinct(tokens.begin(), tokens.end());
        REQUIRE(distinct.size() == 50);
        CHECK(*distinct.rbegin() == 49);
    }

    std::map<std::vector<uint16_t>, int64_t> counts;
    for (int i = 0; i < 48000; i++) counts[gen_permutation({4}, rng)]++;
    REQUIRE(counts.size() == 24);
    std::vector<int64_t> observed;
    for (const auto& [perm, c] : counts) observed.push_back(c);
    const std::vector<double> uniform(24, 1.0 / 24.0);
    CHECK(chi_square_test(observed, uniform).p_value > 0.001);
}

TEST_CASE("lazy walk: increment law and non-negative tokens") {
    Rng rng(4);
    const WalkParams params;
    int64_t down = 0, stay = 0, up = 0;
    double sq_sum = 0.0;
    int64_t steps = 0;
    for (int i = 0; i < 10500; i++) {
        const WalkSample s = gen_lazy_walk(params, rng);
        CHECK((s.altitudes[0] == 100 || s.altitudes[0] == 120 || s.altitudes[0] == 130 ||
               s.altitudes[0] == 140));
        for (uint32_t t = 1; t < params.T; t++) {
            const int32_t d = s.altitudes[t] - s.altitudes[t - 1];
            REQUIRE((d >= -1 && d <= 1));
            (d < 0 ? down : d > 0 ? up : stay)++;
            sq_sum += static_cast<double>(d) * d;
            steps++;
        }
        for (uint32_t t = 0; t < params.T; t++)
            CHECK(s.tokens[t] == s.altitudes[t] + s.token_offset);
    }
    const double n = static_cast<double>(steps);
    CHECK(std::abs(down / n - 0.4) < 0.005);
    CHECK(std::abs(stay / n - 0.2) < 0.005);
    CHECK(std::abs(up / n - 0.4) < 0.005);
    CHECK(std::abs(sq_sum / n - 0.8) < 0.005);  // per-step variance (mean drift is 0)
}

TEST_CASE("lazy walk: token offset lifts low starts into range") {
    const WalkParams params{{1}, 0.4, 0.2, 5};
    CHECK(walk_token_offset(params) == 3);
    CHECK(walk_vocab(params) == 9);  // altitudes -3..5 shifted to 0..8
    Rng rng(6);
    for (int i = 0; i < 2000; i++) {
        const WalkSample s = gen_lazy_walk(params, rng);
        for (uint16_t t : s.tokens) CHECK(t < walk_vocab(params));
    }
    CHECK_THROWS_AS(gen_lazy_walk({{}, 0.4, 0.2, 5}, rng), std::invalid_argument);
    CHECK_THROWS_AS(gen_lazy_walk({{0}, 0.3, 0.2, 5}, rng), std::invalid_argument);
}

TEST_CASE("maze generation: deterministic, solvable, self-validating") {
    const MazeParams params{7, 7, 6};
    for (uint64_t seed = 0; seed < 2000; seed++) {
        Rng rng(seed);
        const Maze maze = gen_maze(params, rng);
        REQUIRE(maze.cells() == 49);
        uint32_t wall_count = 0;
        for (uint8_t w : maze.walls) wall_count += w;
        REQUIRE(wall_count == 6);
        REQUIRE(!maze.walls[maze.start]);
        REQUIRE(!maze.walls[maze.end]);
        REQUIRE(maze.start != maze.end);

        const auto target = maze_target_tokens(maze);
        REQUIRE(target.size() == 49);
        const PathCheck check = validate_maze_path(maze, target);
        REQUIRE(check.valid);
        REQUIRE(check.optimal);

        // the input variant differs from the target exactly on path cells
        const auto input = maze_input_tokens(maze);
        for (uint32_t i = 0; i < 49; i++) {
            if (target[i] == MAZE_PATH) CHECK(input[i] == MAZE_EMPTY);
            else CHECK(input[i] == target[i]);
        }
    }
    Rng rng(0);
    Rng rng2(0);
    CHECK(maze_target_tokens(gen_maze(params, rng)) == maze_target_tokens(gen_maze(params, rng2)));
}

TEST_CASE("maze generation: impossible parameters are rejected") {
    Rng rng(1);
    CHECK_THROWS_AS(gen_maze({1, 1, 0}, rng), std::invalid_argument);
    CHECK_THROWS_AS(gen_maze({1, 2, 0}, rng), std::invalid_argument);
    CHECK_THROWS_AS(gen_maze({3, 3, 7}, rng), std::invalid_argument);
    CHECK_THROWS_AS(gen_maze({3, 3, 8}, rng), std::invalid_argument);
}

TEST_CASE("maze validation: adjacency, damage, and detours") {
    // find a barrier-free 2x2 maze whose start and end come out adjacent
    bool found = false;
    for (uint64_t seed = 0; seed < 100 && !found; seed++) {
        Rng rng(seed);
        const Maze tiny = gen_maze({2, 2, 0}, rng);
        if (tiny.optimal_path.size() == 2) {
            found = true;
            CHECK(validate_maze_path(tiny, maze_target_tokens(tiny)).optimal);
        }
    }
    CHECK(found);

    // 3x3 open grid, start top-left, end top-right.
    Maze maze;
    maze.width = maze.height = 3;
    maze.walls.assign(9, 0);
    maze.start = 0;
    maze.end = 2;
    maze.optimal_path = {0, 1, 2};
    CHECK(maze_shortest_path_cells(maze) == 3);

    const auto direct = maze_target_tokens(maze);
    CHECK(validate_maze_path(maze, direct).valid);
    CHECK(validate_maze_path(maze, direct).optimal);

    // detour around the bottom: valid, not optimal
    std::vector<uint16_t> detour(9, MAZE_EMPTY);
    detour[0] = MAZE_START;
    detour[2] = MAZE_END;
    for (uint32_t cell : {3, 6, 7, 8, 5}) detour[cell] = MAZE_PATH;
    const PathCheck detour_check = validate_maze_path(maze, detour);
    CHECK(detour_check.valid);
    CHECK(!detour_check.optimal);

    // deleting one cell of the detour disconnects it
    auto broken = detour;
    broken[7] = MAZE_EMPTY;
    CHECK(!validate_maze_path(maze, broken).valid);

    // a stray path blob is rejected
    auto stray = direct;
    stray[6] = MAZE_PATH;
    CHECK(!validate_maze_path(maze, stray).valid);

    // altering a prompt cell is rejected
    auto altered = direct;
    altered[0] = MAZE_EMPTY;
    CHECK(!validate_maze_path(maze, altered).valid);
}

TEST_CASE("task specs round-trip through json") {
    for (const char* text : {
             R"({"task":"product","T":100,"p":0.1})",
             R"({"task":"step","T":100,"step_len":10})",
             R"({"task":"perm","T":100})",
             R"({"task":"walk","T":100,"starts":[100,120,130,140],"p_move":0.4,"p_stay":0.2})",
             R"({"task":"maze","width":7,"height":7,"barriers":6,"layout":"solved"})",
             R"({"task":"maze","width":7,"height":7,"barriers":6,"layout":"concat"})",
         }) {
        const TaskSpec spec = TaskSpec::from_json(text);
        const TaskSpec again = TaskSpec::from_json(spec.to_json());
        CHECK(again.seq_len() == spec.seq_len());
        CHECK(again.vocab() == spec.vocab());
        CHECK(again.to_json() == spec.to_json());
    }
    CHECK(TaskSpec::from_json(R"({"task":"maze","width":7,"height":7,"layout":"concat"})").seq_len() == 98);
    CHECK(TaskSpec::from_json(R"({"task":"perm","T":100})").vocab() == 100);
    CHECK_THROWS_AS(TaskSpec::from_json("{}"), std::invalid_argument);
    CHECK_THROWS_AS(TaskSpec::from_json(R"({"task":"nope"})"), std::invalid_argument);
    CHECK_THROWS_AS(TaskSpec::from_json("not json"), std::invalid_argument);
}

TEST_CASE("datasets regenerate bit-identically and round-trip through disk") {
    const TaskSpec spec = TaskSpec::from_json(R"({"task":"maze","width":5,"height":5,"barriers":4})");
    const Dataset a = generate_dataset(spec, 50, 9);
    const Dataset b = generate_dataset(spec, 50, 9);
    CHECK(a.tokens == b.tokens);
    CHECK(a.count() == 50);
    CHECK(a.seq_len == 25);
    CHECK(a.vocab_size == MAZE_VOCAB);
    CHECK(generate_dataset(spec, 50, 10).tokens != a.tokens);

    const std::string path = "test_tasks_tmp.sgds";
    generate_dataset_file(spec, 50, 9, path);
    const Dataset loaded = read_dataset(path);
    CHECK(loaded.vocab_size == a.vocab_size);
    CHECK(loaded.seq_len == a.seq_len);
    CHECK(loaded.tokens == a.tokens);

    // a second write produces identical bytes
    std::ifstream f1(path, std::ios::binary);
    std::string bytes1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    write_dataset(a, path);
    std::ifstream f2(path, std::ios::binary);
    std::string bytes2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(bytes1 == bytes2);

    CHECK_THROWS(read_dataset("does_not_exist.sgds"));
    std::ofstream bad("test_tasks_bad.sgds", std::ios::binary);
    bad << "SGDSx";
    bad.close();
    CHECK_THROWS(read_dataset("test_tasks_bad.sgds"));
    std::remove(path.c_str());
    std::remove((path + ".meta.json").c_str());
    std::remove("test_tasks_bad.sgds");
}
