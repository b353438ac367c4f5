#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sigma/tasks.hpp"

namespace sigma {

// Token dataset with fixed-length rows.
//
// On disk ("SGDS" format): the 6 magic bytes "SGDS1\0", then little-endian
// u32 vocab_size, u32 seq_len, u64 count, then count * seq_len little-endian
// u16 tokens. An optional sidecar "<path>.meta.json" records the generating
// task, its parameters and the seed.
struct Dataset {
    uint32_t vocab_size = 0;
    uint32_t seq_len = 0;
    std::vector<uint16_t> tokens;  // count * seq_len, row-major

    uint64_t count() const {
        return seq_len == 0 ? 0 : tokens.size() / seq_len;
    }
    std::span<const uint16_t> row(uint64_t index) const {
        return std::span<const uint16_t>(tokens).subspan(index * seq_len, seq_len);
    }
};

void write_dataset(const Dataset& data, const std::string& path);
Dataset read_dataset(const std::string& path);

// Rows drawn from the task law; row i uses the substream fork(seed, i), so a
// (task, count, seed) triple always regenerates the same bytes.
Dataset generate_dataset(const TaskSpec& spec, uint64_t count, uint64_t seed);

// generate_dataset + write_dataset + sidecar metadata.
void generate_dataset_file(const TaskSpec& spec, uint64_t count, uint64_t seed, const std::string& path);

}  // namespace sigma
