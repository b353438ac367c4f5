#include "sigma/dataset.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace sigma {

namespace {

constexpr std::array<char, 6> MAGIC{'S', 'G', 'D', 'S', '1', '\0'};

void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; i++) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, uint64_t v) {
    for (int i = 0; i < 8; i++) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

uint64_t get_uint(const std::string& buf, size_t at, int bytes) {
    uint64_t v = 0;
    for (int i = 0; i < bytes; i++)
        v |= static_cast<uint64_t>(static_cast<unsigned char>(buf[at + i])) << (8 * i);
    return v;
}

}  // namespace

void write_dataset(const Dataset& data, const std::string& path) {
    if (data.seq_len == 0 || data.vocab_size == 0)
        throw std::invalid_argument("write_dataset: empty geometry");
    if (data.tokens.size() % data.seq_len != 0)
        throw std::invalid_argument("write_dataset: token payload is not a whole number of rows");
    for (uint16_t t : data.tokens)
        if (t >= data.vocab_size) throw std::invalid_argument("write_dataset: token outside vocabulary");

    std::string buf;
    buf.reserve(22 + 2 * data.tokens.size());
    buf.append(MAGIC.data(), MAGIC.size());
    put_u32(buf, data.vocab_size);
    put_u32(buf, data.seq_len);
    put_u64(buf, data.count());
    for (uint16_t t : data.tokens) {
        buf.push_back(static_cast<char>(t & 0xff));
        buf.push_back(static_cast<char>(t >> 8));
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("write_dataset: cannot open " + path);
    f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!f) throw std::runtime_error("write_dataset: write failed for " + path);
}

Dataset read_dataset(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("read_dataset: cannot open " + path);
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    if (buf.size() < 22 || !std::equal(MAGIC.begin(), MAGIC.end(), buf.begin()))
        throw std::runtime_error("read_dataset: not a SGDS file: " + path);
    Dataset data;
    data.vocab_size = static_cast<uint32_t>(get_uint(buf, 6, 4));
    data.seq_len = static_cast<uint32_t>(get_uint(buf, 10, 4));
    const uint64_t count = get_uint(buf, 14, 8);
    if (data.vocab_size == 0 || data.seq_len == 0)
        throw std::runtime_error("read_dataset: corrupt header in " + path);
    const uint64_t payload = count * data.seq_len;
    if (buf.size() != 22 + 2 * payload)
        throw std::runtime_error("read_dataset: truncated payload in " + path);
    data.tokens.resize(payload);
    for (uint64_t i = 0; i < payload; i++) {
        data.tokens[i] = static_cast<uint16_t>(get_uint(buf, 22 + 2 * i, 2));
        if (data.tokens[i] >= data.vocab_size)
            throw std::runtime_error("read_dataset: token outside vocabulary in " + path);
    }
    return data;
}

Dataset generate_dataset(const TaskSpec& spec, uint64_t count, uint64_t seed) {
    if (count == 0) throw std::invalid_argument("generate_dataset: count must be positive");
    Dataset data;
    data.vocab_size = spec.vocab();
    data.seq_len = spec.seq_len();
    data.tokens.reserve(count * data.seq_len);
    Rng root(seed);
    for (uint64_t i = 0; i < count; i++) {
        Rng row_rng = root.fork(i);
        const auto tokens = sample_task_tokens(spec, row_rng);
        data.tokens.insert(data.tokens.end(), tokens.begin(), tokens.end());
    }
    return data;
}

void generate_dataset_file(const TaskSpec& spec, uint64_t count, uint64_t seed, const std::string& path) {
    write_dataset(generate_dataset(spec, count, seed), path);
    nlohmann::json meta;
    meta["task"] = nlohmann::json::parse(spec.to_json());
    meta["count"] = count;
    meta["seed"] = seed;
    meta["vocab_size"] = spec.vocab();
    meta["seq_len"] = spec.seq_len();
    std::ofstream f(path + ".meta.json", std::ios::trunc);
    if (!f) throw std::runtime_error("generate_dataset_file: cannot open sidecar for " + path);
    f << meta.dump(2) << "\n";
}

}  // namespace sigma
