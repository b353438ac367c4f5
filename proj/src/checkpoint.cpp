#include "sigma/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

#include <json.hpp>

namespace sigma {

static_assert(std::endian::native == std::endian::little,
              "checkpoint and dataset files assume a little-endian host");

namespace {

constexpr char CKPT_MAGIC[8] = {'S', 'G', 'C', 'K', 'P', 'T', '1', '\0'};

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw std::runtime_error("checkpoint " + path + ": " + what);
}

}  // namespace

void save_model(const std::string& path, const Transformer<float>& model) {
    nlohmann::json manifest;
    manifest["config"] = nlohmann::json::parse(model.config().to_json());
    nlohmann::json tensors = nlohmann::json::array();
    for (const auto& t : model.layout().tensors) {
        nlohmann::json entry;
        entry["name"] = t.name;
        entry["shape"] = t.shape;
        entry["offset"] = t.offset;
        entry["size"] = t.size;
        tensors.push_back(entry);
    }
    manifest["tensors"] = tensors;
    const std::string text = manifest.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(path, "cannot open for writing");
    out.write(CKPT_MAGIC, sizeof(CKPT_MAGIC));
    const uint64_t len = text.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.write(reinterpret_cast<const char*>(model.params().data()),
              static_cast<std::streamsize>(model.params().size() * sizeof(float)));
    if (!out) fail(path, "write failed");
}

Transformer<float> load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open");
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, CKPT_MAGIC, sizeof(magic)) != 0) fail(path, "bad magic");
    uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    if (!in || len == 0 || len > (1ull << 30)) fail(path, "bad manifest length");
    std::string text(len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(len));
    if (!in) fail(path, "truncated manifest");

    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(path, std::string("manifest parse: ") + e.what());
    }
    ModelConfig cfg;
    try {
        cfg = ModelConfig::from_json(manifest.at("config").dump());
    } catch (const std::exception& e) {
        fail(path, std::string("config: ") + e.what());
    }

    Transformer<float> model(cfg);
    const auto& tensors = manifest.at("tensors");
    if (!tensors.is_array() || tensors.size() != model.layout().tensors.size())
        fail(path, "tensor table does not match the config");
    for (size_t i = 0; i < tensors.size(); i++) {
        const auto& want = model.layout().tensors[i];
        const auto& have = tensors[i];
        if (have.at("name") != want.name || have.at("offset") != want.offset ||
            have.at("size") != want.size ||
            have.at("shape").get<std::vector<uint32_t>>() != want.shape)
            fail(path, "tensor \"" + want.name + "\" does not match the config");
    }

    in.read(reinterpret_cast<char*>(model.params().data()),
            static_cast<std::streamsize>(model.params().size() * sizeof(float)));
    if (!in || in.gcount() != static_cast<std::streamsize>(model.params().size() * sizeof(float)))
        fail(path, "truncated parameter blob");
    char extra;
    if (in.read(&extra, 1)) fail(path, "trailing bytes after parameter blob");
    return model;
}

}  // namespace sigma
