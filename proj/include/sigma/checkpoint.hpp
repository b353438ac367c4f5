#pragma once

#include <string>

#include "sigma/transformer.hpp"

namespace sigma {

// Checkpoint file: 8-byte magic "SGCKPT1\0", little-endian u64 manifest
// length, a JSON manifest (model config plus the tensor table), then the raw
// float32 parameter blob in layout order.
void save_model(const std::string& path, const Transformer<float>& model);

Transformer<float> load_model(const std::string& path);

}  // namespace sigma
