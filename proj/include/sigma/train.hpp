#pragma once

#include <iosfwd>

#include "sigma/dataset.hpp"
#include "sigma/model.hpp"
#include "sigma/transformer.hpp"

namespace sigma {

// Learning rate at a 0-based step: linear warmup over warmup_frac of the run,
// then cosine decay to lr * final_lr_frac.
double lr_at_step(const TrainConfig& cfg, uint64_t step);

// One training order: cfg.order_mode applied to the tail, with positions
// [0, cfg.fixed_prefix) pinned first in natural order. identity_frac is the
// full-identity probability (curriculum mode only). For rows laid out as
// prompt followed by completion, fixing the prompt length makes training
// conditionals match prompted decoding.
Order draw_training_order(const TrainConfig& cfg, uint32_t T, double identity_frac, Rng& rng);

// Trains in place; the caller initialises parameters first. Batch rows and
// orders derive from cfg.seed, so a rerun from the same starting parameters
// reproduces the loss log bit for bit. Throws std::runtime_error with a
// diagnostic if the loss or gradient goes non-finite. val_data (optional) is
// scored as mean per-token NLL under identity orders at eval_interval
// checkpoints. log (optional) receives one line per logged step.
TrainResult train_model(Transformer<float>& model, const Dataset& train_data,
                        const Dataset* val_data, const TrainConfig& cfg, std::ostream* log);

// Mean per-token NLL of a dataset under identity orders (data-token softmax).
double dataset_nll(Transformer<float>& model, const Dataset& data, uint32_t batch_size);

}  // namespace sigma
