#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "gforge/nn/trainer.h"

namespace gforge::nn {

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr int kConfigSchemaVersion = 1;

// Training configuration as JSON text. Missing keys keep their defaults;
// unknown keys are rejected.
std::string train_config_to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const std::string& text);

// Binary container: 8-byte magic "GFCKPT\0\0", u32 version, u64 header
// length, JSON header (config, step, blob index), then little-endian f64
// blobs. Holds live and EMA generator weights, batch-norm running
// statistics, spectral-norm vectors, discriminator weights and both Adam
// states.
template <typename T>
void save_checkpoint(const std::string& path, Trainer<T>& trainer);

template <typename T>
std::unique_ptr<Trainer<T>> load_checkpoint(const std::string& path);

}  // namespace gforge::nn
