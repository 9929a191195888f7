#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "adforge/train.h"

ADFORGE_NAMESPACE_BEGIN

// On-disk layout:
//   8 bytes   magic "ADFORGE1"
//   4 bytes   little-endian u32 header length
//   N bytes   UTF-8 JSON header {version, model_config, schema, metadata,
//             tensors: [{name, dtype: "f32", shape}, ...]}
//   payload   little-endian f32 data of each tensor, in table order
inline constexpr std::string_view kCheckpointMagic = "ADFORGE1";
inline constexpr int kCheckpointVersion = 1;

std::string SerializeCheckpoint(const Checkpoint &checkpoint);
// Validates magic, version and the tensor table before touching the payload.
// Each corruption mode raises CheckpointError with its own Kind.
Checkpoint DeserializeCheckpoint(std::string_view bytes);

void SaveCheckpoint(const Checkpoint &checkpoint, const std::filesystem::path &path);
Checkpoint LoadCheckpoint(const std::filesystem::path &path);

// Checkpoint for the unadapted model of `config`.
Checkpoint BaselineCheckpoint(const ModelConfig &config);

// Folds the LoRA adapter into the base weights. Throws ConfigError for prefix
// checkpoints ("prefix adapters are not mergeable") and for checkpoints
// without an adapter.
Checkpoint MergeCheckpoint(const Checkpoint &checkpoint);

ADFORGE_NAMESPACE_END
