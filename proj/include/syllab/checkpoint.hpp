#pragma once
// Model checkpoints: one line of JSON header, a newline, then every parameter
// tensor as little-endian IEEE-754 float64 in ModelParameters::tensors()
// order. The header records shapes, byte offsets and a CRC-32 of the blob.
// Layout details live in docs/formats.md.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "syllab/lexicon.hpp"
#include "syllab/network.hpp"

namespace syllab {

inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
    ModelConfig config;
    PhoneVocabulary vocabulary;
    LexiconFormat lexicon_format;
    ModelParameters parameters;
    std::uint64_t training_seed = 0;
    std::map<std::string, std::string> metadata;
};

std::string serialize_checkpoint(const Checkpoint& checkpoint);
// Throws CheckpointError on truncation, bad CRC, unknown version or
// inconsistent shapes.
Checkpoint deserialize_checkpoint(std::string_view bytes);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace syllab
