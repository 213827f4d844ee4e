#pragma once

// Binary checkpoints: "MMCK" | u32 version | u32 length + model config text |
// u32 entry count | entries (name, alias-of, rank, dims) | little-endian f32
// payloads of canonical entries in manifest order. A JSON mirror of the
// manifest is written next to the file as <path>.json.

#include <cstdint>
#include <filesystem>
#include <string>

#include "mmrec/model.hpp"

namespace mmrec {

// name, alias and shape of every entry, one per line.
std::string manifest_text(const ParamStore& ps);
// FNV-1a over manifest_text.
std::uint64_t manifest_hash(const ParamStore& ps);

std::string encode_checkpoint(const Model& m);
Model decode_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const Model& m);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace mmrec
