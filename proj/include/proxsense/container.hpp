// container.hpp
// On-disk tensor container shared by datasets and model checkpoints.
//
// Layout:
//     line 1   "PXSC 1"
//     line 2   decimal byte length N of the header
//     N bytes  UTF-8 JSON header
//     payload  float64 little-endian blobs, back to back
//
// The header carries a "blobs" array of {"name", "shape", "offset"} entries,
// offsets counted in doubles from the start of the payload.
#pragma once

#include "proxsense/core_types.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace proxsense {

struct Blob {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<double> data;
};

struct Container {
    nlohmann::json header = nlohmann::json::object();
    std::vector<Blob> blobs;

    const Blob& blob(const std::string& name) const;
};

// Writes to a temporary sibling then renames over `path`.
void write_container(const std::filesystem::path& path, const Container& c);
Container read_container(const std::filesystem::path& path);

// Atomic text write (temp-then-rename).
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

void save_dataset(const std::filesystem::path& path, const Dataset& d);
Dataset load_dataset(const std::filesystem::path& path);

nlohmann::json to_json(const MetaVocab& v);
MetaVocab vocab_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrainPreset& p);
TrainPreset preset_from_json(const nlohmann::json& j);

}  // namespace proxsense
