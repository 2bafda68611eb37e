#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace mew {

// Sidecar metadata for every command that writes output files. The config
// echo is complete: re-running it reproduces the outputs byte for byte.
struct RunManifest {
    int schema_version = 1;
    std::string command;
    nlohmann::ordered_json config;
    std::vector<std::pair<std::string, std::string>> inputs;  // (path, digest)
    std::vector<std::string> outputs;
    nlohmann::ordered_json stats;

    nlohmann::ordered_json to_json() const;
};

std::uint64_t fnv1a64(const std::string& bytes);
std::uint64_t fnv1a64_file(const std::string& path);  // throws ParseError when unreadable
std::string hex64(std::uint64_t value);

// write-to-temp-then-rename in the target directory
void write_file_atomic(const std::string& path, const std::string& content);

// writes <out_path>.manifest.json atomically
void write_manifest(const RunManifest& m, const std::string& out_path);

}  // namespace mew
