#include "mew/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "mew/errors.hpp"

namespace mew {

nlohmann::ordered_json RunManifest::to_json() const {
    nlohmann::ordered_json j;
    j["schema_version"] = schema_version;
    j["command"] = command;
    j["config"] = config;
    nlohmann::ordered_json jin = nlohmann::ordered_json::array();
    for (const auto& [path, digest] : inputs)
        jin.push_back({{"path", path}, {"fnv1a64", digest}});
    j["inputs"] = jin;
    j["outputs"] = outputs;
    j["stats"] = stats;
    return j;
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

std::uint64_t fnv1a64_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file for digest: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return fnv1a64(buf.str());
}

std::string hex64(std::uint64_t value) {
    char buf[19];
    std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(value));
    return buf;
}

void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw MewError("cannot open output file: " + tmp);
        out << content;
        if (!out) throw MewError("write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw MewError("atomic rename failed for " + path);
}

void write_manifest(const RunManifest& m, const std::string& out_path) {
    write_file_atomic(out_path + ".manifest.json", m.to_json().dump(2) + "\n");
}

}  // namespace mew
