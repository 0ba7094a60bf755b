#pragma once

// Weight archives and permutation files.
//
// Archive layout ("MCW1"):
//   bytes 0..3   magic "MCW1"
//   bytes 4..7   header length, unsigned 32-bit little-endian
//   header       ASCII key-value block: architecture fields, optional
//                metadata (seed, config digest), and one "tensor" line per
//                array (name, shape, dtype f32) in flat order
//   payload      the tensors' little-endian f32 data, concatenated in header
//                order
//
// Permutations persist as JSON index arrays, one per hidden layer.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "modecomb/errors.hpp"
#include "modecomb/net.hpp"

namespace modecomb {

struct ArchiveMeta {
    std::uint64_t seed = 0;
    std::string config_digest;  // empty = omitted
};

namespace detail {

inline void put_u32_le(std::string& out, std::uint32_t value) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
}

inline std::uint32_t get_u32_le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
           static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

inline void put_f32_le(std::string& out, float value) {
    std::uint32_t bits;
    std::memcpy(&bits, &value, 4);
    put_u32_le(out, bits);
}

inline float get_f32_le(const unsigned char* p) {
    const std::uint32_t bits = get_u32_le(p);
    float value;
    std::memcpy(&value, &bits, 4);
    return value;
}

// Tensor names and shapes in flat order, derived from the architecture.
struct TensorEntry {
    std::string name;
    std::vector<long> shape;

    long count() const {
        long n = 1;
        for (long s : shape) n *= s;
        return n;
    }

    bool operator==(const TensorEntry&) const = default;
};

inline std::vector<TensorEntry> tensor_entries(const Architecture& arch) {
    std::vector<TensorEntry> entries;
    for (int l = 1; l <= arch.depth; ++l) {
        const long out = arch.layer_out(l);
        const long in = arch.layer_in(l);
        const std::string prefix = "layer" + std::to_string(l) + ".";
        entries.push_back({prefix + "weight", {out, in}});
        entries.push_back({prefix + "bias", {out}});
        if (arch.layernorm && l < arch.depth) {
            entries.push_back({prefix + "gain", {out}});
            entries.push_back({prefix + "offset", {out}});
        }
    }
    return entries;
}

}  // namespace detail

inline const char kArchiveMagic[4] = {'M', 'C', 'W', '1'};

inline std::string serialize_weights(const WeightsF& weights, const ArchiveMeta& meta = {}) {
    weights.validate();
    const Architecture& arch = weights.arch;
    std::ostringstream header;
    header << "arch.input_dim " << arch.input_dim << "\n"
           << "arch.num_classes " << arch.num_classes << "\n"
           << "arch.depth " << arch.depth << "\n"
           << "arch.base_width " << arch.base_width << "\n"
           << "arch.width_multiplier " << arch.width_multiplier << "\n"
           << "arch.layernorm " << (arch.layernorm ? 1 : 0) << "\n"
           << "meta.seed " << meta.seed << "\n";
    if (!meta.config_digest.empty()) header << "meta.config_digest " << meta.config_digest << "\n";
    for (const auto& entry : detail::tensor_entries(arch)) {
        header << "tensor " << entry.name;
        for (long s : entry.shape) header << " " << s;
        header << " f32\n";
    }
    const std::string header_text = header.str();

    std::string out;
    out.append(kArchiveMagic, 4);
    detail::put_u32_le(out, static_cast<std::uint32_t>(header_text.size()));
    out += header_text;
    for (float value : flatten(weights)) detail::put_f32_le(out, value);
    return out;
}

inline WeightsF deserialize_weights(const std::string& bytes, ArchiveMeta* meta_out = nullptr) {
    const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kArchiveMagic, 4) != 0)
        throw FormatError("weight archive: bad magic", 0);
    if (bytes.size() < 8) throw FormatError("weight archive: truncated header length", 4);
    const std::uint32_t header_len = detail::get_u32_le(data + 4);
    if (bytes.size() < 8 + static_cast<std::size_t>(header_len))
        throw FormatError("weight archive: truncated header", 8);

    Architecture arch;
    ArchiveMeta meta;
    std::vector<detail::TensorEntry> declared;
    std::istringstream header(bytes.substr(8, header_len));
    std::string line;
    std::size_t line_offset = 8;
    while (std::getline(header, line)) {
        std::istringstream fields(line);
        std::string key;
        fields >> key;
        if (key == "tensor") {
            detail::TensorEntry entry;
            std::vector<std::string> tokens;
            std::string token;
            while (fields >> token) tokens.push_back(token);
            if (tokens.size() < 3 || tokens.back() != "f32")
                throw FormatError("weight archive: malformed tensor line",
                                  static_cast<long>(line_offset));
            entry.name = tokens.front();
            for (std::size_t i = 1; i + 1 < tokens.size(); ++i)
                entry.shape.push_back(std::stol(tokens[i]));
            declared.push_back(std::move(entry));
        } else if (key == "meta.config_digest") {
            fields >> meta.config_digest;
        } else {
            long value = 0;
            if (!(fields >> value))
                throw FormatError("weight archive: malformed header line",
                                  static_cast<long>(line_offset));
            if (key == "arch.input_dim")
                arch.input_dim = static_cast<int>(value);
            else if (key == "arch.num_classes")
                arch.num_classes = static_cast<int>(value);
            else if (key == "arch.depth")
                arch.depth = static_cast<int>(value);
            else if (key == "arch.base_width")
                arch.base_width = static_cast<int>(value);
            else if (key == "arch.width_multiplier")
                arch.width_multiplier = static_cast<int>(value);
            else if (key == "arch.layernorm")
                arch.layernorm = value != 0;
            else if (key == "meta.seed")
                meta.seed = static_cast<std::uint64_t>(value);
            else
                throw ValidationError("weight archive: unknown header key '" + key + "'");
        }
        line_offset += line.size() + 1;
    }
    arch.validate();
    if (declared != detail::tensor_entries(arch))
        throw ValidationError("weight archive: tensor list disagrees with architecture");

    std::size_t expected = 0;
    for (const auto& entry : declared) expected += static_cast<std::size_t>(entry.count());
    const std::size_t payload_offset = 8 + header_len;
    if (bytes.size() - payload_offset != 4 * expected)
        throw ValidationError("weight archive: payload has " +
                              std::to_string((bytes.size() - payload_offset) / 4) +
                              " floats, header declares " + std::to_string(expected));

    std::vector<float> flat(expected);
    for (std::size_t i = 0; i < expected; ++i)
        flat[i] = detail::get_f32_le(data + payload_offset + 4 * i);
    if (meta_out) *meta_out = meta;
    return unflatten(flat, arch);
}

inline void save_weights(const WeightsF& weights, const std::string& path,
                         const ArchiveMeta& meta = {}) {
    const std::string bytes = serialize_weights(weights, meta);
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw IoError("cannot open '" + path + "' for writing");
    file.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!file) throw IoError("write failed for '" + path + "'");
}

inline std::string read_file_bytes(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot open '" + path + "'");
    std::ostringstream buffer;
    buffer << file.rdbuf();
    return buffer.str();
}

inline WeightsF load_weights(const std::string& path, ArchiveMeta* meta_out = nullptr) {
    return deserialize_weights(read_file_bytes(path), meta_out);
}

inline void save_permutations(const PermutationSet& pi, const std::string& path) {
    nlohmann::json doc;
    doc["layers"] = pi.perms;
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw IoError("cannot open '" + path + "' for writing");
    file << doc.dump(2) << "\n";
    if (!file) throw IoError("write failed for '" + path + "'");
}

inline PermutationSet load_permutations(const std::string& path) {
    const std::string text = read_file_bytes(path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("permutation file '" + path + "': " + e.what());
    }
    if (!doc.contains("layers") || !doc["layers"].is_array())
        throw ParseError("permutation file '" + path + "': missing 'layers' array");
    PermutationSet pi;
    pi.perms = doc["layers"].get<std::vector<std::vector<int>>>();
    pi.validate();
    return pi;
}

}  // namespace modecomb
