#pragma once

// TRACEDIT-CKPT v1 container: an 8-byte magic string, a length-prefixed JSON
// manifest (format version, payload kind, free-form metadata, and an ordered
// tensor table of {name, dtype, shape, byte_offset, byte_length}), then the
// concatenated little-endian IEEE-754 tensor payloads. Every payload offset
// is 8-byte aligned and absolute within the file.

#include "tracedit/tensor.hpp"

#include <json.hpp>

#include <cstring>
#include <fstream>
#include <string>
#include <vector>

namespace tracedit {

inline constexpr char kCheckpointMagic[8] = {'T', 'R', 'A', 'C', 'E', 'D', 'I', 'T'};
inline constexpr const char* kCheckpointFormat = "TRACEDIT-CKPT v1";
inline constexpr int kCheckpointVersion = 1;

template <typename T>
struct DtypeName;
template <>
struct DtypeName<float> {
    static constexpr const char* value = "f32";
};
template <>
struct DtypeName<double> {
    static constexpr const char* value = "f64";
};

namespace detail {

inline uint64_t align8(uint64_t n) { return (n + 7) & ~uint64_t(7); }

inline int dtype_size(const std::string& dtype) {
    if (dtype == "f32") return 4;
    if (dtype == "f64") return 8;
    throw std::runtime_error("checkpoint: unknown dtype '" + dtype + "'");
}

}  // namespace detail

template <typename T>
void save_checkpoint(const std::string& path, const std::string& kind,
                     const nlohmann::json& meta,
                     const std::vector<std::pair<std::string, Tensor<T>>>& tensors) {
    nlohmann::json manifest;
    manifest["format"] = kCheckpointFormat;
    manifest["version"] = kCheckpointVersion;
    manifest["kind"] = kind;
    manifest["meta"] = meta;

    // Lay out payloads first so the manifest can carry absolute offsets. The
    // manifest length depends on the offsets, which depend on the manifest
    // length; iterate until the layout fixes itself (offset digits stabilize
    // after at most a few rounds).
    uint64_t header_end = 0;
    std::string manifest_bytes;
    for (int round = 0; round < 8; ++round) {
        nlohmann::json table = nlohmann::json::array();
        uint64_t offset = header_end;
        for (const auto& [name, t] : tensors) {
            offset = detail::align8(offset);
            uint64_t bytes = static_cast<uint64_t>(t.size()) * sizeof(T);
            table.push_back({{"name", name},
                             {"dtype", DtypeName<T>::value},
                             {"shape", t.shape()},
                             {"byte_offset", offset},
                             {"byte_length", bytes}});
            offset += bytes;
        }
        manifest["tensors"] = table;
        manifest_bytes = manifest.dump();
        uint64_t new_end = detail::align8(8 + 8 + manifest_bytes.size());
        if (new_end == header_end) break;
        header_end = new_end;
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("checkpoint: cannot open '" + path + "' for writing");
    out.write(kCheckpointMagic, 8);
    uint64_t mlen = manifest_bytes.size();
    out.write(reinterpret_cast<const char*>(&mlen), 8);
    out.write(manifest_bytes.data(), static_cast<std::streamsize>(manifest_bytes.size()));
    uint64_t pos = 16 + manifest_bytes.size();
    auto pad_to = [&](uint64_t target) {
        static const char zeros[8] = {0};
        while (pos < target) {
            uint64_t n = std::min<uint64_t>(8, target - pos);
            out.write(zeros, static_cast<std::streamsize>(n));
            pos += n;
        }
    };
    for (const auto& [name, t] : tensors) {
        (void)name;
        pad_to(detail::align8(pos));
        out.write(reinterpret_cast<const char*>(t.data()),
                  static_cast<std::streamsize>(t.size() * static_cast<int64_t>(sizeof(T))));
        pos += static_cast<uint64_t>(t.size()) * sizeof(T);
    }
    if (!out) throw std::runtime_error("checkpoint: write failed for '" + path + "'");
}

class LoadedCheckpoint {
public:
    explicit LoadedCheckpoint(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
        std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        if (bytes.size() < 16 || std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0)
            throw std::runtime_error("checkpoint: bad magic in '" + path + "'");
        uint64_t mlen;
        std::memcpy(&mlen, bytes.data() + 8, 8);
        if (16 + mlen > bytes.size())
            throw std::runtime_error("checkpoint: truncated manifest in '" + path + "'");
        manifest_ = nlohmann::json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<long>(mlen));
        if (manifest_.value("format", "") != kCheckpointFormat)
            throw std::runtime_error("checkpoint: unknown format '" + manifest_.value("format", "") + "'");
        if (manifest_.value("version", -1) != kCheckpointVersion)
            throw std::runtime_error("checkpoint: version mismatch (have " +
                                     std::to_string(manifest_.value("version", -1)) + ", expect " +
                                     std::to_string(kCheckpointVersion) + ")");
        for (const auto& entry : manifest_.at("tensors")) {
            std::string name = entry.at("name");
            std::string dtype = entry.at("dtype");
            Shape shape = entry.at("shape").get<Shape>();
            uint64_t off = entry.at("byte_offset");
            uint64_t len = entry.at("byte_length");
            if (off % 8 != 0)
                throw std::runtime_error("checkpoint: unaligned payload for tensor '" + name + "'");
            uint64_t expect = static_cast<uint64_t>(numel(shape)) *
                              static_cast<uint64_t>(detail::dtype_size(dtype));
            if (len != expect)
                throw std::runtime_error("checkpoint: tensor '" + name + "' length " +
                                         std::to_string(len) + " does not match shape " + shape_str(shape));
            if (off + len > bytes.size())
                throw std::runtime_error("checkpoint: truncated payload for tensor '" + name + "'");
        }
        bytes_ = std::move(bytes);
    }

    const nlohmann::json& manifest() const { return manifest_; }
    std::string kind() const { return manifest_.value("kind", ""); }
    const nlohmann::json& meta() const { return manifest_.at("meta"); }

    std::vector<std::string> tensor_names() const {
        std::vector<std::string> names;
        for (const auto& entry : manifest_.at("tensors")) names.push_back(entry.at("name"));
        return names;
    }

    bool has_tensor(const std::string& name) const { return find(name) != nullptr; }

    template <typename T>
    Tensor<T> tensor(const std::string& name) const {
        const nlohmann::json* entry = find(name);
        if (!entry) throw std::runtime_error("checkpoint: missing tensor '" + name + "'");
        std::string dtype = entry->at("dtype");
        if (dtype != DtypeName<T>::value)
            throw std::runtime_error("checkpoint: tensor '" + name + "' has dtype " + dtype +
                                     ", requested " + DtypeName<T>::value);
        Shape shape = entry->at("shape").get<Shape>();
        uint64_t off = entry->at("byte_offset");
        Tensor<T> t = Tensor<T>::zeros(shape);
        std::memcpy(t.data(), bytes_.data() + off, static_cast<size_t>(t.size()) * sizeof(T));
        return t;
    }

private:
    const nlohmann::json* find(const std::string& name) const {
        for (const auto& entry : manifest_.at("tensors"))
            if (entry.at("name") == name) return &entry;
        return nullptr;
    }

    nlohmann::json manifest_;
    std::vector<char> bytes_;
};

}  // namespace tracedit
