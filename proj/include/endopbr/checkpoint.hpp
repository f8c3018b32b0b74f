// Copyright 2026 The endopbr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "endopbr/model.hpp"
#include "endopbr/serialize.hpp"

namespace endopbr {

// Layout: 8-byte magic, u64 header length, JSON header, then float64 arrays.
// All integers and floats little-endian; group offsets are relative to the
// first byte after the header.
inline constexpr char kCheckpointMagic[8] = {'E', 'P', 'B', 'R', 'C', 'K', 'P', 'T'};
inline constexpr int kCheckpointVersion = 1;

namespace detail {

inline std::uint64_t byteswap64(std::uint64_t v) { return __builtin_bswap64(v); }

inline void write_le(std::ostream& os, std::uint64_t v) {
    if constexpr (std::endian::native == std::endian::big) v = byteswap64(v);
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline void write_reals_le(std::ostream& os, const std::vector<Real>& v) {
    if constexpr (std::endian::native == std::endian::little) {
        os.write(reinterpret_cast<const char*>(v.data()), std::streamsize(v.size() * sizeof(Real)));
    } else {
        for (Real x : v) write_le(os, std::bit_cast<std::uint64_t>(x));
    }
}

inline void read_reals_le(std::istream& is, std::vector<Real>& v) {
    is.read(reinterpret_cast<char*>(v.data()), std::streamsize(v.size() * sizeof(Real)));
    if constexpr (std::endian::native == std::endian::big)
        for (Real& x : v) x = std::bit_cast<Real>(byteswap64(std::bit_cast<std::uint64_t>(x)));
}

}  // namespace detail

/// Writes model parameters, configuration and `meta` (free-form JSON).
inline void save_checkpoint(const std::filesystem::path& path, const Model& model, const json& meta = json::object()) {
    json header;
    header["format"] = "endopbr-checkpoint";
    header["version"] = kCheckpointVersion;
    header["model"] = model.config();
    header["bounds"] = model.bounds();
    header["step"] = model.store().step;
    header["meta"] = meta;
    json groups = json::array();
    std::uint64_t offset = 0;
    for (const auto& g : model.store().groups()) {
        groups.push_back({{"name", g.name}, {"shape", g.shape}, {"offset", offset}, {"count", g.size()}});
        offset += g.size() * sizeof(Real);
    }
    header["groups"] = groups;
    const std::string text = header.dump();

    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error(ErrorKind::Load, "cannot write checkpoint " + path.string());
    os.write(kCheckpointMagic, sizeof kCheckpointMagic);
    detail::write_le(os, text.size());
    os.write(text.data(), std::streamsize(text.size()));
    for (const auto& g : model.store().groups()) detail::write_reals_le(os, g.value);
    if (!os) throw Error(ErrorKind::Load, "failed writing checkpoint " + path.string());
}

struct LoadedCheckpoint {
    Model model;
    json meta;
};

inline LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error(ErrorKind::Load, "cannot open checkpoint " + path.string());
    char magic[8];
    is.read(magic, sizeof magic);
    if (!is || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0)
        throw Error(ErrorKind::Parse, "bad checkpoint magic at offset 0 in " + path.string());
    std::uint64_t len = 0;
    is.read(reinterpret_cast<char*>(&len), sizeof len);
    if constexpr (std::endian::native == std::endian::big) len = detail::byteswap64(len);
    if (!is || len > (std::uint64_t{1} << 32)) throw Error(ErrorKind::Parse, "bad header length at offset 8");
    std::string text(len, '\0');
    is.read(text.data(), std::streamsize(len));
    if (!is) throw Error(ErrorKind::Parse, "truncated checkpoint header at offset 16");

    json header;
    try {
        header = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::Parse, "checkpoint header is not valid JSON at offset " +
                                          std::to_string(16 + e.byte - (e.byte > 0 ? 1 : 0)) + ": " + e.what());
    }
    const std::uint64_t data_start = 16 + len;
    try {
        if (header.at("format") != "endopbr-checkpoint" || header.at("version").get<int>() != kCheckpointVersion)
            throw Error(ErrorKind::Parse, "unsupported checkpoint format at offset 16");
        Model model(header.at("model").get<ModelConfig>(), header.at("bounds").get<SceneBounds>());
        model.store().step = header.value("step", std::uint64_t{0});
        const auto& groups = header.at("groups");
        if (groups.size() != model.store().groups().size())
            throw Error(ErrorKind::Parse, "checkpoint group count does not match model configuration");
        for (std::size_t k = 0; k < groups.size(); ++k) {
            auto& g = model.store().group(k);
            const auto& jg = groups[k];
            if (jg.at("name").get<std::string>() != g.name ||
                jg.at("shape").get<std::vector<std::size_t>>() != g.shape)
                throw Error(ErrorKind::Parse, "checkpoint group '" + jg.at("name").get<std::string>() +
                                                  "' does not match the model layout");
            is.seekg(std::streamoff(data_start + jg.at("offset").get<std::uint64_t>()));
            detail::read_reals_le(is, g.value);
            if (!is)
                throw Error(ErrorKind::Parse, "checkpoint data truncated in group '" + g.name + "' at offset " +
                                                  std::to_string(data_start + jg.at("offset").get<std::uint64_t>()));
        }
        return {std::move(model), header.value("meta", json::object())};
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, "malformed checkpoint header at offset 16: " + std::string(e.what()));
    }
}

}  // namespace endopbr
