// Copyright 2026 The endopbr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#if __has_include(<nlohmann/json.hpp>)
#include <nlohmann/json.hpp>
#else
#include <json.hpp>
#endif

#include "endopbr/geometry.hpp"
#include "endopbr/lighting.hpp"
#include "endopbr/model.hpp"

namespace endopbr {

using nlohmann::json;

inline json vec_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

inline Vec3 vec_from_json(const json& j) {
    if (!j.is_array() || j.size() != 3) throw Error(ErrorKind::Parse, "expected a 3-vector");
    return {j[0].get<Real>(), j[1].get<Real>(), j[2].get<Real>()};
}

inline void to_json(json& j, const Intrinsics& K) {
    j = {{"fx", K.fx}, {"fy", K.fy}, {"cx", K.cx}, {"cy", K.cy}, {"width", K.width}, {"height", K.height}};
}
inline void from_json(const json& j, Intrinsics& K) {
    K.fx = j.at("fx").get<Real>();
    K.fy = j.at("fy").get<Real>();
    K.cx = j.at("cx").get<Real>();
    K.cy = j.at("cy").get<Real>();
    K.width = j.at("width").get<int>();
    K.height = j.at("height").get<int>();
}

inline void to_json(json& j, const SceneBounds& b) {
    j = {{"min", vec_to_json(b.min_corner)}, {"max", vec_to_json(b.max_corner)}};
}
inline void from_json(const json& j, SceneBounds& b) {
    b.min_corner = vec_from_json(j.at("min"));
    b.max_corner = vec_from_json(j.at("max"));
}

inline void to_json(json& j, const HashGridConfig& c) {
    j = {{"levels", c.levels},
         {"features_per_level", c.features},
         {"table_size", c.table_size},
         {"base_resolution", c.base_resolution},
         {"finest_resolution", c.finest_resolution}};
}
inline void from_json(const json& j, HashGridConfig& c) {
    c.levels = j.value("levels", c.levels);
    c.features = j.value("features_per_level", c.features);
    c.table_size = j.value("table_size", c.table_size);
    c.base_resolution = j.value("base_resolution", c.base_resolution);
    c.finest_resolution = j.value("finest_resolution", c.finest_resolution);
}

inline std::string to_string(ForwardAxis a) { return a == ForwardAxis::PlusZ ? "+z" : "-z"; }

inline ForwardAxis forward_axis_from_string(const std::string& s) {
    if (s == "+z" || s == "z") return ForwardAxis::PlusZ;
    if (s == "-z") return ForwardAxis::MinusZ;
    throw Error(ErrorKind::Config, "forward_axis must be '+z' or '-z', got '" + s + "'");
}

inline void to_json(json& j, const ModelConfig& c) {
    j = {{"hash_grid", c.hash},
         {"hidden", c.hidden},
         {"brdf_factor4", c.brdf.factor4},
         {"forward_axis", to_string(c.forward_axis)}};
}
inline void from_json(const json& j, ModelConfig& c) {
    if (j.contains("hash_grid")) c.hash = j.at("hash_grid").get<HashGridConfig>();
    c.hidden = j.value("hidden", c.hidden);
    c.brdf.factor4 = j.value("brdf_factor4", c.brdf.factor4);
    c.forward_axis = forward_axis_from_string(j.value("forward_axis", to_string(c.forward_axis)));
}

inline void to_json(json& j, const SpotlightParams& p) {
    j = {{"L0", p.L0}, {"n_exp", p.n_exp}, {"q_exp", p.q_exp}, {"gamma", p.gamma}};
}
inline void from_json(const json& j, SpotlightParams& p) {
    p.L0 = j.value("L0", p.L0);
    p.n_exp = j.value("n_exp", p.n_exp);
    p.q_exp = j.value("q_exp", p.q_exp);
    p.gamma = j.value("gamma", p.gamma);
}

inline void to_json(json& j, const BrdfSample& s) {
    j = {{"base_color", vec_to_json(s.base_color)}, {"roughness", s.roughness}, {"metallic", s.metallic}};
}
inline void from_json(const json& j, BrdfSample& s) {
    if (j.contains("base_color")) s.base_color = vec_from_json(j.at("base_color"));
    s.roughness = j.value("roughness", s.roughness);
    s.metallic = j.value("metallic", s.metallic);
}

}  // namespace endopbr
