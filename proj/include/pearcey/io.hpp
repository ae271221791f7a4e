#pragma once

// JSON (de)serialization of configurations, contour specs and results, and
// the configuration hash stamped on every output row.

#include <nlohmann/json.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "pearcey/error.hpp"
#include "pearcey/operators.hpp"
#include "pearcey/quadrature.hpp"
#include "pearcey/rhp.hpp"

namespace pearcey {

inline constexpr std::string_view kVersion = "0.1.0";

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// ModelConfig

inline json to_json(const ModelConfig& c) {
  // key order is fixed so the dump is canonical
  json j = json::object();
  j["a"] = c.a;
  j["k"] = c.k;
  j["s"] = c.s;
  j["tau"] = c.tau;
  return j;
}

namespace detail {

inline const json& require(const json& j, const char* key, const char* what) {
  if (!j.is_object()) fail(ErrorKind::invalid_argument, std::string(what) + " must be a JSON object");
  auto it = j.find(key);
  if (it == j.end()) fail(ErrorKind::invalid_argument, std::string(what) + ": missing key \"" + key + "\"");
  return *it;
}

inline double number(const json& j, const char* key, const char* what) {
  const json& v = require(j, key, what);
  if (!v.is_number()) fail(ErrorKind::invalid_argument, std::string(what) + ": \"" + key + "\" must be a number");
  return v.get<double>();
}

inline std::vector<double> number_array(const json& j, const char* key, const char* what) {
  const json& v = require(j, key, what);
  if (!v.is_array()) fail(ErrorKind::invalid_argument, std::string(what) + ": \"" + key + "\" must be an array");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number())
      fail(ErrorKind::invalid_argument, std::string(what) + ": \"" + key + "\" entries must be numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

}  // namespace detail

/// Parse and validate. Unknown keys are rejected so typos do not pass silently.
inline ModelConfig config_from_json(const json& j, ConfigMode mode = ConfigMode::production) {
  for (auto it = j.begin(); j.is_object() && it != j.end(); ++it)
    if (it.key() != "a" && it.key() != "k" && it.key() != "tau" && it.key() != "s")
      fail(ErrorKind::invalid_argument, "config: unknown key \"" + it.key() + "\"");
  ModelConfig c;
  c.a = detail::number_array(j, "a", "config");
  c.k = detail::number_array(j, "k", "config");
  c.tau = detail::number(j, "tau", "config");
  c.s = j.is_object() && j.contains("s") ? detail::number(j, "s", "config") : 0.0;
  validate(c, mode);
  return c;
}

/// Parse text; syntax errors name the line and column.
inline json parse_json_text(const std::string& text, std::string_view source = "<input>") {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    fail(ErrorKind::invalid_argument, std::string(source) + ":" + std::to_string(line) + ":" +
                                          std::to_string(col) + ": malformed JSON");
  }
}

inline ModelConfig read_config(const std::string& path, ConfigMode mode = ConfigMode::production) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::invalid_argument, "cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return config_from_json(parse_json_text(ss.str(), path), mode);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::invalid_argument) throw;
    const std::string msg = e.what();
    // prefix the file name unless the parser already did
    if (msg.find(path) != std::string::npos) throw;
    fail(ErrorKind::invalid_argument, path + ": " + msg.substr(msg.find(": ") + 2));
  }
}

/// 64-bit FNV-1a of the canonical JSON dump, as 16 hex digits.
inline std::string config_hash(const ModelConfig& c) {
  const std::string text = to_json(c).dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// ContourSpec

inline json to_json(const ContourSpec& spec) {
  json rays = json::array();
  for (const auto& r : spec.rays) {
    json o = json::object();
    o["angle"] = r.angle;
    o["orientation"] = r.orientation;
    o["tag"] = std::string(to_string(r.tag));
    o["truncation"] = r.truncation;
    o["vertex"] = r.vertex;
    rays.push_back(o);
  }
  json j = json::object();
  j["grading"] = spec.grading;
  j["max_panel_length"] = spec.max_panel_length;
  j["nodes_per_panel"] = spec.nodes_per_panel;
  j["panels_per_ray"] = spec.panels_per_ray;
  j["rays"] = rays;
  return j;
}

inline ContourSpec contour_spec_from_json(const json& j) {
  ContourSpec spec;
  const json& rays = detail::require(j, "rays", "contour spec");
  if (!rays.is_array()) fail(ErrorKind::invalid_argument, "contour spec: \"rays\" must be an array");
  for (const auto& r : rays) {
    Ray ray;
    ray.angle = detail::number(r, "angle", "ray");
    ray.orientation = static_cast<int>(detail::number(r, "orientation", "ray"));
    ray.truncation = detail::number(r, "truncation", "ray");
    const json& tag = detail::require(r, "tag", "ray");
    if (!tag.is_string()) fail(ErrorKind::invalid_argument, "ray: \"tag\" must be a string");
    ray.tag = contour_tag_from_string(tag.get<std::string>());
    ray.vertex = r.contains("vertex") ? detail::number(r, "vertex", "ray") : 0.0;
    spec.rays.push_back(ray);
  }
  spec.panels_per_ray = static_cast<int>(detail::number(j, "panels_per_ray", "contour spec"));
  spec.nodes_per_panel = static_cast<int>(detail::number(j, "nodes_per_panel", "contour spec"));
  spec.grading = detail::number(j, "grading", "contour spec");
  if (j.contains("max_panel_length")) spec.max_panel_length = detail::number(j, "max_panel_length", "contour spec");
  validate(spec);
  return spec;
}

/// The grid parameters stamped on output rows.
inline json grid_params(const Grid& g) {
  json j = json::object();
  j["grading"] = g.spec.grading;
  j["nodes"] = g.size();
  j["nodes_per_panel"] = g.spec.nodes_per_panel;
  j["panels_per_ray"] = g.spec.panels_per_ray;
  j["truncation"] = g.spec.truncation();
  return j;
}

// ---------------------------------------------------------------------------
// Results

inline json complex_pair(cplx z) { return json::array({z.real(), z.imag()}); }

inline json to_json(const CVector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(complex_pair(v(i)));
  return out;
}

inline json to_json(const CMatrix& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(complex_pair(m(i, j)));
    out.push_back(row);
  }
  return out;
}

inline json to_json(const Gamma1& g) {
  json j = json::object();
  j["Delta"] = to_json(g.Delta);
  j["delta"] = g.delta;
  j["p"] = to_json(g.p);
  j["q"] = to_json(g.q);
  j["trace_residual"] = g.trace_residual();
  return j;
}

inline json determinant_record(const ModelConfig& c, const Grid& g, const DetResult& d) {
  json j = json::object();
  j["F"] = d.value;
  j["config_hash"] = config_hash(c);
  j["grid_params"] = grid_params(g);
  j["im_leak"] = d.im_leak;
  j["log_F"] = d.log_value;
  j["version"] = std::string(kVersion);
  return j;
}

}  // namespace pearcey
