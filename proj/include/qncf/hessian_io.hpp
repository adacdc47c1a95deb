// Copyright 2026 The qncf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Hessian file format:
//   {"d": int, "r": int, "L": float, "entries": [row-major d*d floats]}
// Floats are written with 17 significant digits so files round-trip exactly.

#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "qncf/hessian.hpp"

namespace qncf {

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string write_hessian_json(const Hessian& h) {
  std::string out = "{\"d\": " + std::to_string(h.d) + ", \"r\": " + std::to_string(h.r) +
                    ", \"L\": " + format_double(h.lipschitz) + ", \"entries\": [";
  const auto data = h.entries.data();
  for (std::size_t k = 0; k < data.size(); ++k) {
    if (k) out += (k % h.d == 0) ? ",\n  " : ", ";
    out += format_double(data[k]);
  }
  out += "]}\n";
  return out;
}

inline Hessian read_hessian_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("Hessian file: malformed JSON: ") + e.what());
  }
  for (const char* key : {"d", "r", "L", "entries"})
    if (!j.contains(key)) throw ValidationError(std::string("Hessian file: missing key '") + key + "'");
  if (!j["d"].is_number_integer() || !j["r"].is_number_integer() || !j["L"].is_number() ||
      !j["entries"].is_array())
    throw ValidationError("Hessian file: wrong field types");
  const auto d = j["d"].get<long long>();
  if (d <= 0) throw ValidationError("Hessian file: d must be positive");
  const auto& e = j["entries"];
  if (e.size() != static_cast<std::size_t>(d * d))
    throw ValidationError("Hessian file: entries must have d*d elements");
  Matrix m(static_cast<std::size_t>(d), static_cast<std::size_t>(d));
  for (std::size_t k = 0; k < e.size(); ++k) {
    if (!e[k].is_number()) throw ValidationError("Hessian file: non-numeric entry");
    m.data()[k] = e[k].get<double>();
  }
  const auto r = j["r"].get<long long>();
  if (r <= 0) throw ValidationError("Hessian file: r must be positive");
  return make_hessian(std::move(m), static_cast<std::size_t>(r), j["L"].get<double>());
}

inline Hessian load_hessian(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open Hessian file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return read_hessian_json(ss.str());
}

inline void save_hessian(const Hessian& h, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write Hessian file: " + path);
  out << write_hessian_json(h);
}

}  // namespace qncf
