// Copyright 2026 The EAGR Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include "eagr/net.hpp"

// Flat key=value text, one pair per line, '#' starts a comment. Unknown keys
// and malformed values are errors reported with their 1-based line number.
//
//   num_classes, input_size (HxW), c_stem, c_low, c_high,
//   low.t_dim, low.k_dim, low.pool_grid (RxC), low.central_sel (RxC), low.residual,
//   high.* (same keys), lambda1, lambda2, lr, weight_decay, momentum, seed,
//   epochs, batch_size, augment

namespace eagr {

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::uint64_t parse_uint(const std::string& v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw std::invalid_argument("expected a non-negative integer");
  return out;
}

inline double parse_real(const std::string& v) {
  std::size_t used = 0;
  double out = std::stod(v, &used);
  if (used != v.size() || !std::isfinite(out)) throw std::invalid_argument("expected a finite real");
  return out;
}

inline bool parse_bool(const std::string& v) {
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  throw std::invalid_argument("expected a boolean");
}

}  // namespace detail

/// "RxC" pair, e.g. "6x6" or "32x32".
inline Grid parse_grid(const std::string& v) {
  const auto x = v.find('x');
  if (x == std::string::npos) throw std::invalid_argument("expected RxC");
  Grid g{detail::parse_uint(v.substr(0, x)), detail::parse_uint(v.substr(x + 1))};
  if (g.rows == 0 || g.cols == 0) throw std::invalid_argument("extents must be positive");
  return g;
}

inline std::string grid_str(Grid g) { return std::to_string(g.rows) + "x" + std::to_string(g.cols); }

inline NetConfig parse_config(std::istream& in, NetConfig cfg = {}) {
  using Setter = std::function<void(const std::string&)>;
  auto eagr_keys = [](std::map<std::string, Setter>& m, const std::string& prefix, EagrConfig& e) {
    m[prefix + ".t_dim"] = [&e](const std::string& v) { e.t_dim = detail::parse_uint(v); };
    m[prefix + ".k_dim"] = [&e](const std::string& v) { e.k_dim = detail::parse_uint(v); };
    m[prefix + ".pool_grid"] = [&e](const std::string& v) { e.pool_grid = parse_grid(v); };
    m[prefix + ".central_sel"] = [&e](const std::string& v) { e.central_sel = parse_grid(v); };
    m[prefix + ".residual"] = [&e](const std::string& v) { e.residual_reasoning = detail::parse_bool(v); };
  };
  std::map<std::string, Setter> keys{
      {"num_classes", [&](const std::string& v) { cfg.num_classes = detail::parse_uint(v); }},
      {"input_size",
       [&](const std::string& v) {
         auto g = parse_grid(v);
         cfg.input_h = g.rows;
         cfg.input_w = g.cols;
       }},
      {"c_stem", [&](const std::string& v) { cfg.c_stem = detail::parse_uint(v); }},
      {"c_low", [&](const std::string& v) { cfg.c_low = detail::parse_uint(v); }},
      {"c_high", [&](const std::string& v) { cfg.c_high = detail::parse_uint(v); }},
      {"lambda1", [&](const std::string& v) { cfg.lambda1 = detail::parse_real(v); }},
      {"lambda2", [&](const std::string& v) { cfg.lambda2 = detail::parse_real(v); }},
      {"lr", [&](const std::string& v) { cfg.lr = detail::parse_real(v); }},
      {"weight_decay", [&](const std::string& v) { cfg.weight_decay = detail::parse_real(v); }},
      {"momentum", [&](const std::string& v) { cfg.momentum = detail::parse_real(v); }},
      {"seed", [&](const std::string& v) { cfg.seed = detail::parse_uint(v); }},
      {"epochs", [&](const std::string& v) { cfg.epochs = detail::parse_uint(v); }},
      {"batch_size", [&](const std::string& v) { cfg.batch_size = detail::parse_uint(v); }},
      {"augment", [&](const std::string& v) { cfg.augment = detail::parse_bool(v); }},
  };
  eagr_keys(keys, "low", cfg.eagr_low);
  eagr_keys(keys, "high", cfg.eagr_high);

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("line " + std::to_string(lineno) + ": expected key=value", lineno);
    const std::string key = detail::trim(line.substr(0, eq)), value = detail::trim(line.substr(eq + 1));
    auto it = keys.find(key);
    if (it == keys.end()) throw ParseError("line " + std::to_string(lineno) + ": unknown key \"" + key + "\"", lineno);
    try {
      it->second(value);
    } catch (const std::exception& e) {
      throw ParseError("line " + std::to_string(lineno) + ": bad value \"" + value + "\" for " + key + " (" +
                           e.what() + ")",
                       lineno);
    }
  }
  return cfg;
}

inline NetConfig load_config(const std::filesystem::path& path, NetConfig defaults = {}) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  try {
    return parse_config(in, defaults);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.offset());
  }
}

inline std::string format_config(const NetConfig& c) {
  std::ostringstream os;
  os.precision(17);
  auto eagr = [&](const char* p, const EagrConfig& e) {
    os << p << ".t_dim=" << e.t_dim << "\n" << p << ".k_dim=" << e.k_dim << "\n"
       << p << ".pool_grid=" << grid_str(e.pool_grid) << "\n" << p << ".central_sel=" << grid_str(e.central_sel) << "\n"
       << p << ".residual=" << (e.residual_reasoning ? "true" : "false") << "\n";
  };
  os << "num_classes=" << c.num_classes << "\ninput_size=" << c.input_h << "x" << c.input_w << "\nc_stem=" << c.c_stem
     << "\nc_low=" << c.c_low << "\nc_high=" << c.c_high << "\n";
  eagr("low", c.eagr_low);
  eagr("high", c.eagr_high);
  os << "lambda1=" << c.lambda1 << "\nlambda2=" << c.lambda2 << "\nlr=" << c.lr << "\nweight_decay=" << c.weight_decay
     << "\nmomentum=" << c.momentum << "\nseed=" << c.seed << "\nepochs=" << c.epochs << "\nbatch_size=" << c.batch_size
     << "\naugment=" << (c.augment ? "true" : "false") << "\n";
  return os.str();
}

}  // namespace eagr
