/* Copyright 2026 The knnmt Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <CLI11.hpp>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "knnmt/error.hpp"
#include "knnmt/language.hpp"

namespace knnmt::cli {

using json = nlohmann::json;

enum ExitCode : int { kOk = 0, kInputError = 2, kIncompatible = 3, kInternal = 4 };

inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::dimension_mismatch:
    case ErrorCode::incompatible_stores:
    case ErrorCode::shape_mismatch:
    case ErrorCode::misaligned_corpora:
    case ErrorCode::scale_mismatch:
      return kIncompatible;
    case ErrorCode::internal:
      return kInternal;
    default:
      return kInputError;
  }
}

class Stopwatch {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }
  void reset() { start_ = std::chrono::steady_clock::now(); }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

/// One JSON record per run: what was asked, what was read and written, how
/// long it took.
class RunManifest {
 public:
  explicit RunManifest(std::string subcommand) {
    j_["subcommand"] = std::move(subcommand);
    j_["tool_version"] = "0.1.0";
    j_["seed"] = nullptr;
    j_["config"] = json::object();
    j_["inputs"] = json::array();
    j_["outputs"] = json::array();
    j_["timings"] = json::object();
  }

  /// Effective option values: given ones, else defaults.
  void record_config(const CLI::App& sub) {
    for (const CLI::Option* opt : sub.get_options()) {
      auto names = opt->get_lnames();
      if (names.empty() || names[0] == "help" || names[0] == "config") continue;
      const std::string& key = names[0];
      if (opt->get_expected_max() == 0) {
        j_["config"][key] = opt->count() > 0;
      } else if (opt->count() > 0) {
        const auto& r = opt->results();
        j_["config"][key] = r.size() == 1 && opt->get_items_expected_max() <= 1 ? json(r[0]) : json(r);
      } else {
        j_["config"][key] = opt->get_default_str();
      }
    }
  }

  void config_file(const std::string& path) { j_["config_file"] = path; }
  void input(const std::string& path) { j_["inputs"].push_back(path); }
  void output(const std::string& path) { j_["outputs"].push_back(path); }
  void seed(uint64_t s) { j_["seed"] = s; }
  void timing(const std::string& phase, double seconds) { j_["timings"][phase] = seconds; }
  void throughput(uint64_t tokens, double seconds) {
    j_["throughput"] = {{"tokens", tokens},
                        {"seconds", seconds},
                        {"tokens_per_sec", seconds > 0.0 ? static_cast<double>(tokens) / seconds : 0.0}};
  }
  json& operator[](const std::string& key) { return j_[key]; }

  void set_path(std::string p) { path_ = std::move(p); }
  const std::string& path() const { return path_; }

  void write(const std::string& status, double wall_seconds) {
    if (path_.empty()) return;
    j_["status"] = status;
    j_["timings"]["wall"] = wall_seconds;
    std::ofstream out(path_, std::ios::trunc);
    require(out.good(), ErrorCode::io, "cannot write manifest " + path_);
    out << j_.dump(2) << '\n';
  }

 private:
  json j_;
  std::string path_;
};

/// `<stem>.manifest.json` next to a primary output.
inline std::string sidecar(const std::string& path) {
  std::filesystem::path p(path);
  p.replace_extension(".manifest.json");
  return p.string();
}

inline std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

/// Splits `lang=value`.
inline std::pair<LanguageTag, std::string> lang_value(const std::string& arg) {
  auto eq = arg.find('=');
  require(eq != std::string::npos && eq > 0 && eq + 1 < arg.size(), ErrorCode::invalid_argument,
          "expected lang=value, got '" + arg + "'");
  std::string code = arg.substr(0, eq);
  require(LanguageTag::valid(code), ErrorCode::invalid_argument, "bad language tag '" + code + "'");
  return {LanguageTag(code), arg.substr(eq + 1)};
}

inline void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  require(!ec, ErrorCode::io, "cannot create directory " + dir + ": " + ec.message());
}

// ---------------------------------------------------------------------------
// Config files.
//
//   # comment
//   seed = 7              applies to every subcommand that has --seed
//   [translate]
//   k = [16, 32, 64]      lists become comma-separated values
//   lambda = 0.5
//
// Keys are long option names (underscores may stand in for dashes). Values
// from the file are used only for options not given on the command line.

struct ConfigEntry {
  std::string section;
  std::string key;
  std::string value;
  size_t line = 0;
};

inline std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline std::string unquote(std::string v) {
  if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) return v.substr(1, v.size() - 2);
  return v;
}

inline std::vector<ConfigEntry> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::io, "cannot open config file " + path);
  std::vector<ConfigEntry> out;
  std::string line, section;
  for (size_t n = 1; std::getline(in, line); ++n) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    std::string where = path + ":" + std::to_string(n);
    if (line.front() == '[') {
      require(line.back() == ']' && line.size() > 2, ErrorCode::invalid_argument, where + ": bad section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    auto eq = line.find('=');
    require(eq != std::string::npos, ErrorCode::invalid_argument, where + ": expected key = value");
    ConfigEntry e{section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), n};
    require(!e.key.empty(), ErrorCode::invalid_argument, where + ": empty key");
    for (char& c : e.key)
      if (c == '_') c = '-';
    if (e.value.size() >= 2 && e.value.front() == '[' && e.value.back() == ']') {
      std::stringstream items(e.value.substr(1, e.value.size() - 2));
      std::vector<std::string> parts;
      for (std::string item; std::getline(items, item, ',');)
        if (!trim(item).empty()) parts.push_back(unquote(trim(item)));
      e.value = join(parts, ",");
    } else {
      e.value = unquote(e.value);
    }
    out.push_back(std::move(e));
  }
  return out;
}

inline bool given_on_command_line(const CLI::Option& opt, const std::vector<std::string>& args) {
  for (const auto& a : args) {
    for (const auto& l : opt.get_lnames())
      if (a == "--" + l || a.rfind("--" + l + "=", 0) == 0) return true;
    for (const auto& s : opt.get_snames())
      if (a.rfind("-" + s, 0) == 0 && a.rfind("--", 0) != 0) return true;
  }
  return false;
}

/// Expands `--config FILE` into explicit arguments placed before the user's
/// own, skipping options the user set. Returns the config path (or "").
inline std::string inject_config(CLI::App& app, std::vector<std::string>& args) {
  if (args.empty()) return "";
  CLI::App* sub = app.get_subcommand_no_throw(args[0]);
  if (sub == nullptr) return "";
  std::string path;
  for (size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return "";
  std::vector<std::string> user(args.begin() + 1, args.end()), injected;
  for (const auto& e : parse_config_file(path)) {
    if (!e.section.empty() && e.section != sub->get_name()) {
      require(app.get_subcommand_no_throw(e.section) != nullptr, ErrorCode::invalid_argument,
              path + ":" + std::to_string(e.line) + ": unknown section [" + e.section + "]");
      continue;
    }
    const CLI::Option* opt = sub->get_option_no_throw("--" + e.key);
    if (opt == nullptr) {
      // Unsectioned keys may belong to other subcommands.
      if (e.section.empty()) continue;
      fail(ErrorCode::invalid_argument,
           path + ":" + std::to_string(e.line) + ": '" + e.key + "' is not an option of " + sub->get_name());
    }
    if (e.key == "config" || given_on_command_line(*opt, user)) continue;
    if (opt->get_type_size_max() == 0) {
      if (e.value == "true" || e.value == "1") injected.push_back("--" + e.key);
      else require(e.value == "false" || e.value == "0", ErrorCode::invalid_argument,
                   path + ":" + std::to_string(e.line) + ": '" + e.key + "' takes true or false");
    } else {
      injected.push_back("--" + e.key + "=" + e.value);
    }
  }
  args.insert(args.begin() + 1, injected.begin(), injected.end());
  return path;
}

/// A registered subcommand: its parser node and what to run once parsed.
struct Command {
  CLI::App* app = nullptr;
  std::function<void(RunManifest&)> run;
};

inline CLI::App* add_command(CLI::App& app, std::vector<Command>& cmds, const std::string& name,
                             const std::string& description) {
  CLI::App* sub = app.add_subcommand(name, description);
  sub->add_option("--config", "key=value file supplying defaults for this subcommand's options");
  cmds.push_back({sub, {}});
  return sub;
}

}  // namespace knnmt::cli
