#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rotopump/constants.hpp"
#include "rotopump/params.hpp"

namespace rotopump {

inline constexpr const char* version_string = "1.0.0";

/// Locale-independent shortest round-trip formatting ('.' decimal separator).
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Column-oriented CSV table: '\n' line endings, UTF-8, no quoting needed for
/// the numeric payloads produced here.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add_row(const std::vector<double>& row) {
    if (row.size() != header_.size())
      throw invalid_parameter("CsvTable: row width does not match header");
    rows_.push_back(row);
  }

  std::string to_string() const {
    std::string out;
    for (size_t i = 0; i < header_.size(); ++i) {
      if (i) out += ',';
      out += header_[i];
    }
    out += '\n';
    for (const auto& r : rows_) {
      for (size_t i = 0; i < r.size(); ++i) {
        if (i) out += ',';
        out += format_double(r[i]);
      }
      out += '\n';
    }
    return out;
  }

  void write(const std::filesystem::path& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw resource_limit_error("cannot open output file: " + path.string());
    f << to_string();
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<double>> rows_;
};

/// FNV-1a 64-bit over the canonical parameter dump.
inline std::uint64_t fnv1a_hash(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string config_hash(const ParamMap& params) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a_hash(params.canonical())));
  return buf;
}

struct Manifest {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  int threads = 1;
  double wall_time_s = 0;
  std::vector<std::string> artifacts;

  nlohmann::json to_json(const ParamMap& params) const {
    nlohmann::json j;
    j["command"] = command;
    j["config_hash"] = config_hash;
    j["seed"] = seed;
    j["threads"] = threads;
    j["wall_time_s"] = wall_time_s;
    j["version"] = version_string;
    j["artifacts"] = artifacts;
    nlohmann::json p = nlohmann::json::object();
    for (const auto& [k, v] : params.entries()) p[k] = v;
    j["parameters"] = p;
    return j;
  }

  void write(const std::filesystem::path& dir, const ParamMap& params) const {
    std::ofstream f(dir / "manifest.json", std::ios::binary);
    if (!f) throw resource_limit_error("cannot write manifest in " + dir.string());
    f << to_json(params).dump(2) << '\n';
  }
};

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw resource_limit_error("cannot open output file: " + path.string());
  f << j.dump(2) << '\n';
}

class WallClock {
 public:
  WallClock() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace rotopump
