#pragma once

// Small helpers shared by the CLI commands: exit codes, config fingerprints,
// number formatting and list parsing.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace cli {

enum Exit : int { kOk = 0, kInternal = 1, kUsage = 2, kHypothesis = 3, kSolver = 4, kGuard = 5 };

/// Thrown for invalid option values found after CLI11 has parsed the line.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// 64-bit FNV-1a over the compact dump of the (key-sorted) config object,
/// printed as 16 hex digits.
inline std::string fingerprint(const nlohmann::json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Shortest text that reads back to the same double.
inline std::string num(double v) {
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

/// Parses "a", "a/b" or a plain decimal.
inline double parse_number(std::string_view s) {
  const std::string text(s);
  const auto slash = text.find('/');
  try {
    std::size_t used = 0;
    if (slash == std::string::npos) {
      const double v = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      return v;
    }
    const std::string a = text.substr(0, slash), b = text.substr(slash + 1);
    std::size_t ua = 0, ub = 0;
    const double num = std::stod(a, &ua), den = std::stod(b, &ub);
    if (ua != a.size() || ub != b.size() || den == 0.0) throw std::invalid_argument(text);
    return num / den;
  } catch (const std::logic_error&) {
    throw UsageError("not a number: '" + text + "'");
  }
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    std::string part = s.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
    const auto b = part.find_first_not_of(" \t"), e = part.find_last_not_of(" \t");
    out.push_back(b == std::string::npos ? "" : part.substr(b, e - b + 1));
    if (pos == std::string::npos) return out;
    start = pos + 1;
  }
}

/// "x1,x2,...,xn" with exactly n entries.
inline Eigen::VectorXd parse_point(const std::string& s, int n, const std::string& what) {
  const auto parts = split(s, ',');
  if (static_cast<int>(parts.size()) != n)
    throw UsageError(what + " '" + s + "' needs " + std::to_string(n) + " comma-separated values");
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = parse_number(parts[static_cast<std::size_t>(i)]);
  return v;
}

inline nlohmann::json to_json(const Eigen::VectorXd& v) {
  auto a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

/// Opens a file for writing or throws a runtime error naming it.
inline std::ofstream open_out(const std::filesystem::path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

}  // namespace cli
