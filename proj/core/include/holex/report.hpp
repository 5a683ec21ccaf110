#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "holex/analysis.hpp"

namespace holex {

inline constexpr const char* kToolVersion = "holex 0.1.0";

/// Machine-readable run report with a stable schema: byte-identical across
/// reruns with the same config and seed (no timestamps, insertion-ordered
/// keys, fixed float formatting).
class Report {
 public:
  Report() = default;
  Report(std::string config_hash, std::uint64_t seed)
      : config_hash_(std::move(config_hash)), seed_(seed) {}

  void add_check(const std::string& name, double value, double tol, bool pass);
  void add_check(const CheckResult& r);
  void add_value(const std::string& name, double v);
  void add_note(const std::string& name, const std::string& text);

  const std::vector<CheckResult>& checks() const { return checks_; }
  bool pass() const;

  std::string to_json_text() const;
  std::string summary() const;
  void write(const std::string& path) const;

 private:
  std::string config_hash_;
  std::uint64_t seed_ = 0;
  std::vector<CheckResult> checks_;
  std::vector<std::pair<std::string, double>> values_;
  std::vector<std::pair<std::string, std::string>> notes_;
};

std::uint64_t fnv1a64(const std::string& bytes);
std::string hash_hex(const std::string& bytes);
std::string hash_file(const std::string& path);  // throws if missing

}  // namespace holex
