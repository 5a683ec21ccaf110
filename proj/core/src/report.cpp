#include "holex/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace holex {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void Report::add_check(const std::string& name, double value, double tol,
                       bool pass) {
  checks_.push_back({name, value, tol, pass});
}

void Report::add_check(const CheckResult& r) { checks_.push_back(r); }

void Report::add_value(const std::string& name, double v) {
  values_.emplace_back(name, v);
}

void Report::add_note(const std::string& name, const std::string& text) {
  notes_.emplace_back(name, text);
}

bool Report::pass() const {
  for (const CheckResult& c : checks_)
    if (!c.pass) return false;
  return true;
}

std::string Report::to_json_text() const {
  nlohmann::ordered_json j;
  j["schema"] = "holex-report-1";
  j["tool"] = kToolVersion;
  j["config_hash"] = config_hash_;
  j["seed"] = seed_;
  nlohmann::ordered_json checks = nlohmann::ordered_json::array();
  for (const CheckResult& c : checks_) {
    nlohmann::ordered_json e;
    e["name"] = c.name;
    // fixed decimal formatting keeps reruns byte-identical
    e["value"] = fmt_double(c.value);
    e["tolerance"] = fmt_double(c.tolerance);
    e["pass"] = c.pass;
    checks.push_back(e);
  }
  j["checks"] = checks;
  nlohmann::ordered_json vals = nlohmann::ordered_json::object();
  for (const auto& [k, v] : values_) vals[k] = fmt_double(v);
  j["values"] = vals;
  nlohmann::ordered_json notes = nlohmann::ordered_json::object();
  for (const auto& [k, v] : notes_) notes[k] = v;
  j["notes"] = notes;
  return j.dump(2) + "\n";
}

std::string Report::summary() const {
  std::ostringstream out;
  for (const CheckResult& c : checks_)
    out << (c.pass ? "PASS " : "FAIL ") << c.name << "  value="
        << fmt_double(c.value) << " tol=" << fmt_double(c.tolerance) << "\n";
  for (const auto& [k, v] : values_)
    out << "     " << k << " = " << fmt_double(v) << "\n";
  out << (pass() ? "ALL CHECKS PASSED" : "SOME CHECKS FAILED") << "\n";
  return out.str();
}

void Report::write(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw HolexError("report: cannot write " + path);
  f << to_json_text();
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hash_hex(const std::string& bytes) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

std::string hash_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw HolexError("hash_file: missing artifact " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return hash_hex(ss.str());
}

}  // namespace holex
