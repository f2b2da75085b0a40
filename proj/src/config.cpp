#include "amodal/config.hpp"

#include <fstream>
#include <sstream>

#include "amodal/errors.hpp"

namespace amodal {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

FlatConfig FlatConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open config: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_text(buf.str(), path);
}

FlatConfig FlatConfig::from_text(const std::string& text,
                                 const std::string& hint) {
  FlatConfig cfg;
  std::istringstream lines(text);
  std::string line;
  int line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string trimmed = trim(line);
    if (trimmed.empty()) continue;
    const auto eq = trimmed.find('=');
    if (eq == std::string::npos) {
      throw SchemaError(hint + ":" + std::to_string(line_no) +
                        ": expected key = value");
    }
    const std::string key = trim(trimmed.substr(0, eq));
    const std::string value = trim(trimmed.substr(eq + 1));
    if (key.empty()) {
      throw SchemaError(hint + ":" + std::to_string(line_no) + ": empty key");
    }
    cfg.entries_[key] = value;
  }
  return cfg;
}

void FlatConfig::set(const std::string& key, const std::string& value) {
  entries_[key] = value;
}

void FlatConfig::set_override(const std::string& key_equals_value) {
  const auto eq = key_equals_value.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw SchemaError("override must look like key=value: " +
                      key_equals_value);
  }
  set(trim(key_equals_value.substr(0, eq)),
      trim(key_equals_value.substr(eq + 1)));
}

bool FlatConfig::has(const std::string& key) const {
  return entries_.count(key) > 0;
}

std::string FlatConfig::get_string(const std::string& key,
                                   const std::string& fallback) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

double FlatConfig::get_double(const std::string& key, double fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  try {
    std::size_t pos = 0;
    const double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw SchemaError("config key " + key + ": not a number: " + it->second);
  }
}

std::int64_t FlatConfig::get_int(const std::string& key,
                                 std::int64_t fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  try {
    std::size_t pos = 0;
    const std::int64_t v = std::stoll(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw SchemaError("config key " + key + ": not an integer: " + it->second);
  }
}

std::uint64_t FlatConfig::get_uint(const std::string& key,
                                   std::uint64_t fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  try {
    std::size_t pos = 0;
    const std::uint64_t v = std::stoull(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw SchemaError("config key " + key +
                      ": not an unsigned integer: " + it->second);
  }
}

bool FlatConfig::get_bool(const std::string& key, bool fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw SchemaError("config key " + key + ": not a boolean: " + v);
}

void FlatConfig::require_known(const std::set<std::string>& known) const {
  for (const auto& [key, value] : entries_) {
    if (known.count(key) == 0) {
      throw SchemaError("unknown config key: " + key);
    }
  }
}

}  // namespace amodal
