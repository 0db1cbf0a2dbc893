#include "pushgrasp/io/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pushgrasp::io {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

Config Config::parse(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw std::runtime_error("config: unterminated section at line " + std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      cfg.sections_[section];
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error("config: missing '=' at line " + std::to_string(lineno));
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw std::runtime_error("config: empty key at line " + std::to_string(lineno));
    cfg.sections_[section][key] = value;
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("config: cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

std::string Config::serialize() const {
  std::string out;
  for (const auto& [section, entries] : sections_) {
    out += "[" + section + "]\n";
    for (const auto& [k, v] : entries) out += k + " = " + v + "\n";
    out += "\n";
  }
  return out;
}

void Config::save(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("config: cannot write " + path);
  f << serialize();
}

bool Config::has(const std::string& section, const std::string& key) const {
  auto s = sections_.find(section);
  return s != sections_.end() && s->second.count(key) > 0;
}

std::optional<std::string> Config::find(const std::string& section, const std::string& key) const {
  auto s = sections_.find(section);
  if (s == sections_.end()) return std::nullopt;
  auto k = s->second.find(key);
  if (k == s->second.end()) return std::nullopt;
  return k->second;
}

std::string Config::get(const std::string& section, const std::string& key, const std::string& fallback) const {
  auto v = find(section, key);
  return v ? *v : fallback;
}

double Config::get_double(const std::string& section, const std::string& key, double fallback) const {
  auto v = find(section, key);
  if (!v) return fallback;
  try {
    return std::stod(*v);
  } catch (const std::exception&) {
    throw std::runtime_error("config: [" + section + "] " + key + " is not a number: " + *v);
  }
}

int64_t Config::get_int(const std::string& section, const std::string& key, int64_t fallback) const {
  auto v = find(section, key);
  if (!v) return fallback;
  try {
    return std::stoll(*v);
  } catch (const std::exception&) {
    throw std::runtime_error("config: [" + section + "] " + key + " is not an integer: " + *v);
  }
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  auto v = find(section, key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw std::runtime_error("config: [" + section + "] " + key + " is not a boolean: " + *v);
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
  sections_[section][key] = value;
}

void Config::set_double(const std::string& section, const std::string& key, double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  set(section, key, buf);
}

void Config::set_int(const std::string& section, const std::string& key, int64_t value) {
  set(section, key, std::to_string(value));
}

void Config::set_bool(const std::string& section, const std::string& key, bool value) {
  set(section, key, value ? "true" : "false");
}

void Config::merge(const Config& other) {
  for (const auto& [section, entries] : other.sections_)
    for (const auto& [k, v] : entries) sections_[section][k] = v;
}

}  // namespace pushgrasp::io
