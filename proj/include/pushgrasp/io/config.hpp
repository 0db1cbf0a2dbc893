#ifndef PUSHGRASP_IO_CONFIG_HPP_
#define PUSHGRASP_IO_CONFIG_HPP_

#include <map>
#include <optional>
#include <string>

namespace pushgrasp::io {

// Sectioned key/value configuration file:
//   [section]
//   key = value        # comment
// Keys are sorted on serialization so the same content always produces the
// same bytes (and therefore the same manifest hash).
class Config {
 public:
  static Config parse(const std::string& text);
  static Config load(const std::string& path);

  std::string serialize() const;
  void save(const std::string& path) const;

  bool has(const std::string& section, const std::string& key) const;
  std::optional<std::string> find(const std::string& section, const std::string& key) const;

  std::string get(const std::string& section, const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  int64_t get_int(const std::string& section, const std::string& key, int64_t fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;

  void set(const std::string& section, const std::string& key, const std::string& value);
  void set_double(const std::string& section, const std::string& key, double value);
  void set_int(const std::string& section, const std::string& key, int64_t value);
  void set_bool(const std::string& section, const std::string& key, bool value);

  // Overlays every entry of `other` on top of this config.
  void merge(const Config& other);

  const std::map<std::string, std::map<std::string, std::string>>& sections() const { return sections_; }

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

}  // namespace pushgrasp::io

#endif  // PUSHGRASP_IO_CONFIG_HPP_
