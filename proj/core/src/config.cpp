#include "ietagc/config.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <fstream>

#include "ietagc/errors.hpp"

extern char** environ;

namespace ietagc {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const char* expected) {
  throw ConfigError("config field '" + key + "': expected " + expected +
                    ", got '" + value + "'");
}

}  // namespace

Config Config::from_file(const std::string& path) {
  Config c;
  c.merge_file(path);
  return c;
}

void Config::merge_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": expected 'key = value'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty())
      throw ConfigError(path + ":" + std::to_string(line_no) + ": empty key");
    values_[key] = value;
  }
}

std::string Config::env_name(const std::string& key, const std::string& prefix) {
  std::string name = prefix;
  for (char ch : key) {
    if (ch == '.')
      name += "__";
    else
      name += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  }
  return name;
}

void Config::merge_env(const std::string& prefix) {
  for (char** e = environ; e && *e; ++e) {
    const std::string entry(*e);
    const std::size_t eq = entry.find('=');
    if (eq == std::string::npos) continue;
    std::string name = entry.substr(0, eq);
    if (name.rfind(prefix, 0) != 0) continue;
    std::string key;
    for (std::size_t i = prefix.size(); i < name.size(); ++i) {
      if (name[i] == '_' && i + 1 < name.size() && name[i + 1] == '_') {
        key += '.';
        ++i;
      } else {
        key += static_cast<char>(std::tolower(static_cast<unsigned char>(name[i])));
      }
    }
    values_[key] = entry.substr(eq + 1);
  }
}

void Config::set(const std::string& key, const std::string& value) {
  if (key.empty()) throw ConfigError("config: empty key");
  values_[key] = value;
}

void Config::erase(const std::string& key) { values_.erase(key); }

bool Config::has(const std::string& key) const { return values_.count(key) > 0; }

std::string Config::get_string(const std::string& key,
                               const std::string& def) const {
  const auto it = values_.find(key);
  return it == values_.end() ? def : it->second;
}

std::int64_t Config::get_int64(const std::string& key, std::int64_t def) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return def;
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(it->second.c_str(), &end, 10);
  if (errno != 0 || end == it->second.c_str() || *end != '\0')
    bad_value(key, it->second, "integer");
  return v;
}

int Config::get_int(const std::string& key, int def) const {
  const std::int64_t v = get_int64(key, def);
  if (v < INT32_MIN || v > INT32_MAX)
    bad_value(key, values_.at(key), "32-bit integer");
  return static_cast<int>(v);
}

std::uint64_t Config::get_uint64(const std::string& key,
                                 std::uint64_t def) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return def;
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(it->second.c_str(), &end, 10);
  if (errno != 0 || end == it->second.c_str() || *end != '\0' ||
      it->second.find('-') != std::string::npos)
    bad_value(key, it->second, "nonnegative integer");
  return v;
}

double Config::get_double(const std::string& key, double def) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return def;
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(it->second.c_str(), &end);
  if (errno != 0 || end == it->second.c_str() || *end != '\0')
    bad_value(key, it->second, "real number");
  return v;
}

bool Config::get_bool(const std::string& key, bool def) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return def;
  std::string v = it->second;
  std::transform(v.begin(), v.end(), v.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, it->second, "boolean");
}

std::vector<double> Config::get_double_list(
    const std::string& key, const std::vector<double>& def) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return def;
  std::vector<double> out;
  std::string rest = it->second;
  while (!rest.empty()) {
    const std::size_t comma = rest.find(',');
    const std::string item = trim(rest.substr(0, comma));
    if (item.empty()) bad_value(key, it->second, "comma-separated reals");
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (errno != 0 || end == item.c_str() || *end != '\0')
      bad_value(key, it->second, "comma-separated reals");
    out.push_back(v);
    if (comma == std::string::npos) break;
    rest = rest.substr(comma + 1);
  }
  if (out.empty()) bad_value(key, it->second, "comma-separated reals");
  return out;
}

void Config::check_known(const std::set<std::string>& known) const {
  for (const auto& [key, value] : values_)
    if (!known.count(key))
      throw ConfigError("config field '" + key + "': unknown key");
}

}  // namespace ietagc
