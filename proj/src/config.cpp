#include "dynemb/config.hpp"

#include "dynemb/errors.hpp"

#include <fstream>
#include <sstream>

namespace dynemb {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

KvConfig parse_kv(const std::string& text) {
  KvConfig out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line without '=': " + line);
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

KvConfig load_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_kv(buf.str());
}

std::string format_kv(const KvConfig& config) {
  std::string out;
  for (const auto& [k, v] : config) {
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  return out;
}

void kv_set(KvConfig& config, const std::string& key, const std::string& value) {
  for (auto& [k, v] : config) {
    if (k == key) {
      v = value;
      return;
    }
  }
  config.emplace_back(key, value);
}

const std::string* kv_find(const KvConfig& config, const std::string& key) {
  for (const auto& [k, v] : config) {
    if (k == key) return &v;
  }
  return nullptr;
}

}  // namespace dynemb
