#pragma once

#include <string>
#include <utility>
#include <vector>

namespace dynemb {

// Ordered key=value settings; the exchange format for config files and the
// config echo embedded in every report/artifact.
using KvConfig = std::vector<std::pair<std::string, std::string>>;

// Parses `key=value` lines; '#' starts a comment, blank lines are skipped.
KvConfig parse_kv(const std::string& text);
KvConfig load_kv_file(const std::string& path);

// One `key=value` line per entry; parse_kv(format_kv(c)) == c.
std::string format_kv(const KvConfig& config);

void kv_set(KvConfig& config, const std::string& key, const std::string& value);
const std::string* kv_find(const KvConfig& config, const std::string& key);

}  // namespace dynemb
