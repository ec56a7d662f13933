#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace phrasecraft {

struct ConfigEntry {
  std::string value;
  std::size_t line = 0;
};

// Flat `key = value` settings. Blank lines and `#` comments are ignored.
using KeyValues = std::map<std::string, ConfigEntry, std::less<>>;

KeyValues parse_config(std::string_view text);
// Throws ParseError naming the offending line.
KeyValues load_config(const std::filesystem::path& path);

// Resolves settings with precedence flags > file > defaults. Keys in `file`
// that are absent from `defaults` are reported through `warnings` and ignored.
std::map<std::string, std::string> merge_config(const std::map<std::string, std::string>& defaults,
                                                const KeyValues& file,
                                                const std::map<std::string, std::string>& flags,
                                                std::vector<std::string>* warnings = nullptr);

}  // namespace phrasecraft
