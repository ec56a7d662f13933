#include "phrasecraft/config.hpp"

#include <fstream>
#include <sstream>

#include "phrasecraft/error.hpp"

namespace phrasecraft {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

KeyValues parse_config(std::string_view text) {
  KeyValues out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError("expected 'key = value'", line_no);
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty() || key.find_first_of(" \t") != std::string_view::npos) {
      throw ParseError("malformed key '" + std::string(key) + "'", line_no);
    }
    out[std::string(key)] = ConfigEntry{std::string(value), line_no};
  }
  return out;
}

KeyValues load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::map<std::string, std::string> merge_config(const std::map<std::string, std::string>& defaults,
                                                const KeyValues& file,
                                                const std::map<std::string, std::string>& flags,
                                                std::vector<std::string>* warnings) {
  std::map<std::string, std::string> out = defaults;
  for (const auto& [key, entry] : file) {
    if (!defaults.contains(key)) {
      if (warnings) {
        warnings->push_back("unknown config key '" + key + "' (line " +
                            std::to_string(entry.line) + ")");
      }
      continue;
    }
    out[key] = entry.value;
  }
  for (const auto& [key, value] : flags) out[key] = value;
  return out;
}

}  // namespace phrasecraft
