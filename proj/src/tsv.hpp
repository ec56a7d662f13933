#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "phrasecraft/error.hpp"

namespace phrasecraft::detail {

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const auto tab = line.find('\t', pos);
    out.push_back(line.substr(pos, tab == std::string::npos ? std::string::npos : tab - pos));
    if (tab == std::string::npos) break;
    pos = tab + 1;
  }
  return out;
}

// Calls fn(columns, line_no) for every non-blank line; rows must have exactly
// `columns` tab-separated fields.
template <typename Fn>
void for_each_tsv_row(const std::filesystem::path& path, std::size_t columns, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cols = split_tabs(line);
    if (cols.size() != columns) {
      throw ParseError("expected " + std::to_string(columns) + " tab-separated columns, found " +
                           std::to_string(cols.size()),
                       line_no);
    }
    fn(cols, line_no);
  }
}

}  // namespace phrasecraft::detail
