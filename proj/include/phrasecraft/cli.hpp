#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace phrasecraft::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitNumeric = 3,
};

// Runs one command line (without the program name). Metrics go to `out` as a
// single JSON object (or JSON lines for dumps); human-readable text and
// warnings go to `err`.
int dispatch(std::span<const std::string> args, std::ostream& out, std::ostream& err);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

// Provenance record written at the end of every training and evaluation run.
class RunManifest {
 public:
  RunManifest(std::string command, std::vector<std::string> argv);

  void set_config(std::map<std::string, std::string> config) { config_ = std::move(config); }
  void set_seed(std::uint64_t seed) { seed_ = seed; }
  // Records size and SHA-256 of a file (or of every file in a directory).
  void add_input(const std::filesystem::path& path);
  void add_note(const std::string& key, const std::string& value) { notes_[key] = value; }

  std::string to_json() const;
  // Writes to a temporary sibling and renames it into place.
  void write(const std::filesystem::path& path) const;

 private:
  struct Input {
    std::string path;
    std::uintmax_t bytes = 0;
    std::string sha256;
  };

  std::string command_;
  std::vector<std::string> argv_;
  std::map<std::string, std::string> config_;
  std::uint64_t seed_ = 0;
  std::vector<Input> inputs_;
  std::map<std::string, std::string> notes_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace phrasecraft::cli
