// Baseline reproduction against public word vectors. Needs three files that
// cannot be bundled:
//   PHRASECRAFT_GLOVE   pretrained vectors (GloVe text or pvec)
//   PHRASECRAFT_TURNEY  query<TAB>gold<TAB>c1..c4 TSV
//   PHRASECRAFT_BIRD    a<TAB>b<TAB>score TSV
// Exits 77 (reported by ctest as skipped) when any of them is missing.
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "phrasecraft/cli.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const char* env_file(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0' || !fs::exists(v)) return nullptr;
  return v;
}

}  // namespace

int main() {
  const char* vectors = env_file("PHRASECRAFT_GLOVE");
  const char* turney = env_file("PHRASECRAFT_TURNEY");
  const char* bird = env_file("PHRASECRAFT_BIRD");
  if (!vectors || !turney || !bird) {
    std::cout << "BLOCKED glove-baseline: set PHRASECRAFT_GLOVE, PHRASECRAFT_TURNEY and "
                 "PHRASECRAFT_BIRD to local copies of the public files to run this criterion\n";
    return 77;
  }
  const auto start = std::chrono::steady_clock::now();
  const fs::path work = fs::temp_directory_path() / "phrasecraft_glove";
  fs::create_directories(work);

  auto run = [&](const std::vector<std::string>& args, json& metrics) {
    std::ostringstream out, err;
    const int code = phrasecraft::cli::dispatch(args, out, err);
    if (code != 0) {
      std::cerr << err.str();
      return false;
    }
    metrics = json::parse(out.str());
    return true;
  };
  json t, b;
  const bool ran =
      run({"eval", "turney", "--vectors", vectors, "--data", turney, "--seed", "0", "--manifest",
           (work / "turney_manifest.json").string()},
          t) &&
      run({"eval", "bird", "--vectors", vectors, "--data", bird, "--manifest",
           (work / "bird_manifest.json").string()},
          b);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!ran) {
    std::cout << "FAIL glove-baseline: evaluation did not run\n";
    return 1;
  }
  const double acc = 100.0 * t["accuracy"].get<double>();
  const double r = b["pearson"].get<double>();
  const bool turney_ok = std::abs(acc - 37.8) <= 3.0;
  const bool bird_ok = std::abs(r - 0.560) <= 0.04;
  const bool time_ok = secs < 120.0;
  std::cout << std::fixed << std::setprecision(3);
  std::cout << (turney_ok && bird_ok && time_ok ? "PASS" : "FAIL")
            << " glove-baseline: turney " << acc << "% (37.8 +/- 3.0), bird pearson " << r
            << " (0.560 +/- 0.04), " << secs << " s (< 120 s); manifests in " << work.string() << '\n';
  return turney_ok && bird_ok && time_ok ? 0 : 1;
}
