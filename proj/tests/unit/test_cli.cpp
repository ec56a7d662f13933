#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include <json.hpp>

#include "phrasecraft/cli.hpp"
#include "test_support.hpp"

using namespace phrasecraft::cli;
using json = nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

void write_fixture(const testing::TempDir& dir) {
  testing::write_text(dir / "vec.pvec",
                      "6 2\nhot\t1 0\ndog\t0.9 0.1\nsausage\t0.95 0.05\ncat\t0 1\nblue\t-1 0\nrun\t0.1 0.9\n");
  testing::write_text(dir / "turney.tsv", "hot dog\tsausage\tcat\tblue\trun\thot\n");
  testing::write_text(dir / "bird.tsv", "hot dog\tsausage\t0.9\ncat\trun\t0.6\nblue\thot\t0.1\n");
}

}  // namespace

TEST_CASE("help and usage errors") {
  auto r = run({"--help"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("train-embed") != std::string::npos);
  r = run({"eval", "turney", "--data", "x.tsv"});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("--vectors") != std::string::npos);
  r = run({"frobnicate"});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("frobnicate") != std::string::npos);
  r = run({});
  CHECK(r.code == kExitUsage);
  CHECK(run({"train-topics", "--help"}).code == kExitOk);
}

TEST_CASE("gradcheck reports every check") {
  auto r = run({"gradcheck", "--all"});
  CHECK(r.code == kExitOk);
  const auto j = json::parse(r.out);
  CHECK(j["passed"] == true);
  CHECK(j["checks"].size() >= 6);
  for (const auto& c : j["checks"]) CHECK(c["max_rel_error"].get<double>() < 1e-4);
  r = run({"gradcheck", "--tolerance", "1e-30"});
  CHECK(r.code == kExitNumeric);
}

TEST_CASE("eval writes metrics and a manifest") {
  testing::TempDir dir;
  write_fixture(dir);
  const auto manifest = (dir / "m.json").string();
  auto r = run({"eval", "turney", "--vectors", (dir / "vec.pvec").string(), "--data",
                (dir / "turney.tsv").string(), "--manifest", manifest, "--seed", "3"});
  REQUIRE(r.code == kExitOk);
  const auto metrics = json::parse(r.out);
  CHECK(metrics["accuracy"] == 1.0);
  const auto m = json::parse(testing::read_text(manifest));
  CHECK(m["seed"] == 3);
  CHECK(m["inputs"].size() == 2);
  CHECK(m["inputs"][0]["sha256"].get<std::string>().size() == 64);

  r = run({"eval", "bird", "--vectors", (dir / "vec.pvec").string(), "--data",
           (dir / "bird.tsv").string(), "--manifest", manifest});
  REQUIRE(r.code == kExitOk);
  const auto bird = json::parse(r.out);
  CHECK(bird.contains("pearson"));
  CHECK(bird.contains("spearman"));
}

TEST_CASE("data errors exit 2") {
  testing::TempDir dir;
  write_fixture(dir);
  testing::write_text(dir / "bad.pvec", "2 2\nhot\t1 0\ndog\t1\n");
  auto r = run({"eval", "turney", "--vectors", (dir / "bad.pvec").string(), "--data",
                (dir / "turney.tsv").string(), "--manifest", (dir / "m.json").string()});
  CHECK(r.code == kExitData);
  CHECK(r.err.find("line 3") != std::string::npos);
  r = run({"eval", "turney", "--vectors", (dir / "missing.pvec").string(), "--data",
           (dir / "turney.tsv").string(), "--manifest", (dir / "m.json").string()});
  CHECK(r.code == kExitData);
}

TEST_CASE("config precedence and unknown keys") {
  testing::TempDir dir;
  write_fixture(dir);
  testing::write_text(dir / "run.cfg", "metric = l2\nmanifest = " + (dir / "m.json").string() +
                                           "\nseed = 9\ncolour = blue\n");
  auto r = run({"eval", "turney", "--vectors", (dir / "vec.pvec").string(), "--data",
                (dir / "turney.tsv").string(), "--config", (dir / "run.cfg").string()});
  REQUIRE(r.code == kExitOk);
  CHECK(json::parse(r.out)["metric"] == "l2");
  CHECK(r.err.find("colour") != std::string::npos);
  auto m = json::parse(testing::read_text(dir / "m.json"));
  CHECK(m["seed"] == 9);
  CHECK(m["config"]["metric"] == "l2");

  r = run({"eval", "turney", "--vectors", (dir / "vec.pvec").string(), "--data",
           (dir / "turney.tsv").string(), "--config", (dir / "run.cfg").string(), "--metric",
           "cosine", "--seed", "4"});
  REQUIRE(r.code == kExitOk);
  CHECK(json::parse(r.out)["metric"] == "cosine");
  m = json::parse(testing::read_text(dir / "m.json"));
  CHECK(m["seed"] == 4);

  testing::write_text(dir / "broken.cfg", "metric l2\n");
  r = run({"eval", "turney", "--vectors", (dir / "vec.pvec").string(), "--data",
           (dir / "turney.tsv").string(), "--config", (dir / "broken.cfg").string()});
  CHECK(r.code == kExitData);
  CHECK(r.err.find("line 1") != std::string::npos);
}

TEST_CASE("a config file can supply a required flag") {
  testing::TempDir dir;
  write_fixture(dir);
  testing::write_text(dir / "run.cfg", "vectors = " + (dir / "vec.pvec").string() + "\n");
  const auto r = run({"eval", "turney", "--data", (dir / "turney.tsv").string(), "--config",
                      (dir / "run.cfg").string(), "--manifest", (dir / "m.json").string()});
  CHECK(r.code == kExitOk);
}

TEST_CASE("seed falls back to the environment") {
  testing::TempDir dir;
  write_fixture(dir);
  ::setenv("PHRASECRAFT_SEED", "77", 1);
  auto r = run({"eval", "turney", "--vectors", (dir / "vec.pvec").string(), "--data",
                (dir / "turney.tsv").string(), "--manifest", (dir / "m.json").string()});
  ::unsetenv("PHRASECRAFT_SEED");
  REQUIRE(r.code == kExitOk);
  CHECK(json::parse(testing::read_text(dir / "m.json"))["seed"] == 77);
}

TEST_CASE("neighbors and convert") {
  testing::TempDir dir;
  write_fixture(dir);
  auto r = run({"neighbors", "--vectors", (dir / "vec.pvec").string(), "--query", "hot", "--k", "2"});
  REQUIRE(r.code == kExitOk);
  const auto j = json::parse(r.out);
  CHECK(j["hits"][0][0] == "sausage");
  r = run({"convert-vectors", "--in", (dir / "vec.pvec").string(), "--out", (dir / "vec.bin").string()});
  REQUIRE(r.code == kExitOk);
  CHECK(testing::read_text(dir / "vec.bin").substr(0, 4) == "PVB1");
}

TEST_CASE("sha256") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}
