#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace phrasecraft::cli {

struct RunContext {
  std::ostream& out;
  std::ostream& err;
  std::string command;
  std::vector<std::string> argv;
  std::map<std::string, std::string> settings;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

struct TrainEmbedOptions {
  std::string phrase_triplets;
  std::string context_triplets;
  std::string vectors;
  std::string out_dir;
  double lr = 2e-5;
  std::size_t batch = 16;
  std::size_t epochs = 1;
  double margin = 1.0;
  double warmup = 0.1;
  bool lr_hold = false;
  bool sequential = false;
  std::string neg = "given";
  std::string stopwords;
  bool force_corrupt = false;
  bool projection = false;
  std::string oov = "skip";
  std::size_t dim = 64;
};

struct TrainTopicsOptions {
  std::string corpus;
  std::string vectors;
  std::string out_dir;
  std::size_t k = 50;
  std::size_t negatives = 5;
  double ortho = 1.0;
  std::size_t epochs = 300;
  double lr = 1e-2;
  std::size_t batch = 32;
  std::string neg_term = "anchor";
  std::size_t max_len = 120;
  std::size_t top = 50;
};

struct EvalOptions {
  std::string task;
  std::string vectors;
  std::string data;
  std::string metric = "cosine";
  std::string correlation = "pearson";
  std::string manifest = "run_manifest.json";
  std::size_t epochs = 30;
  double lr = 1e-3;
  std::size_t batch = 16;
};

struct FilterPpdbOptions {
  std::string in;
  std::string out;
  std::string manifest = "run_manifest.json";
};

struct NeighborsOptions {
  std::string vectors;
  std::vector<std::string> queries;
  std::size_t k = 10;
  std::string metric = "cosine";
};

struct DiversityOptionsCli {
  std::string vectors;
  std::string queries;
  std::size_t k = 10;
  std::string metric = "cosine";
  std::string lcs_side = "neighbor";
  bool char_levenshtein = false;
  std::string manifest = "run_manifest.json";
};

struct TopicsOptions {
  std::string action;
  std::string model_dir;
  std::string vectors;
  std::size_t top = 10;
  std::string out;
};

struct GradcheckOptions {
  bool all = false;
  double h = 1e-5;
  double tolerance = 1e-4;
};

struct ConvertOptions {
  std::string in;
  std::string out;
  std::string from;
  std::string to = "pvec-bin";
};

int run_train_embed(RunContext& ctx, const TrainEmbedOptions& opt);
int run_train_topics(RunContext& ctx, const TrainTopicsOptions& opt);
int run_eval(RunContext& ctx, const EvalOptions& opt);
int run_filter_ppdb(RunContext& ctx, const FilterPpdbOptions& opt);
int run_neighbors(RunContext& ctx, const NeighborsOptions& opt);
int run_diversity(RunContext& ctx, const DiversityOptionsCli& opt);
int run_topics(RunContext& ctx, const TopicsOptions& opt);
int run_gradcheck(RunContext& ctx, const GradcheckOptions& opt);
int run_convert(RunContext& ctx, const ConvertOptions& opt);

}  // namespace phrasecraft::cli
