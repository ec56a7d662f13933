#include <cstdlib>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "phrasecraft/cli.hpp"
#include "phrasecraft/config.hpp"
#include "phrasecraft/error.hpp"

#ifndef PHRASECRAFT_VERSION
#define PHRASECRAFT_VERSION "0.0.0"
#endif

namespace phrasecraft::cli {

namespace {

struct CommonOptions {
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::string config;
};

std::string option_key(const CLI::Option* opt) {
  const auto& names = opt->get_lnames();
  return names.empty() ? std::string() : names.front();
}

std::string normalise_key(std::string key) {
  for (char& c : key) {
    if (c == '_') c = '-';
  }
  return key;
}

void add_common(CLI::App* sub, CommonOptions& common) {
  sub->add_option("--seed", common.seed, "Random seed (falls back to PHRASECRAFT_SEED, then 0)");
  sub->add_option("--threads", common.threads, "Worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--config", common.config, "Flat key = value settings file");
}

// Finds the innermost subcommand named on the command line.
CLI::App* selected_subcommand(CLI::App& app, std::span<const std::string> args) {
  CLI::App* current = &app;
  for (const auto& a : args) {
    if (a.starts_with("-")) continue;
    CLI::App* next = nullptr;
    for (CLI::App* sub : current->get_subcommands([](CLI::App*) { return true; })) {
      if (sub->get_name() == a) next = sub;
    }
    if (next == nullptr) break;
    current = next;
  }
  return current == &app ? nullptr : current;
}

std::string find_config_arg(std::span<const std::string> args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].starts_with("--config=")) return args[i].substr(9);
  }
  return {};
}

std::string command_path(const CLI::App* sub) {
  std::string path = sub->get_name();
  for (const CLI::App* p = sub->get_parent(); p != nullptr && p->get_parent() != nullptr;
       p = p->get_parent()) {
    path = p->get_name() + " " + path;
  }
  return path;
}

std::string joined_results(const CLI::Option* opt) {
  std::string s;
  for (const auto& r : opt->results()) {
    if (!s.empty()) s += ',';
    s += r;
  }
  return s;
}

}  // namespace

int dispatch(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Phrase embeddings, evaluation and phrase-based topic modelling", "phrasecraft"};
  app.set_version_flag("--version", std::string(PHRASECRAFT_VERSION));
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.fallthrough(false);

  CommonOptions common;

  TrainEmbedOptions te;
  auto* train_embed = app.add_subcommand("train-embed", "Contrastive training of the phrase composer");
  train_embed->add_option("--phrase-triplets", te.phrase_triplets, "anchor<TAB>positive<TAB>negative TSV");
  train_embed->add_option("--context-triplets", te.context_triplets, "anchor<TAB>masked context<TAB>negative context TSV");
  train_embed->add_option("--vectors", te.vectors, "Initial token vectors (pvec or GloVe)");
  train_embed->add_option("--out", te.out_dir, "Output directory")->required();
  train_embed->add_option("--lr", te.lr, "Peak learning rate");
  train_embed->add_option("--batch", te.batch, "Batch size")->check(CLI::PositiveNumber);
  train_embed->add_option("--epochs", te.epochs, "Epochs");
  train_embed->add_option("--margin", te.margin, "Triplet margin");
  train_embed->add_option("--warmup", te.warmup, "Warmup fraction of total steps")->check(CLI::Range(0.0, 1.0));
  train_embed->add_flag("--lr-hold", te.lr_hold, "Keep the peak rate after warmup instead of decaying");
  train_embed->add_flag("--sequential", te.sequential, "Run all phrase batches before context batches");
  train_embed->add_option("--neg", te.neg, "given: negatives from the TSV; raw: corrupt anchors of a 2-column TSV")
      ->check(CLI::IsMember({"given", "raw"}));
  train_embed->add_option("--stopwords", te.stopwords, "Stopword list (one per line) for --neg raw");
  train_embed->add_flag("--force-corrupt", te.force_corrupt, "Corrupt stopwords when an anchor has nothing else");
  train_embed->add_flag("--projection", te.projection, "Add a tanh projection layer over token vectors");
  train_embed->add_option("--oov", te.oov, "Unknown tokens: skip or zero-vector")
      ->check(CLI::IsMember({"skip", "zero-vector"}));
  train_embed->add_option("--dim", te.dim, "Dimension when no --vectors are given")->check(CLI::PositiveNumber);
  add_common(train_embed, common);

  TrainTopicsOptions tt;
  auto* train_topics = app.add_subcommand("train-topics", "Train the phrase-based topic model");
  train_topics->add_option("--corpus", tt.corpus, "One document per line, or JSON lines {id, text}")->required();
  train_topics->add_option("--vectors", tt.vectors, "Word/phrase vectors")->required();
  train_topics->add_option("--out", tt.out_dir, "Output directory")->required();
  train_topics->add_option("--k", tt.k, "Number of topics")->check(CLI::Range(2, 1 << 20));
  train_topics->add_option("--negatives", tt.negatives, "Negative documents per document")->check(CLI::PositiveNumber);
  train_topics->add_option("--ortho", tt.ortho, "Orthogonality weight")->check(CLI::NonNegativeNumber);
  train_topics->add_option("--epochs", tt.epochs, "Epochs");
  train_topics->add_option("--lr", tt.lr, "Adam learning rate")->check(CLI::PositiveNumber);
  train_topics->add_option("--batch", tt.batch, "Documents per update")->check(CLI::PositiveNumber);
  train_topics->add_option("--neg-term", tt.neg_term, "anchor: x.z, recon: reconstruction.z")
      ->check(CLI::IsMember({"anchor", "recon"}));
  train_topics->add_option("--max-len", tt.max_len, "Tokens kept per document")->check(CLI::PositiveNumber);
  train_topics->add_option("--top", tt.top, "Items stored per topic in topics.jsonl")->check(CLI::PositiveNumber);
  add_common(train_topics, common);

  EvalOptions ev;
  auto* eval = app.add_subcommand("eval", "Evaluate embeddings on turney, bird or pairs data");
  eval->add_option("task", ev.task, "turney | bird | pairs")->required()->check(CLI::IsMember({"turney", "bird", "pairs"}));
  eval->add_option("--vectors", ev.vectors, "Vector file or composer checkpoint directory")->required();
  eval->add_option("--data", ev.data, "Benchmark TSV")->required();
  eval->add_option("--metric", ev.metric, "cosine | l2")->check(CLI::IsMember({"cosine", "l2"}));
  eval->add_option("--correlation", ev.correlation, "Headline correlation for bird")
      ->check(CLI::IsMember({"pearson", "spearman"}));
  eval->add_option("--manifest", ev.manifest, "Where to write the run manifest");
  eval->add_option("--epochs", ev.epochs, "Classifier epochs (pairs)");
  eval->add_option("--lr", ev.lr, "Classifier learning rate (pairs)")->check(CLI::PositiveNumber);
  eval->add_option("--batch", ev.batch, "Classifier batch size (pairs)")->check(CLI::PositiveNumber);
  add_common(eval, common);

  FilterPpdbOptions fp;
  auto* filter = app.add_subcommand("filter-ppdb", "Balance a labelled pair set by word overlap");
  filter->add_option("--in", fp.in, "a<TAB>b<TAB>label TSV")->required();
  filter->add_option("--out", fp.out, "Filtered TSV")->required();
  filter->add_option("--manifest", fp.manifest, "Where to write the run manifest");
  add_common(filter, common);

  NeighborsOptions nb;
  auto* neighbors = app.add_subcommand("neighbors", "Nearest neighbours of query words or phrases");
  neighbors->add_option("--vectors", nb.vectors, "Vector file")->required();
  neighbors->add_option("--query", nb.queries, "Query surface (repeatable)")->required();
  neighbors->add_option("--k", nb.k, "Neighbours per query")->check(CLI::PositiveNumber);
  neighbors->add_option("--metric", nb.metric, "cosine | l2")->check(CLI::IsMember({"cosine", "l2"}));
  add_common(neighbors, common);

  DiversityOptionsCli dv;
  auto* diversity = app.add_subcommand("diversity", "Lexical diversity of nearest neighbours");
  diversity->add_option("--vectors", dv.vectors, "Vector file")->required();
  diversity->add_option("--queries", dv.queries, "One query phrase per line")->required();
  diversity->add_option("--k", dv.k, "Neighbours per query")->check(CLI::PositiveNumber);
  diversity->add_option("--metric", dv.metric, "cosine | l2")->check(CLI::IsMember({"cosine", "l2"}));
  diversity->add_option("--lcs-side", dv.lcs_side, "Normalise LCS by neighbor or query length")
      ->check(CLI::IsMember({"neighbor", "query"}));
  diversity->add_flag("--char-levenshtein", dv.char_levenshtein, "Character-level edit distance");
  diversity->add_option("--manifest", dv.manifest, "Where to write the run manifest");
  add_common(diversity, common);

  TopicsOptions tp;
  auto* topics = app.add_subcommand("topics", "Inspect a trained topic model");
  topics->require_subcommand(1);
  auto* interpret = topics->add_subcommand("interpret", "Top vocabulary items per topic");
  interpret->add_option("--model", tp.model_dir, "train-topics output directory")->required();
  interpret->add_option("--vectors", tp.vectors, "Vocabulary vectors")->required();
  interpret->add_option("--top", tp.top, "Items per topic")->check(CLI::PositiveNumber);
  interpret->add_option("--out", tp.out, "Write JSON lines here instead of stdout");
  add_common(interpret, common);
  auto* intrude = topics->add_subcommand("intrude", "Build word-intrusion items");
  intrude->add_option("--model", tp.model_dir, "train-topics output directory")->required();
  intrude->add_option("--out", tp.out, "Write JSON lines here instead of stdout");
  add_common(intrude, common);
  auto* correspond = topics->add_subcommand("correspond", "Topic drift and pairwise distance");
  correspond->add_option("--model", tp.model_dir, "train-topics output directory")->required();
  correspond->add_option("--out", tp.out, "Write JSON here instead of stdout");
  add_common(correspond, common);

  GradcheckOptions gc;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of every analytic gradient");
  gradcheck->add_flag("--all", gc.all, "Run every check (the default)");
  gradcheck->add_option("--step", gc.h, "Central difference step")->check(CLI::PositiveNumber);
  gradcheck->add_option("--tolerance", gc.tolerance, "Maximum relative error")->check(CLI::PositiveNumber);
  add_common(gradcheck, common);

  ConvertOptions cv;
  auto* convert = app.add_subcommand("convert-vectors", "Convert between vector file formats");
  convert->add_option("--in", cv.in, "Input vectors")->required();
  convert->add_option("--out", cv.out, "Output path")->required();
  convert->add_option("--from", cv.from, "pvec-text | pvec-bin | glove (detected when omitted)")
      ->check(CLI::IsMember({"pvec-text", "pvec-bin", "glove"}));
  convert->add_option("--to", cv.to, "pvec-text | pvec-bin")->check(CLI::IsMember({"pvec-text", "pvec-bin"}));
  add_common(convert, common);

  CLI::App* selected = selected_subcommand(app, args);
  std::map<std::string, std::string> defaults;
  KeyValues file_values;
  std::vector<std::string> warnings;

  try {
    if (selected != nullptr) {
      for (const CLI::Option* opt : selected->get_options()) {
        const std::string key = option_key(opt);
        if (key.empty() || key == "config" || key == "help") continue;
        const bool is_flag = opt->get_expected_min() == 0;
        defaults[key] = is_flag && opt->get_default_str().empty() ? "false" : opt->get_default_str();
      }
      const std::string config_path = find_config_arg(args);
      if (!config_path.empty()) {
        for (auto& [key, entry] : load_config(config_path)) {
          file_values[normalise_key(key)] = entry;
        }
        for (const auto& [key, entry] : file_values) {
          if (!defaults.contains(key)) continue;
          CLI::Option* opt = selected->get_option("--" + key);
          opt->run_callback_for_default()->default_val(entry.value);
          opt->required(false);
        }
      }
    }
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    if (selected == nullptr && !args.empty() && !args.front().starts_with("-")) {
      err << "error: unknown subcommand '" << args.front() << "'\n";
    } else {
      err << "error: " << e.what() << '\n';
    }
    if (selected == nullptr) err << app.help();
    else err << "run 'phrasecraft " << command_path(selected) << " --help' for usage\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }

  std::map<std::string, std::string> flags;
  for (const CLI::Option* opt : selected->get_options()) {
    const std::string key = option_key(opt);
    if (key.empty() || key == "config" || key == "help" || opt->count() == 0) continue;
    flags[key] = opt->get_expected_min() == 0 ? "true" : joined_results(opt);
  }

  std::vector<std::string> argv{"phrasecraft"};
  argv.insert(argv.end(), args.begin(), args.end());
  RunContext ctx{out, err, command_path(selected), argv, {}, 0, common.threads};
  ctx.settings = merge_config(defaults, file_values, flags, &warnings);
  for (const auto& w : warnings) err << "warning: " << w << '\n';

  if (flags.contains("seed") || file_values.contains("seed")) {
    ctx.seed = common.seed;
  } else if (const char* env = std::getenv("PHRASECRAFT_SEED"); env != nullptr && *env != '\0') {
    try {
      std::size_t used = 0;
      ctx.seed = std::stoull(env, &used);
      if (used != std::string_view(env).size()) throw std::invalid_argument(env);
    } catch (const std::exception&) {
      err << "error: PHRASECRAFT_SEED must be a non-negative integer, got '" << env << "'\n";
      return kExitUsage;
    }
  }
  ctx.settings["seed"] = std::to_string(ctx.seed);

  try {
    if (selected == train_embed) return run_train_embed(ctx, te);
    if (selected == train_topics) return run_train_topics(ctx, tt);
    if (selected == eval) return run_eval(ctx, ev);
    if (selected == filter) return run_filter_ppdb(ctx, fp);
    if (selected == neighbors) return run_neighbors(ctx, nb);
    if (selected == diversity) return run_diversity(ctx, dv);
    if (selected == interpret || selected == intrude || selected == correspond) {
      tp.action = selected->get_name();
      return run_topics(ctx, tp);
    }
    if (selected == gradcheck) return run_gradcheck(ctx, gc);
    if (selected == convert) return run_convert(ctx, cv);
    err << app.help();
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
}

}  // namespace phrasecraft::cli
