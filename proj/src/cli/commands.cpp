#include "commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

#include "phrasecraft/cli.hpp"
#include "phrasecraft/composer.hpp"
#include "phrasecraft/contrastive.hpp"
#include "phrasecraft/error.hpp"
#include "phrasecraft/evalsuite.hpp"
#include "phrasecraft/gradcheck.hpp"
#include "phrasecraft/pntm.hpp"
#include "phrasecraft/vecstore.hpp"

namespace phrasecraft::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

void emit(RunContext& ctx, const json& metrics) { ctx.out << metrics.dump() << '\n'; }

void warn_all(RunContext& ctx, const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) ctx.err << "warning: " << w << '\n';
}

RunManifest make_manifest(const RunContext& ctx) {
  RunManifest m(ctx.command, ctx.argv);
  m.set_config(ctx.settings);
  m.set_seed(ctx.seed);
  return m;
}

// A vectors argument names either a vector file or a composer checkpoint dir.
ComposerModel load_encoder(const std::string& path) {
  if (fs::is_directory(path)) return load_composer(path);
  return ComposerModel::from_embeddings(load_vectors(path));
}

// Embeds phrases and counts those with no known token.
struct CountingEmbedder {
  const ComposerModel* model;
  std::size_t* oov_phrases;

  std::vector<double> operator()(const Phrase& p) const {
    bool oov = false;
    auto v = embed_phrase(*model, p, &oov);
    if (oov) ++*oov_phrases;
    return v;
  }
};

void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& l : lines) out << l << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<std::string> read_nonblank_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") != std::string::npos) lines.push_back(line);
  }
  return lines;
}

}  // namespace

int run_train_embed(RunContext& ctx, const TrainEmbedOptions& opt) {
  if (opt.phrase_triplets.empty() && opt.context_triplets.empty()) {
    throw InvalidArgument("train-embed: give --phrase-triplets and/or --context-triplets");
  }
  RunManifest manifest = make_manifest(ctx);
  Rng rng(ctx.seed);

  std::optional<Embeddings> init;
  if (!opt.vectors.empty()) {
    init = load_vectors(opt.vectors);
    manifest.add_input(opt.vectors);
    manifest.add_note("vectors_count", std::to_string(init->size()));
    manifest.add_note("vectors_dim", std::to_string(init->dim()));
  }

  std::vector<PhraseTriplet> phrases;
  std::size_t corrupt_skipped = 0;
  if (!opt.phrase_triplets.empty()) {
    manifest.add_input(opt.phrase_triplets);
    if (opt.neg == "raw") {
      auto pairs = load_paraphrase_pairs(opt.phrase_triplets);
      Vocab corrupt_vocab;
      if (init) {
        corrupt_vocab = init->vocab;
      } else {
        for (const auto& [a, p] : pairs) {
          for (const auto* ph : {&a, &p}) {
            for (const auto& t : ph->tokens) {
              if (!corrupt_vocab.contains(t)) corrupt_vocab.add(t);
            }
          }
        }
      }
      const StopwordSet stop =
          opt.stopwords.empty() ? StopwordSet::english() : StopwordSet::load(opt.stopwords);
      phrases = make_raw_negative_triplets(pairs, corrupt_vocab, stop, rng, opt.force_corrupt,
                                           &corrupt_skipped);
      if (corrupt_skipped) {
        ctx.err << "warning: skipped " << corrupt_skipped
                << " anchors made only of stopwords (use --force-corrupt to keep them)\n";
      }
    } else if (opt.neg == "given") {
      phrases = load_phrase_triplets(opt.phrase_triplets);
    } else {
      throw InvalidArgument("--neg must be 'given' or 'raw'");
    }
  }
  std::vector<ContextTriplet> contexts;
  if (!opt.context_triplets.empty()) {
    manifest.add_input(opt.context_triplets);
    contexts = load_context_triplets(opt.context_triplets);
  }

  // Token vocabulary: every token the triplets use, in first-seen order.
  Vocab tokens;
  auto see = [&tokens](std::span<const std::string> seq) {
    for (const auto& t : seq) {
      if (!tokens.contains(t)) tokens.add(t);
    }
  };
  for (const auto& t : phrases) {
    see(t.anchor.tokens);
    see(t.positive.tokens);
    see(t.negative.tokens);
  }
  for (const auto& t : contexts) {
    see(t.anchor.tokens);
    see(t.positive_context);
    see(t.negative_context);
  }

  ComposerModel model;
  const std::size_t dim = init ? init->dim() : opt.dim;
  if (dim == 0) throw InvalidArgument("--dim must be >= 1");
  model.token_vocab = tokens;
  model.token_table = Matrix(tokens.size(), dim);
  std::size_t initialised = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto row = init ? init->lookup(tokens.at(i)) : std::nullopt;
    auto dst = model.token_table.row(i);
    if (row) {
      std::copy(row->begin(), row->end(), dst.begin());
      ++initialised;
    } else {
      for (double& v : dst) v = rng.normal(0.0, 0.1);
    }
  }
  model.oov_policy = parse_oov_policy(opt.oov);
  if (opt.projection) {
    model.add_projection(rng);
    model.nonlinearity = Nonlinearity::Tanh;
  }

  TrainConfig cfg;
  cfg.base_lr = opt.lr;
  cfg.batch_size = opt.batch;
  cfg.epochs = opt.epochs;
  cfg.warmup_fraction = opt.warmup;
  cfg.margin = opt.margin;
  cfg.seed = ctx.seed;
  cfg.lr_hold = opt.lr_hold;

  const double before = satisfied_fraction(model, phrases, contexts, cfg.margin);
  const TrainingHistory history =
      train_contrastive(model, phrases, contexts, cfg, rng,
                        opt.sequential ? BatchSchedule::Sequential : BatchSchedule::Interleaved);

  const fs::path out_dir = opt.out_dir;
  save_composer(model, out_dir / "model");
  std::vector<std::string> lines;
  for (std::size_t e = 0; e < history.epoch_loss.size(); ++e) {
    json row;
    row["epoch"] = e + 1;
    row["loss"] = history.epoch_loss[e];
    row["satisfied"] = history.epoch_satisfied[e];
    lines.push_back(row.dump());
  }
  write_lines(out_dir / "history.jsonl", lines);

  json metrics;
  metrics["command"] = "train-embed";
  metrics["phrase_triplets"] = phrases.size();
  metrics["context_triplets"] = contexts.size();
  metrics["tokens"] = tokens.size();
  metrics["tokens_from_vectors"] = initialised;
  metrics["dim"] = dim;
  metrics["steps"] = history.total_steps;
  metrics["epochs"] = cfg.epochs;
  metrics["satisfied_initial"] = before;
  metrics["satisfied_final"] = history.epoch_satisfied.empty() ? before : history.epoch_satisfied.back();
  metrics["final_loss"] = history.epoch_loss.empty() ? 0.0 : history.epoch_loss.back();
  emit(ctx, metrics);

  ctx.err << "train-embed: " << history.total_steps << " steps, satisfied " << std::fixed
          << std::setprecision(3) << before << " -> "
          << (history.epoch_satisfied.empty() ? before : history.epoch_satisfied.back()) << '\n';
  manifest.write(out_dir / "manifest.json");
  return kExitOk;
}

int run_train_topics(RunContext& ctx, const TrainTopicsOptions& opt) {
  RunManifest manifest = make_manifest(ctx);
  manifest.add_input(opt.corpus);
  manifest.add_input(opt.vectors);
  const Embeddings vectors = load_vectors(opt.vectors);
  const ComposerModel encoder = ComposerModel::from_embeddings(vectors);
  manifest.add_note("vectors_count", std::to_string(vectors.size()));
  manifest.add_note("vectors_dim", std::to_string(vectors.dim()));

  const auto corpus = load_corpus(opt.corpus);
  std::vector<std::vector<double>> doc_vectors;
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto toks = tokenize(corpus[i].text);
    bool oov = false;
    auto v = embed_tokens(encoder, std::span(toks).first(std::min(opt.max_len, toks.size())), &oov);
    if (oov) continue;
    doc_vectors.push_back(std::move(v));
    kept.push_back(i);
  }
  if (kept.size() < corpus.size()) {
    ctx.err << "warning: skipped " << corpus.size() - kept.size()
            << " documents with no known token\n";
  }

  PntmConfig cfg;
  cfg.num_topics = opt.k;
  cfg.negatives = opt.negatives;
  cfg.ortho_weight = opt.ortho;
  cfg.epochs = opt.epochs;
  cfg.lr = opt.lr;
  cfg.batch_size = opt.batch;
  if (opt.neg_term == "anchor") {
    cfg.negative_term = NegativeTerm::Anchor;
  } else if (opt.neg_term == "recon") {
    cfg.negative_term = NegativeTerm::Reconstruction;
  } else {
    throw InvalidArgument("--neg-term must be 'anchor' or 'recon'");
  }

  Rng rng(ctx.seed);
  const PntmResult result = train_pntm(doc_vectors, cfg, rng);
  const fs::path out_dir = opt.out_dir;
  save_topic_model(result.model, out_dir);
  {
    std::ofstream cfg_out(out_dir / "pntm.cfg", std::ios::binary | std::ios::trunc);
    cfg_out << "k = " << cfg.num_topics << "\nnegatives = " << cfg.negatives
            << "\northo = " << cfg.ortho_weight << "\nepochs = " << cfg.epochs
            << "\nlr = " << cfg.lr << "\nbatch = " << cfg.batch_size
            << "\nneg_term = " << opt.neg_term << "\nmax_len = " << opt.max_len << '\n';
  }
  const auto descriptions = interpret_topics(result.model.topics(), vectors, opt.top);
  save_topic_descriptions(descriptions, out_dir / "topics.jsonl");

  std::vector<std::string> lines;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    lines.push_back(corpus[kept[i]].id + "\t" +
                    std::to_string(assign_topic(result.model.topics(), doc_vectors[i])));
  }
  write_lines(out_dir / "assignments.tsv", lines);
  lines.clear();
  for (std::size_t e = 0; e < result.history.epoch_loss.size(); ++e) {
    json row;
    row["epoch"] = e + 1;
    row["loss"] = result.history.epoch_loss[e];
    row["ortho"] = result.history.epoch_ortho[e];
    lines.push_back(row.dump());
  }
  write_lines(out_dir / "history.jsonl", lines);

  const auto stats = correspondence_stats(result.model);
  json metrics;
  metrics["command"] = "train-topics";
  metrics["documents"] = doc_vectors.size();
  metrics["skipped_documents"] = corpus.size() - kept.size();
  metrics["k"] = cfg.num_topics;
  metrics["final_loss"] = result.history.epoch_loss.empty() ? 0.0 : result.history.epoch_loss.back();
  metrics["ortho_initial"] = orthogonality_penalty(result.model.initial());
  metrics["ortho_final"] = orthogonality_penalty(result.model.topics());
  metrics["avg_drift"] = stats.avg_drift;
  metrics["avg_pairwise"] = stats.avg_pairwise;
  emit(ctx, metrics);
  ctx.err << "train-topics: " << doc_vectors.size() << " documents, " << cfg.num_topics
          << " topics, drift " << stats.avg_drift << ", pairwise " << stats.avg_pairwise << '\n';
  manifest.write(out_dir / "manifest.json");
  return kExitOk;
}

int run_eval(RunContext& ctx, const EvalOptions& opt) {
  RunManifest manifest = make_manifest(ctx);
  manifest.add_input(opt.vectors);
  manifest.add_input(opt.data);
  const ComposerModel encoder = load_encoder(opt.vectors);
  manifest.add_note("vectors_count", std::to_string(encoder.token_vocab.size()));
  manifest.add_note("vectors_dim", std::to_string(encoder.dim()));
  const Metric metric = parse_metric(opt.metric);
  std::size_t oov = 0;
  const PhraseEmbedder embed = CountingEmbedder{&encoder, &oov};
  Rng rng(ctx.seed);

  json metrics;
  metrics["command"] = "eval";
  metrics["task"] = opt.task;
  metrics["metric"] = to_string(metric);
  if (opt.task == "turney") {
    const auto items = load_turney(opt.data, rng);
    const double acc = eval_turney(items, embed, metric);
    metrics["items"] = items.size();
    metrics["accuracy"] = acc;
    ctx.err << "turney: accuracy " << std::fixed << std::setprecision(4) << acc << " over "
            << items.size() << " items\n";
  } else if (opt.task == "bird") {
    const auto items = load_bird(opt.data);
    const auto sims = bird_similarities(items, embed, metric);
    std::vector<double> scores;
    for (const auto& it : items) scores.push_back(it.score);
    const double r = pearson(sims, scores);
    const double rho = spearman(sims, scores);
    metrics["items"] = items.size();
    metrics["correlation"] = opt.correlation == "spearman" ? rho : r;
    metrics["pearson"] = r;
    metrics["spearman"] = rho;
    ctx.err << "bird: pearson " << std::fixed << std::setprecision(4) << r << ", spearman " << rho
            << " over " << items.size() << " pairs\n";
  } else if (opt.task == "pairs") {
    auto split = split_pairs(load_pairs(opt.data), rng);
    if (split.dev.empty() || split.test.empty()) {
      throw DataError("pairs: too few pairs for a 70/15/15 split");
    }
    PairTrainConfig cfg;
    cfg.epochs = opt.epochs;
    cfg.lr = opt.lr;
    cfg.batch_size = opt.batch;
    const PairClassifier clf = train_pair_classifier(split.train, embed, cfg, rng);
    const double dev = eval_pair_classifier(clf, split.dev, embed);
    const double test = eval_pair_classifier(clf, split.test, embed);
    metrics["train"] = split.train.size();
    metrics["dev"] = split.dev.size();
    metrics["test"] = split.test.size();
    metrics["dev_accuracy"] = dev;
    metrics["test_accuracy"] = test;
    ctx.err << "pairs: dev " << std::fixed << std::setprecision(4) << dev << ", test " << test
            << '\n';
  } else {
    throw InvalidArgument("eval: unknown task '" + opt.task + "'");
  }
  metrics["oov_phrases"] = oov;
  emit(ctx, metrics);
  manifest.write(opt.manifest);
  return kExitOk;
}

int run_filter_ppdb(RunContext& ctx, const FilterPpdbOptions& opt) {
  RunManifest manifest = make_manifest(ctx);
  manifest.add_input(opt.in);
  const auto pairs = load_pairs(opt.in);
  std::vector<std::string> warnings;
  const auto kept = filter_ppdb(pairs, &warnings);
  warn_all(ctx, warnings);
  save_pairs(kept, opt.out);
  std::size_t pos = 0;
  for (const auto& p : kept) pos += p.positive;
  json metrics;
  metrics["command"] = "filter-ppdb";
  metrics["input_pairs"] = pairs.size();
  metrics["kept_pairs"] = kept.size();
  metrics["kept_positive"] = pos;
  metrics["kept_negative"] = kept.size() - pos;
  emit(ctx, metrics);
  ctx.err << "filter-ppdb: kept " << kept.size() << " of " << pairs.size() << " pairs\n";
  manifest.write(opt.manifest);
  return kExitOk;
}

int run_neighbors(RunContext& ctx, const NeighborsOptions& opt) {
  const Embeddings emb = load_vectors(opt.vectors);
  const Metric metric = parse_metric(opt.metric);
  for (const auto& q : opt.queries) {
    std::optional<std::string_view> exclude;
    std::vector<double> vec;
    if (const auto row = emb.lookup(q)) {
      vec.assign(row->begin(), row->end());
      exclude = q;
    } else {
      const auto toks = tokenize(q);
      bool oov = false;
      vec = embed_tokens(ComposerModel::from_embeddings(emb), toks, &oov);
      if (oov) {
        ctx.err << "warning: query '" << q << "' has no known token\n";
        continue;
      }
    }
    const auto nn = nearest_neighbors(vec, emb, opt.k, metric, exclude, q);
    json j;
    j["query"] = q;
    j["metric"] = to_string(metric);
    auto hits = json::array();
    for (const auto& h : nn.hits) hits.push_back(json::array({h.surface, h.score}));
    j["hits"] = std::move(hits);
    ctx.out << j.dump() << '\n';
  }
  return kExitOk;
}

int run_diversity(RunContext& ctx, const DiversityOptionsCli& opt) {
  RunManifest manifest = make_manifest(ctx);
  manifest.add_input(opt.vectors);
  manifest.add_input(opt.queries);
  const Embeddings emb = load_vectors(opt.vectors);
  std::vector<Phrase> queries;
  for (const auto& line : read_nonblank_lines(opt.queries)) queries.push_back(Phrase::from_text(line));
  DiversityOptions d;
  d.k = opt.k;
  d.metric = parse_metric(opt.metric);
  if (opt.lcs_side == "neighbor") {
    d.lcs_side = LcsSide::Neighbor;
  } else if (opt.lcs_side == "query") {
    d.lcs_side = LcsSide::Query;
  } else {
    throw InvalidArgument("--lcs-side must be 'neighbor' or 'query'");
  }
  d.character_levenshtein = opt.char_levenshtein;
  d.threads = ctx.threads;
  const DiversityReport r = diversity_report(queries, emb, d);
  json metrics;
  metrics["command"] = "diversity";
  metrics["k"] = r.k;
  metrics["queries_used"] = r.queries_used;
  metrics["queries_skipped"] = r.queries_skipped;
  metrics["pct_new_tokens"] = r.pct_new_tokens;
  metrics["lcs_precision"] = r.lcs_precision;
  metrics["avg_levenshtein"] = r.avg_levenshtein;
  metrics["levenshtein_unit"] = opt.char_levenshtein ? "character" : "token";
  emit(ctx, metrics);
  ctx.err << std::fixed << std::setprecision(2) << "% new tokens  " << r.pct_new_tokens
          << "\nLCS-precision " << r.lcs_precision << "\nLevenshtein   " << r.avg_levenshtein
          << '\n';
  manifest.write(opt.manifest);
  return kExitOk;
}

int run_topics(RunContext& ctx, const TopicsOptions& opt) {
  const fs::path dir = opt.model_dir;
  std::vector<std::string> lines;
  if (opt.action == "interpret") {
    const TopicModel model = load_topic_model(dir);
    const Embeddings emb = load_vectors(opt.vectors);
    for (const auto& d : interpret_topics(model.topics(), emb, opt.top)) {
      lines.push_back(topic_description_json(d));
    }
  } else if (opt.action == "intrude") {
    const auto descriptions = load_topic_descriptions(dir / "topics.jsonl");
    Rng rng(ctx.seed);
    std::vector<std::string> warnings;
    const auto items = make_intrusion_items(descriptions, rng, &warnings);
    warn_all(ctx, warnings);
    for (const auto& it : items) {
      json j;
      j["topic"] = it.topic;
      j["items"] = it.items;
      j["intruder_index"] = it.intruder_index;
      j["intruder_topic"] = it.intruder_topic;
      lines.push_back(j.dump());
    }
  } else if (opt.action == "correspond") {
    const auto stats = correspondence_stats(load_topic_model(dir));
    json j;
    j["command"] = "topics correspond";
    j["avg_drift"] = stats.avg_drift;
    j["avg_pairwise"] = stats.avg_pairwise;
    lines.push_back(j.dump());
  } else {
    throw InvalidArgument("topics: unknown action '" + opt.action + "'");
  }
  if (opt.out.empty()) {
    for (const auto& l : lines) ctx.out << l << '\n';
  } else {
    write_lines(opt.out, lines);
  }
  return kExitOk;
}

int run_gradcheck(RunContext& ctx, const GradcheckOptions& opt) {
  const auto results = run_gradient_suite(ctx.seed, opt.h);
  json metrics;
  metrics["command"] = "gradcheck";
  metrics["h"] = opt.h;
  auto rows = json::array();
  bool ok = true;
  ctx.err << std::left << std::setw(34) << "check" << std::setw(8) << "params"
          << "max rel error\n";
  for (const auto& r : results) {
    ok = ok && r.max_rel_error < opt.tolerance;
    rows.push_back({{"name", r.name}, {"parameters", r.parameters}, {"max_rel_error", r.max_rel_error}});
    ctx.err << std::left << std::setw(34) << r.name << std::setw(8) << r.parameters
            << std::scientific << std::setprecision(3) << r.max_rel_error << '\n';
  }
  metrics["checks"] = std::move(rows);
  metrics["passed"] = ok;
  emit(ctx, metrics);
  return ok ? kExitOk : kExitNumeric;
}

int run_convert(RunContext& ctx, const ConvertOptions& opt) {
  const Embeddings emb = opt.from.empty() ? load_vectors(opt.in)
                                          : load_vectors(opt.in, parse_vector_format(opt.from));
  save_vectors(emb, opt.out, parse_vector_format(opt.to));
  json metrics;
  metrics["command"] = "convert-vectors";
  metrics["count"] = emb.size();
  metrics["dim"] = emb.dim();
  emit(ctx, metrics);
  return kExitOk;
}

}  // namespace phrasecraft::cli
