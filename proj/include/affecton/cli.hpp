#pragma once

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include "affecton/corpus.hpp"
#include "affecton/decoder.hpp"
#include "affecton/lemmatizer.hpp"
#include "affecton/lexicon.hpp"
#include "affecton/metrics.hpp"
#include "affecton/ngram_model.hpp"
#include "affecton/rating.hpp"
#include "affecton/service.hpp"
#include "affecton/trace_io.hpp"

namespace affecton::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Bad flags, unreadable inputs and other caller mistakes (exit code 2).
struct UsageError : Error {
  using Error::Error;
};

namespace detail {

/// Relative paths resolve against AFFECTON_DATA_DIR when it is set.
inline std::filesystem::path resolve(const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative()) {
    if (const char* root = std::getenv("AFFECTON_DATA_DIR"); root != nullptr && *root != '\0') {
      return std::filesystem::path(root) / path;
    }
  }
  return path;
}

inline std::ifstream open_input(const std::string& p, const char* what) {
  const auto path = resolve(p);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError(std::string("cannot read ") + what + " '" + path.string() + "'");
  return in;
}

inline std::ofstream open_output(const std::string& p) {
  const auto path = resolve(p);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  return out;
}

inline NGramModel load_model(const std::string& p) {
  auto in = open_input(p, "model");
  return NGramModel::load(in);
}

inline AffectiveLexicon load_lexicon_file(const std::string& p) {
  auto in = open_input(p, "lexicon");
  return load_lexicon(in, resolve(p).string());
}

inline LemmaRules load_rules_file(const std::string& p) {
  if (p.empty()) return default_lemma_rules();
  auto in = open_input(p, "lemma exceptions");
  return load_rules(&in);
}

inline std::vector<DialogPair> load_pairs_file(const std::string& p) {
  auto in = open_input(p, "corpus");
  return load_pairs_tsv(in);
}

/// Decoder flags shared by generate, map and serve.
struct DecodeFlags {
  std::string target = "HHH";
  double lambda = 0.5;
  std::size_t k = 30;
  std::string renorm = "softmax";
  std::size_t max_len = 20;

  void add_to(CLI::App& app) {
    app.add_option("--target", target, "Preset (LML, LLL, MLM, HHH) or 'V,A,D'")->capture_default_str();
    app.add_option("--lambda", lambda, "Affect strength in [0,1]")->capture_default_str();
    app.add_option("--k", k, "Candidate words per step")->capture_default_str();
    app.add_option("--renorm", renorm, "Candidate renormalization: softmax or sum")->capture_default_str();
    app.add_option("--max-len", max_len, "Maximum generated tokens")->capture_default_str();
  }

  DecoderConfig config(DecodeMode mode) const {
    DecoderConfig c;
    try {
      c.target = parse_target(target);
      c.renorm = parse_renorm(renorm);
    } catch (const ConfigError& e) {
      throw UsageError(e.what());
    }
    c.lambda = lambda;
    c.k = k;
    c.max_len = max_len;
    c.mode = mode;
    try {
      c.validate();
    } catch (const ConfigError& e) {
      throw UsageError(e.what());
    }
    return c;
  }
};

inline std::vector<MappedPair> load_mapped_file(const std::string& p) {
  auto in = open_input(p, "mapped corpus");
  return load_mapped_tsv(in);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string corpus;
  std::string conversations;
  std::string out;
  std::string ref_out;
  int order = 3;
  double delta = 0.01;
  std::size_t min_count = 1;
  double heldout_fraction = 0.0;
  std::uint64_t seed = 0;
};

inline int cmd_train(const TrainArgs& a, std::ostream& out) {
  std::vector<DialogPair> pairs;
  if (a.conversations.empty()) {
    pairs = detail::load_pairs_file(a.corpus);
  } else {
    auto lines = detail::open_input(a.corpus, "movie lines");
    auto convs = detail::open_input(a.conversations, "conversations");
    auto loaded = load_cornell(lines, convs);
    pairs = std::move(loaded.pairs);
    if (loaded.missing_line_warnings > 0) out << "warning: " << loaded.missing_line_warnings << " missing line references\n";
  }
  if (pairs.empty()) throw UsageError("corpus has no dialog pairs");
  if (!a.ref_out.empty() && !(a.heldout_fraction > 0.0 && a.heldout_fraction < 1.0)) {
    throw UsageError("--ref-out needs --heldout-fraction in (0,1)");
  }
  if (a.order < 1 || a.order > NGramModel::kMaxOrder) throw UsageError("--order must be in [1, 5]");

  std::vector<DialogPair> train_pairs, heldout;
  if (a.heldout_fraction > 0.0) {
    auto s = split(std::move(pairs), 1.0 - a.heldout_fraction, a.seed);
    train_pairs = std::move(s.train);
    heldout = std::move(s.heldout);
  } else {
    train_pairs = std::move(pairs);
  }

  std::vector<std::vector<std::string>> seqs;
  std::size_t tokens = 0;
  for (const auto& p : train_pairs) {
    seqs.push_back(dialog_training_sequence(p.source, p.response));
    tokens += seqs.back().size();
  }
  TrainOptions opts;
  opts.min_count = a.min_count;
  const NGramModel model = train(seqs, a.order, a.delta, opts);
  {
    auto f = detail::open_output(a.out);
    model.save(f);
  }
  out << "vocabulary: " << model.vocabulary().size() << "\n";
  out << "tokens: " << tokens << "\n";

  if (!a.ref_out.empty()) {
    // The reference judge scores responses on their own, so it is trained on
    // held-out responses only. Its vocabulary includes the generator's so
    // every generated token has non-zero probability.
    std::vector<std::vector<std::string>> ref_seqs;
    std::size_t ref_tokens = 0;
    for (const auto& p : heldout) {
      if (p.response.empty()) continue;
      ref_seqs.push_back(p.response);
      ref_tokens += p.response.size();
    }
    if (ref_seqs.empty()) throw UsageError("held-out split has no responses");
    TrainOptions ref_opts;
    for (const auto& t : model.vocabulary().tokens())
      if (!Vocabulary::is_reserved(*model.vocabulary().find(t))) ref_opts.extra_vocabulary.push_back(t);
    const NGramModel ref = train(ref_seqs, a.order, a.delta, ref_opts);
    auto f = detail::open_output(a.ref_out);
    ref.save(f);
    out << "reference vocabulary: " << ref.vocabulary().size() << "\n";
    out << "reference tokens: " << ref_tokens << "\n";
  }
  return kExitOk;
}

struct GenerateArgs {
  std::string model;
  std::string lexicon;
  std::string lemma_exceptions;
  std::string trace;
  detail::DecodeFlags decode;
  std::vector<std::string> source;
};

inline int cmd_generate(const GenerateArgs& a, std::ostream& out) {
  const DecoderConfig config = a.decode.config(DecodeMode::free_running);
  const NGramModel model = detail::load_model(a.model);
  const AffectiveLexicon lexicon = detail::load_lexicon_file(a.lexicon);
  const LemmaRules rules = detail::load_rules_file(a.lemma_exceptions);
  const AffectDecoder decoder(model, lexicon, rules);
  const auto source = tokenize(util::join(a.source, " "));
  const auto result = decoder.generate_response(source, config);
  out << detokenize(result.tokens) << "\n";
  if (!a.trace.empty()) {
    auto f = detail::open_output(a.trace);
    write_trace_jsonl(f, "generate", result.traces);
  }
  return kExitOk;
}

struct MapArgs {
  std::string model;
  std::string lexicon;
  std::string lemma_exceptions;
  std::string corpus;
  std::string out;
  std::string trace;
  std::size_t workers = 1;
  detail::DecodeFlags decode;
};

struct MapSummary {
  std::vector<MappedPair> rows;
  std::vector<std::vector<StepTrace>> traces;
  std::size_t changed = 0;
  double mean_ngram_diff = 0.0;
};

/// Teacher-forced mapping of every response in `pairs`. Work is sharded by
/// index across `workers` threads; output order follows the input.
template <LanguageModel Model>
MapSummary map_corpus(const AffectDecoder<Model>& decoder, std::span<const DialogPair> pairs, const DecoderConfig& config,
                      std::size_t workers, bool keep_traces) {
  MapSummary s;
  s.rows.resize(pairs.size());
  if (keep_traces) s.traces.resize(pairs.size());
  const std::string label = config.target.label();
  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < pairs.size(); i += stride) {
      const auto& p = pairs[i];
      MappedPair row{p.id, label, p.response, p.response};
      if (!p.response.empty()) {
        auto r = decoder.map_utterance(p.source, p.response, config);
        row.mapped = std::move(r.tokens);
        if (keep_traces) s.traces[i] = std::move(r.traces);
      }
      s.rows[i] = std::move(row);
    }
  };
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(1, pairs.size()));
  if (workers == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      threads.emplace_back([&, w] {
        try {
          work(w, workers);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : threads) t.join();
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  std::size_t diff_total = 0;
  for (const auto& r : s.rows) {
    if (r.changed()) ++s.changed;
    diff_total += ngram_diff(r.original, r.mapped, 1);
  }
  s.mean_ngram_diff = s.rows.empty() ? 0.0 : static_cast<double>(diff_total) / static_cast<double>(s.rows.size());
  return s;
}

inline int cmd_map(const MapArgs& a, std::ostream& out) {
  const DecoderConfig config = a.decode.config(DecodeMode::teacher_forced);
  if (a.workers < 1) throw UsageError("--workers must be >= 1");
  const NGramModel model = detail::load_model(a.model);
  const AffectiveLexicon lexicon = detail::load_lexicon_file(a.lexicon);
  const LemmaRules rules = detail::load_rules_file(a.lemma_exceptions);
  const auto pairs = detail::load_pairs_file(a.corpus);
  const AffectDecoder decoder(model, lexicon, rules);
  const auto s = map_corpus(decoder, std::span<const DialogPair>(pairs), config, a.workers, !a.trace.empty());
  {
    auto f = detail::open_output(a.out);
    write_mapped_tsv(f, s.rows);
  }
  if (!a.trace.empty()) {
    auto f = detail::open_output(a.trace);
    for (std::size_t i = 0; i < s.rows.size(); ++i) write_trace_jsonl(f, s.rows[i].id, s.traces[i]);
  }
  out << "utterances: " << s.rows.size() << "\n";
  out << "changed: " << s.changed << "\n";
  out << "mean unigram diff: " << util::format_double(s.mean_ngram_diff) << "\n";
  return kExitOk;
}

struct EvalArgs {
  std::string ref_model;
  std::string lexicon;
  std::string lemma_exceptions;
  std::vector<std::string> mapped;
  std::string out;
};

/// Metric row for one corpus of responses.
inline nlohmann::json metric_row(const NGramModel& ref, const SentimentLexicon& sentiment, std::span<const TokenSeq> candidates,
                                 std::span<const TokenSeq> originals) {
  std::vector<TokenSeq> nonempty;
  for (const auto& c : candidates)
    if (!c.empty()) nonempty.push_back(c);
  nlohmann::json row = {{"utterance_count", candidates.size()},
                        {"mean_compound", mean_valence(candidates, sentiment)},
                        {"bleu", bleu(candidates, originals)}};
  row["perplexity"] = nonempty.empty() ? nlohmann::json(nullptr) : nlohmann::json(perplexity(ref, std::span<const TokenSeq>(nonempty)));
  return row;
}

inline int cmd_eval(const EvalArgs& a, std::ostream& out) {
  if (a.mapped.empty()) throw UsageError("at least one --mapped file is required");
  const NGramModel ref = detail::load_model(a.ref_model);
  const AffectiveLexicon lexicon = detail::load_lexicon_file(a.lexicon);
  const SentimentLexicon sentiment(lexicon, detail::load_rules_file(a.lemma_exceptions));

  nlohmann::json report = {{"runs", nlohmann::json::array()}};
  std::optional<std::vector<TokenSeq>> first_originals;
  for (const auto& file : a.mapped) {
    const auto rows = detail::load_mapped_file(file);
    if (rows.empty()) throw UsageError("mapped corpus '" + file + "' is empty");
    std::map<std::string, std::pair<std::vector<TokenSeq>, std::vector<TokenSeq>>> by_target;
    for (const auto& r : rows) {
      auto& slot = by_target[r.target];
      slot.first.push_back(r.mapped);
      slot.second.push_back(r.original);
    }
    for (const auto& [target, seqs] : by_target) {
      auto row = metric_row(ref, sentiment, seqs.first, seqs.second);
      row["file"] = file;
      row["target"] = target;
      std::size_t changed = 0;
      for (std::size_t i = 0; i < seqs.first.size(); ++i) changed += seqs.first[i] != seqs.second[i];
      row["changed"] = changed;
      report["runs"].push_back(row);
      if (!first_originals) first_originals = seqs.second;
    }
  }
  report["original"] = metric_row(ref, sentiment, *first_originals, *first_originals);

  const auto print = [&](const std::string& name, const nlohmann::json& row) {
    out << std::left << std::setw(28) << name << " compound=" << util::format_double(row["mean_compound"].get<double>())
        << " bleu=" << util::format_double(row["bleu"].get<double>());
    if (!row["perplexity"].is_null()) out << " ppl=" << util::format_double(row["perplexity"].get<double>());
    out << "\n";
  };
  print("original", report["original"]);
  for (const auto& r : report["runs"]) print(r["file"].get<std::string>() + " [" + r["target"].get<std::string>() + "]", r);

  if (!a.out.empty()) {
    auto f = detail::open_output(a.out);
    f << report.dump(2) << "\n";
  }
  return kExitOk;
}

struct SelectArgs {
  std::vector<std::string> mapped;
  std::string corpus;
  std::string golden;
  std::string out;
  std::size_t n = 60;
  std::size_t ngram = 1;
  std::uint64_t seed = 0;
};

/// Picks the n most-changed pairs per target, shuffles each target's list,
/// interleaves targets round-robin and appends golden items.
inline std::vector<RatingItem> select_items(std::span<const MappedPair> mapped, const std::map<std::string, std::string>& sources,
                                            std::span<const RatingItem> golden, std::size_t n, std::size_t ngram,
                                            std::uint64_t seed) {
  std::map<std::string, std::vector<MappedPair>> by_target;
  for (const auto& m : mapped) by_target[m.target].push_back(m);
  std::vector<std::vector<RatingItem>> lists;
  std::uint64_t salt = 0;
  for (const auto& [target, rows] : by_target) {
    std::vector<RatingItem> list;
    for (const auto& m : select_most_changed(rows, n, ngram)) {
      RatingItem it;
      it.id = target + ":" + m.id;
      it.pair_id = m.id;
      it.target = target;
      if (const auto s = sources.find(m.id); s != sources.end()) it.preceding = s->second;
      it.original = detokenize(m.original);
      it.mapped = detokenize(m.mapped);
      list.push_back(std::move(it));
    }
    seeded_shuffle(list, seed + salt++);
    lists.push_back(std::move(list));
  }
  std::vector<RatingItem> out;
  for (std::size_t i = 0;; ++i) {
    bool any = false;
    for (const auto& l : lists) {
      if (i < l.size()) {
        out.push_back(l[i]);
        any = true;
      }
    }
    if (!any) break;
  }
  out.insert(out.end(), golden.begin(), golden.end());
  return out;
}

inline int cmd_select(const SelectArgs& a, std::ostream& out) {
  if (a.mapped.empty()) throw UsageError("at least one --mapped file is required");
  if (a.n < 1) throw UsageError("--n must be >= 1");
  if (a.ngram < 1) throw UsageError("--ngram must be >= 1");
  std::vector<MappedPair> mapped;
  for (const auto& f : a.mapped) {
    auto rows = detail::load_mapped_file(f);
    mapped.insert(mapped.end(), rows.begin(), rows.end());
  }
  std::map<std::string, std::string> sources;
  if (!a.corpus.empty())
    for (const auto& p : detail::load_pairs_file(a.corpus)) sources[p.id] = p.raw_source;
  std::vector<RatingItem> golden;
  if (!a.golden.empty()) {
    auto in = detail::open_input(a.golden, "golden items");
    golden = load_golden_tsv(in);
  }
  const auto items = select_items(mapped, sources, golden, a.n, a.ngram, a.seed);
  auto f = detail::open_output(a.out);
  for (const auto& it : items) f << to_json(it).dump() << "\n";
  out << "items: " << items.size() - golden.size() << "\n";
  out << "golden: " << golden.size() << "\n";
  return kExitOk;
}

struct ServeArgs {
  std::string model;
  std::string lexicon;
  std::string lemma_exceptions;
  std::string items;
  std::string data_dir;
  std::string static_dir;
  std::string host = "127.0.0.1";
  std::string cors_origin = "*";
  int port = 8080;
  int golden_threshold = 10;
  std::size_t items_per_rater = 0;
  std::uint64_t seed = 0;
  detail::DecodeFlags decode;
};

/// Loads everything `serve` needs without binding a socket.
inline std::unique_ptr<AffectService> make_service(const ServeArgs& a) {
  ServiceOptions opts;
  opts.defaults = a.decode.config(DecodeMode::free_running);
  opts.cors_origin = a.cors_origin;
  if (!a.data_dir.empty()) {
    opts.data_dir = detail::resolve(a.data_dir);
  } else if (const char* root = std::getenv("AFFECTON_DATA_DIR"); root != nullptr && *root != '\0') {
    opts.data_dir = root;
  }
  if (!a.static_dir.empty()) opts.static_dir = detail::resolve(a.static_dir);

  std::shared_ptr<const ModelBundle> bundle;
  if (!a.model.empty() || !a.lexicon.empty()) {
    if (a.model.empty() || a.lexicon.empty()) throw UsageError("--model and --lexicon must be given together");
    auto b = std::make_shared<ModelBundle>();
    b->model = detail::load_model(a.model);
    b->lexicon = detail::load_lexicon_file(a.lexicon);
    b->rules = detail::load_rules_file(a.lemma_exceptions);
    bundle = std::move(b);
  }
  std::shared_ptr<RatingBook> ratings;
  if (!a.items.empty()) {
    auto in = detail::open_input(a.items, "rating items");
    RatingOptions ro;
    ro.seed = a.seed;
    ro.items_per_rater = a.items_per_rater;
    ro.golden_threshold = a.golden_threshold;
    ratings = std::make_shared<RatingBook>(load_rating_items(in), ro, opts.data_dir / "ratings.jsonl");
  }
  return std::make_unique<AffectService>(std::move(opts), std::move(bundle), std::move(ratings));
}

inline int cmd_serve(const ServeArgs& a, std::ostream& out) {
  auto service = make_service(a);
  httplib::Server svr;
  service->register_routes(svr);
  if (!svr.bind_to_port(a.host, a.port)) throw Error("cannot bind " + a.host + ":" + std::to_string(a.port));
  out << "listening on http://" << a.host << ":" << a.port << "\n" << std::flush;
  svr.listen_after_bind();
  return kExitOk;
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

inline int run(std::vector<std::string> args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Affect-steered dialog generation toolkit", "affecton"};
  app.require_subcommand(1);
  std::string lemma_exceptions;
  app.add_option("--lemma-exceptions", lemma_exceptions, "Extra token<TAB>lemma exceptions for the lemmatizer");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train a generator model (and optionally a reference model)");
  train_cmd->add_option("--corpus", train_args.corpus, "Dialog pairs TSV, or movie_lines.txt with --conversations")->required();
  train_cmd->add_option("--conversations", train_args.conversations, "movie_conversations.txt for the movie-corpus layout");
  train_cmd->add_option("--out", train_args.out, "Generator model output path")->required();
  train_cmd->add_option("--ref-out,--ref-model", train_args.ref_out, "Reference model output path (trained on held-out responses)");
  train_cmd->add_option("--order", train_args.order, "N-gram order")->capture_default_str();
  train_cmd->add_option("--delta", train_args.delta, "Add-delta smoothing constant")->capture_default_str();
  train_cmd->add_option("--min-count", train_args.min_count, "Tokens rarer than this become <unk>")->capture_default_str();
  train_cmd->add_option("--heldout-fraction", train_args.heldout_fraction, "Fraction of pairs held out")->capture_default_str();
  train_cmd->add_option("--seed", train_args.seed, "Split seed")->capture_default_str();

  GenerateArgs gen_args;
  auto* gen_cmd = app.add_subcommand("generate", "Generate a steered response to a source utterance");
  gen_cmd->add_option("--model", gen_args.model)->required();
  gen_cmd->add_option("--lexicon", gen_args.lexicon)->required();
  gen_cmd->add_option("--trace", gen_args.trace, "Write per-step JSON-lines traces here");
  gen_args.decode.add_to(*gen_cmd);
  gen_cmd->add_option("source", gen_args.source, "Source utterance")->required();

  MapArgs map_args;
  auto* map_cmd = app.add_subcommand("map", "Rewrite every corpus response toward a target (teacher-forced)");
  map_cmd->add_option("--model", map_args.model)->required();
  map_cmd->add_option("--lexicon", map_args.lexicon)->required();
  map_cmd->add_option("--corpus", map_args.corpus, "Dialog pairs TSV")->required();
  map_cmd->add_option("--out", map_args.out, "Mapped corpus TSV")->required();
  map_cmd->add_option("--trace", map_args.trace, "Write per-step JSON-lines traces here");
  map_cmd->add_option("--workers", map_args.workers, "Decoding threads")->capture_default_str();
  map_args.decode.add_to(*map_cmd);

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Score mapped corpora: compound valence, perplexity, BLEU");
  eval_cmd->add_option("--ref-model", eval_args.ref_model)->required();
  eval_cmd->add_option("--lexicon", eval_args.lexicon)->required();
  eval_cmd->add_option("--mapped", eval_args.mapped, "Mapped corpus TSV (repeatable)")->required();
  eval_cmd->add_option("--out", eval_args.out, "Report JSON");

  SelectArgs select_args;
  auto* select_cmd = app.add_subcommand("select", "Build a rating-item file from mapped corpora");
  select_cmd->add_option("--mapped", select_args.mapped, "Mapped corpus TSV (repeatable)")->required();
  select_cmd->add_option("--corpus", select_args.corpus, "Dialog pairs TSV supplying preceding utterances");
  select_cmd->add_option("--golden", select_args.golden, "Golden items TSV (id, polarity, utterance)");
  select_cmd->add_option("--out", select_args.out, "Rating items JSON-lines")->required();
  select_cmd->add_option("--n", select_args.n, "Items per target")->capture_default_str();
  select_cmd->add_option("--ngram", select_args.ngram, "N-gram order for the change measure")->capture_default_str();
  select_cmd->add_option("--seed", select_args.seed)->capture_default_str();

  ServeArgs serve_args;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  serve_cmd->add_option("--model", serve_args.model);
  serve_cmd->add_option("--lexicon", serve_args.lexicon);
  serve_cmd->add_option("--items", serve_args.items, "Rating items JSON-lines");
  serve_cmd->add_option("--data-dir", serve_args.data_dir, "Where ratings and chat transcripts are stored");
  serve_cmd->add_option("--static-dir", serve_args.static_dir, "Web UI bundle served at /");
  serve_cmd->add_option("--host", serve_args.host)->capture_default_str();
  serve_cmd->add_option("--port", serve_args.port)->capture_default_str();
  serve_cmd->add_option("--cors-origin", serve_args.cors_origin)->capture_default_str();
  serve_cmd->add_option("--golden-threshold", serve_args.golden_threshold)->capture_default_str();
  serve_cmd->add_option("--items-per-rater", serve_args.items_per_rater, "0 rates every item")->capture_default_str();
  serve_cmd->add_option("--seed", serve_args.seed)->capture_default_str();
  serve_args.decode.add_to(*serve_cmd);

  // The vector overload of CLI::App::parse takes arguments in reverse order.
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    if (const auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front()) {
      err << sub->help();
    }
    return kExitUsage;
  }

  try {
    if (*train_cmd) return cmd_train(train_args, out);
    gen_args.lemma_exceptions = map_args.lemma_exceptions = eval_args.lemma_exceptions = serve_args.lemma_exceptions =
        lemma_exceptions;
    if (*gen_cmd) return cmd_generate(gen_args, out);
    if (*map_cmd) return cmd_map(map_args, out);
    if (*eval_cmd) return cmd_eval(eval_args, out);
    if (*select_cmd) return cmd_select(select_args, out);
    if (*serve_cmd) return cmd_serve(serve_args, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

inline int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(std::move(args));
}

}  // namespace affecton::cli
