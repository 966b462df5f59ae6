#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "affecton/common.hpp"
#include "affecton/metrics.hpp"

namespace affecton {

// ---------------------------------------------------------------------------
// Tokenization
// ---------------------------------------------------------------------------

namespace detail {

inline bool is_split_punct(char c) {
  switch (c) {
    case '.': case ',': case '!': case '?': case '\'': case '"': case ';': case ':': return true;
    default: return false;
  }
}

inline bool is_clitic(std::string_view s) { return s == "s" || s == "re" || s == "m" || s == "ll" || s == "ve"; }

inline void tokenize_chunk(std::string_view chunk, std::vector<std::string>& out) {
  std::string current;
  auto flush = [&] {
    if (!current.empty()) out.push_back(std::move(current));
    current.clear();
  };
  std::size_t i = 0;
  while (i < chunk.size()) {
    const char c = chunk[i];
    if (!is_split_punct(c)) {
      current.push_back(c);
      ++i;
      continue;
    }
    if (c == '\'') {
      std::size_t j = i + 1;
      while (j < chunk.size() && !is_split_punct(chunk[j])) ++j;
      const std::string_view tail = chunk.substr(i + 1, j - i - 1);
      if (tail == "t" && !current.empty() && current.back() == 'n') {
        current.pop_back();
        flush();
        out.emplace_back("n't");
        i = j;
        continue;
      }
      if (is_clitic(tail)) {
        flush();
        out.push_back("'" + std::string(tail));
        i = j;
        continue;
      }
    }
    flush();
    out.emplace_back(1, c);
    ++i;
  }
  flush();
}

}  // namespace detail

/// Lowercases, splits on whitespace, separates . , ! ? ' " ; : into their own
/// tokens, and splits the clitics n't 's 're 'm 'll 've off their host word.
inline TokenSeq tokenize(std::string_view text) {
  TokenSeq out;
  for (const auto& chunk : util::split_whitespace(util::to_lower(text))) detail::tokenize_chunk(chunk, out);
  return out;
}

/// Best-effort inverse of tokenize: punctuation and clitics attach to the left.
inline std::string detokenize(std::span<const std::string> tokens) {
  std::string out;
  for (const auto& t : tokens) {
    const bool attach = !out.empty() && (t == "." || t == "," || t == "!" || t == "?" || t == ";" || t == ":" ||
                                         t == "n't" || (t.size() > 1 && t.front() == '\'' && detail::is_clitic(t.substr(1))));
    if (!out.empty() && !attach) out.push_back(' ');
    out += t;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dialog pairs
// ---------------------------------------------------------------------------

struct DialogPair {
  std::string id;
  TokenSeq source;
  TokenSeq response;
  std::string raw_source;
  std::string raw_response;

  friend bool operator==(const DialogPair&, const DialogPair&) = default;
};

inline DialogPair make_dialog_pair(std::string id, std::string raw_source, std::string raw_response) {
  DialogPair p;
  p.id = std::move(id);
  p.source = tokenize(raw_source);
  p.response = tokenize(raw_response);
  p.raw_source = std::move(raw_source);
  p.raw_response = std::move(raw_response);
  return p;
}

/// Reads `id<TAB>source<TAB>response` lines. Blank lines are skipped.
inline std::vector<DialogPair> load_pairs_tsv(std::istream& in) {
  std::vector<DialogPair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (util::read_line(in, line)) {
    ++line_no;
    if (util::trim(line).empty()) continue;
    auto fields = util::split(line, '\t');
    if (fields.size() != 3) throw ParseError("expected id<TAB>source<TAB>response", line_no);
    if (util::trim(fields[0]).empty()) throw ParseError("empty pair id", line_no);
    pairs.push_back(make_dialog_pair(std::string(util::trim(fields[0])), std::move(fields[1]), std::move(fields[2])));
  }
  return pairs;
}

inline void write_pairs_tsv(std::ostream& out, std::span<const DialogPair> pairs) {
  for (const auto& p : pairs) out << p.id << '\t' << p.raw_source << '\t' << p.raw_response << '\n';
}

struct CornellLoadResult {
  std::vector<DialogPair> pairs;
  /// Adjacent-utterance pairs dropped because a line id was missing.
  std::size_t missing_line_warnings = 0;
};

/// Reads the Cornell Movie-Dialogs layout: movie_lines rows
/// `lineID +++$+++ userID +++$+++ movieID +++$+++ name +++$+++ text` and
/// movie_conversations rows `u1 +++$+++ u2 +++$+++ movieID +++$+++ ['L1', 'L2', ...]`.
/// Adjacent utterances of each conversation become (source, response) pairs.
inline CornellLoadResult load_cornell(std::istream& lines_in, std::istream& conversations_in) {
  static constexpr std::string_view kDelim = " +++$+++ ";
  std::unordered_map<std::string, std::string> text_by_id;
  std::string line;
  std::size_t line_no = 0;
  while (util::read_line(lines_in, line)) {
    ++line_no;
    if (util::trim(line).empty()) continue;
    auto fields = util::split_on(line, kDelim);
    // An empty utterance leaves the trailing delimiter without its space.
    if (fields.size() == 4 && line.ends_with(" +++$+++")) {
      fields.back().resize(fields.back().size() - 8);
      fields.emplace_back();
    }
    if (fields.size() != 5) throw ParseError("movie_lines row needs 5 ' +++$+++ '-separated fields", line_no);
    text_by_id[std::string(util::trim(fields[0]))] = fields[4];
  }

  CornellLoadResult out;
  line_no = 0;
  while (util::read_line(conversations_in, line)) {
    ++line_no;
    if (util::trim(line).empty()) continue;
    const auto fields = util::split_on(line, kDelim);
    if (fields.size() != 4) throw ParseError("movie_conversations row needs 4 ' +++$+++ '-separated fields", line_no);
    const std::string_view list = util::trim(fields[3]);
    if (list.size() < 2 || list.front() != '[' || list.back() != ']') {
      throw ParseError("conversation utterance list must look like ['L1', 'L2']", line_no);
    }
    std::vector<std::string> ids;
    for (const auto& raw : util::split(list.substr(1, list.size() - 2), ',')) {
      std::string_view id = util::trim(raw);
      if (id.size() >= 2 && (id.front() == '\'' || id.front() == '"')) id = id.substr(1, id.size() - 2);
      if (!id.empty()) ids.emplace_back(id);
    }
    for (std::size_t i = 0; i + 1 < ids.size(); ++i) {
      const auto src = text_by_id.find(ids[i]);
      const auto rsp = text_by_id.find(ids[i + 1]);
      if (src == text_by_id.end() || rsp == text_by_id.end()) {
        ++out.missing_line_warnings;
        continue;
      }
      out.pairs.push_back(make_dialog_pair(ids[i] + "_" + ids[i + 1], src->second, rsp->second));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Splitting and shuffling
// ---------------------------------------------------------------------------

/// Fisher-Yates driven directly by mt19937_64 so the permutation is the same
/// on every standard library.
template <class T>
void seeded_shuffle(std::vector<T>& items, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::uint64_t bound = i;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t r;
    do {
      r = rng();
    } while (r >= limit);
    std::swap(items[i - 1], items[static_cast<std::size_t>(r % bound)]);
  }
}

struct Split {
  std::vector<DialogPair> train;
  std::vector<DialogPair> heldout;
};

/// Seeded shuffle, then the first round(fraction * n) pairs (at least one,
/// at most n-1) go to train.
inline Split split(std::vector<DialogPair> pairs, double train_fraction, std::uint64_t seed) {
  if (pairs.size() < 2) throw ConfigError("split needs at least two pairs");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train fraction must be in (0,1)");
  seeded_shuffle(pairs, seed);
  auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(pairs.size())));
  n_train = std::clamp<std::size_t>(n_train, 1, pairs.size() - 1);
  Split s;
  s.train.assign(std::make_move_iterator(pairs.begin()), std::make_move_iterator(pairs.begin() + static_cast<std::ptrdiff_t>(n_train)));
  s.heldout.assign(std::make_move_iterator(pairs.begin() + static_cast<std::ptrdiff_t>(n_train)), std::make_move_iterator(pairs.end()));
  return s;
}

// ---------------------------------------------------------------------------
// Mapped corpora
// ---------------------------------------------------------------------------

/// One response rewritten toward a target. Traces are kept only in memory.
struct MappedPair {
  std::string id;
  std::string target;
  TokenSeq original;
  TokenSeq mapped;

  bool changed() const { return original != mapped; }
  friend bool operator==(const MappedPair& a, const MappedPair& b) {
    return a.id == b.id && a.target == b.target && a.original == b.original && a.mapped == b.mapped;
  }
};

/// `id<TAB>target<TAB>original<TAB>mapped`, tokens joined by single spaces.
inline void write_mapped_tsv(std::ostream& out, std::span<const MappedPair> rows) {
  for (const auto& r : rows) {
    out << r.id << '\t' << r.target << '\t' << util::join(r.original, " ") << '\t' << util::join(r.mapped, " ") << '\n';
  }
}

inline std::vector<MappedPair> load_mapped_tsv(std::istream& in) {
  std::vector<MappedPair> rows;
  std::string line;
  std::size_t line_no = 0;
  while (util::read_line(in, line)) {
    ++line_no;
    if (util::trim(line).empty()) continue;
    const auto fields = util::split(line, '\t');
    if (fields.size() != 4) throw ParseError("expected id<TAB>target<TAB>original<TAB>mapped", line_no);
    rows.push_back({fields[0], fields[1], util::split_whitespace(fields[2]), util::split_whitespace(fields[3])});
  }
  return rows;
}

/// The n pairs whose mapping differs most from the original (by n-gram
/// symmetric difference), ties broken by pair id.
inline std::vector<MappedPair> select_most_changed(std::span<const MappedPair> mapped, std::size_t n, std::size_t ngram_n = 1) {
  if (n < 1) throw ConfigError("select_most_changed: n must be >= 1");
  std::vector<std::pair<std::size_t, const MappedPair*>> scored;
  scored.reserve(mapped.size());
  for (const auto& m : mapped) scored.emplace_back(ngram_diff(m.original, m.mapped, ngram_n), &m);
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second->id < b.second->id;
  });
  std::vector<MappedPair> out;
  for (std::size_t i = 0; i < std::min(n, scored.size()); ++i) out.push_back(*scored[i].second);
  return out;
}

}  // namespace affecton
