#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "affecton/common.hpp"
#include "affecton/language_model.hpp"

namespace affecton {

struct TrainOptions {
  /// Tokens seen fewer times than this map to UNK. 1 keeps every token.
  std::size_t min_count = 1;
  /// Weight applied per backoff step. See NGramModel::next_distribution.
  double backoff = 0.4;
  /// Tokens added to the vocabulary even if absent from the corpus.
  std::vector<std::string> extra_vocabulary;
};

/// Count-based n-gram model with add-delta smoothing at the highest seen order.
///
/// Contexts never seen in training back off to the next shorter context, down
/// to the smoothed unigram. Every returned distribution covers the full
/// vocabulary and sums to one.
class NGramModel {
public:
  static constexpr int kMaxOrder = 5;
  static constexpr std::string_view kMagic = "affecton-ngram";
  static constexpr int kFormatVersion = 1;

  struct ContextCounts {
    std::uint64_t total = 0;
    std::map<TokenId, std::uint64_t> next;
  };
  /// Indexed by context; each key has exactly order-1 ids for its table.
  using CountTable = std::map<std::vector<TokenId>, ContextCounts>;

  NGramModel() = default;

  int order() const noexcept { return order_; }
  double delta() const noexcept { return delta_; }
  double backoff() const noexcept { return backoff_; }
  std::size_t min_count() const noexcept { return min_count_; }
  const Vocabulary& vocabulary() const noexcept { return vocab_; }
  /// Table for n-grams of length `n` (1-based).
  const CountTable& table(int n) const { return tables_.at(static_cast<std::size_t>(n - 1)); }

  TokenDistribution next_distribution(std::span<const TokenId> context) const {
    for (TokenId id : context) {
      if (!vocab_.contains(id)) throw Error("context token id " + std::to_string(id) + " not in vocabulary");
    }
    const auto history = padded_history(context);
    // Longest seen context wins. Scaling the lower order by `backoff_` per step
    // and renormalizing leaves it unchanged, so the factor drops out here.
    for (int n = order_; n >= 2; --n) {
      const std::vector<TokenId> key(history.end() - (n - 1), history.end());
      const auto& tbl = tables_[static_cast<std::size_t>(n - 1)];
      if (const auto it = tbl.find(key); it != tbl.end() && it->second.total > 0) return add_delta(it->second);
    }
    return add_delta(unigram_);
  }

  void save(std::ostream& out) const {
    out << kMagic << '\n';
    out << "version " << kFormatVersion << '\n';
    out << "order " << order_ << '\n';
    out << "delta " << util::format_double(delta_) << '\n';
    out << "backoff " << util::format_double(backoff_) << '\n';
    out << "min_count " << min_count_ << '\n';
    out << "vocab " << vocab_.size() << '\n';
    for (const auto& t : vocab_.tokens()) out << t << '\n';
    std::size_t lines = 0;
    for (const auto& tbl : tables_)
      for (const auto& [ctx, counts] : tbl) lines += counts.next.size();
    out << "ngrams " << lines << '\n';
    for (std::size_t n = 0; n < tables_.size(); ++n) {
      for (const auto& [ctx, counts] : tables_[n]) {
        for (const auto& [word, c] : counts.next) {
          out << (n + 1);
          for (TokenId id : ctx) out << ' ' << id;
          out << ' ' << word << ' ' << c << '\n';
        }
      }
    }
  }

  static NGramModel load(std::istream& in) {
    NGramModel m;
    std::string line;
    std::size_t line_no = 0;
    auto next_line = [&]() -> std::string& {
      if (!util::read_line(in, line)) throw ParseError("unexpected end of model file", line_no + 1);
      ++line_no;
      return line;
    };
    auto keyed = [&](std::string_view key) -> std::string {
      const auto& l = next_line();
      const auto parts = util::split_whitespace(l);
      if (parts.size() != 2 || parts[0] != key) throw ParseError("expected '" + std::string(key) + " <value>'", line_no);
      return parts[1];
    };
    auto as_double = [&](const std::string& s) {
      const auto v = util::parse_double(s);
      if (!v) throw ParseError("bad number '" + s + "'", line_no);
      return *v;
    };
    auto as_size = [&](const std::string& s) {
      const auto v = util::parse_int<std::uint64_t>(s);
      if (!v) throw ParseError("bad integer '" + s + "'", line_no);
      return *v;
    };

    if (next_line() != kMagic) throw ParseError("not an affecton n-gram model", line_no);
    if (as_size(keyed("version")) != static_cast<std::uint64_t>(kFormatVersion)) {
      throw ParseError("unsupported model format version", line_no);
    }
    m.order_ = static_cast<int>(as_size(keyed("order")));
    if (m.order_ < 1 || m.order_ > kMaxOrder) throw ParseError("order out of range", line_no);
    m.delta_ = as_double(keyed("delta"));
    m.backoff_ = as_double(keyed("backoff"));
    m.min_count_ = static_cast<std::size_t>(as_size(keyed("min_count")));
    if (!(m.delta_ > 0.0)) throw ParseError("delta must be positive", line_no);

    const auto vocab_size = as_size(keyed("vocab"));
    if (vocab_size < Vocabulary::kReservedCount) throw ParseError("vocabulary too small", line_no);
    for (std::uint64_t i = 0; i < vocab_size; ++i) {
      const auto& tok = next_line();
      if (i < Vocabulary::kReservedCount) {
        if (tok != m.vocab_.token(static_cast<TokenId>(i))) throw ParseError("reserved token mismatch", line_no);
        continue;
      }
      if (m.vocab_.find(tok)) throw ParseError("duplicate vocabulary token '" + tok + "'", line_no);
      m.vocab_.add(tok);
    }

    m.tables_.assign(static_cast<std::size_t>(m.order_), {});
    const auto ngram_lines = as_size(keyed("ngrams"));
    for (std::uint64_t i = 0; i < ngram_lines; ++i) {
      const auto parts = util::split_whitespace(next_line());
      if (parts.empty()) throw ParseError("empty n-gram line", line_no);
      const auto n = as_size(parts[0]);
      if (n < 1 || n > static_cast<std::uint64_t>(m.order_) || parts.size() != n + 2) {
        throw ParseError("malformed n-gram line", line_no);
      }
      std::vector<TokenId> ctx;
      for (std::uint64_t j = 0; j + 1 < n; ++j) ctx.push_back(m.checked_id(as_size(parts[1 + j]), line_no));
      const TokenId word = m.checked_id(as_size(parts[n]), line_no);
      const auto c = as_size(parts[n + 1]);
      auto& counts = m.tables_[n - 1][ctx];
      counts.next[word] += c;
      counts.total += c;
    }
    m.unigram_ = m.tables_[0][{}];
    return m;
  }

  friend NGramModel train(const std::vector<std::vector<std::string>>& corpus, int order, double delta,
                          const TrainOptions& options);

private:
  std::vector<TokenId> padded_history(std::span<const TokenId> context) const {
    const auto need = static_cast<std::size_t>(order_ - 1);
    std::vector<TokenId> history(need, Vocabulary::kBos);
    const std::size_t take = std::min(need, context.size());
    std::copy(context.end() - static_cast<std::ptrdiff_t>(take), context.end(),
              history.end() - static_cast<std::ptrdiff_t>(take));
    return history;
  }

  TokenDistribution add_delta(const ContextCounts& counts) const {
    const double v = static_cast<double>(vocab_.size());
    const double denom = static_cast<double>(counts.total) + delta_ * v;
    TokenDistribution d;
    d.probs.assign(vocab_.size(), delta_ / denom);
    for (const auto& [word, c] : counts.next) d.probs[static_cast<std::size_t>(word)] = (static_cast<double>(c) + delta_) / denom;
    return d;
  }

  TokenId checked_id(std::uint64_t raw, std::size_t line_no) const {
    if (raw >= vocab_.size()) throw ParseError("token id out of range", line_no);
    return static_cast<TokenId>(raw);
  }

  int order_ = 1;
  double delta_ = 1.0;
  double backoff_ = 0.4;
  std::size_t min_count_ = 1;
  Vocabulary vocab_;
  std::vector<CountTable> tables_{1};
  ContextCounts unigram_;
};

/// Trains on already-tokenized sequences. Each sequence is padded with
/// order-1 BOS tokens and terminated with EOS. The literal `<sep>` token maps
/// to the reserved separator id.
inline NGramModel train(const std::vector<std::vector<std::string>>& corpus, int order, double delta,
                        const TrainOptions& options = {}) {
  if (corpus.empty()) throw ConfigError("cannot train on an empty corpus");
  if (order < 1 || order > NGramModel::kMaxOrder) throw ConfigError("order must be in [1, 5]");
  if (!(delta > 0.0) || !std::isfinite(delta)) throw ConfigError("delta must be a positive finite number");
  if (!(options.backoff > 0.0) || options.backoff > 1.0) throw ConfigError("backoff factor must be in (0, 1]");

  std::map<std::string, std::size_t> freq;
  for (const auto& seq : corpus)
    for (const auto& t : seq) ++freq[t];

  NGramModel m;
  m.order_ = order;
  m.delta_ = delta;
  m.backoff_ = options.backoff;
  m.min_count_ = std::max<std::size_t>(1, options.min_count);

  // Sorted insertion keeps ids independent of corpus order.
  std::set<std::string> kept(options.extra_vocabulary.begin(), options.extra_vocabulary.end());
  for (const auto& [tok, c] : freq)
    if (c >= m.min_count_) kept.insert(tok);
  for (const auto& tok : kept) m.vocab_.add(tok);

  m.tables_.assign(static_cast<std::size_t>(order), {});
  const auto pad = static_cast<std::size_t>(order - 1);
  std::vector<TokenId> padded;
  for (const auto& seq : corpus) {
    padded.assign(pad, Vocabulary::kBos);
    for (const auto& t : seq) padded.push_back(m.vocab_.id_or_unk(t));
    padded.push_back(Vocabulary::kEos);
    for (std::size_t i = pad; i < padded.size(); ++i) {
      for (std::size_t n = 1; n <= static_cast<std::size_t>(order); ++n) {
        std::vector<TokenId> ctx(padded.begin() + static_cast<std::ptrdiff_t>(i - (n - 1)),
                                 padded.begin() + static_cast<std::ptrdiff_t>(i));
        auto& counts = m.tables_[n - 1][ctx];
        ++counts.next[padded[i]];
        ++counts.total;
      }
    }
  }
  m.unigram_ = m.tables_[0][{}];
  return m;
}

/// Natural-log probability of `tokens` followed by EOS, starting from an
/// all-BOS context.
template <LanguageModel Model>
double sequence_logprob(const Model& model, std::span<const std::string> tokens) {
  if (tokens.empty()) throw ConfigError("sequence_logprob needs a non-empty sequence");
  const Vocabulary& vocab = model.vocabulary();
  std::vector<TokenId> context;
  context.reserve(tokens.size() + 1);
  double total = 0.0;
  auto score = [&](TokenId id) {
    const TokenDistribution d = model.next_distribution(context);
    total += std::log(d[id]);
    context.push_back(id);
  };
  for (const auto& t : tokens) score(vocab.id_or_unk(t));
  score(Vocabulary::kEos);
  return total;
}

}  // namespace affecton
