#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "affecton/common.hpp"
#include "affecton/language_model.hpp"
#include "affecton/lemmatizer.hpp"
#include "affecton/lexicon.hpp"
#include "affecton/ngram_model.hpp"

namespace affecton {

using TokenSeq = std::vector<std::string>;

// ---------------------------------------------------------------------------
// Perplexity
// ---------------------------------------------------------------------------

/// Corpus-pooled perplexity: exp of the negative mean log-probability over
/// every token, EOS included.
template <LanguageModel Model>
double perplexity(const Model& reference, std::span<const TokenSeq> corpus) {
  if (corpus.empty()) throw ConfigError("perplexity needs a non-empty corpus");
  double logprob = 0.0;
  std::size_t count = 0;
  for (const auto& seq : corpus) {
    if (seq.empty()) throw ConfigError("perplexity: empty sequence in corpus");
    logprob += sequence_logprob(reference, std::span<const std::string>(seq));
    count += seq.size() + 1;
  }
  if (!std::isfinite(logprob)) throw Error("perplexity: zero-probability token under the reference model");
  return std::exp(-logprob / static_cast<double>(count));
}

// ---------------------------------------------------------------------------
// BLEU
// ---------------------------------------------------------------------------

inline constexpr double kBleuEpsilon = 1e-9;

struct BleuDetails {
  double score = 0.0;
  double brevity_penalty = 1.0;
  /// Modified precision per order, index 0 = unigrams. Orders for which the
  /// candidates contain no n-grams at all are reported as NaN and left out of
  /// the geometric mean.
  std::vector<double> precisions;
  std::size_t candidate_length = 0;
  std::size_t reference_length = 0;
};

namespace detail {

inline std::map<std::vector<std::string_view>, std::size_t> ngram_counts(std::span<const std::string> seq, std::size_t n) {
  std::map<std::vector<std::string_view>, std::size_t> out;
  if (n == 0 || seq.size() < n) return out;
  for (std::size_t i = 0; i + n <= seq.size(); ++i) {
    std::vector<std::string_view> g;
    g.reserve(n);
    for (std::size_t j = 0; j < n; ++j) g.emplace_back(seq[i + j]);
    ++out[g];
  }
  return out;
}

}  // namespace detail

/// Corpus-level BLEU with one reference per candidate: clipped n-gram
/// precisions for n = 1..max_n, geometric mean, brevity penalty. A zero
/// clipped count is replaced by epsilon.
inline BleuDetails bleu_details(std::span<const TokenSeq> candidates, std::span<const TokenSeq> references,
                                std::size_t max_n = 4) {
  if (candidates.empty()) throw ConfigError("bleu needs at least one candidate");
  if (candidates.size() != references.size()) throw ConfigError("bleu needs one reference per candidate");
  if (max_n < 1) throw ConfigError("bleu max_n must be >= 1");

  std::vector<double> matches(max_n, 0.0), totals(max_n, 0.0);
  BleuDetails out;
  for (std::size_t s = 0; s < candidates.size(); ++s) {
    out.candidate_length += candidates[s].size();
    out.reference_length += references[s].size();
    for (std::size_t n = 1; n <= max_n; ++n) {
      const auto cand = detail::ngram_counts(candidates[s], n);
      const auto ref = detail::ngram_counts(references[s], n);
      for (const auto& [g, c] : cand) {
        totals[n - 1] += static_cast<double>(c);
        if (const auto it = ref.find(g); it != ref.end()) matches[n - 1] += static_cast<double>(std::min(c, it->second));
      }
    }
  }

  if (totals[0] == 0.0) {
    out.precisions.assign(max_n, std::nan(""));
    out.brevity_penalty = out.reference_length == 0 ? 1.0 : 0.0;
    out.score = out.reference_length == 0 ? 1.0 : 0.0;
    return out;
  }
  double log_sum = 0.0;
  std::size_t used = 0;
  for (std::size_t n = 0; n < max_n; ++n) {
    if (totals[n] == 0.0) {
      out.precisions.push_back(std::nan(""));
      continue;
    }
    const double p = (matches[n] > 0.0 ? matches[n] : kBleuEpsilon) / totals[n];
    out.precisions.push_back(p);
    log_sum += std::log(p);
    ++used;
  }
  const double c = static_cast<double>(out.candidate_length);
  const double r = static_cast<double>(out.reference_length);
  out.brevity_penalty = c < r ? std::exp(1.0 - r / c) : 1.0;
  out.score = out.brevity_penalty * std::exp(log_sum / static_cast<double>(used));
  return out;
}

inline double bleu(std::span<const TokenSeq> candidates, std::span<const TokenSeq> references, std::size_t max_n = 4) {
  return bleu_details(candidates, references, max_n).score;
}

// ---------------------------------------------------------------------------
// Rule-based valence scorer
// ---------------------------------------------------------------------------

enum class SentimentLabel { negative, neutral, positive };

inline std::string_view sentiment_label_name(SentimentLabel l) {
  switch (l) {
    case SentimentLabel::negative: return "negative";
    case SentimentLabel::neutral: return "neutral";
    case SentimentLabel::positive: return "positive";
  }
  return "?";
}

inline constexpr double kSentimentThreshold = 0.05;
inline constexpr double kCompoundAlpha = 15.0;
inline constexpr double kBoosterScale = 1.5;
inline constexpr double kExclamationScale = 1.1;
inline constexpr std::size_t kNegationWindow = 3;
inline constexpr std::size_t kMaxExclamations = 3;

/// Strict thresholds: exactly +/-0.05 is neutral.
inline SentimentLabel label_for_compound(double compound) {
  if (compound > kSentimentThreshold) return SentimentLabel::positive;
  if (compound < -kSentimentThreshold) return SentimentLabel::negative;
  return SentimentLabel::neutral;
}

struct SentimentVerdict {
  double compound = 0.0;
  SentimentLabel label = SentimentLabel::neutral;
};

/// Signed word polarity in [-1,1], derived from a VAD lexicon as 2 * (valence - 0.5).
class SentimentLexicon {
public:
  SentimentLexicon(const AffectiveLexicon& lexicon, LemmaRules rules = default_lemma_rules()) : rules_(std::move(rules)) {
    polarity_.reserve(lexicon.size());
    for (const auto& [lemma, p] : lexicon.entries()) polarity_.emplace(lemma, 2.0 * (p.valence - 0.5));
  }

  /// Polarity of the token itself, else of its lemma, else 0.
  double polarity(std::string_view token) const {
    const std::string lower = util::to_lower(token);
    if (const auto it = polarity_.find(lower); it != polarity_.end()) return it->second;
    if (const auto it = polarity_.find(lemmatize(rules_, lower)); it != polarity_.end()) return it->second;
    return 0.0;
  }

  std::size_t size() const noexcept { return polarity_.size(); }

private:
  std::unordered_map<std::string, double> polarity_;
  LemmaRules rules_;
};

namespace detail {

inline bool is_negation(std::string_view t) { return t == "not" || t == "n't" || t == "never" || t == "no"; }
inline bool is_booster(std::string_view t) { return t == "very" || t == "really" || t == "extremely"; }

}  // namespace detail

/// Lexicon polarity summed over tokens with negation flips (3-token window),
/// boosters (x1.5 on the next token), and trailing exclamation marks (x1.1
/// each, at most 3), squashed to s / sqrt(s^2 + 15).
inline SentimentVerdict valence_score(std::span<const std::string> tokens, const SentimentLexicon& lexicon) {
  double sum = 0.0;
  std::size_t negation_left = 0;
  bool boost_next = false;
  for (const auto& raw : tokens) {
    const std::string t = util::to_lower(raw);
    const bool negated = negation_left > 0;
    if (negation_left > 0) --negation_left;
    if (detail::is_negation(t)) {
      negation_left = kNegationWindow;
      boost_next = false;
      continue;
    }
    if (detail::is_booster(t)) {
      boost_next = true;
      continue;
    }
    double pol = lexicon.polarity(t);
    if (boost_next) pol *= kBoosterScale;
    if (negated) pol = -pol;
    boost_next = false;
    sum += pol;
  }
  std::size_t bangs = 0;
  for (auto it = tokens.rbegin(); it != tokens.rend() && *it == "!" && bangs < kMaxExclamations; ++it) ++bangs;
  sum *= std::pow(kExclamationScale, static_cast<double>(bangs));

  SentimentVerdict v;
  v.compound = sum / std::sqrt(sum * sum + kCompoundAlpha);
  v.label = label_for_compound(v.compound);
  return v;
}

inline double mean_valence(std::span<const TokenSeq> corpus, const SentimentLexicon& lexicon) {
  if (corpus.empty()) throw ConfigError("mean_valence needs a non-empty corpus");
  double total = 0.0;
  for (const auto& u : corpus) total += valence_score(u, lexicon).compound;
  return total / static_cast<double>(corpus.size());
}

// ---------------------------------------------------------------------------
// Agreement statistics
// ---------------------------------------------------------------------------

/// Sample Pearson correlation. Throws on fewer than two points or zero variance.
inline double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw ConfigError("pearson: length mismatch");
  if (xs.size() < 2) throw ConfigError("pearson needs at least two points");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw ConfigError("pearson: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

struct KappaResult {
  double kappa = 0.0;
  double observed = 0.0;
  double chance = 0.0;
  /// Either rater used a single label throughout.
  bool degenerate = false;
};

/// Cohen's kappa from observed agreement and marginal chance agreement.
template <class Label>
KappaResult cohen_kappa(std::span<const Label> a, std::span<const Label> b) {
  if (a.size() != b.size()) throw ConfigError("cohen_kappa: length mismatch");
  if (a.empty()) throw ConfigError("cohen_kappa needs at least one pair");
  const double n = static_cast<double>(a.size());
  std::map<Label, double> ma, mb;
  double agree = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma[a[i]] += 1.0;
    mb[b[i]] += 1.0;
    if (a[i] == b[i]) agree += 1.0;
  }
  KappaResult r;
  r.observed = agree / n;
  for (const auto& [label, ca] : ma) {
    if (const auto it = mb.find(label); it != mb.end()) r.chance += (ca / n) * (it->second / n);
  }
  r.degenerate = ma.size() == 1 || mb.size() == 1;
  if (r.chance >= 1.0) {
    if (r.observed < 1.0) throw ConfigError("cohen_kappa: chance agreement is 1 but ratings differ");
    r.kappa = 1.0;
    return r;
  }
  r.kappa = (r.observed - r.chance) / (1.0 - r.chance);
  return r;
}

template <class Label>
KappaResult cohen_kappa(const std::vector<Label>& a, const std::vector<Label>& b) {
  return cohen_kappa(std::span<const Label>(a), std::span<const Label>(b));
}

// ---------------------------------------------------------------------------
// Change measure
// ---------------------------------------------------------------------------

/// Size of the multiset symmetric difference of the n-grams of a and b.
inline std::size_t ngram_diff(std::span<const std::string> a, std::span<const std::string> b, std::size_t n) {
  if (n < 1) throw ConfigError("ngram_diff: n must be >= 1");
  const auto ca = detail::ngram_counts(a, n);
  const auto cb = detail::ngram_counts(b, n);
  std::size_t diff = 0;
  for (const auto& [g, c] : ca) {
    const auto it = cb.find(g);
    const std::size_t other = it == cb.end() ? 0 : it->second;
    diff += c > other ? c - other : other - c;
  }
  for (const auto& [g, c] : cb)
    if (!ca.count(g)) diff += c;
  return diff;
}

}  // namespace affecton
