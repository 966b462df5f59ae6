#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "affecton/common.hpp"
#include "affecton/language_model.hpp"
#include "affecton/lemmatizer.hpp"
#include "affecton/lexicon.hpp"

namespace affecton {

// ---------------------------------------------------------------------------
// Targets and configuration
// ---------------------------------------------------------------------------

enum class Preset { LML, LLL, MLM, HHH };

inline constexpr std::array<Preset, 4> kAllPresets = {Preset::LML, Preset::LLL, Preset::MLM, Preset::HHH};

inline std::string_view preset_name(Preset p) {
  switch (p) {
    case Preset::LML: return "LML";
    case Preset::LLL: return "LLL";
    case Preset::MLM: return "MLM";
    case Preset::HHH: return "HHH";
  }
  return "?";
}

inline VadPoint preset_point(Preset p) {
  switch (p) {
    case Preset::LML: return {0.0, 0.5, 0.0};
    case Preset::LLL: return {0.0, 0.0, 0.0};
    case Preset::MLM: return {0.5, 0.0, 0.5};
    case Preset::HHH: return {1.0, 1.0, 1.0};
  }
  return {};
}

inline std::optional<Preset> parse_preset(std::string_view name) {
  for (Preset p : kAllPresets)
    if (preset_name(p) == name) return p;
  return std::nullopt;
}

/// The VAD point generation is steered toward.
struct AffectTarget {
  VadPoint point;
  std::optional<Preset> preset;

  static AffectTarget from_preset(Preset p) { return {preset_point(p), p}; }

  /// Preset name, or `v,a,d` for an explicit point.
  std::string label() const {
    if (preset) return std::string(preset_name(*preset));
    return util::format_double(point.valence) + "," + util::format_double(point.arousal) + "," +
           util::format_double(point.dominance);
  }

  friend bool operator==(const AffectTarget&, const AffectTarget&) = default;
};

/// Accepts a preset name (LML, LLL, MLM, HHH) or three numbers in [0,1]
/// separated by commas or whitespace.
inline AffectTarget parse_target(std::string_view text) {
  const auto trimmed = util::trim(text);
  if (auto p = parse_preset(trimmed)) return AffectTarget::from_preset(*p);
  std::string normalized(trimmed);
  std::replace(normalized.begin(), normalized.end(), ',', ' ');
  const auto parts = util::split_whitespace(normalized);
  if (parts.size() != 3) {
    throw ConfigError("target must be one of LML, LLL, MLM, HHH or a 'V,A,D' triple, got '" + std::string(trimmed) + "'");
  }
  double v[3];
  for (int i = 0; i < 3; ++i) {
    const auto x = util::parse_double(parts[static_cast<std::size_t>(i)]);
    if (!x || *x < 0.0 || *x > 1.0) throw ConfigError("target coordinate '" + parts[static_cast<std::size_t>(i)] + "' not in [0,1]");
    v[i] = *x;
  }
  return AffectTarget{{v[0], v[1], v[2]}, std::nullopt};
}

enum class DecodeMode { free_running, teacher_forced };

/// How the top-k probabilities are renormalized before fusion.
enum class CandidateRenorm {
  /// Softmax over the probability values themselves.
  softmax_literal,
  /// Divide by their sum.
  sum_renormalize,
};

inline std::string_view renorm_name(CandidateRenorm r) {
  return r == CandidateRenorm::softmax_literal ? "softmax" : "sum";
}

inline CandidateRenorm parse_renorm(std::string_view s) {
  if (s == "softmax" || s == "softmax_literal") return CandidateRenorm::softmax_literal;
  if (s == "sum" || s == "sum_renormalize") return CandidateRenorm::sum_renormalize;
  throw ConfigError("renorm must be 'softmax' or 'sum', got '" + std::string(s) + "'");
}

struct DecoderConfig {
  /// Affect strength: 0 is plain decoding, 1 ranks candidates by affect alone.
  double lambda = 0.5;
  /// Number of candidate words considered per step.
  std::size_t k = 30;
  AffectTarget target = AffectTarget::from_preset(Preset::HHH);
  DecodeMode mode = DecodeMode::free_running;
  std::size_t max_len = 20;
  CandidateRenorm renorm = CandidateRenorm::softmax_literal;

  void validate() const {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must be in [0,1]");
    if (k < 1) throw ConfigError("k must be >= 1");
    if (max_len < 1) throw ConfigError("max_len must be >= 1");
    if (!target.point.is_valid()) throw ConfigError("target coordinates must be in [0,1]");
  }
};

// ---------------------------------------------------------------------------
// Per-step probability pieces
// ---------------------------------------------------------------------------

inline std::vector<double> softmax(std::span<const double> xs) {
  std::vector<double> out(xs.size());
  if (xs.empty()) return out;
  const double hi = *std::max_element(xs.begin(), xs.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out[i] = std::exp(xs[i] - hi);
    sum += out[i];
  }
  for (double& x : out) x /= sum;
  return out;
}

struct CandidateSet {
  std::vector<TokenId> ids;
  /// Renormalized LM probabilities, parallel to `ids`.
  std::vector<double> probs;
  /// Set when k exceeded the vocabulary size and was clamped.
  bool k_clamped = false;
};

/// Top-k tokens by probability (ties: lower id first), renormalized.
inline CandidateSet candidate_probs(const TokenDistribution& dist, std::size_t k, CandidateRenorm renorm) {
  if (k < 1) throw ConfigError("k must be >= 1");
  if (dist.probs.empty()) throw ConfigError("empty distribution");
  CandidateSet out;
  if (k > dist.size()) {
    k = dist.size();
    out.k_clamped = true;
  }
  std::vector<TokenId> order(dist.size());
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](TokenId a, TokenId b) { return dist[a] != dist[b] ? dist[a] > dist[b] : a < b; });
  out.ids.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  std::vector<double> raw;
  raw.reserve(k);
  for (TokenId id : out.ids) raw.push_back(dist[id]);
  if (renorm == CandidateRenorm::softmax_literal) {
    out.probs = softmax(raw);
  } else {
    const double sum = std::accumulate(raw.begin(), raw.end(), 0.0);
    out.probs.resize(k);
    for (std::size_t i = 0; i < k; ++i) out.probs[i] = sum > 0.0 ? raw[i] / sum : 1.0 / static_cast<double>(k);
  }
  return out;
}

/// Resolves a surface token to its lexicon entry through the lemmatizer.
/// Structural tokens never resolve.
struct AffectResolver {
  const AffectiveLexicon& lexicon;
  const LemmaRules& rules;

  static bool is_structural(std::string_view token) {
    return token == Vocabulary::kBosToken || token == Vocabulary::kEosToken || token == Vocabulary::kSepToken ||
           token == Vocabulary::kUnkToken;
  }

  std::string lemma(std::string_view token) const {
    if (token.empty() || is_structural(token)) return {};
    return lemmatize(rules, token);
  }

  std::optional<VadPoint> resolve(std::string_view token) const {
    const std::string l = lemma(token);
    if (l.empty()) return std::nullopt;
    return lexicon.lookup(l);
  }
};

struct AffectScores {
  std::vector<double> distances;
  std::vector<double> probs;
};

/// Distance of each candidate to `target` and softmax(-distance). Candidates
/// without a lexicon entry get the maximal distance sqrt(3).
inline AffectScores affect_probs(std::span<const std::string> candidates, const AffectiveLexicon& lexicon,
                                 const LemmaRules& rules, const VadPoint& target) {
  if (candidates.empty()) throw ConfigError("affect_probs needs at least one candidate");
  const AffectResolver resolver{lexicon, rules};
  AffectScores out;
  out.distances.reserve(candidates.size());
  std::vector<double> neg;
  neg.reserve(candidates.size());
  for (const auto& c : candidates) {
    const auto p = resolver.resolve(c);
    const double d = p ? vad_distance(*p, target) : kMaxVadDistance;
    out.distances.push_back(d);
    neg.push_back(-d);
  }
  out.probs = softmax(neg);
  return out;
}

/// (1 - lambda) * pi_t + lambda * pi_d, elementwise.
inline std::vector<double> fuse_probabilities(std::span<const double> lm_probs, std::span<const double> affect_probs,
                                              double lambda) {
  if (lm_probs.size() != affect_probs.size()) throw ConfigError("fuse_probabilities: length mismatch");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must be in [0,1]");
  std::vector<double> out(lm_probs.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (1.0 - lambda) * lm_probs[i] + lambda * affect_probs[i];
  return out;
}

// ---------------------------------------------------------------------------
// Traces
// ---------------------------------------------------------------------------

struct CandidateTrace {
  TokenId id = 0;
  std::string token;
  double lm_prob = 0.0;
  double distance = 0.0;
  double affect_prob = 0.0;
  double fused_prob = 0.0;
};

/// Everything that went into one decoding decision.
struct StepTrace {
  std::size_t step = 0;
  TokenId anchor_id = 0;
  std::string anchor_token;
  std::string anchor_lemma;
  bool in_lexicon = false;
  bool k_clamped = false;
  std::vector<CandidateTrace> candidates;
  TokenId chosen_id = 0;
  std::string chosen_token;
};

struct StepResult {
  TokenId chosen_id = 0;
  std::string chosen_token;
  StepTrace trace;
};

struct DecodeResult {
  std::vector<std::string> tokens;
  std::vector<StepTrace> traces;
};

// ---------------------------------------------------------------------------
// The decoder
// ---------------------------------------------------------------------------

/// Decoding-time affect steering over any LanguageModel.
///
/// At each step the anchor token (the LM argmax when free-running, the
/// ground-truth token when teacher-forced) is lemmatized. If the lemma is not
/// in the lexicon the anchor is emitted unchanged. Otherwise the top-k
/// candidates are rescored by fusing their LM probability with a softmax over
/// negative VAD distances to the target, and the best fused candidate is
/// emitted. Holds references only; all inputs must outlive the decoder.
template <LanguageModel Model>
class AffectDecoder {
public:
  AffectDecoder(const Model& model, const AffectiveLexicon& lexicon, const LemmaRules& rules)
      : model_(model), lexicon_(lexicon), rules_(rules) {}

  /// One decoding step. `anchor` must be present exactly in teacher-forced mode.
  StepResult select_next(std::span<const TokenId> context, const DecoderConfig& config,
                         std::optional<std::string_view> anchor = std::nullopt, std::size_t step = 0) const {
    config.validate();
    if (config.mode == DecodeMode::teacher_forced && !anchor) throw ConfigError("teacher-forced step needs an anchor token");
    if (config.mode == DecodeMode::free_running && anchor) throw ConfigError("free-running step takes no anchor token");

    const Vocabulary& vocab = model_.vocabulary();
    const TokenDistribution dist = model_.next_distribution(context);
    if (dist.size() != vocab.size()) throw Error("language model distribution does not match its vocabulary");

    StepTrace trace;
    trace.step = step;
    if (anchor) {
      trace.anchor_token = std::string(*anchor);
      trace.anchor_id = vocab.id_or_unk(*anchor);
    } else {
      trace.anchor_id = dist.argmax();
      trace.anchor_token = vocab.token(trace.anchor_id);
    }
    const AffectResolver resolver{lexicon_, rules_};
    trace.anchor_lemma = resolver.lemma(trace.anchor_token);
    trace.in_lexicon = !trace.anchor_lemma.empty() && lexicon_.contains(trace.anchor_lemma);

    if (!trace.in_lexicon) {
      trace.chosen_id = trace.anchor_id;
      trace.chosen_token = trace.anchor_token;
      return {trace.chosen_id, trace.chosen_token, std::move(trace)};
    }

    const CandidateSet cands = candidate_probs(dist, config.k, config.renorm);
    trace.k_clamped = cands.k_clamped;
    std::vector<std::string> words;
    words.reserve(cands.ids.size());
    for (TokenId id : cands.ids) words.push_back(vocab.token(id));
    const AffectScores affect = affect_probs(words, lexicon_, rules_, config.target.point);
    const std::vector<double> fused = fuse_probabilities(cands.probs, affect.probs, config.lambda);

    std::size_t best = 0;
    for (std::size_t i = 1; i < fused.size(); ++i) {
      if (fused[i] > fused[best] || (fused[i] == fused[best] && cands.ids[i] < cands.ids[best])) best = i;
    }
    trace.candidates.reserve(words.size());
    for (std::size_t i = 0; i < words.size(); ++i) {
      trace.candidates.push_back({cands.ids[i], words[i], cands.probs[i], affect.distances[i], affect.probs[i], fused[i]});
    }
    trace.chosen_id = cands.ids[best];
    trace.chosen_token = words[best];
    return {trace.chosen_id, trace.chosen_token, std::move(trace)};
  }

  /// Free-running generation: feeds each chosen token back until EOS or max_len.
  DecodeResult generate_response(std::span<const std::string> source, const DecoderConfig& config) const {
    if (config.mode != DecodeMode::free_running) throw ConfigError("generate_response requires free-running mode");
    config.validate();
    const Vocabulary& vocab = model_.vocabulary();
    DecodeResult out;
    std::vector<TokenId> emitted;
    for (std::size_t step = 0; step < config.max_len; ++step) {
      const auto context = encode_dialog_context(vocab, source, std::span<const TokenId>(emitted));
      StepResult r = select_next(context, config, std::nullopt, step);
      out.traces.push_back(std::move(r.trace));
      if (r.chosen_id == Vocabulary::kEos) break;
      emitted.push_back(r.chosen_id);
      out.tokens.push_back(std::move(r.chosen_token));
    }
    return out;
  }

  /// Teacher-forced rewrite of an existing response, one position at a time.
  /// The output has exactly the length of `ground_truth`.
  DecodeResult map_utterance(std::span<const std::string> source, std::span<const std::string> ground_truth,
                             const DecoderConfig& config) const {
    if (config.mode != DecodeMode::teacher_forced) throw ConfigError("map_utterance requires teacher-forced mode");
    if (ground_truth.empty()) throw ConfigError("map_utterance needs a non-empty ground truth");
    config.validate();
    const Vocabulary& vocab = model_.vocabulary();
    DecodeResult out;
    std::vector<TokenId> emitted;
    for (std::size_t step = 0; step < ground_truth.size(); ++step) {
      const auto context = encode_dialog_context(vocab, source, std::span<const TokenId>(emitted));
      StepResult r = select_next(context, config, std::string_view(ground_truth[step]), step);
      emitted.push_back(r.chosen_id);
      out.tokens.push_back(std::move(r.chosen_token));
      out.traces.push_back(std::move(r.trace));
    }
    return out;
  }

  const Model& model() const noexcept { return model_; }
  const AffectiveLexicon& lexicon() const noexcept { return lexicon_; }
  const LemmaRules& rules() const noexcept { return rules_; }

private:
  const Model& model_;
  const AffectiveLexicon& lexicon_;
  const LemmaRules& rules_;
};

/// Plain greedy decoding: the LM argmax at every step, no affect involved.
template <LanguageModel Model>
std::vector<std::string> greedy_decode(const Model& model, std::span<const std::string> source, std::size_t max_len) {
  const Vocabulary& vocab = model.vocabulary();
  std::vector<TokenId> emitted;
  std::vector<std::string> out;
  for (std::size_t step = 0; step < max_len; ++step) {
    const auto context = encode_dialog_context(vocab, source, std::span<const TokenId>(emitted));
    const TokenId next = model.next_distribution(context).argmax();
    if (next == Vocabulary::kEos) break;
    emitted.push_back(next);
    out.push_back(vocab.token(next));
  }
  return out;
}

}  // namespace affecton
