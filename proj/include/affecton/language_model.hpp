#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "affecton/common.hpp"

namespace affecton {

using TokenId = std::int32_t;

/// Token <-> id bijection. Ids 0..3 are the reserved structural tokens.
class Vocabulary {
public:
  static constexpr TokenId kBos = 0;
  static constexpr TokenId kEos = 1;
  static constexpr TokenId kSep = 2;
  static constexpr TokenId kUnk = 3;
  static constexpr std::size_t kReservedCount = 4;

  static constexpr std::string_view kBosToken = "<s>";
  static constexpr std::string_view kEosToken = "</s>";
  static constexpr std::string_view kSepToken = "<sep>";
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocabulary() {
    for (auto t : {kBosToken, kEosToken, kSepToken, kUnkToken}) push(std::string(t));
  }

  /// Adds `token` if absent; returns its id either way.
  TokenId add(std::string_view token) {
    if (auto id = find(token)) return *id;
    if (token.empty() || util::has_whitespace(token)) {
      throw ConfigError("vocabulary tokens must be non-empty and whitespace-free");
    }
    return push(std::string(token));
  }

  std::optional<TokenId> find(std::string_view token) const {
    const auto it = ids_.find(std::string(token));
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }

  TokenId id_or_unk(std::string_view token) const { return find(token).value_or(kUnk); }

  const std::string& token(TokenId id) const {
    if (!contains(id)) throw Error("token id " + std::to_string(id) + " outside vocabulary");
    return tokens_[static_cast<std::size_t>(id)];
  }

  bool contains(TokenId id) const noexcept { return id >= 0 && static_cast<std::size_t>(id) < tokens_.size(); }
  static bool is_reserved(TokenId id) noexcept { return id >= 0 && id < static_cast<TokenId>(kReservedCount); }
  std::size_t size() const noexcept { return tokens_.size(); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

private:
  TokenId push(std::string token) {
    const auto id = static_cast<TokenId>(tokens_.size());
    ids_.emplace(token, id);
    tokens_.push_back(std::move(token));
    return id;
  }

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

/// A probability vector over the whole vocabulary, indexed by TokenId.
struct TokenDistribution {
  std::vector<double> probs;

  std::size_t size() const noexcept { return probs.size(); }
  double operator[](TokenId id) const { return probs[static_cast<std::size_t>(id)]; }

  /// Lowest id among the maximal entries.
  TokenId argmax() const {
    TokenId best = 0;
    for (std::size_t i = 1; i < probs.size(); ++i)
      if (probs[i] > probs[static_cast<std::size_t>(best)]) best = static_cast<TokenId>(i);
    return best;
  }

  bool is_valid(double tol = 1e-9) const {
    double sum = 0.0;
    for (double p : probs) {
      if (!std::isfinite(p) || p < 0.0) return false;
      sum += p;
    }
    return !probs.empty() && std::abs(sum - 1.0) <= tol;
  }
};

/// What the decoder needs from a language model: a next-token distribution
/// for any context, and the vocabulary that indexes it.
template <class M>
concept LanguageModel = requires(const M& m, std::span<const TokenId> context) {
  { m.next_distribution(context) } -> std::convertible_to<TokenDistribution>;
  { m.vocabulary() } -> std::convertible_to<const Vocabulary&>;
};

/// `source ++ [SEP] ++ partial_response` as ids; unknown source tokens map to UNK.
inline std::vector<TokenId> encode_dialog_context(const Vocabulary& vocab, std::span<const std::string> source,
                                                  std::span<const TokenId> partial_response) {
  std::vector<TokenId> ids;
  ids.reserve(source.size() + 1 + partial_response.size());
  for (const auto& t : source) ids.push_back(vocab.id_or_unk(t));
  ids.push_back(Vocabulary::kSep);
  ids.insert(ids.end(), partial_response.begin(), partial_response.end());
  return ids;
}

inline std::vector<TokenId> encode_dialog_context(const Vocabulary& vocab, std::span<const std::string> source,
                                                  std::span<const std::string> partial_response) {
  std::vector<TokenId> partial;
  partial.reserve(partial_response.size());
  for (const auto& t : partial_response) partial.push_back(vocab.id_or_unk(t));
  return encode_dialog_context(vocab, source, std::span<const TokenId>(partial));
}

/// A training sequence for a dialog model: source tokens, SEP, response tokens.
inline std::vector<std::string> dialog_training_sequence(std::span<const std::string> source,
                                                         std::span<const std::string> response) {
  std::vector<std::string> seq(source.begin(), source.end());
  seq.emplace_back(Vocabulary::kSepToken);
  seq.insert(seq.end(), response.begin(), response.end());
  return seq;
}

}  // namespace affecton
