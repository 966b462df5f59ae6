#pragma once

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "affecton/common.hpp"

namespace affecton {

/// A point in valence-arousal-dominance space. Each coordinate lies in [0,1].
struct VadPoint {
  double valence = 0.0;
  double arousal = 0.0;
  double dominance = 0.0;

  bool is_valid() const noexcept {
    auto ok = [](double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; };
    return ok(valence) && ok(arousal) && ok(dominance);
  }

  friend bool operator==(const VadPoint&, const VadPoint&) = default;
};

/// Largest possible distance inside the unit cube.
inline const double kMaxVadDistance = std::sqrt(3.0);

inline double vad_distance(const VadPoint& a, const VadPoint& b) noexcept {
  const double dv = a.valence - b.valence;
  const double da = a.arousal - b.arousal;
  const double dd = a.dominance - b.dominance;
  return std::sqrt(dv * dv + da * da + dd * dd);
}

/// Counters for recoverable oddities seen while loading a lexicon file.
struct LexiconWarnings {
  std::size_t duplicates = 0;
  std::size_t multiword_skipped = 0;
  bool header_skipped = false;
};

/// Lemma -> VAD map. Immutable once built; keys are lowercase and whitespace-free.
class AffectiveLexicon {
public:
  AffectiveLexicon() = default;
  explicit AffectiveLexicon(std::string source_name) : source_name_(std::move(source_name)) {}

  /// Inserts or replaces an entry. Returns true if the key already existed.
  bool insert(std::string_view lemma, const VadPoint& point) {
    if (!point.is_valid()) throw ConfigError("VAD point out of range for '" + std::string(lemma) + "'");
    std::string key = util::to_lower(lemma);
    if (key.empty() || util::has_whitespace(key)) {
      throw ConfigError("lexicon key must be non-empty and whitespace-free: '" + key + "'");
    }
    auto [it, inserted] = entries_.insert_or_assign(std::move(key), point);
    return !inserted;
  }

  std::optional<VadPoint> lookup(std::string_view lemma) const {
    const auto it = entries_.find(util::to_lower(lemma));
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  bool contains(std::string_view lemma) const { return lookup(lemma).has_value(); }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const std::string& source_name() const noexcept { return source_name_; }
  const std::unordered_map<std::string, VadPoint>& entries() const noexcept { return entries_; }
  const LexiconWarnings& warnings() const noexcept { return warnings_; }
  LexiconWarnings& warnings() noexcept { return warnings_; }

private:
  std::string source_name_;
  std::unordered_map<std::string, VadPoint> entries_;
  LexiconWarnings warnings_;
};

namespace detail {

inline const char* kVadFieldNames[3] = {"valence", "arousal", "dominance"};

}  // namespace detail

/// Reads the NRC-VAD tab-separated layout: `term<TAB>V<TAB>A<TAB>D`.
///
/// The first non-empty line is treated as a header when its second field is not
/// numeric. Duplicates keep the last occurrence; multi-word terms are skipped.
/// Both cases are counted in `warnings()` rather than rejected.
inline AffectiveLexicon load_lexicon(std::istream& in, std::string source_name = "") {
  AffectiveLexicon lex(std::move(source_name));
  std::string line;
  std::size_t line_no = 0;
  bool seen_data = false;
  while (util::read_line(in, line)) {
    ++line_no;
    if (util::trim(line).empty()) continue;
    const auto fields = util::split(line, '\t');
    if (!seen_data) {
      seen_data = true;
      // A header has no numeric field at all; a row with one bad number is an error.
      const bool any_numeric = std::any_of(fields.begin() + 1, fields.end(), [](const std::string& f) { return util::parse_double(f).has_value(); });
      if (fields.size() >= 2 && !any_numeric) {
        lex.warnings().header_skipped = true;
        continue;
      }
    }
    if (fields.size() != 4) {
      throw ParseError("expected 4 tab-separated fields, got " + std::to_string(fields.size()), line_no);
    }
    const std::string term = util::to_lower(util::trim(fields[0]));
    if (term.empty()) throw ParseError("empty term", line_no);
    double coords[3];
    for (int i = 0; i < 3; ++i) {
      const auto v = util::parse_double(fields[1 + i]);
      if (!v) throw ParseError("unparsable " + std::string(detail::kVadFieldNames[i]) + " '" + fields[1 + i] + "'", line_no);
      if (*v < 0.0 || *v > 1.0) {
        throw ParseError(std::string(detail::kVadFieldNames[i]) + " out of range (" + fields[1 + i] + ") for '" + term + "'",
                         line_no);
      }
      coords[i] = *v;
    }
    if (util::has_whitespace(term)) {
      ++lex.warnings().multiword_skipped;
      continue;
    }
    if (lex.insert(term, VadPoint{coords[0], coords[1], coords[2]})) ++lex.warnings().duplicates;
  }
  return lex;
}

/// Writes entries sorted by term, in a form load_lexicon reads back exactly.
inline void write_lexicon(std::ostream& out, const AffectiveLexicon& lex) {
  std::map<std::string, VadPoint> sorted(lex.entries().begin(), lex.entries().end());
  for (const auto& [term, p] : sorted) {
    out << term << '\t' << util::format_double(p.valence) << '\t' << util::format_double(p.arousal) << '\t'
        << util::format_double(p.dominance) << '\n';
  }
}

struct LemmaDistance {
  std::string lemma;
  double distance = 0.0;
};

/// The n entries closest to `target`, ascending by distance, ties by lemma.
inline std::vector<LemmaDistance> nearest_lemmas(const AffectiveLexicon& lex, const VadPoint& target, std::size_t n) {
  if (n == 0) throw ConfigError("nearest_lemmas: n must be >= 1");
  std::vector<LemmaDistance> all;
  all.reserve(lex.size());
  for (const auto& [lemma, p] : lex.entries()) all.push_back({lemma, vad_distance(p, target)});
  auto less = [](const LemmaDistance& a, const LemmaDistance& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.lemma < b.lemma;
  };
  const std::size_t take = std::min(n, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take), all.end(), less);
  all.resize(take);
  return all;
}

}  // namespace affecton
