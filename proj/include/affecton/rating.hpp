#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <istream>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "affecton/common.hpp"
#include "affecton/corpus.hpp"
#include "affecton/metrics.hpp"
#include "affecton/store.hpp"

namespace affecton {

// ---------------------------------------------------------------------------
// Dimensions
// ---------------------------------------------------------------------------

enum class Dimension { valence, arousal, dominance, syntax, appropriateness };

/// Raters finish every item in one dimension before the next one opens.
inline constexpr std::array<Dimension, 5> kDimensionOrder = {Dimension::valence, Dimension::arousal, Dimension::dominance,
                                                             Dimension::syntax, Dimension::appropriateness};

inline std::string_view dimension_name(Dimension d) {
  switch (d) {
    case Dimension::valence: return "valence";
    case Dimension::arousal: return "arousal";
    case Dimension::dominance: return "dominance";
    case Dimension::syntax: return "syntax";
    case Dimension::appropriateness: return "appropriateness";
  }
  return "?";
}

inline std::optional<Dimension> parse_dimension(std::string_view s) {
  for (Dimension d : kDimensionOrder)
    if (dimension_name(d) == s) return d;
  return std::nullopt;
}

inline bool is_vad_dimension(Dimension d) {
  return d == Dimension::valence || d == Dimension::arousal || d == Dimension::dominance;
}

/// VAD sliders run 0-100; syntax and appropriateness are 0, 1 or 2.
inline int max_score(Dimension d) { return is_vad_dimension(d) ? 100 : 2; }

inline std::size_t dimension_index(Dimension d) {
  return static_cast<std::size_t>(std::find(kDimensionOrder.begin(), kDimensionOrder.end(), d) - kDimensionOrder.begin());
}

// ---------------------------------------------------------------------------
// Items
// ---------------------------------------------------------------------------

/// One entry of a rating-item file: an original/mapped pair, or a golden
/// utterance with known polarity.
struct RatingItem {
  std::string id;
  bool golden = false;
  std::string pair_id;
  std::string target;
  std::string preceding;
  std::string original;
  std::string mapped;
  /// Golden items only: "positive" or "negative".
  std::string polarity;
  std::string utterance;

  friend bool operator==(const RatingItem&, const RatingItem&) = default;
};

inline nlohmann::json to_json(const RatingItem& it) {
  if (it.golden) {
    return {{"id", it.id}, {"kind", "golden"}, {"polarity", it.polarity}, {"utterance", it.utterance},
            {"preceding", it.preceding}};
  }
  return {{"id", it.id},           {"kind", "pair"},         {"pair_id", it.pair_id}, {"target", it.target},
          {"preceding", it.preceding}, {"original", it.original}, {"mapped", it.mapped}};
}

inline RatingItem rating_item_from_json(const nlohmann::json& j) {
  RatingItem it;
  it.id = j.at("id").get<std::string>();
  const auto kind = j.at("kind").get<std::string>();
  it.preceding = j.value("preceding", "");
  if (kind == "golden") {
    it.golden = true;
    it.polarity = j.at("polarity").get<std::string>();
    it.utterance = j.at("utterance").get<std::string>();
    if (it.polarity != "positive" && it.polarity != "negative") throw ParseError("golden polarity must be positive or negative");
  } else if (kind == "pair") {
    it.pair_id = j.value("pair_id", "");
    it.target = j.at("target").get<std::string>();
    it.original = j.at("original").get<std::string>();
    it.mapped = j.at("mapped").get<std::string>();
  } else {
    throw ParseError("unknown rating item kind '" + kind + "'");
  }
  return it;
}

inline std::vector<RatingItem> load_rating_items(std::istream& in) {
  std::vector<RatingItem> items;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (util::read_line(in, line)) {
    ++line_no;
    if (util::trim(line).empty()) continue;
    try {
      items.push_back(rating_item_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad rating item: ") + e.what(), line_no);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), line_no);
    }
    if (!seen.insert(items.back().id).second) throw ParseError("duplicate rating item id '" + items.back().id + "'", line_no);
  }
  return items;
}

/// Golden fixture lines: `id<TAB>polarity<TAB>utterance`.
inline std::vector<RatingItem> load_golden_tsv(std::istream& in) {
  std::vector<RatingItem> items;
  std::string line;
  std::size_t line_no = 0;
  while (util::read_line(in, line)) {
    ++line_no;
    if (util::trim(line).empty() || line.front() == '#') continue;
    const auto f = util::split(line, '\t');
    if (f.size() != 3) throw ParseError("expected id<TAB>polarity<TAB>utterance", line_no);
    if (f[1] != "positive" && f[1] != "negative") throw ParseError("golden polarity must be positive or negative", line_no);
    RatingItem it;
    it.id = f[0];
    it.golden = true;
    it.polarity = f[1];
    it.utterance = f[2];
    items.push_back(std::move(it));
  }
  return items;
}

// ---------------------------------------------------------------------------
// Units and records
// ---------------------------------------------------------------------------

/// A single utterance a rater scores: one side of a pair, or a golden item.
struct RatingUnit {
  std::string item_id;
  /// "original", "mapped" or "golden".
  std::string variant;
  std::string utterance;
  std::string preceding;
  std::string target;
  bool golden = false;
  std::string polarity;

  std::string key() const { return item_id + "/" + variant; }
};

inline nlohmann::json to_json(const RatingUnit& u) {
  nlohmann::json j = {{"item_id", u.item_id}, {"variant", u.variant}, {"utterance", u.utterance},
                      {"preceding", u.preceding}, {"is_golden", u.golden}};
  if (!u.golden) j["target"] = u.target;
  return j;
}

struct RatingRecord {
  std::string rater;
  std::string item_id;
  std::string variant;
  Dimension dimension = Dimension::valence;
  int score = 0;
  bool is_golden = false;
  std::string timestamp;
};

inline nlohmann::json to_json(const RatingRecord& r) {
  return {{"rater", r.rater},   {"item_id", r.item_id},     {"variant", r.variant},    {"dimension", dimension_name(r.dimension)},
          {"score", r.score}, {"is_golden", r.is_golden}, {"timestamp", r.timestamp}};
}

inline RatingRecord rating_record_from_json(const nlohmann::json& j) {
  RatingRecord r;
  r.rater = j.at("rater").get<std::string>();
  r.item_id = j.at("item_id").get<std::string>();
  r.variant = j.at("variant").get<std::string>();
  const auto dim = parse_dimension(j.at("dimension").get<std::string>());
  if (!dim) throw ParseError("unknown dimension in rating record");
  r.dimension = *dim;
  r.score = j.at("score").get<int>();
  r.is_golden = j.value("is_golden", false);
  r.timestamp = j.value("timestamp", "");
  return r;
}

// ---------------------------------------------------------------------------
// The rating book
// ---------------------------------------------------------------------------

struct RatingOptions {
  std::uint64_t seed = 0;
  /// Pair items shown to each rater; 0 shows all of them.
  std::size_t items_per_rater = 0;
  /// A rater whose golden positive and negative valence scores differ by at
  /// most this much is flagged and excluded from aggregates.
  int golden_threshold = 10;
};

enum class SubmitStatus { ok, duplicate, out_of_range, unknown_item, out_of_order, bad_request };

struct SubmitResult {
  SubmitStatus status = SubmitStatus::ok;
  std::string message;
  std::optional<RatingRecord> record;
};

struct NextPrompt {
  RatingUnit unit;
  Dimension dimension = Dimension::valence;
  std::size_t answered = 0;
  std::size_t total = 0;
};

/// Serves rating units dimension-sequentially and stores each score as an
/// immutable record in an append-only log.
class RatingBook {
public:
  RatingBook(std::vector<RatingItem> items, RatingOptions options, std::filesystem::path log_path)
      : items_(std::move(items)), options_(options), log_(std::move(log_path)) {
    for (std::size_t i = 0; i < items_.size(); ++i) item_index_[items_[i].id] = i;
    for (const auto& j : log_.read_all()) remember(rating_record_from_json(j));
  }

  const std::vector<RatingItem>& items() const noexcept { return items_; }
  const RatingOptions& options() const noexcept { return options_; }

  /// The unit sequence rater `rater` sees in every dimension. Depends only on
  /// the item file, the seed and the rater id.
  std::vector<RatingUnit> plan_for(const std::string& rater) const {
    std::lock_guard lock(mutex_);
    return plan_locked(rater);
  }

  std::optional<NextPrompt> next(const std::string& rater) const {
    std::lock_guard lock(mutex_);
    const auto& plan = plan_locked(rater);
    NextPrompt p;
    p.total = plan.size() * kDimensionOrder.size();
    bool found = false;
    for (Dimension d : kDimensionOrder) {
      for (const auto& u : plan) {
        if (rated_.count(rated_key(rater, u.key(), d))) {
          ++p.answered;
        } else if (!found) {
          p.unit = u;
          p.dimension = d;
          found = true;
        }
      }
    }
    if (!found) return std::nullopt;
    return p;
  }

  SubmitResult submit(const std::string& rater, const std::string& item_id, const std::string& variant, Dimension dim,
                      int score) {
    std::lock_guard lock(mutex_);
    if (rater.empty()) return {SubmitStatus::bad_request, "rater id must be non-empty", std::nullopt};
    if (score < 0 || score > max_score(dim)) {
      return {SubmitStatus::out_of_range,
              std::string(dimension_name(dim)) + " score must be in [0," + std::to_string(max_score(dim)) + "]", std::nullopt};
    }
    const auto& plan = plan_locked(rater);
    const auto unit = std::find_if(plan.begin(), plan.end(),
                                   [&](const RatingUnit& u) { return u.item_id == item_id && u.variant == variant; });
    if (unit == plan.end()) return {SubmitStatus::unknown_item, "item not assigned to this rater", std::nullopt};
    if (rated_.count(rated_key(rater, unit->key(), dim))) {
      return {SubmitStatus::duplicate, "already rated", std::nullopt};
    }
    for (std::size_t i = 0; i < dimension_index(dim); ++i) {
      for (const auto& u : plan) {
        if (!rated_.count(rated_key(rater, u.key(), kDimensionOrder[i]))) {
          return {SubmitStatus::out_of_order,
                  std::string(dimension_name(kDimensionOrder[i])) + " must be completed first", std::nullopt};
        }
      }
    }
    RatingRecord r{rater, item_id, variant, dim, score, unit->golden, utc_timestamp()};
    log_.append(to_json(r));
    remember(r);
    return {SubmitStatus::ok, "", r};
  }

  std::vector<RatingRecord> records() const {
    std::lock_guard lock(mutex_);
    return records_;
  }

  /// Raters whose golden valence scores fail to separate the pair.
  std::set<std::string> flagged_raters() const {
    std::lock_guard lock(mutex_);
    return flagged_locked();
  }

  /// Records, flagged raters, agreement per dimension and per-target means.
  /// A pure function of the stored records.
  nlohmann::json export_report() const {
    std::lock_guard lock(mutex_);
    const auto flagged = flagged_locked();
    nlohmann::json report;
    report["records"] = nlohmann::json::array();
    std::set<std::string> raters;
    for (const auto& r : records_) {
      report["records"].push_back(to_json(r));
      raters.insert(r.rater);
    }
    report["raters"] = raters;
    report["flagged_raters"] = flagged;
    report["golden_threshold"] = options_.golden_threshold;
    report["agreement"] = agreement_locked(flagged);
    report["means"] = means_locked(flagged);
    return report;
  }

private:
  static std::string rated_key(const std::string& rater, const std::string& unit_key, Dimension d) {
    return rater + '\x1f' + unit_key + '\x1f' + std::string(dimension_name(d));
  }

  void remember(const RatingRecord& r) {
    rated_.insert(rated_key(r.rater, r.item_id + "/" + r.variant, r.dimension));
    records_.push_back(r);
  }

  const std::vector<RatingUnit>& plan_locked(const std::string& rater) const {
    if (const auto it = plans_.find(rater); it != plans_.end()) return it->second;
    const std::uint64_t rater_seed = util::fnv1a(rater, options_.seed ^ 0x9e3779b97f4a7c15ULL);

    std::vector<std::size_t> pair_idx, golden_idx;
    for (std::size_t i = 0; i < items_.size(); ++i) (items_[i].golden ? golden_idx : pair_idx).push_back(i);
    if (options_.items_per_rater > 0 && options_.items_per_rater < pair_idx.size()) {
      seeded_shuffle(pair_idx, rater_seed);
      pair_idx.resize(options_.items_per_rater);
      std::sort(pair_idx.begin(), pair_idx.end());
    }
    std::vector<RatingUnit> units;
    for (std::size_t i : pair_idx) {
      const auto& it = items_[i];
      units.push_back({it.id, "original", it.original, it.preceding, it.target, false, ""});
      units.push_back({it.id, "mapped", it.mapped, it.preceding, it.target, false, ""});
    }
    seeded_shuffle(units, rater_seed + 1);
    std::mt19937_64 rng(rater_seed + 2);
    for (std::size_t i : golden_idx) {
      const auto& it = items_[i];
      const auto pos = static_cast<std::ptrdiff_t>(rng() % (units.size() + 1));
      units.insert(units.begin() + pos, {it.id, "golden", it.utterance, it.preceding, "", true, it.polarity});
    }
    return plans_.emplace(rater, std::move(units)).first->second;
  }

  std::set<std::string> flagged_locked() const {
    std::map<std::string, std::pair<std::vector<int>, std::vector<int>>> golden;  // rater -> (positive, negative)
    for (const auto& r : records_) {
      if (!r.is_golden || r.dimension != Dimension::valence) continue;
      const auto it = item_index_.find(r.item_id);
      if (it == item_index_.end()) continue;
      auto& slot = golden[r.rater];
      (items_[it->second].polarity == "positive" ? slot.first : slot.second).push_back(r.score);
    }
    std::set<std::string> flagged;
    for (const auto& [rater, scores] : golden) {
      if (scores.first.empty() || scores.second.empty()) continue;
      auto mean = [](const std::vector<int>& v) {
        double s = 0.0;
        for (int x : v) s += x;
        return s / static_cast<double>(v.size());
      };
      if (std::abs(mean(scores.first) - mean(scores.second)) <= static_cast<double>(options_.golden_threshold)) {
        flagged.insert(rater);
      }
    }
    return flagged;
  }

  nlohmann::json agreement_locked(const std::set<std::string>& flagged) const {
    nlohmann::json out = nlohmann::json::object();
    for (Dimension d : kDimensionOrder) {
      // unit -> rater -> score, for non-golden units and unflagged raters
      std::map<std::string, std::map<std::string, int>> by_unit;
      for (const auto& r : records_) {
        if (r.dimension != d || r.is_golden || flagged.count(r.rater)) continue;
        by_unit[r.item_id + "/" + r.variant][r.rater] = r.score;
      }
      std::vector<double> xs, ys;
      std::vector<int> la, lb;
      for (const auto& [unit, scores] : by_unit) {
        if (scores.size() < 2) continue;
        auto it = scores.begin();
        const int first = it->second;
        const int second = (++it)->second;
        xs.push_back(first);
        ys.push_back(second);
        la.push_back(first);
        lb.push_back(second);
      }
      nlohmann::json entry;
      entry["statistic"] = is_vad_dimension(d) ? "pearson" : "cohen_kappa";
      entry["pairs"] = xs.size();
      entry["computable"] = false;
      entry["value"] = nullptr;
      try {
        if (is_vad_dimension(d)) {
          if (xs.size() >= 2) {
            entry["value"] = pearson(xs, ys);
            entry["computable"] = true;
          }
        } else if (!la.empty()) {
          const auto k = cohen_kappa(la, lb);
          entry["value"] = k.kappa;
          entry["degenerate"] = k.degenerate;
          entry["computable"] = true;
        }
      } catch (const ConfigError& e) {
        entry["reason"] = e.what();
      }
      if (!entry["computable"].get<bool>() && !entry.contains("reason")) entry["reason"] = "fewer than two doubly-rated items";
      out[std::string(dimension_name(d))] = std::move(entry);
    }
    return out;
  }

  nlohmann::json means_locked(const std::set<std::string>& flagged) const {
    // target -> variant -> dimension -> (sum, n)
    std::map<std::string, std::map<std::string, std::map<std::string, std::pair<double, std::size_t>>>> acc;
    for (const auto& r : records_) {
      if (r.is_golden || flagged.count(r.rater)) continue;
      const auto it = item_index_.find(r.item_id);
      if (it == item_index_.end()) continue;
      auto& cell = acc[items_[it->second].target][r.variant][std::string(dimension_name(r.dimension))];
      cell.first += r.score;
      ++cell.second;
    }
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [target, variants] : acc) {
      for (const auto& [variant, dims] : variants) {
        for (const auto& [dim, cell] : dims) {
          out[target][variant][dim] = {{"mean", cell.first / static_cast<double>(cell.second)}, {"n", cell.second}};
        }
      }
    }
    return out;
  }

  std::vector<RatingItem> items_;
  std::unordered_map<std::string, std::size_t> item_index_;
  RatingOptions options_;
  JsonlLog log_;
  mutable std::mutex mutex_;
  mutable std::map<std::string, std::vector<RatingUnit>> plans_;
  std::vector<RatingRecord> records_;
  std::set<std::string> rated_;
};

}  // namespace affecton
