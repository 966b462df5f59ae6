#pragma once

#include <ostream>
#include <span>
#include <string>

#include <json.hpp>

#include "affecton/decoder.hpp"

namespace affecton {

inline nlohmann::json to_json(const CandidateTrace& c) {
  return {{"id", c.id},           {"token", c.token},          {"pi_t", c.lm_prob},
          {"distance", c.distance}, {"pi_d", c.affect_prob}, {"pi_f", c.fused_prob}};
}

inline nlohmann::json to_json(const StepTrace& t) {
  nlohmann::json cands = nlohmann::json::array();
  for (const auto& c : t.candidates) cands.push_back(to_json(c));
  return {{"step", t.step},
          {"anchor_id", t.anchor_id},
          {"anchor", t.anchor_token},
          {"anchor_lemma", t.anchor_lemma},
          {"in_lexicon", t.in_lexicon},
          {"k_clamped", t.k_clamped},
          {"candidates", std::move(cands)},
          {"chosen_id", t.chosen_id},
          {"chosen", t.chosen_token}};
}

inline nlohmann::json to_json(std::span<const StepTrace> traces) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& t : traces) out.push_back(to_json(t));
  return out;
}

inline StepTrace step_trace_from_json(const nlohmann::json& j) {
  StepTrace t;
  t.step = j.at("step").get<std::size_t>();
  t.anchor_id = j.at("anchor_id").get<TokenId>();
  t.anchor_token = j.at("anchor").get<std::string>();
  t.anchor_lemma = j.at("anchor_lemma").get<std::string>();
  t.in_lexicon = j.at("in_lexicon").get<bool>();
  t.k_clamped = j.value("k_clamped", false);
  for (const auto& c : j.at("candidates")) {
    t.candidates.push_back({c.at("id").get<TokenId>(), c.at("token").get<std::string>(), c.at("pi_t").get<double>(),
                            c.at("distance").get<double>(), c.at("pi_d").get<double>(), c.at("pi_f").get<double>()});
  }
  t.chosen_id = j.at("chosen_id").get<TokenId>();
  t.chosen_token = j.at("chosen").get<std::string>();
  return t;
}

/// One JSON object per line, each tagged with the utterance it belongs to.
inline void write_trace_jsonl(std::ostream& out, std::string_view utterance_id, std::span<const StepTrace> traces) {
  for (const auto& t : traces) {
    nlohmann::json j = to_json(t);
    j["utterance"] = utterance_id;
    out << j.dump() << '\n';
  }
}

}  // namespace affecton
