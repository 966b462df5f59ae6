#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "affecton/chat.hpp"
#include "affecton/corpus.hpp"
#include "affecton/decoder.hpp"
#include "affecton/lemmatizer.hpp"
#include "affecton/lexicon.hpp"
#include "affecton/ngram_model.hpp"
#include "affecton/rating.hpp"
#include "affecton/trace_io.hpp"

namespace affecton {

/// The one generator model and lexicon a service instance serves.
struct ModelBundle {
  NGramModel model;
  AffectiveLexicon lexicon;
  LemmaRules rules = default_lemma_rules();
};

struct ServiceOptions {
  std::filesystem::path data_dir = "data";
  /// Directory served at `/`; skipped when empty or missing.
  std::filesystem::path static_dir;
  std::string cors_origin = "*";
  /// Defaults for fields a request leaves out.
  DecoderConfig defaults;
};

inline nlohmann::json config_to_json(const DecoderConfig& c) {
  nlohmann::json j = {{"lambda", c.lambda},
                      {"k", c.k},
                      {"max_len", c.max_len},
                      {"renorm", renorm_name(c.renorm)},
                      {"target",
                       {{"valence", c.target.point.valence},
                        {"arousal", c.target.point.arousal},
                        {"dominance", c.target.point.dominance}}}};
  j["target"]["preset"] = c.target.preset ? nlohmann::json(preset_name(*c.target.preset)) : nlohmann::json(nullptr);
  return j;
}

/// Reads lambda, k, target, max_len and renorm from a request body, falling
/// back to `defaults`. Targets may be a preset name, a "V,A,D" string, a
/// three-element array, or an object with valence/arousal/dominance keys.
inline DecoderConfig config_from_json(const nlohmann::json& body, DecoderConfig defaults) {
  DecoderConfig c = std::move(defaults);
  try {
    if (body.contains("lambda")) c.lambda = body.at("lambda").get<double>();
    if (body.contains("k")) {
      const auto k = body.at("k").get<long long>();
      if (k < 1) throw ConfigError("k must be >= 1");
      c.k = static_cast<std::size_t>(k);
    }
    if (body.contains("max_len")) {
      const auto m = body.at("max_len").get<long long>();
      if (m < 1) throw ConfigError("max_len must be >= 1");
      c.max_len = static_cast<std::size_t>(m);
    }
    if (body.contains("renorm")) c.renorm = parse_renorm(body.at("renorm").get<std::string>());
    if (body.contains("target")) {
      const auto& t = body.at("target");
      if (t.is_string()) {
        c.target = parse_target(t.get<std::string>());
      } else if (t.is_array() && t.size() == 3) {
        c.target = AffectTarget{{t[0].get<double>(), t[1].get<double>(), t[2].get<double>()}, std::nullopt};
      } else if (t.is_object()) {
        c.target = AffectTarget{{t.at("valence").get<double>(), t.at("arousal").get<double>(), t.at("dominance").get<double>()},
                                std::nullopt};
      } else {
        throw ConfigError("target must be a preset name, a 'V,A,D' string, an array of three numbers or an object");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed request field: ") + e.what());
  }
  c.mode = DecodeMode::free_running;
  c.validate();
  return c;
}

/// HTTP/JSON front end: stateless generation, chat sessions, and the rating
/// protocol. Every endpoint lives under /api.
class AffectService {
public:
  AffectService(ServiceOptions options, std::shared_ptr<const ModelBundle> bundle, std::shared_ptr<RatingBook> ratings)
      : options_(std::move(options)),
        bundle_(std::move(bundle)),
        ratings_(std::move(ratings)),
        chats_(options_.data_dir / "chat_sessions.jsonl") {}

  void register_routes(httplib::Server& svr) {
    svr.set_default_headers({{"Access-Control-Allow-Origin", options_.cors_origin},
                             {"Access-Control-Allow-Headers", "Content-Type"},
                             {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    svr.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    svr.Get("/api/health", [this](const httplib::Request&, httplib::Response& res) {
      nlohmann::json j = {{"model_loaded", bundle_ != nullptr}, {"ratings_loaded", ratings_ != nullptr}};
      if (bundle_) {
        j["vocab_size"] = bundle_->model.vocabulary().size();
        j["lexicon_size"] = bundle_->lexicon.size();
      }
      reply(res, 200, j);
    });

    svr.Post("/api/generate", [this](const httplib::Request& req, httplib::Response& res) { handle_generate(req, res); });
    svr.Post("/api/chat/sessions", [this](const httplib::Request&, httplib::Response& res) {
      reply(res, 201, {{"session_id", chats_.create()}});
    });
    svr.Get("/api/chat/sessions/:id", [this](const httplib::Request& req, httplib::Response& res) {
      const auto s = chats_.get(req.path_params.at("id"));
      if (!s) return error(res, 404, "unknown session");
      reply(res, 200, to_json(*s));
    });
    svr.Post("/api/chat/sessions/:id/messages",
             [this](const httplib::Request& req, httplib::Response& res) { handle_chat_message(req, res); });

    svr.Get("/api/rating/next", [this](const httplib::Request& req, httplib::Response& res) { handle_rating_next(req, res); });
    svr.Get("/api/rating/plan", [this](const httplib::Request& req, httplib::Response& res) {
      if (!ratings_) return error(res, 503, "no rating items loaded");
      const auto rater = req.get_param_value("rater");
      if (rater.empty()) return error(res, 400, "rater id must be non-empty");
      nlohmann::json units = nlohmann::json::array();
      for (const auto& u : ratings_->plan_for(rater)) units.push_back(to_json(u));
      reply(res, 200, {{"rater", rater}, {"dimensions", dimension_names()}, {"units", std::move(units)}});
    });
    svr.Post("/api/rating", [this](const httplib::Request& req, httplib::Response& res) { handle_rating_post(req, res); });
    svr.Get("/api/rating/export", [this](const httplib::Request&, httplib::Response& res) {
      if (!ratings_) return error(res, 503, "no rating items loaded");
      reply(res, 200, ratings_->export_report());
    });

    if (!options_.static_dir.empty() && std::filesystem::is_directory(options_.static_dir)) {
      svr.set_mount_point("/", options_.static_dir.string());
    }
  }

  ChatStore& chats() noexcept { return chats_; }

private:
  static void reply(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void error(httplib::Response& res, int status, const std::string& message) {
    reply(res, status, {{"error", message}});
  }

  static std::optional<nlohmann::json> parse_body(const httplib::Request& req, httplib::Response& res) {
    try {
      auto j = nlohmann::json::parse(req.body);
      if (!j.is_object()) {
        error(res, 400, "request body must be a JSON object");
        return std::nullopt;
      }
      return j;
    } catch (const nlohmann::json::parse_error&) {
      error(res, 400, "request body is not valid JSON");
      return std::nullopt;
    }
  }

  static nlohmann::json dimension_names() {
    nlohmann::json out = nlohmann::json::array();
    for (Dimension d : kDimensionOrder) out.push_back(dimension_name(d));
    return out;
  }

  DecodeResult run_generation(const std::string& text, const DecoderConfig& config) const {
    const AffectDecoder decoder(bundle_->model, bundle_->lexicon, bundle_->rules);
    const auto source = tokenize(text);
    return decoder.generate_response(source, config);
  }

  void handle_generate(const httplib::Request& req, httplib::Response& res) {
    const auto body = parse_body(req, res);
    if (!body) return;
    DecoderConfig config;
    try {
      config = config_from_json(*body, options_.defaults);
      if (!body->contains("source") || !(*body)["source"].is_string()) throw ConfigError("'source' string is required");
    } catch (const ConfigError& e) {
      return error(res, 400, e.what());
    }
    if (!bundle_) return error(res, 503, "model not loaded");
    const auto result = run_generation((*body)["source"].get<std::string>(), config);
    nlohmann::json out = {{"response", detokenize(result.tokens)}, {"tokens", result.tokens}, {"config", config_to_json(config)}};
    if (body->value("trace", false)) out["trace"] = to_json(std::span<const StepTrace>(result.traces));
    reply(res, 200, out);
  }

  void handle_chat_message(const httplib::Request& req, httplib::Response& res) {
    const auto id = req.path_params.at("id");
    if (!chats_.exists(id)) return error(res, 404, "unknown session");
    const auto body = parse_body(req, res);
    if (!body) return;
    DecoderConfig config;
    try {
      config = config_from_json(*body, options_.defaults);
      if (!body->contains("text") || !(*body)["text"].is_string()) throw ConfigError("'text' string is required");
    } catch (const ConfigError& e) {
      return error(res, 400, e.what());
    }
    if (!bundle_) return error(res, 503, "model not loaded");
    const std::string text = (*body)["text"].get<std::string>();
    nlohmann::json out;
    chats_.append_with(id, [&](const ChatSession& session) {
      const auto result = run_generation(text, config);
      const auto snapshot = config_to_json(config);
      const auto trace = to_json(std::span<const StepTrace>(result.traces));
      const std::string reply_text = detokenize(result.tokens);
      out = {{"reply", reply_text}, {"trace", trace}, {"config", snapshot}, {"history_length", session.history.size() + 2}};
      return std::vector<ChatMessage>{{"user", text, snapshot, nullptr}, {"agent", reply_text, snapshot, trace}};
    });
    reply(res, 200, out);
  }

  void handle_rating_next(const httplib::Request& req, httplib::Response& res) {
    if (!ratings_) return error(res, 503, "no rating items loaded");
    const auto rater = req.get_param_value("rater");
    if (rater.empty()) return error(res, 400, "rater id must be non-empty");
    const auto next = ratings_->next(rater);
    if (!next) {
      const auto plan_size = ratings_->plan_for(rater).size();
      return reply(res, 200, {{"done", true}, {"answered", plan_size * kDimensionOrder.size()},
                              {"total", plan_size * kDimensionOrder.size()}});
    }
    nlohmann::json j = {{"done", false},
                        {"rater", rater},
                        {"item_id", next->unit.item_id},
                        {"variant", next->unit.variant},
                        {"utterance", next->unit.utterance},
                        {"dimension", dimension_name(next->dimension)},
                        {"scale", {{"min", 0}, {"max", max_score(next->dimension)}}},
                        {"answered", next->answered},
                        {"total", next->total}};
    if (next->dimension == Dimension::appropriateness) j["preceding"] = next->unit.preceding;
    reply(res, 200, j);
  }

  void handle_rating_post(const httplib::Request& req, httplib::Response& res) {
    if (!ratings_) return error(res, 503, "no rating items loaded");
    const auto body = parse_body(req, res);
    if (!body) return;
    std::string rater, item_id, variant;
    std::optional<Dimension> dim;
    long long score = 0;
    try {
      rater = body->at("rater").get<std::string>();
      item_id = body->at("item_id").get<std::string>();
      variant = body->at("variant").get<std::string>();
      dim = parse_dimension(body->at("dimension").get<std::string>());
      score = body->at("score").get<long long>();
    } catch (const nlohmann::json::exception&) {
      return error(res, 400, "rater, item_id, variant, dimension and integer score are required");
    }
    if (!dim) return error(res, 400, "unknown dimension");
    if (score < 0 || score > max_score(*dim)) {
      return error(res, 400, std::string(dimension_name(*dim)) + " score must be in [0," + std::to_string(max_score(*dim)) + "]");
    }
    const auto r = ratings_->submit(rater, item_id, variant, *dim, static_cast<int>(score));
    switch (r.status) {
      case SubmitStatus::ok: return reply(res, 201, to_json(*r.record));
      case SubmitStatus::duplicate: return error(res, 409, r.message);
      case SubmitStatus::unknown_item: return error(res, 404, r.message);
      default: return error(res, 400, r.message);
    }
  }

  ServiceOptions options_;
  std::shared_ptr<const ModelBundle> bundle_;
  std::shared_ptr<RatingBook> ratings_;
  ChatStore chats_;
};

}  // namespace affecton
