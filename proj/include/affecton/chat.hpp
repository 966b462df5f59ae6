#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "affecton/common.hpp"
#include "affecton/store.hpp"

namespace affecton {

struct ChatMessage {
  /// "user" or "agent".
  std::string speaker;
  std::string text;
  /// Decoder settings in force when the message was sent.
  nlohmann::json config;
  /// Step traces for agent replies; null for user messages.
  nlohmann::json trace;
};

struct ChatSession {
  std::string id;
  std::string created_at;
  std::vector<ChatMessage> history;
};

inline nlohmann::json to_json(const ChatMessage& m) {
  return {{"speaker", m.speaker}, {"text", m.text}, {"config", m.config}, {"trace", m.trace}};
}

inline nlohmann::json to_json(const ChatSession& s) {
  nlohmann::json history = nlohmann::json::array();
  for (const auto& m : s.history) history.push_back(to_json(m));
  return {{"session_id", s.id}, {"created_at", s.created_at}, {"history", std::move(history)}};
}

/// Chat sessions backed by an append-only event log. History is append-only;
/// each session's updates are serialized through its own lock.
class ChatStore {
public:
  explicit ChatStore(std::filesystem::path log_path) : log_(std::move(log_path)) {
    for (const auto& ev : log_.read_all()) apply(ev);
  }

  std::string create() {
    std::string id;
    {
      std::lock_guard lock(mutex_);
      do {
        id = random_id();
      } while (sessions_.count(id));
    }
    const nlohmann::json ev = {{"event", "create"}, {"session_id", id}, {"created_at", utc_timestamp()}};
    log_.append(ev);
    std::lock_guard lock(mutex_);
    apply(ev);
    return id;
  }

  bool exists(const std::string& id) const {
    std::lock_guard lock(mutex_);
    return sessions_.count(id) > 0;
  }

  std::optional<ChatSession> get(const std::string& id) const {
    std::lock_guard lock(mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) return std::nullopt;
    return it->second.session;
  }

  /// Runs `produce` under the session's lock with the current session state
  /// and appends the messages it returns. Returns false for unknown sessions.
  bool append_with(const std::string& id, const std::function<std::vector<ChatMessage>(const ChatSession&)>& produce) {
    std::mutex* session_mutex = nullptr;
    {
      std::lock_guard lock(mutex_);
      const auto it = sessions_.find(id);
      if (it == sessions_.end()) return false;
      session_mutex = it->second.lock.get();
    }
    std::lock_guard session_lock(*session_mutex);
    const auto snapshot = get(id);
    for (auto& m : produce(*snapshot)) {
      const nlohmann::json ev = {{"event", "message"}, {"session_id", id}, {"message", to_json(m)}};
      log_.append(ev);
      std::lock_guard lock(mutex_);
      apply(ev);
    }
    return true;
  }

private:
  struct Entry {
    ChatSession session;
    std::unique_ptr<std::mutex> lock = std::make_unique<std::mutex>();
  };

  void apply(const nlohmann::json& ev) {
    const auto kind = ev.at("event").get<std::string>();
    const auto id = ev.at("session_id").get<std::string>();
    if (kind == "create") {
      auto& e = sessions_[id];
      e.session.id = id;
      e.session.created_at = ev.value("created_at", "");
    } else if (kind == "message") {
      const auto it = sessions_.find(id);
      if (it == sessions_.end()) throw ParseError("chat log references unknown session " + id);
      const auto& m = ev.at("message");
      it->second.session.history.push_back(
          {m.at("speaker").get<std::string>(), m.at("text").get<std::string>(), m.at("config"), m.at("trace")});
    } else {
      throw ParseError("unknown chat log event '" + kind + "'");
    }
  }

  std::string random_id() {
    static constexpr char kHex[] = "0123456789abcdef";
    std::uint64_t x = rng_();
    std::string id(16, '0');
    for (char& c : id) {
      c = kHex[x & 0xf];
      x >>= 4;
    }
    return id;
  }

  JsonlLog log_;
  mutable std::mutex mutex_;
  std::map<std::string, Entry> sessions_;
  std::mt19937_64 rng_{std::random_device{}()};
};

}  // namespace affecton
