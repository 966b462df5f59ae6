#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "affecton/common.hpp"

namespace affecton {

/// Append-only JSON-lines file. Appends are serialized and flushed per record.
class JsonlLog {
public:
  explicit JsonlLog(std::filesystem::path path) : path_(std::move(path)) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  }

  void append(const nlohmann::json& record) {
    std::lock_guard lock(mutex_);
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    if (!out) throw Error("cannot open " + path_.string() + " for appending");
    out << record.dump() << '\n';
    out.flush();
    if (!out) throw Error("write to " + path_.string() + " failed");
  }

  /// Every record currently in the file; a missing file reads as empty.
  std::vector<nlohmann::json> read_all() const {
    std::lock_guard lock(mutex_);
    std::vector<nlohmann::json> out;
    std::ifstream in(path_, std::ios::binary);
    if (!in) return out;
    std::string line;
    std::size_t line_no = 0;
    while (util::read_line(in, line)) {
      ++line_no;
      if (util::trim(line).empty()) continue;
      try {
        out.push_back(nlohmann::json::parse(line));
      } catch (const nlohmann::json::parse_error&) {
        throw ParseError("corrupt record in " + path_.string(), line_no);
      }
    }
    return out;
  }

  const std::filesystem::path& path() const noexcept { return path_; }

private:
  std::filesystem::path path_;
  mutable std::mutex mutex_;
};

/// UTC timestamp in ISO-8601 with second resolution.
inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace affecton
