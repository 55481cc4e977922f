#pragma once

// Scoring and feedback endpoints, independent of the HTTP transport.
//
//   POST /v1/score     {"headline", "body"} | {"html"} | {"url"}, optional "model"
//   POST /v1/feedback  {"url"?, "headline_hash", "label", "score_shown", "model_version"}
//   GET  /v1/health

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "baitwatch/encoders.hpp"
#include "baitwatch/textcorpus.hpp"

namespace baitwatch {

struct ServiceResponse {
  int status = 200;
  nlohmann::ordered_json body;
};

// Headline plus body text; the body splits into paragraphs at line breaks
// and blank lines are dropped. Throws std::invalid_argument when the
// headline or every paragraph tokenizes to nothing.
Article article_from_text(std::string_view headline, std::string_view body, const Vocabulary& vocab);
Article article_from_text(std::string_view headline, std::span<const std::string> paragraphs,
                          const Vocabulary& vocab);

struct FeedbackRecord {
  std::uint64_t id = 0;
  std::string timestamp;  // ISO-8601 UTC
  std::optional<std::string> url;
  std::string headline_hash;  // lowercase SHA-256 hex
  std::string label;          // "congruent" | "incongruent"
  double score_shown = 0.0;
  std::string model_version;

  nlohmann::ordered_json to_json() const;
  // Throws std::invalid_argument naming the offending field.
  static FeedbackRecord from_json(const nlohmann::json& j);
  bool operator==(const FeedbackRecord&) const = default;
};

std::vector<FeedbackRecord> read_feedback_log(const std::string& path);

// Current UTC time as "YYYY-MM-DDTHH:MM:SS.mmmZ".
std::string utc_timestamp();

struct ServiceOptions {
  std::string feedback_log_path;
  double display_threshold = 0.5;
  bool allow_fetch = false;
  // Returns page markup for a URL; used only when allow_fetch is set.
  std::function<std::string(const std::string&)> fetcher;
};

class ScoringService {
 public:
  ScoringService(Model<float> model, Vocabulary vocab, ServiceOptions options);
  ~ScoringService();

  ServiceResponse handle_score(std::string_view request_body) const;
  ServiceResponse handle_feedback(std::string_view request_body);
  ServiceResponse health() const;

  // Replaces the model between requests; requests in flight keep the old one.
  void swap_model(Model<float> model);
  std::string model_version() const;

  struct Snapshot {
    Model<float> model;
    Vocabulary vocab;
    SentenceSplitter splitter;
    std::string version;
  };
  std::shared_ptr<const Snapshot> snapshot() const;

 private:
  ServiceOptions options_;
  std::chrono::steady_clock::time_point started_;

  mutable std::mutex snapshot_mutex_;
  std::shared_ptr<const Snapshot> snapshot_;

  std::mutex log_mutex_;
  int log_fd_ = -1;
  std::uint64_t next_id_ = 1;
};

}  // namespace baitwatch
