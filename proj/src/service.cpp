#include "baitwatch/service.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <ctime>
#include <fstream>

#include "baitwatch/extract.hpp"

namespace baitwatch {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

ServiceResponse error(int status, const std::string& message) {
  return {status, ordered_json{{"error", message}}};
}

bool is_hex64(std::string_view s) {
  return s.size() == 64 && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isxdigit(c) != 0; });
}

std::vector<std::string> split_lines(std::string_view body) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= body.size()) {
    auto end = body.find('\n', start);
    if (end == std::string_view::npos) end = body.size();
    out.emplace_back(body.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

}  // namespace

Article article_from_text(std::string_view headline, std::span<const std::string> paragraphs,
                          const Vocabulary& vocab) {
  Article a;
  a.id = "request";
  a.category = "";
  a.headline = encode(vocab, tokenize(headline));
  if (a.headline.empty()) throw std::invalid_argument("headline has no tokens");
  for (const auto& p : paragraphs) {
    auto ids = encode(vocab, tokenize(p));
    if (!ids.empty()) a.paragraphs.push_back(std::move(ids));
  }
  if (a.paragraphs.empty()) throw std::invalid_argument("body has no tokens");
  return a;
}

Article article_from_text(std::string_view headline, std::string_view body, const Vocabulary& vocab) {
  const auto lines = split_lines(body);
  return article_from_text(headline, lines, vocab);
}

// ---------------------------------------------------------------------------
// Feedback records

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const auto secs = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof(out), "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

ordered_json FeedbackRecord::to_json() const {
  ordered_json j;
  j["id"] = id;
  j["timestamp"] = timestamp;
  if (url) j["url"] = *url;
  j["headline_hash"] = headline_hash;
  j["label"] = label;
  j["score_shown"] = score_shown;
  j["model_version"] = model_version;
  return j;
}

FeedbackRecord FeedbackRecord::from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("feedback must be a JSON object");
  FeedbackRecord r;
  auto string_field = [&](const char* name) -> std::string {
    if (!j.contains(name)) throw std::invalid_argument(std::string("missing \"") + name + "\" field");
    if (!j.at(name).is_string()) throw std::invalid_argument(std::string("\"") + name + "\" must be a string");
    return j.at(name).get<std::string>();
  };
  if (j.contains("id")) {
    if (!j.at("id").is_number_unsigned()) throw std::invalid_argument("\"id\" must be a non-negative integer");
    r.id = j.at("id").get<std::uint64_t>();
  }
  if (j.contains("timestamp")) r.timestamp = string_field("timestamp");
  if (j.contains("url")) r.url = string_field("url");
  r.headline_hash = string_field("headline_hash");
  if (!is_hex64(r.headline_hash)) throw std::invalid_argument("\"headline_hash\" must be 64 hex characters");
  std::transform(r.headline_hash.begin(), r.headline_hash.end(), r.headline_hash.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  r.label = string_field("label");
  if (r.label != "congruent" && r.label != "incongruent") {
    throw std::invalid_argument("\"label\" must be \"congruent\" or \"incongruent\"");
  }
  if (!j.contains("score_shown")) throw std::invalid_argument("missing \"score_shown\" field");
  if (!j.at("score_shown").is_number()) throw std::invalid_argument("\"score_shown\" must be a number");
  r.score_shown = j.at("score_shown").get<double>();
  if (!(r.score_shown >= 0.0 && r.score_shown <= 1.0)) throw std::invalid_argument("\"score_shown\" must lie in [0, 1]");
  r.model_version = string_field("model_version");
  return r;
}

std::vector<FeedbackRecord> read_feedback_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::vector<FeedbackRecord> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    try {
      out.push_back(FeedbackRecord::from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Service

ScoringService::ScoringService(Model<float> model, Vocabulary vocab, ServiceOptions options)
    : options_(std::move(options)), started_(std::chrono::steady_clock::now()) {
  if (model.dims().vocab_size != vocab.size()) {
    throw std::invalid_argument("vocabulary has " + std::to_string(vocab.size()) + " entries but the model expects " +
                                std::to_string(model.dims().vocab_size));
  }
  SentenceSplitter splitter(vocab);
  auto version = model.version();
  snapshot_ = std::make_shared<const Snapshot>(Snapshot{std::move(model), std::move(vocab), std::move(splitter),
                                                        std::move(version)});

  if (!options_.feedback_log_path.empty()) {
    // Ids continue from the lines already present.
    std::ifstream existing(options_.feedback_log_path);
    std::string line;
    while (std::getline(existing, line)) ++next_id_;
    log_fd_ = ::open(options_.feedback_log_path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (log_fd_ < 0) {
      throw std::runtime_error("cannot open feedback log " + options_.feedback_log_path + ": " + std::strerror(errno));
    }
  }
}

ScoringService::~ScoringService() {
  if (log_fd_ >= 0) ::close(log_fd_);
}

std::shared_ptr<const ScoringService::Snapshot> ScoringService::snapshot() const {
  std::lock_guard lock(snapshot_mutex_);
  return snapshot_;
}

void ScoringService::swap_model(Model<float> model) {
  auto current = snapshot();
  if (model.dims().vocab_size != current->vocab.size()) {
    throw std::invalid_argument("replacement model does not match the served vocabulary");
  }
  auto version = model.version();
  auto next = std::make_shared<const Snapshot>(Snapshot{std::move(model), current->vocab, current->splitter,
                                                        std::move(version)});
  std::lock_guard lock(snapshot_mutex_);
  snapshot_ = std::move(next);
}

std::string ScoringService::model_version() const { return snapshot()->version; }

ServiceResponse ScoringService::handle_score(std::string_view request_body) const {
  json req;
  try {
    req = json::parse(request_body);
  } catch (const json::parse_error&) {
    return error(400, "request body is not valid JSON");
  }
  if (!req.is_object()) return error(400, "request body must be a JSON object");

  const bool has_text = req.contains("headline") || req.contains("body");
  const int sources = int(has_text) + int(req.contains("html")) + int(req.contains("url"));
  if (sources != 1) return error(400, "provide exactly one of headline+body, html or url");
  for (const auto& [key, value] : req.items()) {
    if (key != "headline" && key != "body" && key != "html" && key != "url" && key != "model") {
      return error(400, "unknown field \"" + key + "\"");
    }
    if (!value.is_string()) return error(400, "\"" + key + "\" must be a string");
  }
  if (has_text && !(req.contains("headline") && req.contains("body"))) {
    return error(400, "headline and body must be given together");
  }

  const auto snap = snapshot();
  if (req.contains("model")) {
    const auto name = req["model"].get<std::string>();
    if (name != "default" && name != to_string(snap->model.kind())) return error(400, "unknown model \"" + name + "\"");
  }

  std::string headline;
  std::vector<std::string> paragraphs;
  if (has_text) {
    headline = req["headline"].get<std::string>();
    paragraphs = split_lines(req["body"].get<std::string>());
  } else {
    std::string html;
    if (req.contains("url")) {
      if (!options_.allow_fetch || !options_.fetcher) return error(403, "url fetching is disabled on this server");
      try {
        html = options_.fetcher(req["url"].get<std::string>());
      } catch (const std::exception& e) {
        return error(422, std::string("could not fetch url: ") + e.what());
      }
    } else {
      html = req["html"].get<std::string>();
    }
    try {
      auto page = extract_article(html);
      headline = std::move(page.headline);
      paragraphs = std::move(page.paragraphs);
    } catch (const ExtractionError& e) {
      return error(422, e.what());
    }
  }

  Article article;
  try {
    article = article_from_text(headline, paragraphs, snap->vocab);
  } catch (const std::invalid_argument& e) {
    return error(422, e.what());
  }

  const auto prediction = score_article(snap->model, article, snap->splitter);
  ordered_json out;
  out["score"] = prediction.score;
  out["label"] = prediction.score >= options_.display_threshold ? "incongruent" : "congruent";
  out["paragraph_scores"] = prediction.paragraph_scores;
  out["top_paragraph_index"] = prediction.top_paragraph_index;
  out["model_version"] = snap->version;
  return {200, std::move(out)};
}

ServiceResponse ScoringService::handle_feedback(std::string_view request_body) {
  json req;
  try {
    req = json::parse(request_body);
  } catch (const json::parse_error&) {
    return error(400, "request body is not valid JSON");
  }
  if (!req.is_object()) return error(400, "request body must be a JSON object");
  for (const auto& [key, value] : req.items()) {
    if (key != "url" && key != "headline_hash" && key != "label" && key != "score_shown" && key != "model_version") {
      return error(400, "unknown field \"" + key + "\"");
    }
  }
  FeedbackRecord record;
  try {
    record = FeedbackRecord::from_json(req);
  } catch (const std::invalid_argument& e) {
    return error(400, e.what());
  }
  if (log_fd_ < 0) return error(500, "feedback log is not configured");

  std::lock_guard lock(log_mutex_);
  record.id = next_id_;
  record.timestamp = utc_timestamp();
  const auto line = record.to_json().dump() + "\n";
  std::size_t written = 0;
  while (written < line.size()) {
    const auto n = ::write(log_fd_, line.data() + written, line.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      return error(500, std::string("feedback write failed: ") + std::strerror(errno));
    }
    written += static_cast<std::size_t>(n);
  }
  if (::fsync(log_fd_) != 0) return error(500, std::string("feedback fsync failed: ") + std::strerror(errno));
  ++next_id_;
  return {200, ordered_json{{"id", record.id}}};
}

ServiceResponse ScoringService::health() const {
  const auto uptime = std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
  return {200, ordered_json{{"status", "ok"}, {"model_version", model_version()}, {"uptime_seconds", uptime}}};
}

}  // namespace baitwatch
