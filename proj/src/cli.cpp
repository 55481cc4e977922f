#include "baitwatch/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "baitwatch/checkpoint.hpp"
#include "baitwatch/datagen.hpp"
#include "baitwatch/extract.hpp"
#include "baitwatch/features.hpp"
#include "baitwatch/hashing.hpp"
#include "baitwatch/http_server.hpp"
#include "baitwatch/metrics.hpp"
#include "baitwatch/pipeline.hpp"
#include "baitwatch/service.hpp"
#include "baitwatch/textcorpus.hpp"

namespace baitwatch::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr const char* kToolVersion = "0.1.0";

// JSON object overlay for --config. Keys are long option names of the
// chosen subcommand; a nested object keyed by a subcommand name also works.
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(const CLI::App* root) : root_(root) {}

  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    ordered_json j;
    for (const auto* opt : app->get_options()) {
      if (opt->get_lnames().empty() || opt->get_configurable() == false) continue;
      const auto& name = opt->get_lnames().front();
      if (opt->count() > 0) {
        j[name] = opt->as<std::string>();
      } else if (default_also && !opt->get_default_str().empty()) {
        j[name] = opt->get_default_str();
      }
    }
    return j.dump(2);
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json j;
    try {
      j = json::parse(input);
    } catch (const json::parse_error& e) {
      throw CLI::ConversionError("config file is not valid JSON: " + std::string(e.what()));
    }
    if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
    std::vector<CLI::ConfigItem> items;
    std::vector<std::string> base;
    if (root_ != nullptr) {
      const auto chosen = root_->get_subcommands();
      if (chosen.size() == 1) base.push_back(chosen.front()->get_name());
    }
    for (const auto& [key, value] : j.items()) {
      if (value.is_object()) {
        collect(value, {key}, items);
      } else {
        collect(json{{key, value}}, base, items);
      }
    }
    return items;
  }

 private:
  const CLI::App* root_ = nullptr;

  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  static void collect(const json& obj, const std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& out) {
    for (const auto& [key, value] : obj.items()) {
      if (value.is_object()) {
        auto next = parents;
        next.push_back(key);
        collect(value, next, out);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(value));
      }
      out.push_back(std::move(item));
    }
  }
};

void write_text(const std::string& path, const std::string& text) {
  if (auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

void ensure_parent(const std::string& path) {
  if (auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Sidecar naming inputs, seed, parameters and content hashes of outputs.
void write_manifest(const std::string& path, const std::string& command, const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs, const std::optional<std::uint64_t>& seed,
                    ordered_json parameters, ordered_json extra = ordered_json::object()) {
  ordered_json m;
  m["command"] = command;
  m["tool_version"] = kToolVersion;
  m["created"] = utc_timestamp();
  if (seed) m["seed"] = *seed;
  m["parameters"] = std::move(parameters);
  auto& in = m["inputs"] = ordered_json::array();
  for (const auto& p : inputs) in.push_back({{"path", p}, {"sha256", sha256_file(p)}});
  auto& out = m["outputs"] = ordered_json::array();
  for (const auto& p : outputs) out.push_back({{"path", p}, {"sha256", sha256_file(p)}});
  for (auto& [k, v] : extra.items()) m[k] = v;
  write_text(path, m.dump(2) + "\n");
}

std::string manifest_path_for(const std::string& artifact) { return artifact + ".manifest.json"; }

void check_vocab_range(std::span<const Article> articles, const Vocabulary& vocab, const std::string& what) {
  for (const auto& a : articles) {
    auto bad = [&](const TokenSeq& s) {
      return std::any_of(s.begin(), s.end(), [&](TokenId t) { return t >= vocab.size(); });
    };
    if (bad(a.headline) || std::any_of(a.paragraphs.begin(), a.paragraphs.end(), bad)) {
      throw std::runtime_error(what + ": article '" + a.id + "' uses token ids outside the vocabulary (size " +
                               std::to_string(vocab.size()) + ")");
    }
  }
}

ordered_json prediction_json(const ScoredPrediction& p, double threshold) {
  ordered_json out;
  out["score"] = p.score;
  out["label"] = p.score >= threshold ? "incongruent" : "congruent";
  out["paragraph_scores"] = p.paragraph_scores;
  out["top_paragraph_index"] = p.top_paragraph_index;
  out["model_version"] = p.model_version;
  return out;
}

// A trained model file is either a binary checkpoint or a linear baseline
// in JSON.
bool is_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  char magic[4] = {};
  in.read(magic, 4);
  return in.gcount() == 4 && std::string_view(magic, 4) == "BWCK";
}

std::atomic<int> g_signal{0};
extern "C" void on_signal(int sig) { g_signal.store(sig); }

// ---------------------------------------------------------------------------
// Subcommands

struct PrepOptions {
  std::string input;
  std::string output;
  std::string vocab_out;
  std::string vocab_in;
  std::size_t min_count = 1;
};

// Raw records: {"id", "category", "headline": str, "paragraphs": [str]} or
// with "body": str split at line breaks; optional "label".
int cmd_prep(const PrepOptions& o, std::ostream& out) {
  std::vector<json> raw;
  {
    std::ifstream in(o.input);
    if (!in) throw std::runtime_error("cannot read " + o.input);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        raw.push_back(json::parse(line));
        auto& r = raw.back();
        if (!r.is_object() || !r.contains("headline") || !r["headline"].is_string()) {
          throw std::invalid_argument("missing \"headline\" text");
        }
        if (!r.contains("paragraphs") && !r.contains("body")) throw std::invalid_argument("missing body text");
      } catch (const std::exception& e) {
        throw CorpusFormatError(n, e.what());
      }
    }
  }
  auto paragraphs_of = [](const json& r) {
    std::vector<std::string> ps;
    if (r.contains("paragraphs")) {
      for (const auto& p : r["paragraphs"]) ps.push_back(p.get<std::string>());
    } else {
      std::istringstream body(r["body"].get<std::string>());
      std::string line;
      while (std::getline(body, line)) ps.push_back(line);
    }
    return ps;
  };

  Vocabulary vocab;
  if (!o.vocab_in.empty()) {
    vocab = Vocabulary::load(o.vocab_in);
  } else {
    VocabularyBuilder builder;
    for (const auto& r : raw) {
      builder.add_text(r["headline"].get<std::string>());
      for (const auto& p : paragraphs_of(r)) builder.add_text(p);
    }
    vocab = builder.build(o.min_count);
  }

  ensure_parent(o.output);
  CorpusWriter writer(o.output);
  std::size_t written = 0;
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto& r = raw[i];
    Article a;
    try {
      a = article_from_text(r["headline"].get<std::string>(), paragraphs_of(r), vocab);
    } catch (const std::invalid_argument&) {
      ++skipped;
      continue;
    }
    a.id = r.contains("id") ? (r["id"].is_string() ? r["id"].get<std::string>() : r["id"].dump())
                            : "a" + std::to_string(i);
    a.category = r.value("category", "");
    if (r.contains("label")) a.label = r["label"].get<int>();
    validate(a);
    writer.write(a);
    ++written;
  }
  writer.close();

  std::vector<std::string> outputs{o.output};
  std::vector<std::string> inputs{o.input};
  if (!o.vocab_in.empty()) inputs.push_back(o.vocab_in);
  if (!o.vocab_out.empty()) {
    ensure_parent(o.vocab_out);
    vocab.save(o.vocab_out);
    outputs.push_back(o.vocab_out);
  }
  write_manifest(manifest_path_for(o.output), "prep", inputs, outputs, std::nullopt,
                 {{"min_count", o.min_count}, {"vocab_size", vocab.size()}},
                 {{"counts", {{"articles", written}, {"skipped_empty", skipped}}}});
  out << ordered_json{{"articles", written}, {"skipped_empty", skipped}, {"vocab_size", vocab.size()}}.dump() << "\n";
  return 0;
}

int cmd_stats(const std::string& corpus, std::ostream& out) {
  CorpusReader reader(corpus);
  CorpusStatsAccumulator acc;
  while (auto a = reader.next()) acc.add(*a);
  const auto s = acc.result();
  auto pair = [](const MeanStdErr& m) { return ordered_json{{"mean", m.mean}, {"std_error", m.std_error}}; };
  out << ordered_json{{"articles", s.articles},
                      {"headline_tokens", pair(s.headline_tokens)},
                      {"body_tokens", pair(s.body_tokens)},
                      {"paragraphs_per_body", pair(s.paragraphs_per_body)},
                      {"tokens_per_paragraph", pair(s.tokens_per_paragraph)}}
             .dump(2)
      << "\n";
  return 0;
}

struct GenerateOptions {
  std::string corpus;
  std::string out_dir;
  std::string vocab;
  std::uint64_t seed = 0;
  std::size_t donor_min = 1;
  std::size_t donor_max = 3;
  std::string mode = "insert";
  bool category_match = true;
  bool cross_category = false;
  std::vector<double> split{0.8, 0.1, 0.1};
  std::string blocklist;
  std::size_t per_class = 0;
};

int cmd_generate(const GenerateOptions& o, std::ostream& out) {
  GenConfig config;
  config.seed = o.seed;
  config.donor_min = o.donor_min;
  config.donor_max = o.donor_max;
  config.mode = insertion_mode_from_string(o.mode);
  config.category_match = o.category_match;
  config.cross_category = o.cross_category;
  if (o.split.size() != 3) throw CLI::ValidationError("--split", "expects three fractions");
  config.split_fractions = {o.split[0], o.split[1], o.split[2]};
  if (o.per_class > 0) config.per_class = o.per_class;
  if (!o.blocklist.empty()) config.advert_blocklist_path = o.blocklist;
  config.validate();

  const auto corpus = read_corpus(o.corpus);
  NgramBlocklist blocklist;
  std::optional<Vocabulary> vocab;
  if (!o.vocab.empty()) vocab = Vocabulary::load(o.vocab);
  if (!o.blocklist.empty()) blocklist = NgramBlocklist::load(o.blocklist, vocab ? &*vocab : nullptr);

  const auto dataset = build_dataset(corpus, config, blocklist);
  fs::create_directories(o.out_dir);
  const auto train = (fs::path(o.out_dir) / "train.jsonl").string();
  const auto dev = (fs::path(o.out_dir) / "dev.jsonl").string();
  const auto test = (fs::path(o.out_dir) / "test.jsonl").string();
  write_corpus(train, dataset.train);
  write_corpus(dev, dataset.dev);
  write_corpus(test, dataset.test);

  std::vector<std::string> inputs{o.corpus};
  if (!o.blocklist.empty()) inputs.push_back(o.blocklist);
  if (!o.vocab.empty()) inputs.push_back(o.vocab);
  const auto manifest = (fs::path(o.out_dir) / "manifest.json").string();
  ordered_json extra = dataset.manifest;
  write_manifest(manifest, "generate", inputs, {train, dev, test}, o.seed, config.to_json(), extra);
  out << ordered_json{{"counts", dataset.manifest["counts"]}, {"content_hash", dataset.manifest["content_hash"]}}.dump()
      << "\n";
  return 0;
}

int cmd_ip_expand(const std::string& input, const std::string& output, std::ostream& out) {
  const auto articles = read_corpus(input);
  const auto expanded = ip_expand_articles(articles);
  ensure_parent(output);
  write_corpus(output, expanded);
  write_manifest(manifest_path_for(output), "ip-expand", {input}, {output}, std::nullopt, ordered_json::object(),
                 {{"counts", {{"articles", articles.size()}, {"instances", expanded.size()}}}});
  out << ordered_json{{"articles", articles.size()}, {"instances", expanded.size()}}.dump() << "\n";
  return 0;
}

struct TrainOptions {
  std::string train;
  std::string dev;
  std::string vocab;
  std::string out;
  std::string history;
  std::string features_csv;
  std::string model = "ahde";
  bool ip = true;
  std::string precision = "float";
  TrainConfig config;
  std::size_t linear_epochs = 200;
  double linear_lr = 0.5;
};

int cmd_train(TrainOptions o, std::ostream& out, std::ostream& err) {
  const auto train_set = read_corpus(o.train);
  const std::vector<Article> dev_set = o.dev.empty() ? std::vector<Article>{} : read_corpus(o.dev);
  std::vector<std::string> inputs{o.train};
  if (!o.dev.empty()) inputs.push_back(o.dev);
  ensure_parent(o.out);

  if (o.model == "linear") {
    auto baseline = train_feature_baseline(train_set, o.ip, {o.linear_epochs, o.linear_lr});
    write_text(o.out, baseline.to_json().dump(2) + "\n");
    std::vector<std::string> outputs{o.out};
    if (!o.features_csv.empty()) {
      ensure_parent(o.features_csv);
      std::ofstream csv(o.features_csv);
      write_feature_csv(csv, train_set, baseline.idf);
      csv.close();
      outputs.push_back(o.features_csv);
    }
    ordered_json summary{{"model", "linear"}, {"ip", o.ip}};
    if (!dev_set.empty()) {
      std::vector<double> scores;
      for (const auto& a : dev_set) scores.push_back(baseline.score(a));
      const auto labels = labels_of(dev_set);
      summary["dev_accuracy"] = accuracy(scores, labels);
      summary["dev_auroc"] = auroc(scores, labels);
    }
    write_manifest(manifest_path_for(o.out), "train", inputs, outputs, o.config.seed,
                   {{"model", "linear"}, {"ip", o.ip}, {"epochs", o.linear_epochs}, {"learning_rate", o.linear_lr}},
                   {{"summary", summary}});
    out << summary.dump() << "\n";
    return 0;
  }

  if (o.vocab.empty()) throw CLI::RequiredError("--vocab");
  const auto vocab = Vocabulary::load(o.vocab);
  inputs.push_back(o.vocab);
  check_vocab_range(train_set, vocab, o.train);
  check_vocab_range(dev_set, vocab, o.dev);
  const SentenceSplitter splitter(vocab);

  o.config.kind = model_kind_from_string(o.model);
  o.config.ip = o.ip;
  o.config.dims.vocab_size = vocab.size();

  auto report = [&](const EpochRecord& r) {
    err << "epoch " << r.epoch << " train_loss " << r.train_loss << " dev_loss " << r.dev_loss << " dev_auroc "
        << r.dev_auroc << "\n";
  };

  Model<float> best = Model<float>::create(o.config.kind, o.config.dims, o.config.ip, o.config.seed);
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  bool diverged = false;
  std::string message;
  if (o.precision == "double") {
    auto r = train<double>(o.config, train_set, dev_set, splitter, report);
    best = r.best.cast<float>();
    history = std::move(r.history);
    best_epoch = r.best_epoch;
    diverged = r.diverged;
    message = r.message;
  } else if (o.precision == "float") {
    auto r = train<float>(o.config, train_set, dev_set, splitter, report);
    best = std::move(r.best);
    history = std::move(r.history);
    best_epoch = r.best_epoch;
    diverged = r.diverged;
    message = r.message;
  } else {
    throw CLI::ValidationError("--precision", "must be float or double");
  }

  save_checkpoint(o.out, best);
  std::vector<std::string> outputs{o.out};
  if (!o.history.empty()) {
    ensure_parent(o.history);
    write_history_csv(o.history, history);
    outputs.push_back(o.history);
  }
  auto params = o.config.to_json();
  params["precision"] = o.precision;
  const auto version = best.version();
  write_manifest(manifest_path_for(o.out), "train", inputs, outputs, o.config.seed, params,
                 {{"model_version", version}, {"best_epoch", best_epoch}, {"diverged", diverged}});
  if (diverged) {
    err << message << "\n";
    err << "saved the last good model (epoch " << best_epoch << ") to " << o.out << "\n";
    return 1;
  }
  out << ordered_json{{"checkpoint", o.out}, {"model_version", version}, {"best_epoch", best_epoch}}.dump() << "\n";
  return 0;
}

int cmd_eval(const std::string& model_path, const std::string& data, const std::string& vocab_path,
             const std::string& report_path, std::ostream& out) {
  const auto articles = read_corpus(data);
  const auto labels = labels_of(articles);
  std::vector<double> scores;
  ordered_json model_info;
  if (is_checkpoint_file(model_path)) {
    const auto model = load_checkpoint(model_path);
    SentenceSplitter splitter;
    if (!vocab_path.empty()) {
      const auto vocab = Vocabulary::load(vocab_path);
      if (vocab.size() != model.dims().vocab_size) throw std::runtime_error("vocabulary does not match the model");
      splitter = SentenceSplitter(vocab);
    } else if (model.ip() && is_hierarchical(model.kind())) {
      throw CLI::RequiredError("--vocab (needed to split sentences for this model)");
    }
    for (const auto& a : articles) {
      for (const auto& p : a.paragraphs) {
        for (auto t : p) {
          if (t >= model.dims().vocab_size) throw std::runtime_error("article '" + a.id + "' uses ids outside the model vocabulary");
        }
      }
    }
    scores = score_articles(model, articles, splitter);
    model_info = {{"kind", std::string(to_string(model.kind()))}, {"ip", model.ip()}, {"model_version", model.version()}};
  } else {
    const auto baseline = FeatureBaseline::from_json(json::parse(read_text(model_path)));
    for (const auto& a : articles) scores.push_back(baseline.score(a));
    model_info = {{"kind", "linear"}, {"ip", baseline.ip}};
  }
  auto report = evaluate(scores, labels).to_json();
  ordered_json doc;
  doc["model"] = model_info;
  doc["data"] = data;
  for (auto& [k, v] : report.items()) doc[k] = v;
  const auto text = doc.dump(2) + "\n";
  out << text;
  if (!report_path.empty()) {
    write_text(report_path, text);
    std::vector<std::string> inputs{model_path, data};
    if (!vocab_path.empty()) inputs.push_back(vocab_path);
    write_manifest(manifest_path_for(report_path), "eval", inputs, {report_path}, std::nullopt, ordered_json::object());
  }
  return 0;
}

struct ScoreOptions {
  std::string checkpoint;
  std::string vocab;
  std::string headline_file;
  std::string body_file;
  std::string html_file;
  double threshold = 0.5;
};

std::string strip_trailing_newlines(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

int cmd_score(const ScoreOptions& o, std::ostream& out) {
  const auto model = load_checkpoint(o.checkpoint);
  const auto vocab = Vocabulary::load(o.vocab);
  if (vocab.size() != model.dims().vocab_size) throw std::runtime_error("vocabulary does not match the model");
  Article article;
  if (!o.html_file.empty()) {
    const auto page = extract_article(read_text(o.html_file));
    article = article_from_text(page.headline, page.paragraphs, vocab);
  } else {
    if (o.headline_file.empty() || o.body_file.empty()) {
      throw CLI::ValidationError("score", "give --headline-file and --body-file, or --html-file");
    }
    article = article_from_text(strip_trailing_newlines(read_text(o.headline_file)), read_text(o.body_file), vocab);
  }
  const auto p = score_article(model, article, SentenceSplitter(vocab));
  out << prediction_json(p, o.threshold).dump() << "\n";
  return 0;
}

struct ServeOptions {
  std::string checkpoint;
  std::string vocab;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string feedback_log = "feedback.jsonl";
  bool allow_fetch = false;
  double threshold = 0.5;
};

int cmd_serve(const ServeOptions& o, std::ostream& err) {
  ServiceOptions options;
  options.feedback_log_path = o.feedback_log;
  options.display_threshold = o.threshold;
  options.allow_fetch = o.allow_fetch;
  if (o.allow_fetch) options.fetcher = fetch_url;
  ensure_parent(o.feedback_log);
  ScoringService service(load_checkpoint(o.checkpoint), Vocabulary::load(o.vocab), std::move(options));
  HttpServer server(service);
  const int port = server.bind(o.host, o.port);
  g_signal.store(0);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::signal(SIGHUP, on_signal);
  server.start();
  err << "serving model " << service.model_version() << " on http://" << o.host << ":" << port << "\n";
  err << "send SIGHUP to reload " << o.checkpoint << "\n";
  while (true) {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    const int sig = g_signal.exchange(0);
    if (sig == SIGHUP) {
      try {
        service.swap_model(load_checkpoint(o.checkpoint));
        err << "reloaded model " << service.model_version() << "\n";
      } catch (const std::exception& e) {
        err << "reload failed, keeping " << service.model_version() << ": " << e.what() << "\n";
      }
    } else if (sig != 0) {
      break;
    }
  }
  server.stop();
  return 0;
}

struct SynthOptions {
  std::size_t articles = 2000;
  std::size_t topics = 5;
  std::size_t words_per_topic = 200;
  std::uint64_t seed = 0;
  std::string out;
  std::string vocab_out;
};

int cmd_synth(const SynthOptions& o, std::ostream& out) {
  const auto corpus = make_synthetic_corpus(o.articles, o.topics, o.words_per_topic, o.seed);
  ensure_parent(o.out);
  write_corpus(o.out, corpus.articles);
  std::vector<std::string> outputs{o.out};
  if (!o.vocab_out.empty()) {
    ensure_parent(o.vocab_out);
    corpus.vocab.save(o.vocab_out);
    outputs.push_back(o.vocab_out);
  }
  write_manifest(manifest_path_for(o.out), "synth-corpus", {}, outputs, o.seed,
                 {{"articles", o.articles}, {"topics", o.topics}, {"words_per_topic", o.words_per_topic}});
  out << ordered_json{{"articles", corpus.articles.size()}, {"vocab_size", corpus.vocab.size()}}.dump() << "\n";
  return 0;
}

// Help and --version exit 0; every other parse or validation failure is a
// usage error.
int usage_exit(const CLI::App& app, const CLI::ParseError& e, std::ostream& out, std::ostream& err) {
  const int code = app.exit(e, out, err);
  return code == 0 ? 0 : 2;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Headline incongruity toolkit: corpus preparation, dataset generation, training, evaluation and serving",
               "baitwatch"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);
  app.option_defaults()->always_capture_default();
  app.fallthrough();
  app.config_formatter(std::make_shared<JsonConfig>(&app));
  app.set_config("--config", "", "JSON file of option values; explicit flags take precedence");

  PrepOptions prep;
  auto* prep_cmd = app.add_subcommand("prep", "Tokenize raw text articles into an encoded corpus and vocabulary");
  prep_cmd->add_option("--input", prep.input, "Raw JSONL with text headline and paragraphs/body")->required();
  prep_cmd->add_option("--output", prep.output, "Encoded corpus JSONL")->required();
  prep_cmd->add_option("--vocab-out", prep.vocab_out, "Write the vocabulary here");
  prep_cmd->add_option("--vocab", prep.vocab_in, "Encode with an existing vocabulary instead of building one");
  prep_cmd->add_option("--min-count", prep.min_count, "Minimum token frequency")->check(CLI::PositiveNumber);

  std::string stats_corpus;
  auto* stats_cmd = app.add_subcommand("stats", "Corpus statistics (means and standard errors)");
  stats_cmd->add_option("--corpus", stats_corpus, "Corpus JSONL")->required();

  GenerateOptions gen;
  auto* gen_cmd = app.add_subcommand("generate", "Build a balanced incongruent/congruent dataset");
  gen_cmd->add_option("--corpus", gen.corpus, "Unlabeled corpus JSONL")->required();
  gen_cmd->add_option("--out-dir", gen.out_dir, "Directory for train/dev/test JSONL and manifest")->required();
  gen_cmd->add_option("--seed", gen.seed, "Random seed")->required();
  gen_cmd->add_option("--donor-min", gen.donor_min, "Shortest implanted run of donor paragraphs");
  gen_cmd->add_option("--donor-max", gen.donor_max, "Longest implanted run of donor paragraphs");
  gen_cmd->add_option("--mode", gen.mode, "insert or replace")->check(CLI::IsMember({"insert", "replace"}));
  gen_cmd->add_option("--category-match", gen.category_match, "Donors share the target's category (true/false)");
  gen_cmd->add_option("--cross-category", gen.cross_category,
                      "Donors come from a different category (true/false; needs --category-match false)");
  gen_cmd->add_option("--split", gen.split, "Train, dev and test fractions")->expected(3);
  gen_cmd->add_option("--blocklist", gen.blocklist, "Advertising n-gram blocklist");
  gen_cmd->add_option("--vocab", gen.vocab, "Vocabulary for a word blocklist (ids otherwise)");
  gen_cmd->add_option("--per-class", gen.per_class, "Articles per class (default: half the corpus)");

  std::string ip_in;
  std::string ip_out;
  auto* ip_cmd = app.add_subcommand("ip-expand", "Expand articles into one record per paragraph");
  ip_cmd->add_option("--input", ip_in, "Labeled corpus JSONL")->required();
  ip_cmd->add_option("--output", ip_out, "Expanded JSONL")->required();

  TrainOptions tr;
  auto* train_cmd = app.add_subcommand("train", "Train a detector");
  train_cmd->add_option("--train", tr.train, "Training split JSONL")->required();
  train_cmd->add_option("--dev", tr.dev, "Dev split JSONL (model selection)");
  train_cmd->add_option("--vocab", tr.vocab, "Vocabulary file (neural models)");
  train_cmd->add_option("--out", tr.out, "Checkpoint (or linear model JSON) path")->required();
  train_cmd->add_option("--history", tr.history, "Per-epoch history CSV");
  train_cmd->add_option("--features-csv", tr.features_csv, "Linear model: dump training features as CSV");
  train_cmd->add_option("--model", tr.model, "rde, cde, hrde, ahde, hre or linear")
      ->check(CLI::IsMember({"rde", "cde", "hrde", "ahde", "hre", "linear"}));
  train_cmd->add_option("--ip", tr.ip, "Independent paragraph scoring (true/false)");
  train_cmd->add_option("--seed", tr.config.seed, "Random seed")->required();
  train_cmd->add_option("--epochs", tr.config.epochs, "Training epochs");
  train_cmd->add_option("--batch-size", tr.config.batch_size, "Instances per update")->check(CLI::PositiveNumber);
  train_cmd->add_option("--lr", tr.config.learning_rate, "Adam learning rate")->check(CLI::PositiveNumber);
  train_cmd->add_option("--clip-norm", tr.config.clip_norm, "Global gradient norm limit")->check(CLI::PositiveNumber);
  train_cmd->add_option("--embedding", tr.config.dims.embedding, "Embedding size");
  train_cmd->add_option("--word-hidden", tr.config.dims.word_hidden, "Word-level GRU size");
  train_cmd->add_option("--paragraph-hidden", tr.config.dims.paragraph_hidden, "Paragraph-level GRU size");
  train_cmd->add_option("--attention", tr.config.dims.attention, "Attention size (0: attended state size)");
  train_cmd->add_option("--conv-filters", tr.config.dims.conv_filters, "CDE filters per width");
  train_cmd->add_option("--max-unit-tokens", tr.config.max_unit_tokens, "Training truncation per unit");
  train_cmd->add_option("--max-units", tr.config.max_units, "Training truncation of units per document");
  train_cmd->add_option("--eval-every", tr.config.eval_every, "Dev evaluation cadence in epochs");
  train_cmd->add_option("--precision", tr.precision, "float or double")->check(CLI::IsMember({"float", "double"}));
  train_cmd->add_option("--linear-epochs", tr.linear_epochs, "Linear model gradient steps");
  train_cmd->add_option("--linear-lr", tr.linear_lr, "Linear model step size");

  std::string eval_model;
  std::string eval_data;
  std::string eval_vocab;
  std::string eval_report;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a trained model and print the report");
  eval_cmd->add_option("--model", eval_model, "Checkpoint or linear model JSON")->required();
  eval_cmd->add_option("--data", eval_data, "Labeled JSONL")->required();
  eval_cmd->add_option("--vocab", eval_vocab, "Vocabulary (for sentence splitting)");
  eval_cmd->add_option("--report", eval_report, "Also write the report here");

  ScoreOptions sc;
  auto* score_cmd = app.add_subcommand("score", "Score one article");
  score_cmd->add_option("--checkpoint", sc.checkpoint, "Model checkpoint")->required();
  score_cmd->add_option("--vocab", sc.vocab, "Vocabulary")->required();
  score_cmd->add_option("--headline-file", sc.headline_file, "Headline text file");
  score_cmd->add_option("--body-file", sc.body_file, "Body text file, one paragraph per line");
  score_cmd->add_option("--html-file", sc.html_file, "Page markup instead of text files");
  score_cmd->add_option("--threshold", sc.threshold, "Display threshold for the label");

  ServeOptions sv;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP scoring service");
  serve_cmd->add_option("--checkpoint", sv.checkpoint, "Model checkpoint")->required()->envname("BAITWATCH_CHECKPOINT");
  serve_cmd->add_option("--vocab", sv.vocab, "Vocabulary")->required()->envname("BAITWATCH_VOCAB");
  serve_cmd->add_option("--host", sv.host, "Bind address")->envname("BAITWATCH_HOST");
  serve_cmd->add_option("--port", sv.port, "Port (0 picks a free one)")->envname("BAITWATCH_PORT");
  serve_cmd->add_option("--feedback-log", sv.feedback_log, "Feedback JSONL log")->envname("BAITWATCH_FEEDBACK_LOG");
  serve_cmd->add_option("--allow-fetch", sv.allow_fetch, "Allow {\"url\": ...} requests (true/false)")
      ->envname("BAITWATCH_ALLOW_FETCH");
  serve_cmd->add_option("--threshold", sv.threshold, "Display threshold for the label");

  SynthOptions sy;
  auto* synth_cmd = app.add_subcommand("synth-corpus", "Generate a synthetic topical corpus");
  synth_cmd->add_option("--articles", sy.articles, "Number of articles");
  synth_cmd->add_option("--topics", sy.topics, "Number of topics (at least 2)");
  synth_cmd->add_option("--words-per-topic", sy.words_per_topic, "Distinct words per topic");
  synth_cmd->add_option("--seed", sy.seed, "Random seed")->required();
  synth_cmd->add_option("--out", sy.out, "Corpus JSONL")->required();
  synth_cmd->add_option("--vocab-out", sy.vocab_out, "Vocabulary file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return usage_exit(app, e, out, err);
  }

  try {
    if (*prep_cmd) return cmd_prep(prep, out);
    if (*stats_cmd) return cmd_stats(stats_corpus, out);
    if (*gen_cmd) return cmd_generate(gen, out);
    if (*ip_cmd) return cmd_ip_expand(ip_in, ip_out, out);
    if (*train_cmd) return cmd_train(tr, out, err);
    if (*eval_cmd) return cmd_eval(eval_model, eval_data, eval_vocab, eval_report, out);
    if (*score_cmd) return cmd_score(sc, out);
    if (*serve_cmd) return cmd_serve(sv, err);
    if (*synth_cmd) return cmd_synth(sy, out);
  } catch (const CLI::ParseError& e) {
    return usage_exit(app, e, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace baitwatch::cli
