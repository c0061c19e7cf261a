#include "attrgen/gateway.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <unordered_set>

#include "attrgen/unicode.hpp"
#include "httplib.h"
#include "json.hpp"

namespace attrgen {

using nlohmann::json;

const char* step_name(Step step) {
  switch (step) {
    case Step::selection: return "selection";
    case Step::planning: return "planning";
    case Step::fusion: return "fusion";
    case Step::cot: return "cot";
    case Step::end_to_end: return "end_to_end";
  }
  return "unknown";
}

LMParams default_params(Step step, TaskKind task) {
  LMParams p;
  p.max_tokens = 1024;
  p.retries = 2;
  const bool mds = task == TaskKind::mds;
  switch (step) {
    case Step::selection:
      p.temperature = mds ? 0.1 : 0.3;
      p.fewshot_k = mds ? 2 : 4;
      break;
    case Step::planning:
      p.temperature = mds ? 0.5 : 0.1;
      p.fewshot_k = mds ? 2 : 1;
      break;
    case Step::fusion:
      p.temperature = mds ? 0.3 : 0.1;
      p.fewshot_k = mds ? 3 : 2;
      break;
    case Step::cot:
      p.temperature = mds ? 0.1 : 0.3;
      p.fewshot_k = mds ? 3 : 1;
      break;
    case Step::end_to_end:
      p.temperature = mds ? 0.5 : 0.7;
      p.fewshot_k = mds ? 1 : 3;
      break;
  }
  return p;
}

std::vector<MockScriptLine> parse_mock_script(const std::string& jsonl) {
  std::vector<MockScriptLine> lines;
  std::istringstream in(jsonl);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const std::exception& e) {
      throw std::runtime_error("mock script line " + std::to_string(lineno) + ": " +
                               e.what());
    }
    MockScriptLine entry;
    entry.step = j.at("step").get<std::string>();
    entry.response = j.at("response").get<std::string>();
    if (j.contains("instance")) entry.instance = j.at("instance").get<std::string>();
    lines.push_back(std::move(entry));
  }
  return lines;
}

std::vector<MockScriptLine> load_mock_script(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mock script: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_mock_script(buf.str());
}

ScriptedLmClient::ScriptedLmClient(const std::vector<MockScriptLine>& lines) {
  for (const MockScriptLine& l : lines) queues_[l.step].push_back(l.response);
}

std::string ScriptedLmClient::complete(const std::string& step, const std::string& prompt,
                                       const LMParams& params) {
  (void)prompt;
  (void)params;
  auto it = queues_.find(step);
  if (it == queues_.end() || it->second.empty()) {
    throw std::runtime_error("mock script has no response left for step '" + step + "'");
  }
  std::string response = std::move(it->second.front());
  it->second.pop_front();
  return response;
}

bool ScriptedLmClient::exhausted() const {
  for (const auto& [step, q] : queues_) {
    if (!q.empty()) return false;
  }
  return true;
}

std::string EchoLmClient::complete(const std::string& step, const std::string& prompt,
                                   const LMParams& params) {
  (void)step;
  (void)params;
  const std::size_t pos = prompt.rfind(marker_);
  if (pos == std::string::npos) return prompt;
  return prompt.substr(pos + marker_.size());
}

namespace {

// Splits "http://host:port/path" into client base and request path.
std::pair<std::string, std::string> split_url(const std::string& url) {
  const std::size_t scheme = url.find("://");
  if (scheme == std::string::npos) {
    throw std::runtime_error("endpoint must be a full URL: " + url);
  }
  const std::size_t slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

std::string post_json(const std::string& endpoint, const json& body,
                      const httplib::Headers& headers, int retries) {
  const auto [base, path] = split_url(endpoint);
  std::string last_error;
  for (int attempt = 0; attempt <= retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(100 << (attempt - 1)));
    }
    httplib::Client client(base);
    client.set_read_timeout(120, 0);
    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) {
      last_error = "transport error " + httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    return res->body;
  }
  throw std::runtime_error("request to " + endpoint + " failed: " + last_error);
}

std::string require_env(const char* name) {
  const char* value = std::getenv(name);
  if (!value || !*value) {
    throw std::runtime_error(std::string("environment variable ") + name + " is not set");
  }
  return value;
}

}  // namespace

HttpLmClient::HttpLmClient(std::string endpoint, std::string api_key, std::string model)
    : endpoint_(std::move(endpoint)), api_key_(std::move(api_key)), model_(std::move(model)) {}

std::unique_ptr<HttpLmClient> HttpLmClient::from_env() {
  std::string endpoint = require_env(kEnvLmEndpoint);
  std::string key = require_env(kEnvLmApiKey);
  const char* model = std::getenv(kEnvLmModel);
  return std::make_unique<HttpLmClient>(std::move(endpoint), std::move(key),
                                        model ? model : "");
}

std::string HttpLmClient::complete(const std::string& step, const std::string& prompt,
                                   const LMParams& params) {
  (void)step;
  json body{{"messages", json::array({json{{"role", "user"}, {"content", prompt}}})},
            {"temperature", params.temperature},
            {"max_tokens", params.max_tokens}};
  if (!model_.empty()) body["model"] = model_;
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  const std::string raw = post_json(endpoint_, body, headers, params.retries);
  json reply = json::parse(raw);
  if (reply.contains("choices") && !reply["choices"].empty()) {
    const json& choice = reply["choices"][0];
    if (choice.contains("message")) return choice["message"].value("content", "");
    if (choice.contains("text")) return choice["text"].get<std::string>();
  }
  if (reply.contains("completion")) return reply["completion"].get<std::string>();
  if (reply.contains("content") && reply["content"].is_string()) {
    return reply["content"].get<std::string>();
  }
  throw std::runtime_error("unrecognized completion response shape from " + endpoint_);
}

namespace {

const std::unordered_set<std::string>& stopwords() {
  static const std::unordered_set<std::string> kSet = {
      "a",    "an",   "the",  "is",   "are",  "was", "were", "be",   "been", "being",
      "of",   "to",   "in",   "on",   "at",   "and", "or",   "it",   "its",  "this",
      "that", "these", "those", "as", "by",   "for", "with", "from", "has",  "have",
      "had",  "do",   "does", "did",  "not",  "no",  "but",  "they", "their", "there",
      "he",   "she",  "his",  "her",  "we",   "i",   "you",  "will", "would", "can"};
  return kSet;
}

std::vector<std::string> content_words(const std::string& text) {
  std::vector<std::string> words;
  std::u32string cur;
  auto flush = [&]() {
    if (cur.empty()) return;
    std::string w = to_utf8(cur);
    cur.clear();
    if (stopwords().count(w) == 0) words.push_back(std::move(w));
  };
  for (char32_t cp : to_u32(text)) {
    if (is_letter(cp) || is_digit(cp)) {
      cur.push_back(fold_case(cp));
    } else {
      flush();
    }
  }
  flush();
  return words;
}

}  // namespace

bool ContainmentNliClient::entails(const std::string& premise, const std::string& hypothesis) {
  if (hypothesis.empty()) throw std::runtime_error("entails: empty hypothesis");
  const std::vector<std::string> premise_words = content_words(premise);
  const std::unordered_set<std::string> bag(premise_words.begin(), premise_words.end());
  for (const std::string& w : content_words(hypothesis)) {
    if (bag.count(w) == 0) return false;
  }
  return true;
}

HttpNliClient::HttpNliClient(std::string endpoint) : endpoint_(std::move(endpoint)) {}

std::unique_ptr<HttpNliClient> HttpNliClient::from_env() {
  return std::make_unique<HttpNliClient>(require_env(kEnvNliEndpoint));
}

bool HttpNliClient::entails(const std::string& premise, const std::string& hypothesis) {
  if (hypothesis.empty()) throw std::runtime_error("entails: empty hypothesis");
  const json body{{"premise", premise}, {"hypothesis", hypothesis}};
  const std::string raw = post_json(endpoint_, body, {}, 2);
  json reply = json::parse(raw);
  if (reply.contains("entailed")) return reply["entailed"].get<bool>();
  if (reply.contains("label")) {
    const std::string label = reply["label"].get<std::string>();
    return label == "entailment" || label == "entailed";
  }
  if (reply.contains("score")) return reply["score"].get<double>() >= 0.5;
  throw std::runtime_error("unrecognized entailment response shape from " + endpoint_);
}

}  // namespace attrgen
