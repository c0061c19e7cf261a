#pragma once

#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "attrgen/corpus.hpp"

namespace attrgen {

struct LMParams {
  double temperature = 0.0;
  int fewshot_k = 0;
  int max_tokens = 1024;
  int retries = 2;

  friend bool operator==(const LMParams&, const LMParams&) = default;
};

enum class Step { selection, planning, fusion, cot, end_to_end };

const char* step_name(Step step);

// Tuned sampling settings per pipeline step and task.
LMParams default_params(Step step, TaskKind task);

class LmClient {
 public:
  virtual ~LmClient() = default;
  // step identifies the pipeline stage making the call; scripted backends
  // key their replies on it.
  virtual std::string complete(const std::string& step, const std::string& prompt,
                               const LMParams& params) = 0;
};

struct MockScriptLine {
  std::string step;
  std::optional<std::string> instance;
  std::string response;
};

std::vector<MockScriptLine> load_mock_script(const std::string& path);
std::vector<MockScriptLine> parse_mock_script(const std::string& jsonl);

// Replays scripted responses in order, one queue per step name. Not
// shareable across concurrent runs; build one per instance.
class ScriptedLmClient : public LmClient {
 public:
  explicit ScriptedLmClient(const std::vector<MockScriptLine>& lines);
  std::string complete(const std::string& step, const std::string& prompt,
                       const LMParams& params) override;
  bool exhausted() const;

 private:
  std::map<std::string, std::deque<std::string>> queues_;
};

// Returns whatever follows the last echo marker in the prompt; handy for
// tests that assert on prompt contents.
class EchoLmClient : public LmClient {
 public:
  explicit EchoLmClient(std::string marker = "<<ECHO>>") : marker_(std::move(marker)) {}
  std::string complete(const std::string& step, const std::string& prompt,
                       const LMParams& params) override;

 private:
  std::string marker_;
};

inline constexpr const char* kEnvLmEndpoint = "ATTRGEN_LM_ENDPOINT";
inline constexpr const char* kEnvLmApiKey = "ATTRGEN_LM_API_KEY";
inline constexpr const char* kEnvLmModel = "ATTRGEN_LM_MODEL";
inline constexpr const char* kEnvNliEndpoint = "ATTRGEN_NLI_ENDPOINT";

// POSTs a chat-completion style JSON body and reads the first choice.
// Retries transport failures with exponential backoff.
class HttpLmClient : public LmClient {
 public:
  HttpLmClient(std::string endpoint, std::string api_key, std::string model = "");
  static std::unique_ptr<HttpLmClient> from_env();  // throws naming the missing var
  std::string complete(const std::string& step, const std::string& prompt,
                       const LMParams& params) override;

 private:
  std::string endpoint_;
  std::string api_key_;
  std::string model_;
};

class NliClient {
 public:
  virtual ~NliClient() = default;
  // Throws on empty hypothesis.
  virtual bool entails(const std::string& premise, const std::string& hypothesis) = 0;
};

// Lexical stand-in for a real entailment judge: true when every content word
// of the hypothesis occurs in the premise. Monotone in the premise.
class ContainmentNliClient : public NliClient {
 public:
  bool entails(const std::string& premise, const std::string& hypothesis) override;
};

class HttpNliClient : public NliClient {
 public:
  explicit HttpNliClient(std::string endpoint);
  static std::unique_ptr<HttpNliClient> from_env();
  bool entails(const std::string& premise, const std::string& hypothesis) override;

 private:
  std::string endpoint_;
};

}  // namespace attrgen
