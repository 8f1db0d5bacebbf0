#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "resum/render.hpp"
#include "resum/semaphore.hpp"
#include "resum/tokenizer.hpp"

namespace resum {

struct SamplingParams {
  double temperature = 0.6;
  double top_p = 0.95;
  int max_tokens = 4096;
};

struct ModelEndpoint {
  std::string base_url;
  std::string model_name;
  std::string api_key_env;          // env var holding the bearer token
  int timeout_ms = 60000;
  int max_retries = 2;
  int context_window_tokens = 0;    // 0 = unknown; >0 enables the overflow check
};

struct TransportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The server (or the local precheck) rejected the prompt as exceeding the
// model window.
struct ContextOverflowRejected : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Tagged-output parsing
// ---------------------------------------------------------------------------

enum class ToolName { Search, Visit };

struct ToolCallSpec {
  ToolName name = ToolName::Search;
  std::vector<std::string> queries;  // search
  std::vector<std::string> urls;     // visit
  std::string goal;                  // visit
};

struct AgentStep {
  std::string thought;
  std::optional<ToolCallSpec> tool_call;
  std::string raw_tool_call;  // exact text inside <tool_call>, trimmed
  std::optional<std::string> answer;
};

enum class ViolationReason { MissingThink, NoAction, MultipleActions, UnparsableCall };

struct FormatViolation {
  ViolationReason reason = ViolationReason::NoAction;
  std::string detail;
  // NoAction with a well-formed thought is the "no answer or tool call"
  // case; summarizing rollouts report it as FailedNoAction, not FailedFormat.
  bool thought_present = false;
};

std::string to_string(ViolationReason r);

using ParseResult = std::variant<AgentStep, FormatViolation>;

// Total over arbitrary bytes: extracts the <think> block and exactly one of
// a structured <tool_call> or an <answer> block; everything else is a
// FormatViolation. Trailing text after the action is tolerated and
// discarded.
ParseResult parse_agent_output(std::string_view raw);

// ---------------------------------------------------------------------------
// Chat backends
// ---------------------------------------------------------------------------

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  // Returns assistant text; throws TransportError (retryable) or
  // ContextOverflowRejected (terminal).
  virtual std::string complete(const ModelEndpoint& endpoint,
                               const std::vector<Message>& messages,
                               const SamplingParams& sampling) = 0;
};

// OpenAI-compatible chat-completions client over HTTP.
class HttpBackend final : public ChatBackend {
 public:
  std::string complete(const ModelEndpoint& endpoint, const std::vector<Message>& messages,
                       const SamplingParams& sampling) override;
};

// Canonical request body; also the hash input for request logging and replay.
std::string canonical_request_json(const ModelEndpoint& endpoint,
                                   const std::vector<Message>& messages,
                                   const SamplingParams& sampling);
std::string request_hash(const ModelEndpoint& endpoint, const std::vector<Message>& messages,
                         const SamplingParams& sampling);

// Deterministic backend replaying recorded responses. Responses live in a
// directory as <hash>.txt; the Nth occurrence of the same request within a
// run prefers <hash>.N.txt when present (lets fixtures script retry paths).
class ReplayBackend final : public ChatBackend {
 public:
  explicit ReplayBackend(std::filesystem::path fixtures_dir);
  std::string complete(const ModelEndpoint& endpoint, const std::vector<Message>& messages,
                       const SamplingParams& sampling) override;

 private:
  std::filesystem::path dir_;
  std::unordered_map<std::string, int> occurrence_;
  std::mutex mutex_;
};

// ---------------------------------------------------------------------------
// Gateway
// ---------------------------------------------------------------------------

// Uniform access to all model endpoints: local window precheck, retry with
// exponential backoff on transport failures, hash-addressed request/response
// logging, optional global in-flight limit. Shareable across rollouts. The
// log layout matches what ReplayBackend reads, so replay fixtures are minted
// from live runs by pointing log_dir at the future fixtures directory.
class Gateway {
 public:
  struct Options {
    std::filesystem::path log_dir;  // empty = logging disabled
    int backoff_base_ms = 250;      // doubled per retry; 0 in tests
    int max_concurrent = 0;         // 0 = unlimited
  };

  Gateway(std::shared_ptr<ChatBackend> backend, const Tokenizer& tokenizer);
  Gateway(std::shared_ptr<ChatBackend> backend, const Tokenizer& tokenizer, Options options);
  ~Gateway();

  std::string complete(const ModelEndpoint& endpoint, const std::vector<Message>& messages,
                       const SamplingParams& sampling);

 private:
  std::shared_ptr<ChatBackend> backend_;
  const Tokenizer& tokenizer_;
  Options options_;
  std::mutex log_mutex_;
  std::unordered_map<std::string, int> log_occurrence_;
  std::unique_ptr<Semaphore> limiter_;
};

}  // namespace resum
