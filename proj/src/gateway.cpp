#include "resum/gateway.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"

namespace resum {

namespace {

std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

struct TagBlock {
  size_t pos;
  bool is_answer;
  std::string content;
};

// All complete <tag>...</tag> blocks of one kind, in order.
void collect_blocks(std::string_view text, std::string_view open, std::string_view close,
                    bool is_answer, std::vector<TagBlock>& out) {
  size_t from = 0;
  while (true) {
    size_t b = text.find(open, from);
    if (b == std::string_view::npos) return;
    size_t body = b + open.size();
    size_t e = text.find(close, body);
    if (e == std::string_view::npos) return;
    out.push_back({b, is_answer, trim(text.substr(body, e - body))});
    from = e + close.size();
  }
}

std::optional<ToolCallSpec> parse_tool_call_json(const std::string& raw, std::string& error) {
  nlohmann::json call = nlohmann::json::parse(raw, nullptr, false);
  if (call.is_discarded() || !call.is_object()) {
    error = "tool call is not a JSON object";
    return std::nullopt;
  }
  if (!call.contains("name") || !call["name"].is_string()) {
    error = "tool call has no name";
    return std::nullopt;
  }
  const std::string name = call["name"].get<std::string>();
  if (!call.contains("arguments") || !call["arguments"].is_object()) {
    error = "tool call has no arguments object";
    return std::nullopt;
  }
  const auto& args = call["arguments"];

  ToolCallSpec spec;
  if (name == "search") {
    spec.name = ToolName::Search;
    if (!args.contains("query") || !args["query"].is_array() || args["query"].empty()) {
      error = "search requires a non-empty query list";
      return std::nullopt;
    }
    for (const auto& q : args["query"]) {
      if (!q.is_string()) {
        error = "search queries must be strings";
        return std::nullopt;
      }
      spec.queries.push_back(q.get<std::string>());
    }
  } else if (name == "visit") {
    spec.name = ToolName::Visit;
    if (!args.contains("url") || !args["url"].is_array() || args["url"].empty()) {
      error = "visit requires a non-empty url list";
      return std::nullopt;
    }
    for (const auto& u : args["url"]) {
      if (!u.is_string()) {
        error = "visit urls must be strings";
        return std::nullopt;
      }
      spec.urls.push_back(u.get<std::string>());
    }
    if (!args.contains("goal") || !args["goal"].is_string() ||
        args["goal"].get<std::string>().empty()) {
      error = "visit requires a non-empty goal";
      return std::nullopt;
    }
    spec.goal = args["goal"].get<std::string>();
  } else {
    error = "unknown tool: " + name;
    return std::nullopt;
  }
  return spec;
}

}  // namespace

std::string to_string(ViolationReason r) {
  switch (r) {
    case ViolationReason::MissingThink: return "missing_think";
    case ViolationReason::NoAction: return "no_action";
    case ViolationReason::MultipleActions: return "multiple_actions";
    case ViolationReason::UnparsableCall: return "unparsable_call";
  }
  return "unknown";
}

ParseResult parse_agent_output(std::string_view raw) {
  // Cut the first think block out so tags quoted inside the reasoning do not
  // count as actions.
  std::optional<std::string> thought;
  std::string remainder;
  size_t tb = raw.find("<think>");
  size_t te = tb == std::string_view::npos ? std::string_view::npos : raw.find("</think>", tb + 7);
  if (tb != std::string_view::npos && te != std::string_view::npos) {
    thought = trim(raw.substr(tb + 7, te - (tb + 7)));
    remainder = std::string(raw.substr(0, tb)) + std::string(raw.substr(te + 8));
  } else {
    remainder = std::string(raw);
  }

  std::vector<TagBlock> actions;
  collect_blocks(remainder, "<tool_call>", "</tool_call>", false, actions);
  collect_blocks(remainder, "<answer>", "</answer>", true, actions);

  const bool has_thought = thought.has_value() && !thought->empty();
  if (actions.empty()) {
    return FormatViolation{ViolationReason::NoAction, "no tool call or answer block", has_thought};
  }
  if (actions.size() > 1) {
    return FormatViolation{ViolationReason::MultipleActions,
                           "found " + std::to_string(actions.size()) + " action blocks",
                           has_thought};
  }
  if (!has_thought) {
    return FormatViolation{ViolationReason::MissingThink, "missing or empty think block", false};
  }

  AgentStep step;
  step.thought = *thought;
  const TagBlock& action = actions.front();
  if (action.is_answer) {
    step.answer = action.content;
    return step;
  }
  std::string error;
  auto spec = parse_tool_call_json(action.content, error);
  if (!spec) {
    return FormatViolation{ViolationReason::UnparsableCall, error, true};
  }
  step.tool_call = std::move(*spec);
  step.raw_tool_call = action.content;
  return step;
}

// ---------------------------------------------------------------------------
// Request canonicalization and hashing
// ---------------------------------------------------------------------------

std::string canonical_request_json(const ModelEndpoint& endpoint,
                                   const std::vector<Message>& messages,
                                   const SamplingParams& sampling) {
  nlohmann::ordered_json body;
  body["model"] = endpoint.model_name;
  nlohmann::ordered_json msgs = nlohmann::ordered_json::array();
  for (const Message& m : messages) {
    msgs.push_back({{"role", m.role}, {"content", m.content}});
  }
  body["messages"] = std::move(msgs);
  body["temperature"] = sampling.temperature;
  body["top_p"] = sampling.top_p;
  body["max_tokens"] = sampling.max_tokens;
  return body.dump();
}

std::string request_hash(const ModelEndpoint& endpoint, const std::vector<Message>& messages,
                         const SamplingParams& sampling) {
  const std::string canonical = canonical_request_json(endpoint, messages, sampling);
  // FNV-1a 64
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

// ---------------------------------------------------------------------------
// HttpBackend
// ---------------------------------------------------------------------------

std::string HttpBackend::complete(const ModelEndpoint& endpoint,
                                  const std::vector<Message>& messages,
                                  const SamplingParams& sampling) {
  httplib::Client client(endpoint.base_url);
  client.set_connection_timeout(0, endpoint.timeout_ms * 1000LL);
  client.set_read_timeout(endpoint.timeout_ms / 1000, (endpoint.timeout_ms % 1000) * 1000);

  httplib::Headers headers;
  if (!endpoint.api_key_env.empty()) {
    if (const char* key = std::getenv(endpoint.api_key_env.c_str())) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }

  auto res = client.Post("/chat/completions", headers,
                         canonical_request_json(endpoint, messages, sampling),
                         "application/json");
  if (!res) {
    throw TransportError("no response from " + endpoint.base_url);
  }
  if (res->status != 200) {
    const std::string body = lower(res->body);
    if (body.find("context_length_exceeded") != std::string::npos ||
        body.find("context length") != std::string::npos ||
        body.find("maximum context") != std::string::npos) {
      throw ContextOverflowRejected("server rejected prompt: " + res->body);
    }
    throw TransportError("HTTP " + std::to_string(res->status) + " from " + endpoint.base_url);
  }
  auto parsed = nlohmann::json::parse(res->body, nullptr, false);
  if (parsed.is_discarded() || !parsed.contains("choices") || parsed["choices"].empty()) {
    throw TransportError("malformed completion response from " + endpoint.base_url);
  }
  return parsed["choices"][0]["message"]["content"].get<std::string>();
}

// ---------------------------------------------------------------------------
// ReplayBackend
// ---------------------------------------------------------------------------

ReplayBackend::ReplayBackend(std::filesystem::path fixtures_dir) : dir_(std::move(fixtures_dir)) {}

std::string ReplayBackend::complete(const ModelEndpoint& endpoint,
                                    const std::vector<Message>& messages,
                                    const SamplingParams& sampling) {
  const std::string hash = request_hash(endpoint, messages, sampling);
  int occurrence;
  {
    std::lock_guard<std::mutex> lock(mutex_);
    occurrence = ++occurrence_[hash];
  }
  namespace fs = std::filesystem;
  fs::path candidate = dir_ / (hash + "." + std::to_string(occurrence) + ".txt");
  if (occurrence == 1 || !fs::exists(candidate)) {
    candidate = dir_ / (hash + ".txt");
  }
  std::ifstream in(candidate, std::ios::binary);
  if (!in) {
    throw TransportError("replay miss for request " + hash + " (occurrence " +
                         std::to_string(occurrence) + ") in " + dir_.string());
  }
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// ---------------------------------------------------------------------------
// Gateway
// ---------------------------------------------------------------------------

Gateway::~Gateway() = default;

Gateway::Gateway(std::shared_ptr<ChatBackend> backend, const Tokenizer& tokenizer)
    : Gateway(std::move(backend), tokenizer, Options()) {}

Gateway::Gateway(std::shared_ptr<ChatBackend> backend, const Tokenizer& tokenizer, Options options)
    : backend_(std::move(backend)), tokenizer_(tokenizer), options_(std::move(options)) {
  if (options_.max_concurrent > 0) {
    limiter_ = std::make_unique<Semaphore>(options_.max_concurrent);
  }
}

std::string Gateway::complete(const ModelEndpoint& endpoint, const std::vector<Message>& messages,
                              const SamplingParams& sampling) {
  if (endpoint.context_window_tokens > 0 &&
      context_tokens(messages, tokenizer_) > endpoint.context_window_tokens) {
    throw ContextOverflowRejected("prompt exceeds the " +
                                  std::to_string(endpoint.context_window_tokens) +
                                  "-token window of " + endpoint.model_name);
  }

  Semaphore::Guard limit(limiter_.get());

  const int attempts = 1 + std::max(0, endpoint.max_retries);
  std::string response;
  for (int attempt = 0;; ++attempt) {
    try {
      response = backend_->complete(endpoint, messages, sampling);
      break;
    } catch (const TransportError&) {
      if (attempt + 1 >= attempts) throw;
      if (options_.backoff_base_ms > 0) {
        std::this_thread::sleep_for(
            std::chrono::milliseconds(options_.backoff_base_ms * (1LL << attempt)));
      }
    }
  }

  if (!options_.log_dir.empty()) {
    namespace fs = std::filesystem;
    const std::string hash = request_hash(endpoint, messages, sampling);
    std::lock_guard<std::mutex> lock(log_mutex_);
    fs::create_directories(options_.log_dir);
    const int occurrence = ++log_occurrence_[hash];
    if (occurrence == 1) {
      std::ofstream req(options_.log_dir / (hash + ".request.json"), std::ios::binary);
      req << canonical_request_json(endpoint, messages, sampling);
      std::ofstream res(options_.log_dir / (hash + ".txt"), std::ios::binary);
      res << response;
    } else {
      std::ofstream res(options_.log_dir / (hash + "." + std::to_string(occurrence) + ".txt"),
                        std::ios::binary);
      res << response;
    }
  }
  return response;
}

}  // namespace resum
