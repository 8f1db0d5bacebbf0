#pragma once

#include <optional>
#include <string>
#include <vector>

#include "resum/gateway.hpp"
#include "resum/render.hpp"
#include "resum/types.hpp"

namespace resum {

struct SummaryRequest {
  std::string question_text;
  std::vector<Message> conversation_rendering;  // non-empty
};

struct SummaryResult {
  std::string summary_text;  // content of the first <summary> block, trimmed
  std::string raw_response;
};

struct SummaryFailure : std::runtime_error {
  enum class Kind { Malformed, Transport };
  SummaryFailure(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
  Kind kind;
};

// Single user message carrying the summarization template with {Question}
// and {Conversation History} filled; byte-stable.
std::vector<Message> build_summary_prompt(const std::string& question_text,
                                          const std::vector<Message>& conversation);

// Content strictly inside the first <summary>...</summary> pair,
// whitespace-trimmed; nullopt when the pair is absent or empty.
std::optional<std::string> extract_summary(const std::string& raw_response);

CompressedQuery build_compressed_query(const Question& question, const std::string& summary,
                                       int generation);

// Invokes the summary endpoint on the accumulated history. A malformed
// response (no summary block) earns one re-sample, then SummaryFailure.
class Summarizer {
 public:
  Summarizer(Gateway& gateway, ModelEndpoint endpoint, SamplingParams sampling);

  SummaryResult summarize(const SummaryRequest& request);

  const ModelEndpoint& endpoint() const { return endpoint_; }

 private:
  Gateway& gateway_;
  ModelEndpoint endpoint_;
  SamplingParams sampling_;
};

}  // namespace resum
