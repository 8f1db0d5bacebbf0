#pragma once

#include <span>
#include <string>
#include <vector>

#include "resum/tokenizer.hpp"
#include "resum/types.hpp"

namespace resum {

struct Message {
  std::string role;  // "system" | "user" | "assistant"
  std::string content;

  bool operator==(const Message&) const = default;
};

struct TemplateFieldMissing : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Replaces every occurrence of `{field}` in `tmpl`; throws
// TemplateFieldMissing when the placeholder is absent.
std::string fill_template(std::string tmpl, const std::string& field, const std::string& value);

// User-message content of the compressed state q' = (q, s).
std::string render_compressed_user_message(const std::string& question_text,
                                           const std::string& summary);

// Deterministic chat rendering of a working conversation. The first message
// is the system prompt, the second the question (plain or compressed), then
// the turns: Thought/ToolCall/Answer merge into tagged assistant messages,
// each Observation becomes a <tool_response> user message. Summary turns
// never render from a turn list (the summary reaches the model through the
// compressed query) and are skipped.
std::vector<Message> render_prompt(const Question& question, std::span<const Turn> turns);
std::vector<Message> render_prompt(const Question& question, const CompressedQuery& compressed,
                                   std::span<const Turn> turns);

// Tagged assistant text for one parsed step, byte-inverse of
// parse_agent_output on well-formed input.
std::string render_agent_step(const std::string& thought, const std::string& raw_tool_call,
                              const std::string& answer);

// Total token count of a rendered conversation, summed per message so the
// count is additive across message boundaries.
int context_tokens(std::span<const Message> messages, const Tokenizer& tok);

// Plain-text form of a conversation for the summarizer's
// {Conversation History} slot; the system prompt is omitted, q reaches the
// summarizer through the {Question} slot.
std::string flatten_conversation(std::span<const Message> messages);

// Longest whole-message suffix whose token total is <= keep_tokens
// (Recent-History truncation).
std::vector<Message> truncate_to_recent(const std::vector<Message>& messages, int keep_tokens,
                                        const Tokenizer& tok);

}  // namespace resum
