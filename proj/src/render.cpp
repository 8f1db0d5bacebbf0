#include "resum/render.hpp"

#include "resum/prompts.hpp"

namespace resum {

std::string fill_template(std::string tmpl, const std::string& field, const std::string& value) {
  const std::string placeholder = "{" + field + "}";
  size_t pos = tmpl.find(placeholder);
  if (pos == std::string::npos) {
    throw TemplateFieldMissing("template has no placeholder " + placeholder);
  }
  while (pos != std::string::npos) {
    tmpl.replace(pos, placeholder.size(), value);
    pos = tmpl.find(placeholder, pos + value.size());
  }
  return tmpl;
}

std::string render_compressed_user_message(const std::string& question_text,
                                           const std::string& summary) {
  if (question_text.empty()) throw TemplateFieldMissing("question text is empty");
  if (summary.empty()) throw TemplateFieldMissing("summary is empty");
  std::string out = fill_template(prompts::kCompressedQueryTemplate, "Question", question_text);
  return fill_template(std::move(out), "Summary", summary);
}

namespace {

void append_turn_messages(std::vector<Message>& messages, std::span<const Turn> turns) {
  bool assistant_open = false;
  for (const Turn& t : turns) {
    switch (t.kind) {
      case TurnKind::Thought:
        messages.push_back({"assistant", "<think>" + t.payload + "</think>"});
        assistant_open = true;
        break;
      case TurnKind::ToolCall: {
        std::string block = "<tool_call>\n" + t.payload + "\n</tool_call>";
        if (assistant_open) {
          messages.back().content += "\n" + block;
        } else {
          messages.push_back({"assistant", block});
          assistant_open = true;
        }
        break;
      }
      case TurnKind::Answer: {
        std::string block = "<answer>" + t.payload + "</answer>";
        if (assistant_open) {
          messages.back().content += "\n" + block;
        } else {
          messages.push_back({"assistant", block});
          assistant_open = true;
        }
        break;
      }
      case TurnKind::Observation:
        messages.push_back({"user", "<tool_response>\n" + t.payload + "\n</tool_response>"});
        assistant_open = false;
        break;
      case TurnKind::Summary:
        // carried by the compressed query, not by the turn stream
        assistant_open = false;
        break;
    }
  }
}

}  // namespace

std::vector<Message> render_prompt(const Question& question, std::span<const Turn> turns) {
  if (question.text.empty()) throw TemplateFieldMissing("question text is empty");
  std::vector<Message> messages;
  messages.push_back({"system", prompts::kAgentSystemPrompt});
  messages.push_back({"user", question.text});
  append_turn_messages(messages, turns);
  return messages;
}

std::vector<Message> render_prompt(const Question& question, const CompressedQuery& compressed,
                                   std::span<const Turn> turns) {
  std::vector<Message> messages;
  messages.push_back({"system", prompts::kAgentSystemPrompt});
  messages.push_back({"user", render_compressed_user_message(question.text, compressed.summary)});
  append_turn_messages(messages, turns);
  return messages;
}

std::string render_agent_step(const std::string& thought, const std::string& raw_tool_call,
                              const std::string& answer) {
  std::string out = "<think>" + thought + "</think>";
  if (!raw_tool_call.empty()) {
    out += "\n<tool_call>\n" + raw_tool_call + "\n</tool_call>";
  } else {
    out += "\n<answer>" + answer + "</answer>";
  }
  return out;
}

int context_tokens(std::span<const Message> messages, const Tokenizer& tok) {
  int total = 0;
  for (const Message& m : messages) {
    total += tok.count(m.content);
  }
  return total;
}

std::string flatten_conversation(std::span<const Message> messages) {
  std::string out;
  for (const Message& m : messages) {
    if (m.role == "system") continue;
    if (!out.empty()) out += "\n\n";
    out += m.role + ": " + m.content;
  }
  return out;
}

std::vector<Message> truncate_to_recent(const std::vector<Message>& messages, int keep_tokens,
                                        const Tokenizer& tok) {
  int total = 0;
  size_t first = messages.size();
  while (first > 0) {
    int next = total + tok.count(messages[first - 1].content);
    if (next > keep_tokens) break;
    total = next;
    --first;
  }
  return std::vector<Message>(messages.begin() + static_cast<long>(first), messages.end());
}

}  // namespace resum
