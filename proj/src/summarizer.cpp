#include "resum/summarizer.hpp"

#include "resum/prompts.hpp"

namespace resum {

namespace {

std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

std::vector<Message> build_summary_prompt(const std::string& question_text,
                                          const std::vector<Message>& conversation) {
  if (question_text.empty()) throw TemplateFieldMissing("question text is empty");
  std::string content = fill_template(prompts::kSummaryPromptTemplate, "Question", question_text);
  content = fill_template(std::move(content), "Conversation History",
                          flatten_conversation(conversation));
  return {{"user", std::move(content)}};
}

std::optional<std::string> extract_summary(const std::string& raw_response) {
  size_t b = raw_response.find("<summary>");
  if (b == std::string::npos) return std::nullopt;
  size_t body = b + 9;
  size_t e = raw_response.find("</summary>", body);
  if (e == std::string::npos) return std::nullopt;
  std::string content = trim(std::string_view(raw_response).substr(body, e - body));
  if (content.empty()) return std::nullopt;
  return content;
}

CompressedQuery build_compressed_query(const Question& question, const std::string& summary,
                                       int generation) {
  if (summary.empty()) {
    throw std::invalid_argument("build_compressed_query: summary is empty");
  }
  if (generation < 1) {
    throw std::invalid_argument("build_compressed_query: generation must be >= 1");
  }
  return CompressedQuery{question.id, summary, generation};
}

Summarizer::Summarizer(Gateway& gateway, ModelEndpoint endpoint, SamplingParams sampling)
    : gateway_(gateway), endpoint_(std::move(endpoint)), sampling_(sampling) {}

SummaryResult Summarizer::summarize(const SummaryRequest& request) {
  if (request.conversation_rendering.empty()) {
    throw std::invalid_argument("summarize: conversation rendering is empty");
  }
  auto prompt = build_summary_prompt(request.question_text, request.conversation_rendering);

  std::string raw;
  for (int attempt = 0; attempt < 2; ++attempt) {
    try {
      raw = gateway_.complete(endpoint_, prompt, sampling_);
    } catch (const std::exception& e) {
      throw SummaryFailure(SummaryFailure::Kind::Transport, e.what());
    }
    if (auto summary = extract_summary(raw)) {
      return SummaryResult{std::move(*summary), std::move(raw)};
    }
  }
  throw SummaryFailure(SummaryFailure::Kind::Malformed,
                       "summary endpoint produced no <summary> block after re-sample");
}

}  // namespace resum
