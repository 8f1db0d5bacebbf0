#include "resum/tokenizer.hpp"

#include <cctype>
#include <stdexcept>

#include "httplib.h"
#include "json.hpp"

namespace resum {

namespace {

inline bool is_space(char c) {
  return std::isspace(static_cast<unsigned char>(c)) != 0;
}

}  // namespace

int WhitespaceTokenizer::count(std::string_view text) const {
  int n = 0;
  bool in_token = false;
  for (char c : text) {
    if (is_space(c)) {
      in_token = false;
    } else if (!in_token) {
      in_token = true;
      ++n;
    }
  }
  return n;
}

std::string WhitespaceTokenizer::truncate(std::string_view text, int max_tokens) const {
  if (max_tokens <= 0) return {};
  int n = 0;
  bool in_token = false;
  size_t end = 0;
  for (size_t i = 0; i < text.size(); ++i) {
    if (is_space(text[i])) {
      in_token = false;
    } else {
      if (!in_token) {
        in_token = true;
        ++n;
        if (n > max_tokens) break;
      }
      end = i + 1;
    }
  }
  return std::string(text.substr(0, end));
}

HttpTokenizer::HttpTokenizer(std::string base_url, std::string model_name)
    : base_url_(std::move(base_url)), model_name_(std::move(model_name)) {}

std::string HttpTokenizer::name() const {
  return "http:" + base_url_ + "#" + model_name_;
}

int HttpTokenizer::count(std::string_view text) const {
  httplib::Client client(base_url_);
  nlohmann::json body{{"model", model_name_}, {"prompt", std::string(text)}};
  auto res = client.Post("/tokenize", body.dump(), "application/json");
  if (!res || res->status != 200) {
    throw std::runtime_error("tokenize endpoint unreachable: " + base_url_);
  }
  auto parsed = nlohmann::json::parse(res->body);
  if (parsed.contains("count")) return parsed["count"].get<int>();
  if (parsed.contains("tokens")) return static_cast<int>(parsed["tokens"].size());
  throw std::runtime_error("tokenize endpoint returned neither count nor tokens");
}

std::string HttpTokenizer::truncate(std::string_view text, int max_tokens) const {
  // No byte-offset information from the remote endpoint; fall back to
  // whitespace boundaries and verify with a real count.
  WhitespaceTokenizer ws;
  std::string prefix = ws.truncate(text, max_tokens);
  while (!prefix.empty() && count(prefix) > max_tokens) {
    prefix = ws.truncate(prefix, ws.count(prefix) - 1);
  }
  return prefix;
}

std::unique_ptr<Tokenizer> make_tokenizer(const std::string& spec) {
  if (spec.empty() || spec == "whitespace") {
    return std::make_unique<WhitespaceTokenizer>();
  }
  if (spec.rfind("http:", 0) == 0) {
    std::string rest = spec.substr(5);
    auto hash = rest.find('#');
    std::string url = hash == std::string::npos ? rest : rest.substr(0, hash);
    std::string model = hash == std::string::npos ? "" : rest.substr(hash + 1);
    return std::make_unique<HttpTokenizer>(url, model);
  }
  throw std::invalid_argument("unknown tokenizer spec: " + spec);
}

ClipResult clip_to_tokens(std::string_view text, int max_tokens, const Tokenizer& tok) {
  if (max_tokens <= 0) throw std::invalid_argument("clip_to_tokens: cap must be positive");
  if (tok.count(text) <= max_tokens) {
    return {std::string(text), false};
  }
  std::string prefix = tok.truncate(text, max_tokens - 1);
  if (prefix.empty()) {
    return {std::string(kTruncationMarker), true};
  }
  return {prefix + " " + kTruncationMarker, true};
}

}  // namespace resum
