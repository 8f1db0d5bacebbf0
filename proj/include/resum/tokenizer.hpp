#pragma once

#include <memory>
#include <string>
#include <string_view>

namespace resum {

// Token accounting abstraction. The rollout engines only ever need two
// operations: count tokens in a piece of text, and cut text at a token
// boundary. Production plugs the serving stack's tokenizer in behind this
// interface; tests and offline runs use the deterministic whitespace
// reference implementation.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;

  // Human-readable identifier, recorded in run manifests.
  virtual std::string name() const = 0;

  virtual int count(std::string_view text) const = 0;

  // Longest prefix of `text` (original bytes) containing at most
  // `max_tokens` tokens, cut at a token boundary.
  virtual std::string truncate(std::string_view text, int max_tokens) const = 0;
};

// Reference tokenizer: a token is a maximal run of non-whitespace bytes.
// Deterministic, additive across message boundaries, needs no model assets.
class WhitespaceTokenizer final : public Tokenizer {
 public:
  std::string name() const override { return "whitespace"; }
  int count(std::string_view text) const override;
  std::string truncate(std::string_view text, int max_tokens) const override;
};

// Adapter for a served model's real tokenizer. POSTs {"prompt": text} to
// `base_url` + "/tokenize" (vLLM-style) and reads {"count": N}. Counts are
// cached per call site only implicitly; keep prompts small or batch offline.
class HttpTokenizer final : public Tokenizer {
 public:
  HttpTokenizer(std::string base_url, std::string model_name);
  std::string name() const override;
  int count(std::string_view text) const override;
  std::string truncate(std::string_view text, int max_tokens) const override;

 private:
  std::string base_url_;
  std::string model_name_;
};

// "whitespace" or "http:<base_url>#<model>".
std::unique_ptr<Tokenizer> make_tokenizer(const std::string& spec);

struct ClipResult {
  std::string text;
  bool clipped = false;
};

// Truncates `text` so that the result, marker included, stays within
// `max_tokens` tokens. The marker is a single reference-tokenizer token so
// the cap holds even at max_tokens == 1.
inline constexpr const char* kTruncationMarker = "[truncated]";
ClipResult clip_to_tokens(std::string_view text, int max_tokens, const Tokenizer& tok);

}  // namespace resum
