#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "resum/gateway.hpp"
#include "resum/semaphore.hpp"
#include "resum/tokenizer.hpp"

namespace resum {

struct SearchResult {
  std::string title;
  std::string url;
  std::string snippet;
};

struct PerQueryResults {
  std::string query;
  std::vector<SearchResult> results;  // at most kSearchTopK
};

struct Observation {
  std::string text;  // exact string appended to the conversation
  std::vector<PerQueryResults> per_query_results;
  bool truncated = false;
};

inline constexpr int kSearchTopK = 10;

// Frozen observation formatting (version tracked with the prompt assets):
// changing these strings shifts token counts and with them trigger timing.
std::string format_search_block(const std::string& query, const std::vector<SearchResult>& results);
std::string format_visit_block(const std::string& url, const std::string& goal,
                               const std::string& extraction);
std::string format_tool_error(const std::string& message);

class SearchProvider {
 public:
  virtual ~SearchProvider() = default;
  virtual std::vector<SearchResult> search(const std::string& query) = 0;
};

class VisitProvider {
 public:
  virtual ~VisitProvider() = default;
  virtual std::string visit(const std::string& url, const std::string& goal) = 0;
};

// Deterministic on-disk stand-in for the live search/visit providers.
// Layout: <dir>/index.json + <dir>/pages/*. index.json:
//   {
//     "pages":        {url: {"file": "pages/x.txt", "title": "...", "snippet": "..."}},
//     "index":        {term: [url, ...]},           // ranked, deterministic
//     "extractions":  [{"url": ..., "goal_contains": ..., "text": ...}]
//   }
// A query matches every index term it contains (case-insensitive); matched
// urls keep their listed rank, terms are consulted in sorted order, and
// duplicates collapse to the first occurrence.
class MockCorpus final : public SearchProvider, public VisitProvider {
 public:
  struct Page {
    std::string text;
    std::string title;
    std::string snippet;
  };
  struct ExtractionRule {
    std::string url;
    std::string goal_contains;
    std::string text;
  };

  MockCorpus() = default;
  static MockCorpus load(const std::filesystem::path& dir);

  void add_page(const std::string& url, Page page);
  void index_term(const std::string& term, std::vector<std::string> urls);
  void add_extraction_rule(ExtractionRule rule);

  std::vector<SearchResult> search(const std::string& query) override;
  std::string visit(const std::string& url, const std::string& goal) override;

 private:
  std::map<std::string, Page> pages_;
  std::map<std::string, std::vector<std::string>> index_;
  std::vector<ExtractionRule> extraction_rules_;
};

// SERP-style JSON API adapter: GET <base_url>?q=<query>, expects
// {"organic_results": [{"title", "link", "snippet"}, ...]}.
class SerpSearchProvider final : public SearchProvider {
 public:
  SerpSearchProvider(std::string base_url, std::string api_key_env);
  std::vector<SearchResult> search(const std::string& query) override;

 private:
  std::string base_url_;
  std::string api_key_env_;
};

// Fetches a page over HTTP and runs goal-conditioned extraction through a
// configured extraction model endpoint.
class FetchVisitProvider final : public VisitProvider {
 public:
  FetchVisitProvider(Gateway& gateway, ModelEndpoint extraction_endpoint,
                     SamplingParams sampling, int max_page_tokens, const Tokenizer& tok);
  std::string visit(const std::string& url, const std::string& goal) override;

 private:
  Gateway& gateway_;
  ModelEndpoint endpoint_;
  SamplingParams sampling_;
  int max_page_tokens_;
  const Tokenizer& tokenizer_;
};

// The action environment: executes parsed tool calls. Provider failures are
// encoded into the observation text, never raised: the agent sees failed
// lookups and gets the chance to recover. Shareable across rollouts;
// max_concurrent_fetches > 0 caps in-flight provider calls. Results are
// always assembled in input order.
class ToolEnvironment {
 public:
  ToolEnvironment(std::shared_ptr<SearchProvider> search, std::shared_ptr<VisitProvider> visit,
                  int max_concurrent_fetches = 0);

  Observation execute(const ToolCallSpec& spec);

 private:
  std::shared_ptr<SearchProvider> search_;
  std::shared_ptr<VisitProvider> visit_;
  std::unique_ptr<Semaphore> limiter_;
};

// Token-boundary truncation with a visible marker; truncated flag set iff
// clipping was applied. Cap must be positive.
Observation clip_observation(Observation obs, int max_obs_tokens, const Tokenizer& tok);

}  // namespace resum
