#include "resum/tools.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "httplib.h"
#include "json.hpp"
#include "resum/prompts.hpp"
#include "resum/render.hpp"

namespace resum {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

std::string format_search_block(const std::string& query,
                                const std::vector<SearchResult>& results) {
  if (results.empty()) {
    return "A Google search for \"" + query + "\" found 0 results.";
  }
  std::string out = "A Google search for \"" + query + "\" found " +
                    std::to_string(results.size()) + " results:";
  int rank = 0;
  for (const SearchResult& r : results) {
    out += "\n" + std::to_string(++rank) + ". [" + r.title + "](" + r.url + ")\n" + r.snippet;
  }
  return out;
}

std::string format_visit_block(const std::string& url, const std::string& goal,
                               const std::string& extraction) {
  return "The useful information in " + url + " for user goal " + goal + " as follows:\n" +
         extraction;
}

std::string format_tool_error(const std::string& message) {
  return "tool error: " + message;
}

// ---------------------------------------------------------------------------
// MockCorpus
// ---------------------------------------------------------------------------

MockCorpus MockCorpus::load(const std::filesystem::path& dir) {
  MockCorpus corpus;
  auto index = nlohmann::json::parse(read_file(dir / "index.json"));
  for (auto& [url, meta] : index.at("pages").items()) {
    Page page;
    page.text = read_file(dir / meta.at("file").get<std::string>());
    page.title = meta.value("title", url);
    page.snippet = meta.value("snippet", "");
    if (page.snippet.empty()) {
      page.snippet = page.text.substr(0, std::min<size_t>(page.text.size(), 160));
    }
    corpus.add_page(url, std::move(page));
  }
  if (index.contains("index")) {
    for (auto& [term, urls] : index.at("index").items()) {
      corpus.index_term(term, urls.get<std::vector<std::string>>());
    }
  }
  if (index.contains("extractions")) {
    for (const auto& rule : index.at("extractions")) {
      corpus.add_extraction_rule({rule.at("url").get<std::string>(),
                                  rule.at("goal_contains").get<std::string>(),
                                  rule.at("text").get<std::string>()});
    }
  }
  return corpus;
}

void MockCorpus::add_page(const std::string& url, Page page) {
  pages_[url] = std::move(page);
}

void MockCorpus::index_term(const std::string& term, std::vector<std::string> urls) {
  for (const std::string& url : urls) {
    if (!pages_.count(url)) {
      throw std::runtime_error("index term '" + term + "' references unknown url " + url);
    }
  }
  index_[lower(term)] = std::move(urls);
}

void MockCorpus::add_extraction_rule(ExtractionRule rule) {
  extraction_rules_.push_back(std::move(rule));
}

std::vector<SearchResult> MockCorpus::search(const std::string& query) {
  const std::string q = lower(query);
  std::vector<SearchResult> out;
  auto seen = [&](const std::string& url) {
    return std::any_of(out.begin(), out.end(),
                       [&](const SearchResult& r) { return r.url == url; });
  };
  for (const auto& [term, urls] : index_) {  // std::map iteration: sorted term order
    if (q.find(term) == std::string::npos) continue;
    for (const std::string& url : urls) {
      if (out.size() >= kSearchTopK) return out;
      if (seen(url)) continue;
      const Page& page = pages_.at(url);
      out.push_back({page.title, url, page.snippet});
    }
  }
  return out;
}

std::string MockCorpus::visit(const std::string& url, const std::string& goal) {
  auto it = pages_.find(url);
  if (it == pages_.end()) {
    throw std::runtime_error("page not found: " + url);
  }
  const std::string g = lower(goal);
  for (const ExtractionRule& rule : extraction_rules_) {
    if (rule.url == url && g.find(lower(rule.goal_contains)) != std::string::npos) {
      return rule.text;
    }
  }
  return it->second.text;
}

// ---------------------------------------------------------------------------
// Live providers
// ---------------------------------------------------------------------------

SerpSearchProvider::SerpSearchProvider(std::string base_url, std::string api_key_env)
    : base_url_(std::move(base_url)), api_key_env_(std::move(api_key_env)) {}

std::vector<SearchResult> SerpSearchProvider::search(const std::string& query) {
  httplib::Client client(base_url_);
  httplib::Params params{{"q", query}};
  if (!api_key_env_.empty()) {
    if (const char* key = std::getenv(api_key_env_.c_str())) {
      params.emplace("api_key", key);
    }
  }
  auto res = client.Get("/search", params, httplib::Headers{});
  if (!res || res->status != 200) {
    throw std::runtime_error("search provider failed for query: " + query);
  }
  auto parsed = nlohmann::json::parse(res->body);
  std::vector<SearchResult> out;
  for (const auto& item : parsed.value("organic_results", nlohmann::json::array())) {
    if (out.size() >= kSearchTopK) break;
    out.push_back({item.value("title", ""), item.value("link", ""), item.value("snippet", "")});
  }
  return out;
}

FetchVisitProvider::FetchVisitProvider(Gateway& gateway, ModelEndpoint extraction_endpoint,
                                       SamplingParams sampling, int max_page_tokens,
                                       const Tokenizer& tok)
    : gateway_(gateway),
      endpoint_(std::move(extraction_endpoint)),
      sampling_(sampling),
      max_page_tokens_(max_page_tokens),
      tokenizer_(tok) {}

std::string FetchVisitProvider::visit(const std::string& url, const std::string& goal) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw std::runtime_error("malformed url: " + url);
  }
  auto path_start = url.find('/', scheme_end + 3);
  const std::string host = url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

  httplib::Client client(host);
  auto res = client.Get(path);
  if (!res || res->status != 200) {
    throw std::runtime_error("fetch failed for " + url);
  }
  std::string content = clip_to_tokens(res->body, max_page_tokens_, tokenizer_).text;

  std::string prompt = fill_template(prompts::kExtractionPromptTemplate, "Goal", goal);
  prompt = fill_template(std::move(prompt), "Content", content);
  return gateway_.complete(endpoint_, {{"user", std::move(prompt)}}, sampling_);
}

// ---------------------------------------------------------------------------
// ToolEnvironment
// ---------------------------------------------------------------------------

ToolEnvironment::ToolEnvironment(std::shared_ptr<SearchProvider> search,
                                 std::shared_ptr<VisitProvider> visit,
                                 int max_concurrent_fetches)
    : search_(std::move(search)), visit_(std::move(visit)) {
  if (max_concurrent_fetches > 0) {
    limiter_ = std::make_unique<Semaphore>(max_concurrent_fetches);
  }
}

Observation ToolEnvironment::execute(const ToolCallSpec& spec) {
  Observation obs;
  std::vector<std::string> blocks;
  if (spec.name == ToolName::Search) {
    for (const std::string& query : spec.queries) {
      try {
        Semaphore::Guard limit(limiter_.get());
        auto results = search_->search(query);
        if (results.size() > kSearchTopK) results.resize(kSearchTopK);
        blocks.push_back(format_search_block(query, results));
        obs.per_query_results.push_back({query, std::move(results)});
      } catch (const std::exception& e) {
        blocks.push_back(format_tool_error(std::string("search failed: ") + e.what()));
        obs.per_query_results.push_back({query, {}});
      }
    }
  } else {
    for (const std::string& url : spec.urls) {
      try {
        Semaphore::Guard limit(limiter_.get());
        blocks.push_back(format_visit_block(url, spec.goal, visit_->visit(url, spec.goal)));
      } catch (const std::exception& e) {
        blocks.push_back(format_tool_error(std::string("failed to visit ") + url + ": " + e.what()));
      }
    }
  }
  // assembled strictly in input order
  std::string text;
  for (const std::string& block : blocks) {
    if (!text.empty()) text += "\n\n";
    text += block;
  }
  obs.text = std::move(text);
  return obs;
}

Observation clip_observation(Observation obs, int max_obs_tokens, const Tokenizer& tok) {
  ClipResult clipped = clip_to_tokens(obs.text, max_obs_tokens, tok);
  obs.text = std::move(clipped.text);
  obs.truncated = clipped.clipped;
  return obs;
}

}  // namespace resum
