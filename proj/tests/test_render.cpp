#include <random>
#include <sstream>

#include "doctest.h"
#include "resum/prompts.hpp"
#include "resum/render.hpp"

using namespace resum;

namespace {

const WhitespaceTokenizer kTok;

// independent reference count for the oracle: stream extraction
int stream_word_count(const std::string& s) {
  std::istringstream iss(s);
  std::string w;
  int n = 0;
  while (iss >> w) ++n;
  return n;
}

}  // namespace

TEST_CASE("base rendering is system prompt plus one user message") {
  Question q{"id", "Q", std::nullopt};
  auto messages = render_prompt(q, {});
  REQUIRE(messages.size() == 2);
  CHECK(messages[0].role == "system");
  CHECK(messages[0].content == prompts::kAgentSystemPrompt);
  CHECK(messages[1].role == "user");
  CHECK(messages[1].content == "Q");
}

TEST_CASE("compressed query rendering carries the restart template") {
  Question q{"id", "Who?", std::nullopt};
  CompressedQuery cq{"id", "S", 1};
  auto messages = render_prompt(q, cq, {});
  REQUIRE(messages.size() == 2);
  const std::string& user = messages[1].content;
  CHECK(user.find("Below is a summary of the previous conversation") != std::string::npos);
  CHECK(user.find("Assess whether the summary provides enough information") != std::string::npos);
  CHECK(user.find("Question Who?") != std::string::npos);
  CHECK(user.find("Summary: S") != std::string::npos);
}

TEST_CASE("rendering is deterministic") {
  Question q{"id", "Q text", std::nullopt};
  std::vector<Turn> turns;
  turns.push_back(make_turn(TurnKind::Thought, "think hard", 1, kTok));
  turns.push_back(make_turn(TurnKind::ToolCall, "{\"name\":\"search\"}", 1, kTok));
  turns.push_back(make_turn(TurnKind::Observation, "obs body", 1, kTok));
  auto a = render_prompt(q, turns);
  auto b = render_prompt(q, turns);
  CHECK(a == b);
}

TEST_CASE("missing template fields surface as TemplateFieldMissing") {
  CHECK_THROWS_AS(render_prompt(Question{"id", "", std::nullopt}, {}), TemplateFieldMissing);
  CHECK_THROWS_AS(render_compressed_user_message("q", ""), TemplateFieldMissing);
  CHECK_THROWS_AS(fill_template("no placeholder", "Question", "x"), TemplateFieldMissing);
}

TEST_CASE("turn merge rule: one assistant message per round, observations as tool_response") {
  Question q{"id", "Q", std::nullopt};
  std::vector<Turn> turns;
  turns.push_back(make_turn(TurnKind::Thought, "T1", 1, kTok));
  turns.push_back(make_turn(TurnKind::ToolCall, "C1", 1, kTok));
  turns.push_back(make_turn(TurnKind::Observation, "O1", 1, kTok));
  turns.push_back(make_turn(TurnKind::Thought, "T2", 2, kTok));
  turns.push_back(make_turn(TurnKind::Answer, "A", 2, kTok));
  auto messages = render_prompt(q, turns);
  REQUIRE(messages.size() == 5);  // system, user, assistant, user(tool_response), assistant
  CHECK(messages[2].role == "assistant");
  CHECK(messages[2].content == "<think>T1</think>\n<tool_call>\nC1\n</tool_call>");
  CHECK(messages[3].role == "user");
  CHECK(messages[3].content == "<tool_response>\nO1\n</tool_response>");
  CHECK(messages[4].content == "<think>T2</think>\n<answer>A</answer>");
}

TEST_CASE("context token accounting") {
  CHECK(context_tokens({}, kTok) == 0);

  // fixture conversation; expected value frozen from the standalone stream
  // counter run on the same bytes
  std::vector<Message> fixture{
      {"system", "You are terse."},
      {"user", "How tall is the Eiffel Tower?"},
      {"assistant", "<think>recall</think>\n<answer>330 metres</answer>"},
  };
  int oracle = 0;
  for (const auto& m : fixture) oracle += stream_word_count(m.content);
  CHECK(oracle == 12);
  CHECK(context_tokens(fixture, kTok) == 12);
  CHECK(context_tokens(fixture, kTok) == oracle);

  // additivity across concatenated renderings
  std::vector<Message> both = fixture;
  both.insert(both.end(), fixture.begin(), fixture.end());
  CHECK(context_tokens(both, kTok) == 2 * context_tokens(fixture, kTok));
}

TEST_CASE("context tokens are non-decreasing under append within a segment") {
  std::mt19937 rng(19);
  Question q{"id", "base question", std::nullopt};
  std::vector<Turn> turns;
  int previous = context_tokens(render_prompt(q, turns), kTok);
  int round = 1;
  for (int i = 0; i < 30; ++i) {
    TurnKind kind = static_cast<TurnKind>(rng() % 3);  // thought/tool_call/observation
    std::string payload = (rng() % 4 == 0) ? "" : "w" + std::to_string(rng() % 50);
    turns.push_back(make_turn(kind, payload, round, kTok));
    int now = context_tokens(render_prompt(q, turns), kTok);
    CHECK(now >= previous);
    previous = now;
  }
}

TEST_CASE("flatten_conversation drops the system prompt and keeps order") {
  std::vector<Message> messages{{"system", "sys"}, {"user", "u1"}, {"assistant", "a1"}};
  CHECK(flatten_conversation(messages) == "user: u1\n\nassistant: a1");
}

TEST_CASE("recent truncation keeps a whole-message suffix within the cap") {
  std::vector<Message> messages;
  for (int i = 0; i < 10; ++i) {
    messages.push_back({"user", "m" + std::to_string(i) + " one two three"});  // 4 tokens each
  }

  SUBCASE("under the cap it is the identity") {
    auto kept = truncate_to_recent(messages, 1000, kTok);
    CHECK(kept == messages);
  }

  SUBCASE("cuts to the newest whole messages") {
    auto kept = truncate_to_recent(messages, 10, kTok);
    REQUIRE(kept.size() == 2);  // 2 * 4 = 8 <= 10, a third would make 12
    CHECK(kept[0] == messages[8]);
    CHECK(kept[1] == messages[9]);
    CHECK(context_tokens(kept, kTok) <= 10);
  }

  SUBCASE("a message that straddles the cut is dropped whole") {
    auto kept = truncate_to_recent(messages, 11, kTok);
    CHECK(kept.size() == 2);
    CHECK(context_tokens(kept, kTok) == 8);
  }

  SUBCASE("suffix property for arbitrary caps") {
    for (int cap = 0; cap <= 45; ++cap) {
      auto kept = truncate_to_recent(messages, cap, kTok);
      CHECK(context_tokens(kept, kTok) <= cap);
      REQUIRE(kept.size() <= messages.size());
      for (size_t i = 0; i < kept.size(); ++i) {
        CHECK(kept[i] == messages[messages.size() - kept.size() + i]);
      }
    }
  }

  SUBCASE("a 30k-token history cuts to the recent 22k at default scale") {
    std::vector<Message> history;
    int total = 0;
    for (int i = 0; total < 30000; ++i) {
      std::string content = "m" + std::to_string(i);
      for (int w = 0; w < 199; ++w) content += " tok" + std::to_string(w);
      total += 200;
      history.push_back({i % 2 == 0 ? "assistant" : "user", std::move(content)});
    }
    REQUIRE(context_tokens(history, kTok) == 30000);
    auto kept = truncate_to_recent(history, 22528, kTok);
    CHECK(context_tokens(kept, kTok) <= 22528);
    CHECK(context_tokens(kept, kTok) > 22528 - 200);  // only whole messages dropped
    for (size_t i = 0; i < kept.size(); ++i) {
      CHECK(kept[i] == history[history.size() - kept.size() + i]);
    }
  }
}
