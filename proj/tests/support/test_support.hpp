#pragma once

// Shared test doubles: rule-driven chat backends (pure functions of the
// request, so runs can be recorded and replayed byte-for-byte), the
// clue-carryover web fixture, a multi-rollout "swarm" fixture with per-plan
// behaviors, and a synthetic trajectory generator for segmentation
// properties.

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include "resum/engine.hpp"
#include "resum/gateway.hpp"
#include "resum/tools.hpp"

namespace testsupport {

namespace fs = std::filesystem;

inline fs::path unique_temp_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  fs::path dir = fs::temp_directory_path() /
                 ("resum-" + tag + "-" + std::to_string(::getpid()) + "-" +
                  std::to_string(counter.fetch_add(1)));
  fs::create_directories(dir);
  return dir;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) : path(unique_temp_dir(tag)) {}
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

// ---------------------------------------------------------------------------
// Rule backend
// ---------------------------------------------------------------------------

using CompleteFn = std::function<std::string(
    const resum::ModelEndpoint&, const std::vector<resum::Message>&, const resum::SamplingParams&)>;

class FnBackend final : public resum::ChatBackend {
 public:
  explicit FnBackend(CompleteFn fn) : fn_(std::move(fn)) {}
  std::string complete(const resum::ModelEndpoint& ep, const std::vector<resum::Message>& messages,
                       const resum::SamplingParams& sampling) override {
    calls.fetch_add(1);
    return fn_(ep, messages, sampling);
  }
  std::atomic<int> calls{0};

 private:
  CompleteFn fn_;
};

class FnSearch final : public resum::SearchProvider {
 public:
  explicit FnSearch(std::function<std::vector<resum::SearchResult>(const std::string&)> fn)
      : fn_(std::move(fn)) {}
  std::vector<resum::SearchResult> search(const std::string& query) override { return fn_(query); }

 private:
  std::function<std::vector<resum::SearchResult>(const std::string&)> fn_;
};

class FnVisit final : public resum::VisitProvider {
 public:
  explicit FnVisit(std::function<std::string(const std::string&, const std::string&)> fn)
      : fn_(std::move(fn)) {}
  std::string visit(const std::string& url, const std::string& goal) override {
    return fn_(url, goal);
  }

 private:
  std::function<std::string(const std::string&, const std::string&)> fn_;
};

inline std::string tagged_search(const std::string& thought, const std::string& query) {
  return "<think>" + thought + "</think>\n<tool_call>\n{\"name\": \"search\", \"arguments\": "
         "{\"query\": [\"" + query + "\"]}}\n</tool_call>";
}

inline std::string tagged_answer(const std::string& thought, const std::string& answer) {
  return "<think>" + thought + "</think>\n<answer>" + answer + "</answer>";
}

inline bool any_message_contains(const std::vector<resum::Message>& messages,
                                 const std::string& needle) {
  for (const auto& m : messages) {
    if (m.content.find(needle) != std::string::npos) return true;
  }
  return false;
}

inline int assistant_message_count(const std::vector<resum::Message>& messages) {
  int n = 0;
  for (const auto& m : messages) {
    if (m.role == "assistant") ++n;
  }
  return n;
}

inline std::string repeated_words(const std::string& stem, int count) {
  std::string out;
  for (int i = 0; i < count; ++i) {
    if (!out.empty()) out += ' ';
    out += stem + std::to_string(i);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Clue-carryover fixture
// ---------------------------------------------------------------------------
// Segment 1 surfaces the decisive clue once via search; later searches return
// filler. The summarizer echoes the clue forward and marks the second
// generation, and the policy answers only from a restart prompt whose summary
// carries the double-confirmed clue. Under ReAct the clue is never
// re-surfaced and the window fails the run.

inline constexpr const char* kClue = "the launch code is osprey-7342";
inline constexpr const char* kClueAnswer = "osprey-7342";
inline constexpr const char* kConfirmedTwice = "confirmed twice";
inline constexpr const char* kSummaryMarker = "Below is a summary of the previous conversation";

struct ClueFixture {
  resum::Question question{"q-clue", "What is the launch code?", std::string(kClueAnswer)};

  CompleteFn policy_rule() const {
    return [](const resum::ModelEndpoint&, const std::vector<resum::Message>& messages,
              const resum::SamplingParams&) -> std::string {
      if (any_message_contains(messages, kConfirmedTwice)) {
        return tagged_answer("the summary confirms the code twice, answering now",
                             kClueAnswer);
      }
      int steps = assistant_message_count(messages);
      bool restarted = any_message_contains(messages, kSummaryMarker);
      if (steps == 0 && !restarted) {
        return tagged_search("start with the most promising lead", "initial lead");
      }
      return tagged_search("keep probing for corroboration " + repeated_words("pad", 12),
                           "follow up " + std::to_string(steps));
    };
  }

  CompleteFn summary_rule() const {
    return [](const resum::ModelEndpoint&, const std::vector<resum::Message>& messages,
              const resum::SamplingParams&) -> std::string {
      bool has_clue = any_message_contains(messages, kClue);
      bool second_generation = any_message_contains(messages, kSummaryMarker);
      std::string essentials = has_clue ? std::string(kClue) : "no concrete finding yet";
      if (has_clue && second_generation) {
        essentials += std::string(", ") + kConfirmedTwice;
      } else if (has_clue) {
        essentials += " (first pass)";
      }
      return "<summary>\n- Essential Information: " + essentials + "\n</summary>";
    };
  }

  // search provider: "initial lead" surfaces the clue once, everything else
  // is sized filler that drives the window up
  std::shared_ptr<resum::SearchProvider> search_provider(int filler_words = 120) const {
    return std::make_shared<FnSearch>(
        [filler_words](const std::string& query) -> std::vector<resum::SearchResult> {
          if (query == "initial lead") {
            return {{"classified memo", "https://example.org/memo",
                     std::string("intercepted note: ") + kClue}};
          }
          return {{"routine report", "https://example.org/report/" + query,
                   repeated_words("datum", filler_words)}};
        });
  }

  std::shared_ptr<resum::VisitProvider> visit_provider() const {
    return std::make_shared<FnVisit>([](const std::string&, const std::string&) -> std::string {
      return "nothing of note";
    });
  }
};

// dispatches by endpoint model name so one backend serves policy + summary +
// judge scripts
inline CompleteFn by_model(std::map<std::string, CompleteFn> rules) {
  return [rules = std::move(rules)](const resum::ModelEndpoint& ep,
                                    const std::vector<resum::Message>& messages,
                                    const resum::SamplingParams& sampling) -> std::string {
    auto it = rules.find(ep.model_name);
    if (it == rules.end()) {
      throw resum::TransportError("no rule for model " + ep.model_name);
    }
    return it->second(ep, messages, sampling);
  };
}

// substring-based judge: CORRECT iff the predicted answer quoted in the
// prompt contains the gold answer
inline CompleteFn substring_judge_rule() {
  return [](const resum::ModelEndpoint&, const std::vector<resum::Message>& messages,
            const resum::SamplingParams&) -> std::string {
    const std::string& prompt = messages.back().content;
    auto grab = [&](const std::string& label) -> std::string {
      size_t b = prompt.find(label);
      if (b == std::string::npos) return "";
      b += label.size();
      size_t e = prompt.find('\n', b);
      return prompt.substr(b, e == std::string::npos ? std::string::npos : e - b);
    };
    std::string gold = grab("Ground truth: ");
    std::string predicted = grab("Predicted answer: ");
    auto lower = [](std::string s) {
      for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      return s;
    };
    bool ok = !gold.empty() && lower(predicted).find(lower(gold)) != std::string::npos;
    return ok ? "CORRECT" : "INCORRECT";
  };
}

// ---------------------------------------------------------------------------
// Swarm fixture: 8 deterministic per-rollout behaviors for group tests
// ---------------------------------------------------------------------------
// Rollouts of one question must differ (groups need reward variance and
// mixed K), so the backend assigns a plan to each fresh rollout in arrival
// order and the plan id is threaded through the conversation itself (thought
// text, echoed queries, summaries), surviving ReSum restarts.

class SwarmPolicy {
 public:
  // question text markers steer per-question behavior:
  //   "[easy]"  -> every plan answers correctly at once (zero-std group)
  //   "[hard]"  -> every plan searches forever (budget failures, zero-std)
  // otherwise the 8-plan mixed schedule applies
  std::string operator()(const resum::ModelEndpoint&, const std::vector<resum::Message>& messages,
                         const resum::SamplingParams&) {
    const std::string& question = messages.at(1).content;
    if (question.find("[easy]") != std::string::npos) {
      return tagged_answer("this one is immediate", gold_of(question));
    }
    if (question.find("[hard]") != std::string::npos) {
      return tagged_search("still looking " + repeated_words("pad", 40),
                           "dead end " + std::to_string(assistant_message_count(messages)));
    }

    int plan = find_plan(messages, question);
    int steps = assistant_message_count(messages);
    int generation = find_generation(messages);
    const std::string tag = "plan" + std::to_string(plan);
    auto search_step = [&](int step) {
      return tagged_search("working " + tag + " " + repeated_words("pad", 40),
                           tag + " probe " + std::to_string(generation) + "." +
                               std::to_string(step));
    };
    switch (plan) {
      case 0: return tagged_answer("direct recall " + tag, gold_of(question));
      case 1: return steps < 2 ? search_step(steps) : tagged_answer("done " + tag, gold_of(question));
      case 2:
        return generation < 1 ? search_step(steps)
                              : tagged_answer("summary suffices " + tag, gold_of(question));
      case 3:
        return generation < 2 ? search_step(steps)
                              : tagged_answer("two summaries in " + tag, gold_of(question));
      case 4: return steps < 1 ? search_step(steps) : tagged_answer("guessing " + tag, "red-13");
      case 5:
        return generation < 1 ? search_step(steps) : tagged_answer("guessing " + tag, "red-13");
      case 6:
        return steps < 1 ? search_step(steps)
                         : "I will just write prose without any tags for " + tag;
      default: return search_step(steps);  // plan 7: search until the budget ends it
    }
  }

  static std::string gold_of(const std::string& question_text) {
    // questions carry their gold inline as "[gold:X]"
    size_t b = question_text.find("[gold:");
    if (b == std::string::npos) return "blue-42";
    b += 6;
    size_t e = question_text.find(']', b);
    return question_text.substr(b, e - b);
  }

 private:
  int find_plan(const std::vector<resum::Message>& messages, const std::string& question) {
    for (const auto& m : messages) {
      size_t at = m.content.find("plan");
      while (at != std::string::npos) {
        if (at + 4 < m.content.size() && std::isdigit(static_cast<unsigned char>(m.content[at + 4]))) {
          return m.content[at + 4] - '0';
        }
        at = m.content.find("plan", at + 4);
      }
    }
    std::lock_guard<std::mutex> lock(mutex_);
    return fresh_counter_[question]++ % 8;
  }

  static int find_generation(const std::vector<resum::Message>& messages) {
    int generation = 0;
    for (const auto& m : messages) {
      size_t at = m.content.find("generation ");
      if (at != std::string::npos && at + 11 < m.content.size()) {
        generation = std::max(generation, m.content[at + 11] - '0');
      }
    }
    return generation;
  }

  std::mutex mutex_;
  std::map<std::string, int> fresh_counter_;
};

// summary rule that threads plan + generation markers forward
inline CompleteFn swarm_summary_rule() {
  return [](const resum::ModelEndpoint&, const std::vector<resum::Message>& messages,
            const resum::SamplingParams&) -> std::string {
    int generation = 0;
    std::string plan_tag;
    for (const auto& m : messages) {
      size_t at = m.content.find("generation ");
      if (at != std::string::npos && at + 11 < m.content.size()) {
        generation = std::max(generation, m.content[at + 11] - '0');
      }
      size_t p = m.content.find("plan");
      if (plan_tag.empty() && p != std::string::npos && p + 4 < m.content.size() &&
          std::isdigit(static_cast<unsigned char>(m.content[p + 4]))) {
        plan_tag = m.content.substr(p, 5);
      }
    }
    return "<summary>\n- Essential Information: " + (plan_tag.empty() ? "notes" : plan_tag) +
           " digest, generation " + std::to_string(generation + 1) + "\n</summary>";
  };
}

inline std::shared_ptr<resum::SearchProvider> filler_search_provider(int words = 200) {
  return std::make_shared<FnSearch>(
      [words](const std::string& query) -> std::vector<resum::SearchResult> {
        return {{"result for " + query, "https://example.org/" + std::to_string(std::hash<std::string>{}(query) % 100000),
                 repeated_words("pad", words)}};
      });
}

// ---------------------------------------------------------------------------
// Synthetic trajectories for segmentation properties
// ---------------------------------------------------------------------------

inline resum::Trajectory random_trajectory(std::mt19937& rng, int summaries,
                                           const resum::Tokenizer& tok) {
  static const char* kWords[] = {"alpha", "beta",  "gamma", "delta", "epsilon",
                                 "查找",  "значит", "zeta",  "eta",   "theta"};
  auto word = [&]() { return std::string(kWords[rng() % 10]); };
  auto payload = [&]() {
    int n = 1 + static_cast<int>(rng() % 6);
    std::string out;
    for (int i = 0; i < n; ++i) {
      if (!out.empty()) out += ' ';
      out += word();
    }
    return out;
  };

  resum::Trajectory traj;
  traj.question_id = "syn-" + std::to_string(rng() % 100000);
  traj.paradigm = summaries > 0 ? resum::Paradigm::ReSum : resum::Paradigm::ReAct;

  bool answered = rng() % 2 == 0;
  // a trailing summarization right before budget exhaustion leaves the final
  // segment output-less
  bool trailing_summary = !answered && summaries > 0 && rng() % 4 == 0;

  for (int seg = 0; seg <= summaries; ++seg) {
    bool last_segment = seg == summaries;
    int rounds = 1 + static_cast<int>(rng() % 3);
    if (last_segment && trailing_summary) rounds = 0;
    int round = 1;
    for (; round <= rounds; ++round) {
      append_turn(traj, make_turn(resum::TurnKind::Thought, payload(), round, tok), tok);
      bool answer_now = last_segment && answered && round == rounds;
      if (answer_now) {
        append_turn(traj, make_turn(resum::TurnKind::Answer, payload(), round, tok), tok);
        break;
      }
      append_turn(traj, make_turn(resum::TurnKind::ToolCall, payload(), round, tok), tok);
      append_turn(traj, make_turn(resum::TurnKind::Observation, payload(), round, tok), tok);
    }
    if (!last_segment) {
      int at = std::max(1, round - 1);
      append_turn(traj, make_turn(resum::TurnKind::Summary, payload(), at, tok), tok);
    }
  }
  if (traj.status == resum::Status::Running) {
    traj.status = resum::Status::FailedBudget;
  }
  return traj;
}

// reassembly oracle: concatenate segment outputs, re-inserting the Summary
// turns at the recorded offsets
inline std::vector<resum::Turn> reassemble(const std::vector<resum::Segment>& segments,
                                           const resum::Trajectory& original) {
  std::vector<resum::Turn> turns;
  size_t event = 0;
  for (const resum::Segment& seg : segments) {
    for (const resum::Turn& t : seg.output_turns) turns.push_back(t);
    if (event < original.summarization_events.size()) {
      turns.push_back(original.turns.at(original.summarization_events[event].turn_offset));
      ++event;
    }
  }
  return turns;
}

inline resum::ModelEndpoint test_endpoint(const std::string& model, int window = 0) {
  resum::ModelEndpoint ep;
  ep.base_url = "http://fixture";
  ep.model_name = model;
  ep.max_retries = 0;
  ep.context_window_tokens = window;
  return ep;
}

}  // namespace testsupport
