#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "resum/tokenizer.hpp"

namespace resum {

struct Question {
  std::string id;
  std::string text;
  std::optional<std::string> gold_answer;
};

enum class TurnKind { Thought, ToolCall, Observation, Summary, Answer };

enum class Status { Running, Answered, FailedFormat, FailedBudget, FailedNoAction };

enum class Paradigm { ReAct, ReSum, RecentHistory };

std::string to_string(TurnKind k);
std::string to_string(Status s);
std::string to_string(Paradigm p);
TurnKind turn_kind_from_string(const std::string& s);
Status status_from_string(const std::string& s);
Paradigm paradigm_from_string(const std::string& s);

struct Turn {
  TurnKind kind = TurnKind::Thought;
  std::string payload;      // raw text; tag markup is applied at render time only
  int round_index = 1;      // restarts at 1 after each summarization event
  int token_len = 0;        // token count of payload under the active tokenizer

  bool operator==(const Turn&) const = default;
};

Turn make_turn(TurnKind kind, std::string payload, int round_index, const Tokenizer& tok);

struct SummarizationEvent {
  size_t turn_offset = 0;   // index of the Summary turn within Trajectory::turns
  std::string summary_text;

  bool operator==(const SummarizationEvent&) const = default;
};

struct TruncationEvent {
  size_t turn_offset = 0;   // turns present when the rendering was truncated
  int tokens_before = 0;
  int tokens_after = 0;
};

struct Trajectory {
  std::string question_id;
  Paradigm paradigm = Paradigm::ReAct;
  Status status = Status::Running;
  std::vector<Turn> turns;
  std::vector<SummarizationEvent> summarization_events;  // size == K
  std::vector<TruncationEvent> truncation_events;        // RecentHistory only; not logged
  int tool_calls_used = 0;
  long long total_tokens = 0;  // sum of rendered prompt tokens over policy requests

  int summary_count() const { return static_cast<int>(summarization_events.size()); }
  bool terminal() const { return status != Status::Running; }
};

struct AppendAfterTerminal : std::logic_error {
  using std::logic_error::logic_error;
};

// Appends `turn` enforcing the trajectory invariants: only Running
// trajectories accept turns, token_len must match a recount, round indices
// are non-decreasing within a segment and reset to 1 after a Summary turn.
// An Answer turn flips status to Answered; a Summary turn records a
// summarization event.
void append_turn(Trajectory& traj, Turn turn, const Tokenizer& tok);

// compressed state: the original question paired with the latest summary
struct CompressedQuery {
  std::string question_id;
  std::string summary;
  int generation = 1;  // k-th summarization, 1-based
};

using SegmentInput = std::variant<Question, CompressedQuery>;

struct Segment {
  std::string trajectory_id;
  int segment_index = 1;  // 1-based, in [1, K+1]
  SegmentInput input_query;
  std::vector<Turn> output_turns;  // never contains Summary turns
};

}  // namespace resum
