#include "resum/types.hpp"

namespace resum {

std::string to_string(TurnKind k) {
  switch (k) {
    case TurnKind::Thought: return "thought";
    case TurnKind::ToolCall: return "tool_call";
    case TurnKind::Observation: return "observation";
    case TurnKind::Summary: return "summary";
    case TurnKind::Answer: return "answer";
  }
  return "unknown";
}

std::string to_string(Status s) {
  switch (s) {
    case Status::Running: return "running";
    case Status::Answered: return "answered";
    case Status::FailedFormat: return "failed_format";
    case Status::FailedBudget: return "failed_budget";
    case Status::FailedNoAction: return "failed_no_action";
  }
  return "unknown";
}

std::string to_string(Paradigm p) {
  switch (p) {
    case Paradigm::ReAct: return "react";
    case Paradigm::ReSum: return "resum";
    case Paradigm::RecentHistory: return "recent";
  }
  return "unknown";
}

TurnKind turn_kind_from_string(const std::string& s) {
  if (s == "thought") return TurnKind::Thought;
  if (s == "tool_call") return TurnKind::ToolCall;
  if (s == "observation") return TurnKind::Observation;
  if (s == "summary") return TurnKind::Summary;
  if (s == "answer") return TurnKind::Answer;
  throw std::invalid_argument("unknown turn kind: " + s);
}

Status status_from_string(const std::string& s) {
  if (s == "running") return Status::Running;
  if (s == "answered") return Status::Answered;
  if (s == "failed_format") return Status::FailedFormat;
  if (s == "failed_budget") return Status::FailedBudget;
  if (s == "failed_no_action") return Status::FailedNoAction;
  throw std::invalid_argument("unknown status: " + s);
}

Paradigm paradigm_from_string(const std::string& s) {
  if (s == "react") return Paradigm::ReAct;
  if (s == "resum") return Paradigm::ReSum;
  if (s == "recent") return Paradigm::RecentHistory;
  throw std::invalid_argument("unknown paradigm: " + s);
}

Turn make_turn(TurnKind kind, std::string payload, int round_index, const Tokenizer& tok) {
  Turn t;
  t.kind = kind;
  t.token_len = tok.count(payload);
  t.payload = std::move(payload);
  t.round_index = round_index;
  return t;
}

void append_turn(Trajectory& traj, Turn turn, const Tokenizer& tok) {
  if (traj.status != Status::Running) {
    throw AppendAfterTerminal("append_turn on a " + to_string(traj.status) + " trajectory");
  }
  if (turn.round_index < 1) {
    throw std::invalid_argument("round_index must be >= 1");
  }
  if (turn.token_len != tok.count(turn.payload)) {
    throw std::invalid_argument("token_len does not match tokenizer recount");
  }
  if (!traj.turns.empty()) {
    const Turn& prev = traj.turns.back();
    if (prev.kind == TurnKind::Summary) {
      if (turn.round_index != 1) {
        throw std::invalid_argument("round_index must restart at 1 after a summarization event");
      }
    } else if (turn.round_index < prev.round_index) {
      throw std::invalid_argument("round_index must be non-decreasing within a segment");
    }
  }

  if (turn.kind == TurnKind::ToolCall) {
    ++traj.tool_calls_used;
  }
  if (turn.kind == TurnKind::Summary) {
    traj.summarization_events.push_back({traj.turns.size(), turn.payload});
  }
  bool is_answer = turn.kind == TurnKind::Answer;
  traj.turns.push_back(std::move(turn));
  if (is_answer) {
    traj.status = Status::Answered;
  }
}

}  // namespace resum
