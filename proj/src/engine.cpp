#include "resum/engine.hpp"

#include <limits>

namespace resum {

std::string to_string(TriggerKind k) {
  switch (k) {
    case TriggerKind::TokenBudget: return "token_budget";
    case TriggerKind::RoundLimit: return "round_limit";
    case TriggerKind::AgentInitiated: return "agent_initiated";
  }
  return "unknown";
}

TriggerKind trigger_kind_from_string(const std::string& s) {
  if (s == "token_budget") return TriggerKind::TokenBudget;
  if (s == "round_limit") return TriggerKind::RoundLimit;
  if (s == "agent_initiated") return TriggerKind::AgentInitiated;
  throw std::invalid_argument("unknown trigger kind: " + s);
}

int ParadigmConfig::effective_trigger_threshold() const {
  if (trigger == TriggerKind::RoundLimit) return trigger_threshold;
  if (trigger_threshold > 0) return trigger_threshold;
  return context_window_tokens - reserved_summary_tokens;
}

void ParadigmConfig::validate() const {
  if (context_window_tokens <= 0) throw std::invalid_argument("context_window_tokens must be > 0");
  if (tool_call_budget <= 0) throw std::invalid_argument("tool_call_budget must be > 0");
  if (max_observation_tokens <= 0) {
    throw std::invalid_argument("max_observation_tokens must be > 0");
  }
  if (trigger == TriggerKind::AgentInitiated) {
    throw std::invalid_argument("agent_initiated trigger is a reserved hook, not implemented");
  }
  if (paradigm == Paradigm::RecentHistory &&
      recent_history_keep_tokens >= context_window_tokens) {
    throw std::invalid_argument("recent_history_keep_tokens must be < context_window_tokens");
  }
  if (paradigm == Paradigm::ReSum) {
    if (trigger == TriggerKind::TokenBudget) {
      int threshold = effective_trigger_threshold();
      if (threshold <= 0) throw std::invalid_argument("trigger threshold must be > 0");
      if (threshold > context_window_tokens) {
        throw std::invalid_argument("trigger threshold must be <= context_window_tokens");
      }
    } else if (trigger_threshold <= 0) {
      throw std::invalid_argument("round limit must be > 0");
    }
  }
}

bool check_trigger(const TriggerState& state, const ParadigmConfig& config) {
  switch (config.trigger) {
    case TriggerKind::TokenBudget:
      return state.rendered_tokens >= config.effective_trigger_threshold();
    case TriggerKind::RoundLimit:
      return state.rounds_since_summary >= config.trigger_threshold;
    case TriggerKind::AgentInitiated:
      throw std::logic_error("agent_initiated trigger is not implemented");
  }
  return false;
}

RolloutEngine::RolloutEngine(Gateway& gateway, ToolEnvironment& env, const Tokenizer& tokenizer,
                             ParadigmConfig config, ModelEndpoint policy, SamplingParams sampling,
                             Summarizer* summarizer, RolloutObserver* observer)
    : gateway_(gateway),
      env_(env),
      tokenizer_(tokenizer),
      config_(std::move(config)),
      policy_(std::move(policy)),
      sampling_(sampling),
      summarizer_(summarizer),
      observer_(observer) {
  config_.validate();
}

Trajectory RolloutEngine::run(const Question& question) {
  switch (config_.paradigm) {
    case Paradigm::ReAct: return run_react(question);
    case Paradigm::RecentHistory: return run_recent_history(question);
    case Paradigm::ReSum: return run_resum(question);
  }
  throw std::logic_error("unknown paradigm");
}

std::string RolloutEngine::complete_policy(Trajectory& traj, const std::vector<Message>& messages) {
  int tokens = context_tokens(messages, tokenizer_);
  traj.total_tokens += tokens;
  if (observer_) observer_->on_completion_request(messages, tokens);
  return gateway_.complete(policy_, messages, sampling_);
}

Trajectory RolloutEngine::run_react(const Question& question) {
  if (config_.paradigm != Paradigm::ReAct) {
    throw std::invalid_argument("run_react requires paradigm = react");
  }
  Trajectory traj;
  traj.question_id = question.id;
  traj.paradigm = Paradigm::ReAct;

  int round = 1;
  while (traj.tool_calls_used < config_.tool_call_budget) {
    auto messages = render_prompt(question, traj.turns);
    if (context_tokens(messages, tokenizer_) >= config_.context_window_tokens) {
      traj.status = Status::FailedBudget;  // window reached without an answer
      return traj;
    }

    std::string raw;
    try {
      raw = complete_policy(traj, messages);
    } catch (const ContextOverflowRejected&) {
      traj.status = Status::FailedBudget;
      return traj;
    }

    ParseResult parsed = parse_agent_output(raw);
    if (const auto* violation = std::get_if<FormatViolation>(&parsed)) {
      (void)violation;
      traj.status = Status::FailedFormat;
      return traj;
    }
    const AgentStep& step = std::get<AgentStep>(parsed);
    append_turn(traj, make_turn(TurnKind::Thought, step.thought, round, tokenizer_), tokenizer_);
    if (step.answer) {
      append_turn(traj, make_turn(TurnKind::Answer, *step.answer, round, tokenizer_), tokenizer_);
      return traj;  // status flipped to Answered by append_turn
    }
    append_turn(traj, make_turn(TurnKind::ToolCall, step.raw_tool_call, round, tokenizer_),
                tokenizer_);
    Observation obs =
        clip_observation(env_.execute(*step.tool_call), config_.max_observation_tokens, tokenizer_);
    append_turn(traj, make_turn(TurnKind::Observation, obs.text, round, tokenizer_), tokenizer_);
    ++round;
  }
  traj.status = Status::FailedBudget;
  return traj;
}

Trajectory RolloutEngine::run_recent_history(const Question& question) {
  if (config_.paradigm != Paradigm::RecentHistory) {
    throw std::invalid_argument("run_recent_history requires paradigm = recent");
  }
  Trajectory traj;
  traj.question_id = question.id;
  traj.paradigm = Paradigm::RecentHistory;

  int round = 1;
  while (traj.tool_calls_used < config_.tool_call_budget) {
    auto messages = render_prompt(question, traj.turns);
    int tokens = context_tokens(messages, tokenizer_);
    if (tokens >= config_.context_window_tokens) {
      // Window reached: keep only the most recent whole messages and go on.
      auto truncated = truncate_to_recent(messages, config_.recent_history_keep_tokens, tokenizer_);
      traj.truncation_events.push_back(
          {traj.turns.size(), tokens, context_tokens(truncated, tokenizer_)});
      if (observer_) observer_->on_truncation(messages, truncated);
      messages = std::move(truncated);
    }

    std::string raw;
    try {
      raw = complete_policy(traj, messages);
    } catch (const ContextOverflowRejected&) {
      traj.status = Status::FailedBudget;
      return traj;
    }

    ParseResult parsed = parse_agent_output(raw);
    if (std::holds_alternative<FormatViolation>(parsed)) {
      traj.status = Status::FailedFormat;
      return traj;
    }
    const AgentStep& step = std::get<AgentStep>(parsed);
    append_turn(traj, make_turn(TurnKind::Thought, step.thought, round, tokenizer_), tokenizer_);
    if (step.answer) {
      append_turn(traj, make_turn(TurnKind::Answer, *step.answer, round, tokenizer_), tokenizer_);
      return traj;
    }
    append_turn(traj, make_turn(TurnKind::ToolCall, step.raw_tool_call, round, tokenizer_),
                tokenizer_);
    Observation obs =
        clip_observation(env_.execute(*step.tool_call), config_.max_observation_tokens, tokenizer_);
    append_turn(traj, make_turn(TurnKind::Observation, obs.text, round, tokenizer_), tokenizer_);
    ++round;
  }
  traj.status = Status::FailedBudget;
  return traj;
}

Trajectory RolloutEngine::run_resum(const Question& question) {
  if (config_.paradigm != Paradigm::ReSum) {
    throw std::invalid_argument("run_resum requires paradigm = resum");
  }
  if (!summarizer_) {
    throw std::logic_error("run_resum requires a summarizer");
  }
  Trajectory traj;
  traj.question_id = question.id;
  traj.paradigm = Paradigm::ReSum;

  std::optional<CompressedQuery> compressed;
  std::vector<Turn> working;  // turns since the last reset, Summary turns excluded
  int round = 1;
  int rounds_in_segment = 0;

  auto render_working = [&]() {
    return compressed ? render_prompt(question, *compressed, working)
                      : render_prompt(question, working);
  };

  // Invokes the summary tool on the working history and resets it to the
  // compressed state (question + fresh summary). Returns false when the
  // trajectory must fail closed.
  auto summarize_and_reset = [&](int at_round) -> bool {
    SummaryRequest request{question.text, render_working()};
    std::string summary;
    try {
      summary = summarizer_->summarize(request).summary_text;
    } catch (const SummaryFailure&) {
      return false;
    }
    if (tokenizer_.count(summary) > config_.reserved_summary_tokens) {
      summary = clip_to_tokens(summary, config_.reserved_summary_tokens, tokenizer_).text;
    }
    append_turn(traj, make_turn(TurnKind::Summary, summary, at_round, tokenizer_), tokenizer_);
    compressed = build_compressed_query(question, summary, traj.summary_count());
    working.clear();
    round = 1;
    rounds_in_segment = 0;
    // Compression effectiveness: the restart prompt must sit below the
    // trigger threshold, otherwise the loop would re-trigger immediately.
    if (config_.trigger == TriggerKind::TokenBudget &&
        context_tokens(render_working(), tokenizer_) >= config_.effective_trigger_threshold()) {
      return false;
    }
    return true;
  };

  while (traj.tool_calls_used < config_.tool_call_budget) {
    auto messages = render_working();
    if (context_tokens(messages, tokenizer_) >= config_.context_window_tokens) {
      traj.status = Status::FailedBudget;
      return traj;
    }

    std::string raw;
    try {
      raw = complete_policy(traj, messages);
    } catch (const ContextOverflowRejected&) {
      // Server-side rejection handled like a locally detected trigger.
      if (working.empty() || !summarize_and_reset(std::max(1, round - 1))) {
        traj.status = Status::FailedBudget;
        return traj;
      }
      continue;
    }

    ParseResult parsed = parse_agent_output(raw);
    if (const auto* violation = std::get_if<FormatViolation>(&parsed)) {
      // A well-formed thought with no action terminates as a no-action
      // failure; anything violating the tag protocol is a format failure.
      bool no_action = violation->reason == ViolationReason::NoAction &&
                       violation->thought_present;
      traj.status = no_action ? Status::FailedNoAction : Status::FailedFormat;
      return traj;
    }
    const AgentStep& step = std::get<AgentStep>(parsed);
    if (step.answer) {
      append_turn(traj, make_turn(TurnKind::Thought, step.thought, round, tokenizer_), tokenizer_);
      append_turn(traj, make_turn(TurnKind::Answer, *step.answer, round, tokenizer_), tokenizer_);
      return traj;
    }

    Turn thought = make_turn(TurnKind::Thought, step.thought, round, tokenizer_);
    Turn call = make_turn(TurnKind::ToolCall, step.raw_tool_call, round, tokenizer_);
    Observation obs =
        clip_observation(env_.execute(*step.tool_call), config_.max_observation_tokens, tokenizer_);
    Turn observation = make_turn(TurnKind::Observation, obs.text, round, tokenizer_);
    append_turn(traj, thought, tokenizer_);
    append_turn(traj, call, tokenizer_);
    append_turn(traj, observation, tokenizer_);
    working.push_back(std::move(thought));
    working.push_back(std::move(call));
    working.push_back(std::move(observation));
    ++rounds_in_segment;

    TriggerState state{context_tokens(render_working(), tokenizer_), rounds_in_segment};
    if (check_trigger(state, config_)) {
      if (observer_) observer_->on_trigger(state.rendered_tokens, traj.summary_count() + 1);
      if (!summarize_and_reset(round)) {
        traj.status = Status::FailedBudget;
        return traj;
      }
      continue;
    }
    ++round;
  }
  traj.status = Status::FailedBudget;
  return traj;
}

}  // namespace resum
