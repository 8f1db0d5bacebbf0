#pragma once

#include "resum/gateway.hpp"
#include "resum/render.hpp"
#include "resum/summarizer.hpp"
#include "resum/tokenizer.hpp"
#include "resum/tools.hpp"
#include "resum/types.hpp"

namespace resum {

enum class TriggerKind {
  TokenBudget,
  RoundLimit,
  AgentInitiated,  // reserved hook; the policy-emitted trigger is not implemented
};

std::string to_string(TriggerKind k);
TriggerKind trigger_kind_from_string(const std::string& s);

struct ParadigmConfig {
  Paradigm paradigm = Paradigm::ReAct;
  int context_window_tokens = 32768;
  int tool_call_budget = 60;               // B, cumulative across segments
  int recent_history_keep_tokens = 22528;  // the 22k suffix kept on truncation
  TriggerKind trigger = TriggerKind::TokenBudget;
  int trigger_threshold = 0;               // 0 = derive: window - reserved_summary_tokens
  int reserved_summary_tokens = 4096;      // head-room for the summary call and clip cap
  int max_observation_tokens = 2048;

  int effective_trigger_threshold() const;
  void validate() const;
};

struct TriggerState {
  int rendered_tokens = 0;
  int rounds_since_summary = 0;
};

// Evaluated after each observation append. >= semantics at the boundary.
bool check_trigger(const TriggerState& state, const ParadigmConfig& config);

// Test/instrumentation hook; every callback refers to the policy endpoint.
class RolloutObserver {
 public:
  virtual ~RolloutObserver() = default;
  virtual void on_completion_request(const std::vector<Message>&, int /*prompt_tokens*/) {}
  virtual void on_truncation(const std::vector<Message>& /*full*/,
                             const std::vector<Message>& /*truncated*/) {}
  virtual void on_trigger(int /*rendered_tokens*/, int /*generation*/) {}
};

// The three rollout loops. One engine instance may run many questions; one
// rollout is a single sequential task and trajectories are never shared
// between concurrent rollouts.
class RolloutEngine {
 public:
  RolloutEngine(Gateway& gateway, ToolEnvironment& env, const Tokenizer& tokenizer,
                ParadigmConfig config, ModelEndpoint policy, SamplingParams sampling,
                Summarizer* summarizer = nullptr, RolloutObserver* observer = nullptr);

  // Dispatches on config.paradigm.
  Trajectory run(const Question& question);

  Trajectory run_react(const Question& question);
  Trajectory run_recent_history(const Question& question);
  Trajectory run_resum(const Question& question);

  const ParadigmConfig& config() const { return config_; }

 private:
  std::string complete_policy(Trajectory& traj, const std::vector<Message>& messages);

  Gateway& gateway_;
  ToolEnvironment& env_;
  const Tokenizer& tokenizer_;
  ParadigmConfig config_;
  ModelEndpoint policy_;
  SamplingParams sampling_;
  Summarizer* summarizer_;
  RolloutObserver* observer_;
};

}  // namespace resum
