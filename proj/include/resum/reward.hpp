#pragma once

#include <optional>
#include <string>
#include <vector>

#include "resum/gateway.hpp"
#include "resum/types.hpp"

namespace resum {

enum class RewardSource { Judge, FormatPenalty, BudgetFailure };

std::string to_string(RewardSource s);
RewardSource reward_source_from_string(const std::string& s);

struct RewardRecord {
  std::string trajectory_id;
  int reward = 0;  // in {0, 1}
  RewardSource source = RewardSource::Judge;
  std::string judge_raw;
};

// Trajectory-level binary grading. Non-Answered trajectories bypass the
// judge: format/no-action failures earn the format penalty, budget failures
// the budget source, both with reward 0. Answered trajectories take a
// whitespace/case-insensitive exact-match fast path before any judge call;
// an unparseable verdict earns one re-sample, then a conservative 0.
class Judge {
 public:
  Judge(Gateway& gateway, ModelEndpoint endpoint, SamplingParams sampling);

  RewardRecord grade(const Question& question, const Trajectory& trajectory,
                     const std::string& trajectory_id);

 private:
  Gateway& gateway_;
  ModelEndpoint endpoint_;
  SamplingParams sampling_;
};

// Answer payload of the terminal Answer turn; nullopt when not Answered.
std::optional<std::string> predicted_answer(const Trajectory& trajectory);

// lowercase + whitespace-collapsed comparison for the exact-match fast path
bool answers_match_exactly(const std::string& predicted, const std::string& gold);

// CORRECT/INCORRECT line scan; nullopt when neither verdict is present.
std::optional<bool> parse_judge_verdict(const std::string& raw);

struct GroupTooSmall : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct GroupStats {
  double mean = 0.0;
  double stddev = 0.0;                // population std (divide by G)
  std::vector<double> advantages;     // (R_g - mean)/std; all zero when std == 0
};

// Group-relative advantage normalization over G binary rewards; G >= 2.
GroupStats group_advantages(const std::vector<int>& rewards);

struct GroupResult {
  std::string group_id;
  Question question;
  std::vector<Trajectory> rollouts;       // size G
  std::vector<std::string> rollout_ids;   // lineage, parallel to rollouts
  std::vector<RewardRecord> rewards;      // parallel to rollouts
  GroupStats stats;

  bool zero_std() const { return stats.stddev == 0.0; }
};

GroupResult make_group_result(std::string group_id, Question question,
                              std::vector<Trajectory> rollouts,
                              std::vector<std::string> rollout_ids,
                              std::vector<RewardRecord> rewards);

}  // namespace resum
