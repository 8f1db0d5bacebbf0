#include "resum/reward.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "resum/prompts.hpp"
#include "resum/render.hpp"

namespace resum {

std::string to_string(RewardSource s) {
  switch (s) {
    case RewardSource::Judge: return "judge";
    case RewardSource::FormatPenalty: return "format_penalty";
    case RewardSource::BudgetFailure: return "budget_failure";
  }
  return "unknown";
}

RewardSource reward_source_from_string(const std::string& s) {
  if (s == "judge") return RewardSource::Judge;
  if (s == "format_penalty") return RewardSource::FormatPenalty;
  if (s == "budget_failure") return RewardSource::BudgetFailure;
  throw std::invalid_argument("unknown reward source: " + s);
}

std::optional<std::string> predicted_answer(const Trajectory& trajectory) {
  if (trajectory.status != Status::Answered || trajectory.turns.empty()) return std::nullopt;
  const Turn& last = trajectory.turns.back();
  if (last.kind != TurnKind::Answer) return std::nullopt;
  return last.payload;
}

bool answers_match_exactly(const std::string& predicted, const std::string& gold) {
  auto normalize = [](const std::string& s) {
    std::string out;
    bool pending_space = false;
    for (char c : s) {
      if (std::isspace(static_cast<unsigned char>(c))) {
        pending_space = !out.empty();
        continue;
      }
      if (pending_space) {
        out += ' ';
        pending_space = false;
      }
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
  };
  return normalize(predicted) == normalize(gold);
}

std::optional<bool> parse_judge_verdict(const std::string& raw) {
  std::istringstream lines(raw);
  std::string line;
  while (std::getline(lines, line)) {
    size_t b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    size_t e = line.find_last_not_of(" \t\r");
    std::string token = line.substr(b, e - b + 1);
    std::transform(token.begin(), token.end(), token.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    if (token == "CORRECT") return true;
    if (token == "INCORRECT") return false;
  }
  return std::nullopt;
}

Judge::Judge(Gateway& gateway, ModelEndpoint endpoint, SamplingParams sampling)
    : gateway_(gateway), endpoint_(std::move(endpoint)), sampling_(sampling) {}

RewardRecord Judge::grade(const Question& question, const Trajectory& trajectory,
                          const std::string& trajectory_id) {
  RewardRecord record;
  record.trajectory_id = trajectory_id;

  switch (trajectory.status) {
    case Status::Running:
      throw std::invalid_argument("grade requires a terminal trajectory");
    case Status::FailedFormat:
    case Status::FailedNoAction:
      record.reward = 0;
      record.source = RewardSource::FormatPenalty;
      return record;
    case Status::FailedBudget:
      record.reward = 0;
      record.source = RewardSource::BudgetFailure;
      return record;
    case Status::Answered:
      break;
  }

  record.source = RewardSource::Judge;
  auto predicted = predicted_answer(trajectory);
  if (!predicted || !question.gold_answer) {
    record.reward = 0;
    record.judge_raw = "missing gold answer";
    return record;
  }
  if (answers_match_exactly(*predicted, *question.gold_answer)) {
    record.reward = 1;  // short-circuit, no judge call
    return record;
  }

  std::string prompt = fill_template(prompts::kJudgePromptTemplate, "Question", question.text);
  prompt = fill_template(std::move(prompt), "GroundTruth", *question.gold_answer);
  prompt = fill_template(std::move(prompt), "Predicted", *predicted);
  std::vector<Message> messages{{"user", std::move(prompt)}};

  for (int attempt = 0; attempt < 2; ++attempt) {
    record.judge_raw = gateway_.complete(endpoint_, messages, sampling_);
    if (auto verdict = parse_judge_verdict(record.judge_raw)) {
      record.reward = *verdict ? 1 : 0;
      return record;
    }
  }
  record.reward = 0;  // conservative on unparseable verdicts
  return record;
}

GroupStats group_advantages(const std::vector<int>& rewards) {
  const size_t g = rewards.size();
  if (g < 2) {
    throw GroupTooSmall("group size must be >= 2, got " + std::to_string(g));
  }
  GroupStats stats;
  double sum = 0.0;
  for (int r : rewards) sum += r;
  stats.mean = sum / static_cast<double>(g);
  double ssd = 0.0;
  for (int r : rewards) {
    double d = static_cast<double>(r) - stats.mean;
    ssd += d * d;
  }
  stats.stddev = std::sqrt(ssd / static_cast<double>(g));
  stats.advantages.resize(g, 0.0);
  if (stats.stddev > 0.0) {
    for (size_t i = 0; i < g; ++i) {
      stats.advantages[i] = (static_cast<double>(rewards[i]) - stats.mean) / stats.stddev;
    }
  }
  return stats;
}

GroupResult make_group_result(std::string group_id, Question question,
                              std::vector<Trajectory> rollouts,
                              std::vector<std::string> rollout_ids,
                              std::vector<RewardRecord> rewards) {
  if (rollouts.size() != rewards.size() || rollouts.size() != rollout_ids.size()) {
    throw std::invalid_argument("rollouts, ids and rewards must be parallel");
  }
  GroupResult group;
  group.group_id = std::move(group_id);
  group.question = std::move(question);
  group.rollouts = std::move(rollouts);
  group.rollout_ids = std::move(rollout_ids);
  group.rewards = std::move(rewards);
  std::vector<int> reward_values;
  reward_values.reserve(group.rewards.size());
  for (const RewardRecord& r : group.rewards) reward_values.push_back(r.reward);
  group.stats = group_advantages(reward_values);
  return group;
}

}  // namespace resum
