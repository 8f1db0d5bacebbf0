#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "resum/engine.hpp"
#include "resum/reward.hpp"
#include "resum/trajectory_log.hpp"
#include "resum/types.hpp"

namespace resum {

// Line-delimited question sets: {"id", "question", "answer"} per line.
std::vector<Question> read_question_set(const std::filesystem::path& path);
void write_question_set(const std::vector<Question>& questions,
                        const std::filesystem::path& path);
std::string question_set_hash(const std::vector<Question>& questions);

struct RunManifest {
  std::string run_id;
  std::string config_json;  // full snapshot
  std::string question_set_hash;
  std::string paradigm;
  int rollouts_per_question = 1;
  std::map<std::string, std::string> endpoint_identities;  // role -> url#model
  uint64_t seed = 0;
  std::string tokenizer_name;
  bool counts_system_prompt = true;
  std::string started_at;
  std::string finished_at;
};

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path);
RunManifest read_manifest(const std::filesystem::path& path);

struct VerdictStats {
  std::map<int, int> tool_call_histogram;   // exact-value bins
  std::map<long long, int> token_histogram;
  double mean_tool_calls = 0.0;
  double mean_tokens = 0.0;
  int count = 0;
};

struct ResourceStats {
  VerdictStats correct;
  VerdictStats incorrect;
};

struct MetricsReport {
  double pass_at_1 = 0.0;
  std::optional<double> pass_at_3;  // needs >= 3 rollouts per question
  std::map<std::string, std::vector<int>> verdict_matrix;  // question_id -> rewards per rollout
  ResourceStats resources;
  std::vector<std::string> transport_failed_questions;  // every rollout transport-failed
  std::string notes;  // accounting caveats, printed as the report header
};

double pass_at_1(const std::map<std::string, std::vector<int>>& verdicts);
std::optional<double> pass_at_k(const std::map<std::string, std::vector<int>>& verdicts, int k);

// Token/tool-call distributions split by verdict, Figure-2 style.
ResourceStats resource_stats(const std::vector<LoggedTrajectory>& logs,
                             const std::map<std::string, std::vector<int>>& verdicts);

std::string render_report_text(const MetricsReport& report);
std::string report_json(const MetricsReport& report);

struct BenchDeps {
  Gateway& gateway;
  ToolEnvironment& env;
  const Tokenizer& tokenizer;
  ModelEndpoint policy;
  ModelEndpoint judge;
  std::optional<ModelEndpoint> summary;  // required for the resum paradigm
  SamplingParams sampling;
};

struct BenchOptions {
  int rollouts_per_question = 1;
  int parallelism = 1;
  uint64_t seed = 0;
  std::string config_json = "{}";
  std::string run_id;  // empty = derived from time
};

// Runs rollouts_per_question independent rollouts per question, judges each,
// and writes manifest + trajectories.jsonl + rewards.jsonl + metrics.json
// under out_dir. Resumable: completed (question, rollout) pairs found in the
// existing logs are skipped.
MetricsReport run_benchmark(const std::vector<Question>& questions, const ParadigmConfig& config,
                            const BenchDeps& deps, const BenchOptions& options,
                            const std::filesystem::path& out_dir);

// Recomputes the report from a run directory written by run_benchmark.
MetricsReport report_from_run_dir(const std::filesystem::path& run_dir);

// rewards.jsonl records {question_id, rollout_index, trajectory_id, reward, source}
struct StoredReward {
  std::string question_id;
  int rollout_index = 0;
  std::string trajectory_id;
  int reward = 0;
  RewardSource source = RewardSource::Judge;
};

void append_reward(const std::filesystem::path& path, const StoredReward& reward);
std::vector<StoredReward> read_rewards(const std::filesystem::path& path);

// Turns a judged run directory into advantage-annotated groups: rollouts of
// each question are chunked in arrival order into groups of group_size;
// incomplete chunks are reported, not grouped.
struct RunGrouping {
  std::vector<GroupResult> groups;
  std::vector<std::string> skipped_questions;  // fewer rollouts than group_size
  std::string config_hash;                     // from the run manifest, "" if absent
};

RunGrouping group_run_rollouts(const std::filesystem::path& run_dir, int group_size);

}  // namespace resum
