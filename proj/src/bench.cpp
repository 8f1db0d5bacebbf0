#include "resum/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <mutex>
#include <thread>

#include "json.hpp"

namespace resum {

using ordered_json = nlohmann::ordered_json;

namespace {

uint64_t fnv1a(std::string_view data, uint64_t seed = 1469598103934665603ull) {
  uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

std::string now_iso8601() {
  auto now = std::chrono::system_clock::now();
  auto t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return std::string(buf);
}

}  // namespace

std::vector<Question> read_question_set(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read question set: " + path.string());
  std::vector<Question> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto rec = nlohmann::json::parse(line);
    Question q;
    q.id = rec.at("id").get<std::string>();
    q.text = rec.at("question").get<std::string>();
    if (rec.contains("answer") && !rec.at("answer").is_null()) {
      q.gold_answer = rec.at("answer").get<std::string>();
    }
    if (q.text.empty()) throw std::runtime_error("question " + q.id + " has empty text");
    out.push_back(std::move(q));
  }
  return out;
}

std::string question_set_hash(const std::vector<Question>& questions) {
  uint64_t h = 1469598103934665603ull;
  for (const Question& q : questions) {
    h = fnv1a(q.id, h);
    h = fnv1a(q.text, h);
    if (q.gold_answer) h = fnv1a(*q.gold_answer, h);
  }
  return hex64(h);
}

void write_question_set(const std::vector<Question>& questions,
                        const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write question set: " + path.string());
  for (const Question& q : questions) {
    ordered_json j;
    j["id"] = q.id;
    j["question"] = q.text;
    j["answer"] = q.gold_answer ? nlohmann::json(*q.gold_answer) : nlohmann::json(nullptr);
    out << j.dump() << '\n';
  }
}

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path) {
  ordered_json j;
  j["run_id"] = manifest.run_id;
  j["paradigm"] = manifest.paradigm;
  j["rollouts_per_question"] = manifest.rollouts_per_question;
  j["question_set_hash"] = manifest.question_set_hash;
  j["endpoints"] = manifest.endpoint_identities;
  j["seed"] = manifest.seed;
  j["tokenizer"] = manifest.tokenizer_name;
  j["counts_system_prompt"] = manifest.counts_system_prompt;
  j["started_at"] = manifest.started_at;
  j["finished_at"] = manifest.finished_at;
  j["config"] = nlohmann::ordered_json::parse(manifest.config_json);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write manifest: " + path.string());
  out << j.dump(2) << '\n';
}

RunManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read manifest: " + path.string());
  auto j = ordered_json::parse(in);
  RunManifest m;
  m.run_id = j.at("run_id").get<std::string>();
  m.paradigm = j.at("paradigm").get<std::string>();
  m.rollouts_per_question = j.at("rollouts_per_question").get<int>();
  m.question_set_hash = j.at("question_set_hash").get<std::string>();
  m.endpoint_identities = j.at("endpoints").get<std::map<std::string, std::string>>();
  m.seed = j.at("seed").get<uint64_t>();
  m.tokenizer_name = j.at("tokenizer").get<std::string>();
  m.counts_system_prompt = j.at("counts_system_prompt").get<bool>();
  m.started_at = j.at("started_at").get<std::string>();
  m.finished_at = j.value("finished_at", "");
  m.config_json = j.at("config").dump();
  return m;
}

double pass_at_1(const std::map<std::string, std::vector<int>>& verdicts) {
  if (verdicts.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& [qid, rewards] : verdicts) {
    if (rewards.empty()) continue;
    double correct = 0.0;
    for (int r : rewards) correct += r;
    sum += correct / static_cast<double>(rewards.size());
  }
  return sum / static_cast<double>(verdicts.size());
}

std::optional<double> pass_at_k(const std::map<std::string, std::vector<int>>& verdicts, int k) {
  if (verdicts.empty()) return std::nullopt;
  for (const auto& [qid, rewards] : verdicts) {
    if (static_cast<int>(rewards.size()) < k) return std::nullopt;
  }
  int solved = 0;
  for (const auto& [qid, rewards] : verdicts) {
    for (int i = 0; i < k; ++i) {
      if (rewards[static_cast<size_t>(i)] == 1) {
        ++solved;
        break;
      }
    }
  }
  return static_cast<double>(solved) / static_cast<double>(verdicts.size());
}

ResourceStats resource_stats(const std::vector<LoggedTrajectory>& logs,
                             const std::map<std::string, std::vector<int>>& verdicts) {
  ResourceStats stats;
  std::map<std::string, int> ordinal;
  double correct_calls = 0.0, correct_tokens = 0.0;
  double incorrect_calls = 0.0, incorrect_tokens = 0.0;
  for (const LoggedTrajectory& log : logs) {
    const Trajectory& traj = log.trajectory;
    int idx = ordinal[traj.question_id]++;
    auto it = verdicts.find(traj.question_id);
    if (it == verdicts.end() || idx >= static_cast<int>(it->second.size())) continue;
    bool correct = it->second[static_cast<size_t>(idx)] == 1;
    VerdictStats& bucket = correct ? stats.correct : stats.incorrect;
    bucket.tool_call_histogram[traj.tool_calls_used]++;
    bucket.token_histogram[traj.total_tokens]++;
    bucket.count++;
    (correct ? correct_calls : incorrect_calls) += traj.tool_calls_used;
    (correct ? correct_tokens : incorrect_tokens) += static_cast<double>(traj.total_tokens);
  }
  if (stats.correct.count > 0) {
    stats.correct.mean_tool_calls = correct_calls / stats.correct.count;
    stats.correct.mean_tokens = correct_tokens / stats.correct.count;
  }
  if (stats.incorrect.count > 0) {
    stats.incorrect.mean_tool_calls = incorrect_calls / stats.incorrect.count;
    stats.incorrect.mean_tokens = incorrect_tokens / stats.incorrect.count;
  }
  return stats;
}

namespace {

ordered_json verdict_stats_json(const VerdictStats& v) {
  ordered_json j;
  j["count"] = v.count;
  j["mean_tool_calls"] = v.mean_tool_calls;
  j["mean_tokens"] = v.mean_tokens;
  ordered_json calls = ordered_json::object();
  for (const auto& [k, n] : v.tool_call_histogram) calls[std::to_string(k)] = n;
  j["tool_call_histogram"] = std::move(calls);
  ordered_json tokens = ordered_json::object();
  for (const auto& [k, n] : v.token_histogram) tokens[std::to_string(k)] = n;
  j["token_histogram"] = std::move(tokens);
  return j;
}

}  // namespace

std::string report_json(const MetricsReport& report) {
  ordered_json j;
  j["notes"] = report.notes;
  j["pass_at_1"] = report.pass_at_1;
  if (report.pass_at_3) {
    j["pass_at_3"] = *report.pass_at_3;
  } else {
    j["pass_at_3"] = nullptr;
  }
  ordered_json matrix = ordered_json::object();
  for (const auto& [qid, rewards] : report.verdict_matrix) matrix[qid] = rewards;
  j["verdict_matrix"] = std::move(matrix);
  j["resources"] = {{"correct", verdict_stats_json(report.resources.correct)},
                    {"incorrect", verdict_stats_json(report.resources.incorrect)}};
  j["transport_failed_questions"] = report.transport_failed_questions;
  return j.dump(2);
}

std::string render_report_text(const MetricsReport& report) {
  std::string out;
  out += "# benchmark report\n";
  out += "# " + report.notes + "\n";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "pass@1 = %.4f\n", report.pass_at_1);
  out += buf;
  if (report.pass_at_3) {
    std::snprintf(buf, sizeof(buf), "pass@3 = %.4f\n", *report.pass_at_3);
    out += buf;
  } else {
    out += "pass@3 = n/a (needs >= 3 rollouts per question)\n";
  }
  auto bucket_line = [&](const char* label, const VerdictStats& v) {
    std::snprintf(buf, sizeof(buf), "%s: n=%d mean_tool_calls=%.2f mean_tokens=%.1f\n", label,
                  v.count, v.mean_tool_calls, v.mean_tokens);
    out += buf;
  };
  bucket_line("correct", report.resources.correct);
  bucket_line("incorrect", report.resources.incorrect);
  if (!report.transport_failed_questions.empty()) {
    out += "transport-failed questions:";
    for (const std::string& q : report.transport_failed_questions) out += " " + q;
    out += "\n";
  }
  return out;
}

void append_reward(const std::filesystem::path& path, const StoredReward& reward) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("cannot write rewards: " + path.string());
  ordered_json j;
  j["question_id"] = reward.question_id;
  j["rollout_index"] = reward.rollout_index;
  j["trajectory_id"] = reward.trajectory_id;
  j["reward"] = reward.reward;
  j["source"] = to_string(reward.source);
  out << j.dump() << '\n';
}

std::vector<StoredReward> read_rewards(const std::filesystem::path& path) {
  std::vector<StoredReward> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = ordered_json::parse(line);
    StoredReward r;
    r.question_id = j.at("question_id").get<std::string>();
    r.rollout_index = j.at("rollout_index").get<int>();
    r.trajectory_id = j.at("trajectory_id").get<std::string>();
    r.reward = j.at("reward").get<int>();
    r.source = reward_source_from_string(j.at("source").get<std::string>());
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

const char* kAccountingNote =
    "token counts are full rendered prompt tokens (system prompt included) summed over policy "
    "completion requests";

MetricsReport build_report(const std::vector<LoggedTrajectory>& logs,
                           const std::vector<StoredReward>& rewards,
                           const std::vector<std::string>& transport_failed) {
  MetricsReport report;
  report.notes = kAccountingNote;
  for (const StoredReward& r : rewards) {
    auto& v = report.verdict_matrix[r.question_id];
    if (static_cast<int>(v.size()) <= r.rollout_index) {
      v.resize(static_cast<size_t>(r.rollout_index) + 1, 0);
    }
    v[static_cast<size_t>(r.rollout_index)] = r.reward;
  }
  report.pass_at_1 = pass_at_1(report.verdict_matrix);
  report.pass_at_3 = pass_at_k(report.verdict_matrix, 3);
  report.resources = resource_stats(logs, report.verdict_matrix);
  report.transport_failed_questions = transport_failed;
  return report;
}

}  // namespace

MetricsReport run_benchmark(const std::vector<Question>& questions, const ParadigmConfig& config,
                            const BenchDeps& deps, const BenchOptions& options,
                            const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  if (options.rollouts_per_question < 1) {
    throw std::invalid_argument("rollouts_per_question must be >= 1");
  }
  fs::create_directories(out_dir);
  const fs::path manifest_path = out_dir / "manifest.json";
  const fs::path log_path = out_dir / "trajectories.jsonl";
  const fs::path rewards_path = out_dir / "rewards.jsonl";
  if (!fs::exists(out_dir / "questions.jsonl")) {
    write_question_set(questions, out_dir / "questions.jsonl");
  }

  const std::string qhash = question_set_hash(questions);
  RunManifest manifest;
  if (fs::exists(manifest_path)) {
    manifest = read_manifest(manifest_path);
    if (manifest.question_set_hash != qhash) {
      throw std::runtime_error("resume with a different question set (hash mismatch)");
    }
  } else {
    manifest.run_id = options.run_id.empty() ? "run-" + hex64(fnv1a(now_iso8601())) : options.run_id;
    manifest.config_json = options.config_json;
    manifest.question_set_hash = qhash;
    manifest.paradigm = to_string(config.paradigm);
    manifest.rollouts_per_question = options.rollouts_per_question;
    manifest.endpoint_identities["policy"] = deps.policy.base_url + "#" + deps.policy.model_name;
    manifest.endpoint_identities["judge"] = deps.judge.base_url + "#" + deps.judge.model_name;
    if (deps.summary) {
      manifest.endpoint_identities["summary"] =
          deps.summary->base_url + "#" + deps.summary->model_name;
    }
    manifest.seed = options.seed;
    manifest.tokenizer_name = deps.tokenizer.name();
    manifest.started_at = now_iso8601();
    write_manifest(manifest, manifest_path);
  }

  // Resume bookkeeping: rollout ordinals per question follow arrival order in
  // the log; a pair counts as done only when both its trajectory and its
  // reward are on disk. Judged-but-unlogged never happens (log first).
  auto existing_logs = read_trajectory_log(log_path);
  auto existing_rewards = read_rewards(rewards_path);
  std::map<std::string, int> logged_count;
  for (const auto& log : existing_logs) logged_count[log.trajectory.question_id]++;
  std::map<std::string, int> judged_count;
  for (const auto& r : existing_rewards) judged_count[r.question_id]++;

  Judge judge(deps.gateway, deps.judge, deps.sampling);

  // Crash recovery: grade any logged trajectory that never got its reward.
  {
    std::map<std::string, int> seen;
    for (const auto& log : existing_logs) {
      int idx = seen[log.trajectory.question_id]++;
      if (idx < judged_count[log.trajectory.question_id]) continue;
      auto qit = std::find_if(questions.begin(), questions.end(),
                              [&](const Question& q) { return q.id == log.trajectory.question_id; });
      if (qit == questions.end()) continue;
      std::string traj_id = log.trajectory.question_id + "#" + std::to_string(idx);
      RewardRecord rec = judge.grade(*qit, log.trajectory, traj_id);
      append_reward(rewards_path, {qit->id, idx, traj_id, rec.reward, rec.source});
    }
  }

  std::optional<Summarizer> summarizer;
  if (deps.summary) {
    summarizer.emplace(deps.gateway, *deps.summary, deps.sampling);
  }
  RolloutEngine engine(deps.gateway, deps.env, deps.tokenizer, config, deps.policy, deps.sampling,
                       summarizer ? &*summarizer : nullptr);
  TrajectoryLogWriter log_writer(log_path, manifest.run_id);

  struct Task {
    const Question* question;
  };
  std::vector<Task> tasks;
  for (const Question& q : questions) {
    int done = logged_count.count(q.id) ? logged_count[q.id] : 0;
    for (int r = done; r < options.rollouts_per_question; ++r) {
      tasks.push_back({&q});
    }
  }

  std::mutex state_mutex;
  std::map<std::string, int> next_ordinal = logged_count;
  std::map<std::string, int> transport_failures;

  std::mutex rewards_mutex;
  auto run_task = [&](const Task& task) {
    const Question& q = *task.question;
    Trajectory traj;
    try {
      traj = engine.run(q);
    } catch (const TransportError&) {
      std::lock_guard<std::mutex> lock(state_mutex);
      transport_failures[q.id]++;
      return;
    }
    int idx;
    {
      // ordinal assignment and log append must be atomic together: rollout
      // ordinals are defined as per-question arrival order in the log
      std::lock_guard<std::mutex> lock(state_mutex);
      idx = next_ordinal[q.id]++;
      log_writer.append(traj);
    }
    std::string traj_id = q.id + "#" + std::to_string(idx);
    RewardRecord rec = judge.grade(q, traj, traj_id);
    {
      std::lock_guard<std::mutex> lock(rewards_mutex);
      append_reward(rewards_path, {q.id, idx, traj_id, rec.reward, rec.source});
    }
  };

  if (options.parallelism <= 1) {
    for (const Task& task : tasks) run_task(task);
  } else {
    std::atomic<size_t> cursor{0};
    std::vector<std::thread> workers;
    int n = std::min<int>(options.parallelism, static_cast<int>(tasks.size()));
    for (int i = 0; i < n; ++i) {
      workers.emplace_back([&] {
        while (true) {
          size_t at = cursor.fetch_add(1);
          if (at >= tasks.size()) break;
          run_task(tasks[at]);
        }
      });
    }
    for (auto& w : workers) w.join();
  }

  // Rollouts that exhausted transport retries score 0 in the matrix; the
  // report lists questions where that happened to every rollout.
  std::vector<std::string> all_failed;
  auto final_logs = read_trajectory_log(log_path);
  auto final_rewards = read_rewards(rewards_path);
  std::map<std::string, std::vector<int>> matrix;
  for (const auto& r : final_rewards) {
    auto& v = matrix[r.question_id];
    if (static_cast<int>(v.size()) <= r.rollout_index) {
      v.resize(static_cast<size_t>(r.rollout_index) + 1, 0);
    }
    v[static_cast<size_t>(r.rollout_index)] = r.reward;
  }
  for (const auto& [qid, failures] : transport_failures) {
    auto& v = matrix[qid];
    for (int i = 0; i < failures; ++i) v.push_back(0);
    if (!logged_count.count(qid) && failures >= options.rollouts_per_question) {
      all_failed.push_back(qid);
    }
  }

  MetricsReport report = build_report(final_logs, final_rewards, all_failed);
  report.verdict_matrix = matrix;
  report.pass_at_1 = pass_at_1(matrix);
  report.pass_at_3 = pass_at_k(matrix, 3);

  manifest.finished_at = now_iso8601();
  write_manifest(manifest, manifest_path);
  std::ofstream metrics(out_dir / "metrics.json", std::ios::binary);
  metrics << report_json(report) << '\n';
  return report;
}

MetricsReport report_from_run_dir(const std::filesystem::path& run_dir) {
  auto logs = read_trajectory_log(run_dir / "trajectories.jsonl");
  auto rewards = read_rewards(run_dir / "rewards.jsonl");
  return build_report(logs, rewards, {});
}

RunGrouping group_run_rollouts(const std::filesystem::path& run_dir, int group_size) {
  if (group_size < 2) throw std::invalid_argument("group_size must be >= 2");
  auto questions = read_question_set(run_dir / "questions.jsonl");
  auto logs = read_trajectory_log(run_dir / "trajectories.jsonl");
  auto rewards = read_rewards(run_dir / "rewards.jsonl");
  if (logs.empty()) throw std::runtime_error("no trajectories in " + run_dir.string());
  if (rewards.empty()) {
    throw std::runtime_error("no rewards in " + run_dir.string() + "; run `bench run` first");
  }

  std::map<std::string, std::vector<const Trajectory*>> rollouts;
  for (const auto& log : logs) rollouts[log.trajectory.question_id].push_back(&log.trajectory);
  std::map<std::string, std::map<int, const StoredReward*>> rewards_by_q;
  for (const auto& r : rewards) rewards_by_q[r.question_id][r.rollout_index] = &r;

  RunGrouping out;
  if (std::filesystem::exists(run_dir / "manifest.json")) {
    out.config_hash = hex64(fnv1a(read_manifest(run_dir / "manifest.json").config_json));
  }

  for (const Question& q : questions) {
    auto rit = rollouts.find(q.id);
    size_t have = rit == rollouts.end() ? 0 : rit->second.size();
    size_t n_groups = have / static_cast<size_t>(group_size);
    if (n_groups == 0) {
      out.skipped_questions.push_back(q.id);
      continue;
    }
    for (size_t g = 0; g < n_groups; ++g) {
      std::vector<Trajectory> members;
      std::vector<std::string> ids;
      std::vector<RewardRecord> recs;
      bool complete = true;
      for (int i = 0; i < group_size; ++i) {
        int ordinal = static_cast<int>(g) * group_size + i;
        auto rew = rewards_by_q[q.id].find(ordinal);
        if (rew == rewards_by_q[q.id].end()) {
          complete = false;
          break;
        }
        members.push_back(*rit->second[static_cast<size_t>(ordinal)]);
        ids.push_back(q.id + "#" + std::to_string(ordinal));
        RewardRecord rec;
        rec.trajectory_id = ids.back();
        rec.reward = rew->second->reward;
        rec.source = rew->second->source;
        recs.push_back(std::move(rec));
      }
      if (!complete) {
        out.skipped_questions.push_back(q.id);
        break;
      }
      out.groups.push_back(make_group_result(q.id + "/g" + std::to_string(g), q,
                                             std::move(members), std::move(ids),
                                             std::move(recs)));
    }
  }
  return out;
}

}  // namespace resum
