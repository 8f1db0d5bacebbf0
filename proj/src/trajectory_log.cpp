#include "resum/trajectory_log.hpp"

#include "json.hpp"

namespace resum {

using ordered_json = nlohmann::ordered_json;

std::string trajectory_record(const std::string& run_id, const Trajectory& traj) {
  ordered_json rec;
  rec["run_id"] = run_id;
  rec["question_id"] = traj.question_id;
  rec["paradigm"] = to_string(traj.paradigm);
  rec["status"] = to_string(traj.status);
  ordered_json turns = ordered_json::array();
  for (const Turn& t : traj.turns) {
    ordered_json jt;
    jt["kind"] = to_string(t.kind);
    jt["payload"] = t.payload;
    jt["round_index"] = t.round_index;
    jt["token_len"] = t.token_len;
    turns.push_back(std::move(jt));
  }
  rec["turns"] = std::move(turns);
  ordered_json events = ordered_json::array();
  for (const SummarizationEvent& e : traj.summarization_events) {
    ordered_json je;
    je["turn_offset"] = e.turn_offset;
    je["summary_text"] = e.summary_text;
    events.push_back(std::move(je));
  }
  rec["summarization_events"] = std::move(events);
  rec["tool_calls_used"] = traj.tool_calls_used;
  rec["total_tokens"] = traj.total_tokens;
  return rec.dump();
}

LoggedTrajectory parse_trajectory_record(const std::string& line) {
  auto rec = ordered_json::parse(line);
  LoggedTrajectory out;
  out.run_id = rec.at("run_id").get<std::string>();
  Trajectory& traj = out.trajectory;
  traj.question_id = rec.at("question_id").get<std::string>();
  traj.paradigm = paradigm_from_string(rec.at("paradigm").get<std::string>());
  traj.status = status_from_string(rec.at("status").get<std::string>());
  for (const auto& jt : rec.at("turns")) {
    Turn t;
    t.kind = turn_kind_from_string(jt.at("kind").get<std::string>());
    t.payload = jt.at("payload").get<std::string>();
    t.round_index = jt.at("round_index").get<int>();
    t.token_len = jt.at("token_len").get<int>();
    traj.turns.push_back(std::move(t));
  }
  for (const auto& je : rec.at("summarization_events")) {
    SummarizationEvent e;
    e.turn_offset = je.at("turn_offset").get<size_t>();
    e.summary_text = je.at("summary_text").get<std::string>();
    traj.summarization_events.push_back(std::move(e));
  }
  traj.tool_calls_used = rec.at("tool_calls_used").get<int>();
  traj.total_tokens = rec.at("total_tokens").get<long long>();
  return out;
}

TrajectoryLogWriter::TrajectoryLogWriter(std::filesystem::path path, std::string run_id)
    : path_(std::move(path)), run_id_(std::move(run_id)) {
  out_.open(path_, std::ios::app);
  if (!out_) {
    throw std::runtime_error("cannot open trajectory log: " + path_.string());
  }
}

void TrajectoryLogWriter::append(const Trajectory& traj) {
  std::string line = trajectory_record(run_id_, traj);
  std::lock_guard<std::mutex> lock(mutex_);
  out_ << line << '\n';
  out_.flush();
}

std::vector<LoggedTrajectory> read_trajectory_log(const std::filesystem::path& path) {
  std::vector<LoggedTrajectory> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(parse_trajectory_record(line));
  }
  return out;
}

}  // namespace resum
