#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <vector>

#include "resum/types.hpp"

namespace resum {

// One line-delimited record per trajectory, fixed field order
// {run_id, question_id, paradigm, status, turns, summarization_events,
//  tool_calls_used, total_tokens}. Golden tests compare these files
// byte-for-byte, so the ordering never changes.
std::string trajectory_record(const std::string& run_id, const Trajectory& traj);

struct LoggedTrajectory {
  std::string run_id;
  Trajectory trajectory;
};

LoggedTrajectory parse_trajectory_record(const std::string& line);

class TrajectoryLogWriter {
 public:
  TrajectoryLogWriter(std::filesystem::path path, std::string run_id);

  // Serializes and flushes one record; safe to call from multiple rollout
  // threads.
  void append(const Trajectory& traj);

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::string run_id_;
  std::ofstream out_;
  std::mutex mutex_;
};

std::vector<LoggedTrajectory> read_trajectory_log(const std::filesystem::path& path);

}  // namespace resum
