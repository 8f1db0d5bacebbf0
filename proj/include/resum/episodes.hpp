#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "resum/render.hpp"
#include "resum/reward.hpp"
#include "resum/types.hpp"

namespace resum {

// Splits a terminal trajectory at its summarization events into K+1
// segments. Segment 1 takes the plain question as input; segment i > 1 the
// compressed query carrying the (i-1)-th summary. Concatenating the
// segments' output turns and re-inserting the Summary turns at the split
// points reconstructs the original turn list exactly.
std::vector<Segment> segment_trajectory(const Trajectory& trajectory, const Question& question,
                                        const std::string& trajectory_id);

struct MaskedTurn {
  Turn turn;
  bool loss_mask = false;  // true: contributes to the loss; false: excluded
};

// One trainable segment: rendered input, loss-masked output turns, and the
// broadcast trajectory-level advantage.
struct Episode {
  std::string group_id;
  std::string trajectory_id;
  int segment_index = 1;
  std::vector<Message> rendered_input;
  std::vector<MaskedTurn> output_turns;
  double advantage = 0.0;
  int reward = 0;
  bool skip = false;  // zero-std group: exported but flagged for trainers
};

// Sum over rollouts of (K_g + 1) episodes; every episode of rollout g
// carries advantage stats.advantages[g]. Tool observations are masked out
// of the loss; thought/tool-call/answer text is kept.
std::vector<Episode> build_episodes(const GroupResult& group);

struct EpisodeManifest {
  int episode_count = 0;
  int group_count = 0;
  int skipped_group_count = 0;
  std::string config_hash;
};

// Line-delimited episode records with byte-stable field order
// {group_id, trajectory_id, segment_index, rendered_input, output_turns,
//  advantage, reward, skip}; the manifest (counts, per-group stats, config
//  hash) lands next to them as episodes_manifest.json.
EpisodeManifest export_episodes(const std::vector<Episode>& episodes,
                                const std::vector<GroupResult>& groups,
                                const std::filesystem::path& out_dir,
                                const std::string& config_hash);

std::vector<Episode> import_episodes(const std::filesystem::path& episodes_file);

std::string episode_record(const Episode& episode);
Episode parse_episode_record(const std::string& line);

}  // namespace resum
