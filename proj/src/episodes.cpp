#include "resum/episodes.hpp"

#include <fstream>

#include "json.hpp"

namespace resum {

using ordered_json = nlohmann::ordered_json;

std::vector<Segment> segment_trajectory(const Trajectory& trajectory, const Question& question,
                                        const std::string& trajectory_id) {
  if (trajectory.status == Status::Running) {
    throw std::invalid_argument("segment_trajectory requires a terminal trajectory");
  }
  std::vector<Segment> segments;
  std::vector<Turn> current;
  int summaries_seen = 0;

  auto close_segment = [&]() {
    Segment seg;
    seg.trajectory_id = trajectory_id;
    seg.segment_index = static_cast<int>(segments.size()) + 1;
    if (summaries_seen == 0) {
      seg.input_query = question;
    } else {
      seg.input_query =
          CompressedQuery{question.id,
                          trajectory.summarization_events[summaries_seen - 1].summary_text,
                          summaries_seen};
    }
    seg.output_turns = std::move(current);
    current.clear();
    segments.push_back(std::move(seg));
  };

  for (const Turn& t : trajectory.turns) {
    if (t.kind == TurnKind::Summary) {
      close_segment();
      ++summaries_seen;
    } else {
      current.push_back(t);
    }
  }
  close_segment();  // final segment, possibly output-less after a trailing summary
  return segments;
}

std::vector<Episode> build_episodes(const GroupResult& group) {
  std::vector<Episode> episodes;
  const bool skip = group.zero_std();
  for (size_t g = 0; g < group.rollouts.size(); ++g) {
    auto segments = segment_trajectory(group.rollouts[g], group.question, group.rollout_ids[g]);
    for (Segment& seg : segments) {
      Episode ep;
      ep.group_id = group.group_id;
      ep.trajectory_id = group.rollout_ids[g];
      ep.segment_index = seg.segment_index;
      if (const auto* q = std::get_if<Question>(&seg.input_query)) {
        ep.rendered_input = render_prompt(*q, {});
      } else {
        ep.rendered_input =
            render_prompt(group.question, std::get<CompressedQuery>(seg.input_query), {});
      }
      for (Turn& t : seg.output_turns) {
        bool keep = t.kind == TurnKind::Thought || t.kind == TurnKind::ToolCall ||
                    t.kind == TurnKind::Answer;
        ep.output_turns.push_back({std::move(t), keep});
      }
      ep.advantage = group.stats.advantages[g];
      ep.reward = group.rewards[g].reward;
      ep.skip = skip;
      episodes.push_back(std::move(ep));
    }
  }
  return episodes;
}

std::string episode_record(const Episode& episode) {
  ordered_json rec;
  rec["group_id"] = episode.group_id;
  rec["trajectory_id"] = episode.trajectory_id;
  rec["segment_index"] = episode.segment_index;
  ordered_json input = ordered_json::array();
  for (const Message& m : episode.rendered_input) {
    input.push_back({{"role", m.role}, {"content", m.content}});
  }
  rec["rendered_input"] = std::move(input);
  ordered_json outputs = ordered_json::array();
  for (const MaskedTurn& mt : episode.output_turns) {
    ordered_json jt;
    jt["text"] = mt.turn.payload;
    jt["kind"] = to_string(mt.turn.kind);
    jt["loss_mask"] = mt.loss_mask;
    outputs.push_back(std::move(jt));
  }
  rec["output_turns"] = std::move(outputs);
  rec["advantage"] = episode.advantage;
  rec["reward"] = episode.reward;
  rec["skip"] = episode.skip;
  return rec.dump();
}

Episode parse_episode_record(const std::string& line) {
  auto rec = ordered_json::parse(line);
  Episode ep;
  ep.group_id = rec.at("group_id").get<std::string>();
  ep.trajectory_id = rec.at("trajectory_id").get<std::string>();
  ep.segment_index = rec.at("segment_index").get<int>();
  for (const auto& jm : rec.at("rendered_input")) {
    ep.rendered_input.push_back({jm.at("role").get<std::string>(),
                                 jm.at("content").get<std::string>()});
  }
  for (const auto& jt : rec.at("output_turns")) {
    MaskedTurn mt;
    mt.turn.kind = turn_kind_from_string(jt.at("kind").get<std::string>());
    mt.turn.payload = jt.at("text").get<std::string>();
    mt.loss_mask = jt.at("loss_mask").get<bool>();
    ep.output_turns.push_back(std::move(mt));
  }
  ep.advantage = rec.at("advantage").get<double>();
  ep.reward = rec.at("reward").get<int>();
  ep.skip = rec.at("skip").get<bool>();
  return ep;
}

EpisodeManifest export_episodes(const std::vector<Episode>& episodes,
                                const std::vector<GroupResult>& groups,
                                const std::filesystem::path& out_dir,
                                const std::string& config_hash) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  {
    std::ofstream out(out_dir / "episodes.jsonl", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (out_dir / "episodes.jsonl").string());
    for (const Episode& ep : episodes) {
      out << episode_record(ep) << '\n';
    }
  }

  EpisodeManifest manifest;
  manifest.episode_count = static_cast<int>(episodes.size());
  manifest.group_count = static_cast<int>(groups.size());
  manifest.config_hash = config_hash;

  ordered_json jm;
  jm["episode_count"] = manifest.episode_count;
  jm["group_count"] = manifest.group_count;
  ordered_json jgroups = ordered_json::array();
  for (const GroupResult& g : groups) {
    if (g.zero_std()) ++manifest.skipped_group_count;
    ordered_json jg;
    jg["group_id"] = g.group_id;
    jg["question_id"] = g.question.id;
    jg["size"] = g.rollouts.size();
    jg["mean"] = g.stats.mean;
    jg["std"] = g.stats.stddev;
    jg["skip"] = g.zero_std();
    jgroups.push_back(std::move(jg));
  }
  jm["skipped_group_count"] = manifest.skipped_group_count;
  jm["groups"] = std::move(jgroups);
  jm["config_hash"] = config_hash;

  std::ofstream mout(out_dir / "episodes_manifest.json", std::ios::binary);
  mout << jm.dump(2) << '\n';
  return manifest;
}

std::vector<Episode> import_episodes(const std::filesystem::path& episodes_file) {
  std::vector<Episode> out;
  std::ifstream in(episodes_file);
  if (!in) throw std::runtime_error("cannot read " + episodes_file.string());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(parse_episode_record(line));
  }
  return out;
}

}  // namespace resum
