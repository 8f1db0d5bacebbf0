#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>

#include "CLI11.hpp"
#include "json.hpp"
#include "resum/bench.hpp"
#include "resum/engine.hpp"
#include "resum/episodes.hpp"
#include "resum/gateway.hpp"
#include "resum/tools.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

uint64_t fnv1a(std::string_view data) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

resum::ModelEndpoint endpoint_from_json(const json& j) {
  resum::ModelEndpoint ep;
  ep.base_url = j.value("base_url", "");
  ep.model_name = j.value("model", "");
  ep.api_key_env = j.value("api_key_env", "");
  ep.timeout_ms = j.value("timeout_ms", 60000);
  ep.max_retries = j.value("max_retries", 2);
  ep.context_window_tokens = j.value("context_window_tokens", 0);
  return ep;
}

struct Runtime {
  json config;
  std::unique_ptr<resum::Tokenizer> tokenizer;
  std::shared_ptr<resum::ChatBackend> backend;
  std::unique_ptr<resum::Gateway> gateway;
  std::shared_ptr<resum::SearchProvider> search;
  std::shared_ptr<resum::VisitProvider> visit;
  std::unique_ptr<resum::ToolEnvironment> env;
  std::map<std::string, resum::ModelEndpoint> endpoints;
  resum::SamplingParams sampling;
  resum::ParadigmConfig paradigm_config;
};

resum::ParadigmConfig paradigm_config_from_json(const json& cfg) {
  resum::ParadigmConfig pc;
  if (cfg.contains("paradigm")) {
    pc.paradigm = resum::paradigm_from_string(cfg["paradigm"].get<std::string>());
  }
  pc.context_window_tokens = cfg.value("context_window_tokens", 32768);
  pc.tool_call_budget = cfg.value("tool_call_budget", 60);
  pc.recent_history_keep_tokens = cfg.value("recent_history_keep_tokens", 22528);
  pc.trigger = resum::trigger_kind_from_string(cfg.value("trigger", "token_budget"));
  pc.trigger_threshold = cfg.value("trigger_threshold", 0);
  pc.reserved_summary_tokens = cfg.value("reserved_summary_tokens", 4096);
  pc.max_observation_tokens = cfg.value("max_observation_tokens", 2048);
  return pc;
}

Runtime build_runtime(const fs::path& config_path, const fs::path& default_request_log = {}) {
  Runtime rt;
  rt.config = json::parse(read_file(config_path));
  const json& cfg = rt.config;

  rt.tokenizer = resum::make_tokenizer(cfg.value("tokenizer", "whitespace"));

  const json backend_cfg = cfg.value("backend", json{{"kind", "http"}});
  const std::string backend_kind = backend_cfg.value("kind", "http");
  if (backend_kind == "replay") {
    rt.backend = std::make_shared<resum::ReplayBackend>(
        fs::path(backend_cfg.at("fixtures_dir").get<std::string>()));
  } else if (backend_kind == "http") {
    rt.backend = std::make_shared<resum::HttpBackend>();
  } else {
    throw std::runtime_error("unknown backend kind: " + backend_kind);
  }

  resum::Gateway::Options gw_options;
  gw_options.log_dir = cfg.value("request_log_dir", "");
  if (gw_options.log_dir.empty() && backend_kind == "http" && !default_request_log.empty()) {
    // request logging is always on for live runs; fixtures can be minted
    // from any of them
    gw_options.log_dir = default_request_log;
  }
  gw_options.max_concurrent = cfg.value("max_concurrent_requests", 0);
  rt.gateway = std::make_unique<resum::Gateway>(rt.backend, *rt.tokenizer, gw_options);

  if (cfg.contains("sampling")) {
    const json& s = cfg["sampling"];
    rt.sampling.temperature = s.value("temperature", 0.6);
    rt.sampling.top_p = s.value("top_p", 0.95);
    rt.sampling.max_tokens = s.value("max_tokens", 4096);
  }

  if (cfg.contains("endpoints")) {
    for (auto& [role, j] : cfg["endpoints"].items()) {
      rt.endpoints[role] = endpoint_from_json(j);
    }
  }

  const json tools_cfg = cfg.value("tools", json{{"kind", "mock"}, {"corpus_dir", "fixtures/corpus"}});
  const std::string tools_kind = tools_cfg.value("kind", "mock");
  if (tools_kind == "mock") {
    auto corpus = std::make_shared<resum::MockCorpus>(
        resum::MockCorpus::load(tools_cfg.at("corpus_dir").get<std::string>()));
    rt.search = corpus;
    rt.visit = corpus;
  } else if (tools_kind == "live") {
    rt.search = std::make_shared<resum::SerpSearchProvider>(
        tools_cfg.at("serp_base_url").get<std::string>(),
        tools_cfg.value("serp_api_key_env", ""));
    if (!rt.endpoints.count("extraction")) {
      throw std::runtime_error("live tools need an 'extraction' endpoint");
    }
    rt.visit = std::make_shared<resum::FetchVisitProvider>(
        *rt.gateway, rt.endpoints.at("extraction"), rt.sampling,
        tools_cfg.value("max_page_tokens", 6000), *rt.tokenizer);
  } else {
    throw std::runtime_error("unknown tools kind: " + tools_kind);
  }
  rt.env = std::make_unique<resum::ToolEnvironment>(rt.search, rt.visit,
                                                    tools_cfg.value("max_concurrent_fetches", 0));

  rt.paradigm_config = paradigm_config_from_json(cfg);
  return rt;
}

int cmd_rollout(const std::string& paradigm, const fs::path& questions_path,
                const fs::path& config_path, const fs::path& out_dir) {
  Runtime rt = build_runtime(config_path, out_dir / "requests");
  rt.paradigm_config.paradigm = resum::paradigm_from_string(paradigm);
  rt.paradigm_config.validate();

  auto questions = resum::read_question_set(questions_path);
  fs::create_directories(out_dir);
  if (!fs::exists(out_dir / "questions.jsonl")) {
    resum::write_question_set(questions, out_dir / "questions.jsonl");
  }

  resum::RunManifest manifest;
  manifest.run_id = "run-" + std::to_string(fnv1a(questions_path.string()) % 1000000);
  manifest.config_json = rt.config.dump();
  manifest.question_set_hash = resum::question_set_hash(questions);
  manifest.paradigm = paradigm;
  manifest.rollouts_per_question = 1;
  if (rt.endpoints.count("policy")) {
    manifest.endpoint_identities["policy"] =
        rt.endpoints["policy"].base_url + "#" + rt.endpoints["policy"].model_name;
  }
  manifest.seed = rt.config.value("seed", 0);
  manifest.tokenizer_name = rt.tokenizer->name();
  resum::write_manifest(manifest, out_dir / "manifest.json");

  std::optional<resum::Summarizer> summarizer;
  if (rt.paradigm_config.paradigm == resum::Paradigm::ReSum) {
    if (!rt.endpoints.count("summary")) {
      throw std::runtime_error("resum paradigm needs a 'summary' endpoint");
    }
    summarizer.emplace(*rt.gateway, rt.endpoints.at("summary"), rt.sampling);
  }
  resum::RolloutEngine engine(*rt.gateway, *rt.env, *rt.tokenizer, rt.paradigm_config,
                              rt.endpoints.at("policy"), rt.sampling,
                              summarizer ? &*summarizer : nullptr);
  resum::TrajectoryLogWriter writer(out_dir / "trajectories.jsonl", manifest.run_id);
  for (const resum::Question& q : questions) {
    resum::Trajectory traj = engine.run(q);
    writer.append(traj);
    std::cout << q.id << ": " << resum::to_string(traj.status) << " (tool calls "
              << traj.tool_calls_used << ", summaries " << traj.summary_count() << ")\n";
  }
  return 0;
}

int cmd_bench_run(const std::string& paradigm, const fs::path& questions_path, int rollouts,
                  const fs::path& config_path, const fs::path& out_dir) {
  Runtime rt = build_runtime(config_path, out_dir / "requests");
  rt.paradigm_config.paradigm = resum::paradigm_from_string(paradigm);
  rt.paradigm_config.validate();
  if (!rt.endpoints.count("policy") || !rt.endpoints.count("judge")) {
    throw std::runtime_error("bench run needs 'policy' and 'judge' endpoints");
  }

  auto questions = resum::read_question_set(questions_path);
  fs::create_directories(out_dir);
  if (!fs::exists(out_dir / "questions.jsonl")) {
    resum::write_question_set(questions, out_dir / "questions.jsonl");
  }

  resum::BenchDeps deps{*rt.gateway,
                        *rt.env,
                        *rt.tokenizer,
                        rt.endpoints.at("policy"),
                        rt.endpoints.at("judge"),
                        rt.endpoints.count("summary")
                            ? std::optional<resum::ModelEndpoint>(rt.endpoints.at("summary"))
                            : std::nullopt,
                        rt.sampling};
  if (rt.paradigm_config.paradigm == resum::Paradigm::ReSum && !deps.summary) {
    throw std::runtime_error("resum paradigm needs a 'summary' endpoint");
  }
  resum::BenchOptions options;
  options.rollouts_per_question = rollouts;
  options.parallelism = rt.config.value("parallelism", 1);
  options.seed = rt.config.value("seed", 0);
  options.config_json = rt.config.dump();

  auto report = resum::run_benchmark(questions, rt.paradigm_config, deps, options, out_dir);
  std::cout << resum::render_report_text(report);
  return 0;
}

int cmd_bench_report(const fs::path& run_dir) {
  auto report = resum::report_from_run_dir(run_dir);
  std::ofstream out(run_dir / "metrics.json", std::ios::binary);
  out << resum::report_json(report) << '\n';
  std::cout << resum::render_report_text(report);
  return 0;
}

int cmd_episodes_build(const fs::path& runs_dir, int group_size, const fs::path& out_dir) {
  auto grouping = resum::group_run_rollouts(runs_dir, group_size);
  for (const std::string& qid : grouping.skipped_questions) {
    std::cerr << "skipping " << qid << ": fewer judged rollouts than the group size\n";
  }
  std::vector<resum::Episode> episodes;
  for (const auto& group : grouping.groups) {
    auto group_episodes = resum::build_episodes(group);
    episodes.insert(episodes.end(), group_episodes.begin(), group_episodes.end());
  }
  auto manifest =
      resum::export_episodes(episodes, grouping.groups, out_dir, grouping.config_hash);
  std::cout << "episodes: " << manifest.episode_count << " across " << manifest.group_count
            << " groups (" << manifest.skipped_group_count << " zero-std, flagged skip)\n";
  return 0;
}

int cmd_tools_exec(const fs::path& spec_path, const fs::path& config_path) {
  Runtime rt = build_runtime(config_path);
  auto spec_json = json::parse(read_file(spec_path));
  // reuse the strict parser by round-tripping through the tagged form
  std::string tagged = "<think>ad-hoc tool exec</think>\n<tool_call>\n" + spec_json.dump() +
                       "\n</tool_call>";
  auto parsed = resum::parse_agent_output(tagged);
  if (const auto* violation = std::get_if<resum::FormatViolation>(&parsed)) {
    throw std::runtime_error("invalid tool spec: " + violation->detail);
  }
  const auto& step = std::get<resum::AgentStep>(parsed);
  resum::Observation obs = rt.env->execute(*step.tool_call);
  std::cout << obs.text << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"long-horizon web-agent rollout runtime (react / resum / recent paradigms)"};
  app.require_subcommand(1);

  std::string paradigm = "react";
  std::string questions_path;
  std::string config_path;
  std::string out_dir = "out";
  std::string runs_dir;
  std::string spec_path;
  int rollouts = 3;
  int group_size = 8;

  auto* rollout = app.add_subcommand("rollout", "run one rollout per question, log trajectories");
  rollout->add_option("--paradigm", paradigm, "react|resum|recent")->required();
  rollout->add_option("--questions", questions_path, "question set (jsonl)")->required();
  rollout->add_option("--config", config_path, "runtime config (json)")->required();
  rollout->add_option("--out", out_dir, "output directory")->required();

  auto* bench = app.add_subcommand("bench", "benchmark harness");
  auto* bench_run = bench->add_subcommand("run", "run + judge + metrics (resumable)");
  bench_run->add_option("--paradigm", paradigm, "react|resum|recent")->required();
  bench_run->add_option("--questions", questions_path, "question set (jsonl)")->required();
  bench_run->add_option("--rollouts", rollouts, "rollouts per question (default 3)");
  bench_run->add_option("--config", config_path, "runtime config (json)")->required();
  bench_run->add_option("--out", out_dir, "output directory")->required();
  auto* bench_report = bench->add_subcommand("report", "recompute metrics from a run directory");
  bench_report->add_option("--runs", runs_dir, "run directory")->required();

  auto* episodes = app.add_subcommand("episodes", "training-episode export");
  auto* episodes_build = episodes->add_subcommand("build", "group rollouts, broadcast advantages");
  episodes_build->add_option("--runs", runs_dir, "run directory (bench run output)")->required();
  episodes_build->add_option("--group-size", group_size, "rollouts per group (default 8)");
  episodes_build->add_option("--out", out_dir, "output directory")->required();

  auto* tools = app.add_subcommand("tools", "tool environment utilities");
  auto* tools_exec = tools->add_subcommand("exec", "execute a tool call spec ad hoc");
  tools_exec->add_option("--spec", spec_path, "tool call spec (json)")->required();
  tools_exec->add_option("--config", config_path, "runtime config (json)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (rollout->parsed()) {
      return cmd_rollout(paradigm, questions_path, config_path, out_dir);
    }
    if (bench->parsed() && bench_run->parsed()) {
      return cmd_bench_run(paradigm, questions_path, rollouts, config_path, out_dir);
    }
    if (bench->parsed() && bench_report->parsed()) {
      return cmd_bench_report(runs_dir);
    }
    if (episodes->parsed() && episodes_build->parsed()) {
      return cmd_episodes_build(runs_dir, group_size, out_dir);
    }
    if (tools->parsed() && tools_exec->parsed()) {
      return cmd_tools_exec(spec_path, config_path);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
