// Command-line front end. One verb per pipeline stage:
//   validate-data     check a dataset file and print stats
//   build-curriculum  emit the deterministic batch manifest for a stage
//   rollout           roll out groups with a policy and write the log
//   train-toy         closed-loop GRPO training of the tabular toy policy
//   eval              greedy evaluation with parse retries
//   replay-rewards    recompute rewards from a log and verify them

#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "twg/harness.hpp"
#include "twg/remote_policy.hpp"
#include "twg/rng.hpp"

using namespace twg;

namespace {

struct GlobalOpts {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::optional<int> workers;
  bool serial = false;
};

EngineConfig assemble_config(const GlobalOpts& opts) {
  EngineConfig cfg;
  if (!opts.config_path.empty()) cfg = EngineConfig::load(opts.config_path);
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.workers) cfg.worker_cap = *opts.workers;
  cfg.apply_env();
  for (const std::string& warning : cfg.validate()) {
    std::cerr << "warning: " << warning << "\n";
  }
  return cfg;
}

ExecMode exec_mode(const GlobalOpts& opts) {
  return opts.serial ? ExecMode::Serial : ExecMode::Parallel;
}

// Policy specs:
//   scripted:ground=0-15;answer=B;raw=<text>;sc=B
//   toy[:params=<file>]
//   remote
std::unique_ptr<Policy> make_policy(const std::string& spec, const EngineConfig& cfg) {
  if (spec.rfind("scripted", 0) == 0) {
    std::vector<std::string> outputs;
    std::string self_confirm;
    std::string rest = spec.size() > 9 ? spec.substr(9) : std::string();
    size_t pos = 0;
    while (pos <= rest.size() && !rest.empty()) {
      const size_t next = rest.find(';', pos);
      const std::string token =
          rest.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
      const size_t eq = token.find('=');
      const std::string key = token.substr(0, eq);
      const std::string value = eq == std::string::npos ? "" : token.substr(eq + 1);
      if (key == "ground") {
        const size_t dash = value.find('-');
        if (dash == std::string::npos) throw CLI::ValidationError("ground wants start-end");
        outputs.push_back("<think>zoom</think><ground>" + value.substr(0, dash) + ", " +
                          value.substr(dash + 1) + "</ground>");
      } else if (key == "answer") {
        outputs.push_back("<think>answer</think><answer>" + value + "</answer>");
      } else if (key == "raw") {
        outputs.push_back(value);
      } else if (key == "sc") {
        self_confirm = "<think>confirm</think><answer>" + value + "</answer>";
      } else if (!key.empty()) {
        throw CLI::ValidationError("unknown scripted action '" + key + "'");
      }
      if (next == std::string::npos) break;
      pos = next + 1;
    }
    return std::make_unique<ScriptedPolicy>(std::move(outputs), std::move(self_confirm));
  }
  if (spec.rfind("toy", 0) == 0) {
    ToyPolicyParams params;
    if (spec.rfind("toy:params=", 0) == 0) {
      params = load_toy_params(spec.substr(11));
    } else {
      params = ToyPolicyParams::zeros(cfg.toy.windows, cfg.toy.options);
      params.noise_floor = cfg.toy.noise_floor;
    }
    return std::make_unique<ToyPolicy>(std::move(params), cfg.grains);
  }
  if (spec == "remote") {
    return std::make_unique<RemotePolicy>(cfg.endpoint);
  }
  throw CLI::ValidationError("unknown policy spec '" + spec + "'");
}

int cmd_validate_data(const std::string& data_path, bool as_json) {
  std::ifstream in(data_path);
  if (!in) {
    std::cerr << "error: cannot open '" << data_path << "'\n";
    return 2;
  }
  std::vector<Diagnostic> diagnostics;
  const std::vector<Sample> samples = load_samples(in, &diagnostics);
  const DatasetStats stats = compute_stats(samples);
  if (as_json) {
    nlohmann::ordered_json j;
    j["valid_records"] = stats.total;
    j["invalid_records"] = diagnostics.size();
    j["labeled"] = stats.labeled;
    j["unlabeled"] = stats.unlabeled;
    j["per_source"] = stats.per_source;
    j["duration_histogram"] = stats.duration_histogram;
    nlohmann::ordered_json issues = nlohmann::ordered_json::array();
    for (const Diagnostic& d : diagnostics) {
      issues.push_back(nlohmann::ordered_json{{"line", d.line}, {"message", d.message}});
    }
    j["diagnostics"] = std::move(issues);
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << data_path << ": " << stats.total << " valid record(s), " << stats.labeled
              << " labeled, " << stats.unlabeled << " unlabeled\n";
    for (const auto& [source, count] : stats.per_source) {
      std::cout << "  " << source << ": " << count << "\n";
    }
    for (const Diagnostic& d : diagnostics) {
      std::cout << "  line " << d.line << ": " << d.message << "\n";
    }
  }
  return diagnostics.empty() ? 0 : 1;
}

int cmd_build_curriculum(const EngineConfig& cfg, const std::string& data_path, int epochs,
                         const std::string& out_path) {
  const std::vector<Sample> corpus = load_samples(data_path);
  BatchStream stream(cfg.curriculum(), corpus, cfg.grpo.batch_size, mix_seed(cfg.seed, "batch"));
  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) {
      std::cerr << "error: cannot write '" << out_path << "'\n";
      return 2;
    }
    out = &file;
  }
  const size_t per_epoch =
      (stream.admitted_size() + cfg.grpo.batch_size - 1) / cfg.grpo.batch_size;
  int batch_index = 0;
  for (size_t n = 0; n < per_epoch * static_cast<size_t>(epochs); ++n) {
    const auto batch = stream.next();
    nlohmann::ordered_json j;
    j["epoch"] = stream.epoch();
    j["batch"] = batch_index++;
    nlohmann::ordered_json ids = nlohmann::ordered_json::array();
    for (const Sample* s : batch) ids.push_back(s->sample_id);
    j["sample_ids"] = std::move(ids);
    *out << j.dump() << "\n";
  }
  return 0;
}

int cmd_rollout(const EngineConfig& cfg, ExecMode exec, const std::string& data_path,
                const std::string& policy_spec, const std::string& log_path,
                const std::string& groups_path) {
  const std::vector<Sample> corpus = load_samples(data_path);
  const auto policy = make_policy(policy_spec, cfg);
  std::vector<const Sample*> batch;
  for (const Sample& s : corpus) batch.push_back(&s);
  std::vector<Group> groups =
      rollout_groups(*policy, batch, cfg, mix_seed(cfg.seed, "rollout"), exec);
  for (Group& g : groups) {
    if (!zero_reward_variance(g)) g.advantages = group_advantages(g.rewards, cfg.grpo.sample_std);
  }
  const std::vector<TrajectoryRecord> records = records_from_groups(groups);
  if (!log_path.empty()) write_trajectory_log(records, log_path);
  if (!groups_path.empty()) write_group_log(groups, groups_path);

  double mean_reward = 0.0;
  for (const TrajectoryRecord& r : records) mean_reward += r.reward.total;
  if (!records.empty()) mean_reward /= static_cast<double>(records.size());
  std::cout << records.size() << " trajectories over " << corpus.size()
            << " samples, mean reward " << mean_reward << "\n";
  return 0;
}

int cmd_train_toy(const EngineConfig& cfg, ExecMode exec, const std::string& data_path,
                  int steps, const std::string& metrics_path, const std::string& log_path,
                  const std::string& groups_path, const std::string& params_in,
                  const std::string& params_out) {
  const std::vector<Sample> corpus = load_samples(data_path);
  ToyPolicyParams init = params_in.empty()
                             ? ToyPolicyParams::zeros(cfg.toy.windows, cfg.toy.options)
                             : load_toy_params(params_in);
  if (params_in.empty()) init.noise_floor = cfg.toy.noise_floor;
  const TrainResult result =
      run_train_toy(corpus, cfg, steps, exec, std::move(init), !log_path.empty());
  if (!metrics_path.empty()) emit_metrics(result.metrics, metrics_path);
  if (!log_path.empty()) write_trajectory_log(result.log, log_path);
  if (!groups_path.empty()) write_group_log(result.exported_groups, groups_path);
  if (!params_out.empty()) save_toy_params(result.final_params, params_out);
  if (result.abandoned) {
    std::cerr << "training abandoned: " << result.abandon_reason << "\n";
    return 1;
  }
  const MetricsRow& last = result.metrics.back();
  std::cout << "step " << last.step << ": mean reward " << last.mean_total << ", accuracy "
            << last.mean_acc << ", grounded fraction " << last.frac_grounded << "\n";
  return 0;
}

int cmd_eval(const EngineConfig& cfg, ExecMode exec, const std::string& data_path,
             const std::string& policy_spec, const std::string& out_path,
             const std::string& log_path) {
  const std::vector<Sample> corpus = load_samples(data_path);
  const auto policy = make_policy(policy_spec, cfg);
  std::vector<TrajectoryRecord> records;
  const EvalReport report = run_eval(*policy, corpus, cfg, exec, &records);
  if (!log_path.empty()) write_trajectory_log(records, log_path);
  const std::string rendered = report.to_json().dump(2);
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) {
      std::cerr << "error: cannot write '" << out_path << "'\n";
      return 2;
    }
    out << rendered << "\n";
  }
  std::cout << rendered << "\n";
  return 0;
}

int cmd_replay(const EngineConfig& cfg, const std::string& log_path,
               const std::string& data_path, const std::string& out_path) {
  const std::vector<Sample> corpus = load_samples(data_path);
  const std::vector<TrajectoryRecord> records = read_trajectory_log(log_path);
  std::vector<size_t> mismatches;
  const std::vector<RewardBreakdown> recomputed =
      replay_rewards(records, corpus, cfg, &mismatches);
  if (!out_path.empty()) {
    std::vector<TrajectoryRecord> rewritten = records;
    for (size_t i = 0; i < rewritten.size(); ++i) rewritten[i].reward = recomputed[i];
    write_trajectory_log(rewritten, out_path);
  }
  if (mismatches.empty()) {
    std::cout << records.size() << " record(s) verified, rewards reproduce exactly\n";
    return 0;
  }
  for (size_t idx : mismatches) {
    std::cout << "record " << idx << " (sample " << records[idx].traj.sample_id
              << "): stored total " << records[idx].reward.total << ", recomputed "
              << recomputed[idx].total << "\n";
  }
  std::cout << mismatches.size() << " mismatch(es) in " << records.size() << " record(s)\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-turn grounding rollout engine"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may appear after the subcommand

  GlobalOpts global;
  app.add_option("--config", global.config_path, "engine config file (JSON)");
  uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "override the engine seed");
  int workers_value = 0;
  auto* workers_opt = app.add_option("--workers", workers_value, "worker cap (0 = all cores)");
  app.add_flag("--serial", global.serial, "run the serial reference path");

  auto* validate = app.add_subcommand("validate-data", "check a dataset file");
  std::string data_path;
  bool as_json = false;
  validate->add_option("--data", data_path, "dataset JSONL")->required();
  validate->add_flag("--json", as_json, "machine-readable output");

  auto* curriculum = app.add_subcommand("build-curriculum", "emit the batch manifest");
  std::string cur_data;
  int stage = 1;
  int batch_size = 0;
  int epochs = 1;
  std::string cur_out;
  curriculum->add_option("--data", cur_data, "dataset JSONL")->required();
  curriculum->add_option("--stage", stage, "curriculum stage (1 or 2)");
  curriculum->add_option("--batch-size", batch_size, "override batch size");
  curriculum->add_option("--epochs", epochs, "epochs to emit");
  curriculum->add_option("--out", cur_out, "manifest output path");

  auto* rollout_cmd = app.add_subcommand("rollout", "roll out groups and score rewards");
  std::string roll_data;
  std::string roll_policy = "toy";
  std::string roll_log;
  std::string roll_groups;
  int roll_group_size = 0;
  rollout_cmd->add_option("--data", roll_data, "dataset JSONL")->required();
  rollout_cmd->add_option("--policy", roll_policy, "policy spec (scripted:..., toy, remote)");
  rollout_cmd->add_option("--group-size", roll_group_size, "rollouts per sample");
  rollout_cmd->add_option("--out", roll_log, "trajectory log path");
  rollout_cmd->add_option("--groups", roll_groups, "group export path");

  auto* train = app.add_subcommand("train-toy", "train the tabular toy policy");
  std::string train_data;
  int steps = 200;
  std::string metrics_path;
  std::string train_log;
  std::string train_groups;
  std::string params_in;
  std::string params_out;
  int train_stage = 0;
  double step_size = 0.0;
  bool no_gate = false;
  bool no_pseudo = false;
  bool no_soft = false;
  bool no_hard = false;
  std::vector<std::string> stage1_sources;
  train->add_option("--data", train_data, "dataset JSONL")->required();
  train->add_option("--steps", steps, "optimization steps");
  train->add_option("--metrics", metrics_path, "metrics CSV path");
  train->add_option("--log", train_log, "trajectory log path");
  train->add_option("--groups", train_groups, "group export path (final step)");
  train->add_option("--params-in", params_in, "initial toy parameters (JSON)");
  train->add_option("--params-out", params_out, "final toy parameters (JSON)");
  train->add_option("--stage", train_stage, "curriculum stage (1 or 2)");
  train->add_option("--step-size", step_size, "ascent step size");
  train->add_option("--stage1-sources", stage1_sources, "sources admitted in stage 1");
  train->add_flag("--no-gate", no_gate, "disable the accuracy gate (ablation)");
  train->add_flag("--no-pseudo", no_pseudo, "disable the self-confirmed penalty (ablation)");
  train->add_flag("--no-soft", no_soft, "disable the IoU grounding term (ablation)");
  train->add_flag("--no-hard", no_hard, "disable the overlap indicator term (ablation)");

  auto* eval_cmd = app.add_subcommand("eval", "greedy evaluation with parse retries");
  std::string eval_data;
  std::string eval_policy = "toy";
  std::string eval_out;
  std::string eval_log;
  eval_cmd->add_option("--data", eval_data, "dataset JSONL")->required();
  eval_cmd->add_option("--policy", eval_policy, "policy spec");
  eval_cmd->add_option("--out", eval_out, "report JSON path");
  eval_cmd->add_option("--log", eval_log, "trajectory log path");

  auto* replay = app.add_subcommand("replay-rewards", "recompute rewards from a log");
  std::string replay_log;
  std::string replay_data;
  std::string replay_out;
  replay->add_option("--log", replay_log, "trajectory log path")->required();
  replay->add_option("--data", replay_data, "dataset JSONL")->required();
  replay->add_option("--out", replay_out, "write recomputed records here");

  CLI11_PARSE(app, argc, argv);

  if (*seed_opt) global.seed = seed_value;
  if (*workers_opt) global.workers = workers_value;

  try {
    EngineConfig cfg = assemble_config(global);
    if (validate->parsed()) return cmd_validate_data(data_path, as_json);
    if (curriculum->parsed()) {
      cfg.stage = stage == 2 ? Stage::Stage2 : Stage::Stage1;
      if (batch_size > 0) cfg.grpo.batch_size = batch_size;
      return cmd_build_curriculum(cfg, cur_data, epochs, cur_out);
    }
    if (rollout_cmd->parsed()) {
      if (roll_group_size > 0) cfg.grpo.group_size = roll_group_size;
      return cmd_rollout(cfg, exec_mode(global), roll_data, roll_policy, roll_log, roll_groups);
    }
    if (train->parsed()) {
      if (train_stage != 0) cfg.stage = train_stage == 2 ? Stage::Stage2 : Stage::Stage1;
      if (step_size > 0.0) cfg.toy.step_size = step_size;
      if (no_gate) cfg.gate.gate_enabled = false;
      if (no_pseudo) cfg.rewards.pseudo_reward = false;
      if (no_soft) cfg.rewards.soft_reward = false;
      if (no_hard) cfg.rewards.hard_reward = false;
      if (!stage1_sources.empty()) {
        cfg.stage1_sources.clear();
        for (const std::string& name : stage1_sources) {
          const auto source = source_from_string(name);
          if (!source) throw DataError("unknown source '" + name + "'");
          cfg.stage1_sources.insert(*source);
        }
      }
      return cmd_train_toy(cfg, exec_mode(global), train_data, steps, metrics_path, train_log,
                           train_groups, params_in, params_out);
    }
    if (eval_cmd->parsed()) {
      return cmd_eval(cfg, exec_mode(global), eval_data, eval_policy, eval_out, eval_log);
    }
    if (replay->parsed()) return cmd_replay(cfg, replay_log, replay_data, replay_out);
  } catch (const TransportError& e) {
    std::cerr << "transport error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
