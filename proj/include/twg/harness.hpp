#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "twg/config.hpp"
#include "twg/exec.hpp"
#include "twg/grpo.hpp"
#include "twg/logio.hpp"
#include "twg/synthetic.hpp"
#include "twg/toy_policy.hpp"

namespace twg {

// Rolls out group_size trajectories per sample and scores them. Work is
// independent per trajectory; the parallel path is bit-identical to the
// serial one because every trajectory derives its own seed.
std::vector<Group> rollout_groups(const Policy& policy, std::span<const Sample* const> batch,
                                  const EngineConfig& cfg, uint64_t step_seed, ExecMode exec);

Group rollout_single_group(const Policy& policy, const Sample& sample, const EngineConfig& cfg,
                           uint64_t group_seed);

std::vector<TrajectoryRecord> records_from_groups(const std::vector<Group>& groups);

struct EvalReport {
  int corpus_size = 0;
  int scored_samples = 0;
  int failed_samples = 0;  // transport exhaustion
  double overall_accuracy = 0.0;
  std::map<std::string, double> accuracy_per_source;
  double mean_groundings_per_sample = 0.0;
  int samples_with_grounding = 0;
  std::map<int, int> turn_count_histogram;
  std::map<std::string, int> stop_reason_counts;
  int total_retries = 0;

  nlohmann::ordered_json to_json() const;
};

// Recomputes every report field from a record set; run_eval's report equals
// this recount over its own log by construction.
EvalReport report_from_records(std::span<const TrajectoryRecord> records,
                               std::span<const Sample> corpus, int failed_samples);

// Greedy rollout per sample; trajectories that end without an answer are
// re-sampled with the training sampling params up to eval_retry_limit times,
// replacing the failed attempt and recording the retry count.
EvalReport run_eval(const Policy& policy, std::span<const Sample> corpus,
                    const EngineConfig& cfg, ExecMode exec,
                    std::vector<TrajectoryRecord>* out_records);

struct MetricsRow {
  int step = 0;
  int group_count = 0;
  int traj_count = 0;
  double mean_total = 0.0;
  double mean_acc = 0.0;
  double mean_format = 0.0;
  double mean_soft = 0.0;
  double mean_hard = 0.0;
  double mean_grounding = 0.0;
  double mean_pseudo = 0.0;
  double mean_turns = 0.0;
  double frac_grounded = 0.0;
  int resampled_groups = 0;
  int abandoned_groups = 0;
  double objective = 0.0;
  double kl_value = 0.0;
};

// Fixed column order, one header row, deterministic bytes (docs/formats.md).
void emit_metrics(std::span<const MetricsRow> rows, const std::string& path);
std::string metrics_csv(std::span<const MetricsRow> rows);

struct TrainResult {
  ToyPolicyParams final_params;
  std::vector<MetricsRow> metrics;
  std::vector<TrajectoryRecord> log;
  std::vector<Group> exported_groups;  // post-standardization, for export
  bool abandoned = false;
  std::string abandon_reason;
};

// Curriculum-batched GRPO training loop for the toy policy: roll out groups,
// score rewards, resample degenerate groups, standardize advantages and take
// one finite-difference ascent step per batch. Bit-reproducible for a fixed
// seed in both exec modes.
TrainResult run_train_toy(const std::vector<Sample>& corpus, const EngineConfig& cfg, int steps,
                          ExecMode exec, ToyPolicyParams initial_params,
                          bool keep_trajectory_log = false);

// Recomputes breakdowns for every record using the recorded self-confirmation
// text. Returns one recomputed breakdown per record; `mismatches` collects
// indices where the stored breakdown differs.
std::vector<RewardBreakdown> replay_rewards(std::span<const TrajectoryRecord> records,
                                            std::span<const Sample> corpus,
                                            const EngineConfig& cfg,
                                            std::vector<size_t>* mismatches);

}  // namespace twg
