#include <unordered_map>

#include "twg/harness.hpp"
#include "twg/rng.hpp"

namespace twg {

namespace {

// Behavior statistics come from the pre-resample rollouts: that is the
// unbiased on-policy sample for the step. Optimizer statistics come from the
// kept groups.
MetricsRow behavior_row(int step, const std::vector<Group>& groups) {
  MetricsRow row;
  row.step = step;
  row.group_count = static_cast<int>(groups.size());
  int n = 0;
  int grounded = 0;
  for (const Group& g : groups) {
    for (size_t i = 0; i < g.trajectories.size(); ++i) {
      const RewardBreakdown& b = g.breakdowns[i];
      ++n;
      row.mean_total += b.total;
      row.mean_acc += b.r_acc;
      row.mean_format += b.r_format;
      row.mean_soft += b.r_soft.value_or(0.0);
      row.mean_hard += b.r_hard.value_or(0.0);
      row.mean_grounding += b.r_grounding.value_or(0.0);
      row.mean_pseudo += b.r_pseudo.value_or(0.0);
      row.mean_turns += static_cast<double>(g.trajectories[i].turns.size());
      if (grounding_action_count(g.trajectories[i]) > 0) ++grounded;
    }
  }
  row.traj_count = n;
  if (n > 0) {
    const double dn = static_cast<double>(n);
    row.mean_total /= dn;
    row.mean_acc /= dn;
    row.mean_format /= dn;
    row.mean_soft /= dn;
    row.mean_hard /= dn;
    row.mean_grounding /= dn;
    row.mean_pseudo /= dn;
    row.mean_turns /= dn;
    row.frac_grounded = static_cast<double>(grounded) / dn;
  }
  return row;
}

}  // namespace

TrainResult run_train_toy(const std::vector<Sample>& corpus, const EngineConfig& cfg, int steps,
                          ExecMode exec, ToyPolicyParams initial_params,
                          bool keep_trajectory_log) {
  if (steps < 1) throw std::invalid_argument("run_train_toy: steps must be >= 1");
  BatchStream stream(cfg.curriculum(), corpus, cfg.grpo.batch_size, mix_seed(cfg.seed, "batch"));

  TrainResult result;
  result.final_params = std::move(initial_params);
  ToyPolicy policy(result.final_params, cfg.grains);
  const ToyPolicy reference(policy.params(), cfg.grains);  // KL anchor, frozen at start

  int consecutive_degenerate = 0;
  for (int step = 0; step < steps; ++step) {
    const std::vector<const Sample*> batch = stream.next();
    std::unordered_map<std::string, const Sample*> by_id;
    for (const Sample* s : batch) by_id[s->sample_id] = s;

    const uint64_t step_seed = mix_seed(mix_seed(cfg.seed, "train"), static_cast<uint64_t>(step));
    std::vector<Group> rolled = rollout_groups(policy, batch, cfg, step_seed, exec);
    MetricsRow row = behavior_row(step, rolled);

    const auto fresh = [&](const std::string& sample_id, int attempt) {
      const uint64_t seed =
          mix_seed(mix_seed(mix_seed(step_seed, "resample"), sample_id),
                   static_cast<uint64_t>(attempt));
      return rollout_single_group(policy, *by_id.at(sample_id), cfg, seed);
    };
    ResampleResult resampled =
        dynamic_resample(std::move(rolled), cfg.resample_budget, fresh);
    row.resampled_groups = resampled.resampled;
    row.abandoned_groups = static_cast<int>(resampled.abandoned.size());

    if (resampled.groups.empty()) {
      ++consecutive_degenerate;
      result.metrics.push_back(row);
      if (consecutive_degenerate >= cfg.max_degenerate_batches) {
        result.abandoned = true;
        result.abandon_reason = "no group produced a learning signal for " +
                                std::to_string(consecutive_degenerate) + " consecutive batches";
        break;
      }
      continue;
    }
    consecutive_degenerate = 0;

    standardize_groups(resampled.groups, cfg.grpo.sample_std, exec, cfg.worker_cap);
    for (Group& g : resampled.groups) {
      std::vector<double> ref_logp(g.trajectories.size());
      for (size_t i = 0; i < g.trajectories.size(); ++i) {
        ref_logp[i] = reference.score_trajectory(g.trajectories[i]);
      }
      g.logp_ref = std::move(ref_logp);
    }

    StepStats stats;
    result.final_params =
        toy_policy_step(policy.params(), resampled.groups, cfg.grpo, cfg.toy.step_size,
                        cfg.toy.fd_eps, cfg.grains, exec, cfg.worker_cap, &stats);
    policy.set_params(result.final_params);
    row.objective = stats.objective_before;
    row.kl_value = stats.kl_value;
    result.metrics.push_back(row);

    if (keep_trajectory_log) {
      std::vector<TrajectoryRecord> recs = records_from_groups(resampled.groups);
      result.log.insert(result.log.end(), std::make_move_iterator(recs.begin()),
                        std::make_move_iterator(recs.end()));
    }
    if (step + 1 == steps) result.exported_groups = std::move(resampled.groups);
  }
  return result;
}

}  // namespace twg
