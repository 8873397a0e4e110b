#include <exception>

#include "twg/harness.hpp"
#include "twg/rng.hpp"

namespace twg {

namespace {

struct Slot {
  Trajectory traj;
  RewardBreakdown reward;
  std::optional<double> logp_old;
  std::exception_ptr error;
};

Slot roll_one(const Policy& policy, const Sample& sample, const EngineConfig& cfg,
              uint64_t traj_seed) {
  Slot slot;
  try {
    slot.traj = run_trajectory(policy, sample, cfg.rollout_config(), cfg.train_sampling,
                               traj_seed);
    slot.reward = total_reward(slot.traj, sample, policy, cfg.gate, cfg.rewards, cfg.grains);
    if (policy.reports_logprobs()) slot.logp_old = policy.score_trajectory(slot.traj);
  } catch (...) {
    slot.error = std::current_exception();
  }
  return slot;
}

Group group_from_slots(const Sample& sample, std::vector<Slot> slots) {
  Group group;
  group.sample_id = sample.sample_id;
  const bool has_logp = slots.empty() ? false : slots.front().logp_old.has_value();
  if (has_logp) group.logp_old = std::vector<double>();
  for (Slot& slot : slots) {
    group.rewards.push_back(slot.reward.total);
    group.breakdowns.push_back(std::move(slot.reward));
    if (has_logp) group.logp_old->push_back(*slot.logp_old);
    group.trajectories.push_back(std::move(slot.traj));
  }
  return group;
}

}  // namespace

Group rollout_single_group(const Policy& policy, const Sample& sample, const EngineConfig& cfg,
                           uint64_t group_seed) {
  std::vector<Slot> slots;
  slots.reserve(cfg.grpo.group_size);
  for (int g = 0; g < cfg.grpo.group_size; ++g) {
    slots.push_back(roll_one(policy, sample, cfg, mix_seed(group_seed, static_cast<uint64_t>(g))));
    if (slots.back().error) std::rethrow_exception(slots.back().error);
  }
  return group_from_slots(sample, std::move(slots));
}

std::vector<Group> rollout_groups(const Policy& policy, std::span<const Sample* const> batch,
                                  const EngineConfig& cfg, uint64_t step_seed, ExecMode exec) {
  const int group_size = cfg.grpo.group_size;
  const long long total = static_cast<long long>(batch.size()) * group_size;
  std::vector<Slot> slots(static_cast<size_t>(total));

  // Each trajectory derives its own seed, so the schedule cannot influence
  // the result and both exec modes are bit-identical.
  const auto body = [&](long long idx) {
    const Sample& sample = *batch[static_cast<size_t>(idx / group_size)];
    const int g = static_cast<int>(idx % group_size);
    const uint64_t group_seed = mix_seed(step_seed, sample.sample_id);
    slots[static_cast<size_t>(idx)] =
        roll_one(policy, sample, cfg, mix_seed(group_seed, static_cast<uint64_t>(g)));
  };

  if (exec == ExecMode::Parallel) {
    const int n_threads = resolve_workers(cfg.worker_cap);
#pragma omp parallel for schedule(dynamic) num_threads(n_threads)
    for (long long idx = 0; idx < total; ++idx) body(idx);
  } else {
    for (long long idx = 0; idx < total; ++idx) body(idx);
  }

  for (const Slot& slot : slots) {
    if (slot.error) std::rethrow_exception(slot.error);
  }

  std::vector<Group> groups;
  groups.reserve(batch.size());
  for (size_t si = 0; si < batch.size(); ++si) {
    std::vector<Slot> group_slots(
        std::make_move_iterator(slots.begin() + static_cast<long long>(si) * group_size),
        std::make_move_iterator(slots.begin() + static_cast<long long>(si + 1) * group_size));
    groups.push_back(group_from_slots(*batch[si], std::move(group_slots)));
  }
  return groups;
}

std::vector<TrajectoryRecord> records_from_groups(const std::vector<Group>& groups) {
  std::vector<TrajectoryRecord> records;
  for (const Group& g : groups) {
    for (size_t i = 0; i < g.trajectories.size(); ++i) {
      TrajectoryRecord rec;
      rec.traj = g.trajectories[i];
      rec.reward = g.breakdowns[i];
      if (g.logp_old) rec.logp_old = (*g.logp_old)[i];
      records.push_back(std::move(rec));
    }
  }
  return records;
}

}  // namespace twg
