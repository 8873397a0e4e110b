#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "twg/grpo.hpp"
#include "twg/rewards.hpp"
#include "twg/rollout.hpp"

namespace twg {

// One line of the trajectory log: the trajectory, its reward breakdown and,
// when the policy reports log-probs, the behavior log-probability. The log is
// the source of truth for every statistic; rewards can be recomputed from it
// byte-exactly (schema "twg-traj-v1", see docs/formats.md).
struct TrajectoryRecord {
  Trajectory traj;
  RewardBreakdown reward;
  std::optional<double> logp_old;
};

nlohmann::ordered_json trajectory_record_to_json(const TrajectoryRecord& rec);
TrajectoryRecord trajectory_record_from_json(const nlohmann::json& j);

void write_trajectory_log(const std::vector<TrajectoryRecord>& records, const std::string& path);
std::vector<TrajectoryRecord> read_trajectory_log(const std::string& path);

// Per-group export for external trainers: rewards, advantages and optional
// log-probs, one JSON object per group ("twg-group-v1").
nlohmann::ordered_json group_to_json(const Group& group);
void write_group_log(const std::vector<Group>& groups, const std::string& path);

}  // namespace twg
