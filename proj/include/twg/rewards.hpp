#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "twg/data.hpp"
#include "twg/interval.hpp"
#include "twg/policy.hpp"
#include "twg/rollout.hpp"

namespace twg {

struct GateConfig {
  double pseudo_penalty = 0.1;  // subtracted when the self-confirmed answer is wrong
  bool gate_enabled = true;     // grounding-related terms count only on correct answers
};

// Ablation switches. All on in the standard configuration.
struct RewardSwitches {
  bool soft_reward = true;
  bool hard_reward = true;
  bool pseudo_reward = true;
};

// Per-trajectory reward components. Exactly one of r_grounding / r_pseudo can
// be present (labeled vs unlabeled path); both absent when the trajectory has
// no grounding action. Raw component values are always recorded; the gate
// only controls whether they enter the total.
struct RewardBreakdown {
  double r_acc = 0.0;     // 0 or 1
  double r_format = 0.0;  // 0 or 0.2
  std::optional<double> r_soft;
  std::optional<double> r_hard;
  std::optional<double> r_grounding;  // r_soft + r_hard
  std::optional<double> r_pseudo;     // 0 or -pseudo_penalty
  bool gated = false;                 // gate zeroed the grounding-related term
  bool pseudo_parse_failed = false;
  std::optional<std::string> self_confirm_raw;  // recorded for replay
  double total = 0.0;
  bool operator==(const RewardBreakdown&) const = default;
};

// 1.0 iff the trajectory answered and its normalized option letter equals the
// key.
double accuracy_reward(const Trajectory& traj, std::string_view answer_key);

// 0.2 iff every turn is Grounding or Answering; 0.0 if any turn is Malformed.
double format_reward(const Trajectory& traj);

// IoU + 0.5 * [IoU > 0], in [0, 1.5]. The IoU term discriminates, the
// indicator pays for any positive overlap.
double grounding_reward(const Interval& g_last, const Interval& g_gt);

// Zero-length labels make the IoU term identically zero, so they are widened
// to one coarse segment before scoring.
Interval widen_degenerate_label(Interval gt, double duration_s, int coarse_frames);

struct PseudoOutcome {
  double value = 0.0;
  bool parse_failed = false;
  std::string raw;
};

// Classifies an already-generated self-confirmation text against the key.
// Anything that is not an Answering turn with an extractable letter counts as
// incorrect and is flagged.
PseudoOutcome classify_self_confirm(const std::string& raw, std::string_view answer_key,
                                    double pseudo_penalty, int coarse_frames);

// Queries the policy once on (last grounded clip at fine grain, self-confirm
// prompt) with greedy decoding and scores the penalty.
PseudoOutcome pseudo_reward(const Policy& policy, const ViewPayload& v_last,
                            const PromptKind& confirm_prompt, std::string_view answer_key,
                            double pseudo_penalty, uint64_t seed);

// Composite reward, by case: no grounding -> r_acc + r_format; grounding with
// a labeled sample -> add gated grounding_reward of the last grounding action
// (converted to seconds) against the label; grounding without a label -> add
// the gated self-confirmed penalty. Component values are computed and
// recorded even when the gate zeroes their contribution.
RewardBreakdown total_reward(const Trajectory& traj, const Sample& sample, const Policy& policy,
                             const GateConfig& gate, const RewardSwitches& switches,
                             const GrainConfig& grains);

// Same composition, but the self-confirmation text comes from a recorded log
// instead of a live policy call. Recomputing a log through this must
// reproduce the logged breakdown exactly.
RewardBreakdown replay_reward(const Trajectory& traj, const Sample& sample,
                              const GateConfig& gate, const RewardSwitches& switches,
                              const GrainConfig& grains,
                              const std::optional<std::string>& recorded_self_confirm);

}  // namespace twg
