#include "twg/rewards.hpp"

#include <algorithm>

#include "twg/rng.hpp"

namespace twg {

double accuracy_reward(const Trajectory& traj, std::string_view answer_key) {
  if (!traj.final_answer) return 0.0;
  const auto letter = normalize_option_letter(traj.final_answer->text);
  if (!letter || answer_key.size() != 1) return 0.0;
  return *letter == answer_key[0] ? 1.0 : 0.0;
}

double format_reward(const Trajectory& traj) {
  for (const Turn& t : traj.turns) {
    if (t.parsed.kind == TurnKind::Malformed) return 0.0;
  }
  return 0.2;
}

double grounding_reward(const Interval& g_last, const Interval& g_gt) {
  const double iou = temporal_iou(g_last, g_gt);
  return iou + (iou > 0.0 ? 0.5 : 0.0);
}

Interval widen_degenerate_label(Interval gt, double duration_s, int coarse_frames) {
  if (interval_length(gt) > 0.0) return gt;
  const double segment = duration_s / coarse_frames;
  gt.end_s = std::min(duration_s, gt.start_s + segment);
  if (interval_length(gt) <= 0.0) gt.start_s = std::max(0.0, gt.end_s - segment);
  return gt;
}

PseudoOutcome classify_self_confirm(const std::string& raw, std::string_view answer_key,
                                    double pseudo_penalty, int coarse_frames) {
  PseudoOutcome out;
  out.raw = raw;
  const ParsedTurn parsed = parse_turn_output(raw, coarse_frames < 1 ? 1 : coarse_frames);
  if (parsed.kind != TurnKind::Answering) {
    out.parse_failed = true;
    out.value = -pseudo_penalty;
    return out;
  }
  const auto letter = normalize_option_letter(parsed.answer->text);
  if (!letter) {
    out.parse_failed = true;
    out.value = -pseudo_penalty;
    return out;
  }
  out.value = (answer_key.size() == 1 && *letter == answer_key[0]) ? 0.0 : -pseudo_penalty;
  return out;
}

PseudoOutcome pseudo_reward(const Policy& policy, const ViewPayload& v_last,
                            const PromptKind& confirm_prompt, std::string_view answer_key,
                            double pseudo_penalty, uint64_t seed) {
  // The judge is deterministic: greedy decoding regardless of the rollout
  // sampling parameters.
  SamplingParams greedy;
  greedy.temperature = 0.0;
  GenerationRequest req;
  req.context.push_back({Role::Environment, render_prompt(confirm_prompt), {v_last}});
  req.sampling = greedy;
  req.seed = seed;
  const GenerationResponse resp = policy.generate(req);
  return classify_self_confirm(resp.text, answer_key, pseudo_penalty,
                               confirm_prompt.coarse_frames);
}

namespace {

// Shared composition for the live and replay paths. The grounding-related
// component is always computed and recorded; the gate only decides whether it
// reaches the total.
RewardBreakdown compose_reward(const Trajectory& traj, const Sample& sample,
                               const GateConfig& gate, const RewardSwitches& switches,
                               const GrainConfig& grains,
                               const std::function<PseudoOutcome(const ViewPayload&)>& confirm) {
  RewardBreakdown b;
  b.r_acc = accuracy_reward(traj, sample.answer_key);
  b.r_format = format_reward(traj);
  b.total = b.r_acc + b.r_format;

  const Turn* last_ground = last_grounding_turn(traj);
  if (!last_ground) return b;

  const bool gate_fires = gate.gate_enabled && !(b.r_acc > 0.0);
  if (sample.gt_grounding) {
    const ClipSpec clip =
        ground_to_clip(sample.video, *last_ground->parsed.ground, grains.coarse_frames);
    const Interval g_last{clip.start_s, clip.end_s};
    const Interval g_gt =
        widen_degenerate_label(*sample.gt_grounding, sample.video.duration_s,
                               grains.coarse_frames);
    const double iou = temporal_iou(g_last, g_gt);
    b.r_soft = switches.soft_reward ? iou : 0.0;
    b.r_hard = switches.hard_reward && iou > 0.0 ? 0.5 : 0.0;
    b.r_grounding = *b.r_soft + *b.r_hard;
    b.gated = gate_fires;
    if (!gate_fires) b.total += *b.r_grounding;
  } else if (switches.pseudo_reward) {
    const PseudoOutcome out = confirm(*last_ground->injected_view);
    b.r_pseudo = out.value;
    b.pseudo_parse_failed = out.parse_failed;
    b.self_confirm_raw = out.raw;
    b.gated = gate_fires;
    if (!gate_fires) b.total += out.value;
  }
  return b;
}

}  // namespace

RewardBreakdown total_reward(const Trajectory& traj, const Sample& sample, const Policy& policy,
                             const GateConfig& gate, const RewardSwitches& switches,
                             const GrainConfig& grains) {
  return compose_reward(
      traj, sample, gate, switches, grains, [&](const ViewPayload& v_last) {
        const PromptKind confirm{PromptTag::SelfConfirm, sample.question, sample.options, 0,
                                 grains.coarse_frames};
        return pseudo_reward(policy, v_last, confirm, sample.answer_key, gate.pseudo_penalty,
                             mix_seed(traj.seed, "self-confirm"));
      });
}

RewardBreakdown replay_reward(const Trajectory& traj, const Sample& sample,
                              const GateConfig& gate, const RewardSwitches& switches,
                              const GrainConfig& grains,
                              const std::optional<std::string>& recorded_self_confirm) {
  return compose_reward(traj, sample, gate, switches, grains, [&](const ViewPayload&) {
    if (!recorded_self_confirm) {
      throw std::invalid_argument(
          "replay_reward: log record carries no self-confirmation text for an unlabeled "
          "grounded trajectory");
    }
    return classify_self_confirm(*recorded_self_confirm, sample.answer_key, gate.pseudo_penalty,
                                 grains.coarse_frames);
  });
}

}  // namespace twg
