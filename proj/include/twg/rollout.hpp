#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "twg/data.hpp"
#include "twg/policy.hpp"
#include "twg/tagfmt.hpp"

namespace twg {

enum class PromptTag { Initial, Intermediate, SelfConfirm };

// Everything a prompt template needs. SelfConfirm instructs answering from
// the attached clip alone and carries no grounding instruction.
struct PromptKind {
  PromptTag tag = PromptTag::Initial;
  std::string question;
  std::vector<std::string> options;
  int turns_remaining = 0;
  int coarse_frames = 0;
};

// Bump when any template text changes; recorded in every trajectory.
inline constexpr std::string_view kPromptTemplateVersion = "tmpl-v1";

std::string render_prompt(const PromptKind& prompt);

struct Turn {
  ParsedTurn parsed;
  // Fine view cut for the grounding action; present iff kind == Grounding.
  std::optional<ViewPayload> injected_view;
  PromptTag prompt_used = PromptTag::Initial;
};

enum class StopReason { Answered, Malformed, MaxTurns };

struct Trajectory {
  std::string sample_id;
  ViewPayload initial_view;  // coarse
  std::vector<Turn> turns;
  StopReason stop = StopReason::MaxTurns;
  std::optional<AnswerAction> final_answer;  // present iff stop == Answered
  std::string template_version;
  uint64_t seed = 0;
  int retry_count = 0;
};

int grounding_action_count(const Trajectory& traj);
const Turn* last_grounding_turn(const Trajectory& traj);

struct RolloutConfig {
  int max_turns = 3;
  GrainConfig grains;
};

// The multi-turn state machine. Starts from (coarse view, initial prompt),
// queries the policy on the accumulated context each turn, and either injects
// the grounded clip at fine grain and continues, stops on an answer, or stops
// on unparseable output. At most max_turns policy calls. Transport errors
// bubble up; they are not trajectories.
Trajectory run_trajectory(const Policy& policy, const Sample& sample, const RolloutConfig& cfg,
                          const SamplingParams& sampling, uint64_t rng_seed);

}  // namespace twg
