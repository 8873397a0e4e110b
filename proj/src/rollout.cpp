#include "twg/rollout.hpp"

#include <stdexcept>

#include "twg/rng.hpp"

namespace twg {

namespace {

void append_options(std::string& s, const std::vector<std::string>& options) {
  s += "Options:\n";
  for (size_t i = 0; i < options.size(); ++i) {
    s += static_cast<char>('A' + i);
    s += ". ";
    s += options[i];
    s += "\n";
  }
}

void append_action_instructions(std::string& s, int coarse_frames) {
  const std::string last = std::to_string(coarse_frames - 1);
  s += "Each turn, write your reasoning inside <think>...</think>, then take exactly one "
       "action:\n";
  s += "<ground>start_frame, end_frame</ground> to zoom into a clip, with 0 <= start_frame <= "
       "end_frame <= " +
       last + ", or\n";
  s += "<answer>option letter</answer> to give the final answer.\n";
}

}  // namespace

std::string render_prompt(const PromptKind& prompt) {
  if (prompt.question.empty()) {
    throw std::invalid_argument("render_prompt: question must be non-empty");
  }
  std::string s;
  switch (prompt.tag) {
    case PromptTag::Initial:
      s += "You are watching a video shown as " + std::to_string(prompt.coarse_frames) +
           " coarse frames indexed 0 to " + std::to_string(prompt.coarse_frames - 1) + ".\n";
      s += "Question: " + prompt.question + "\n";
      append_options(s, prompt.options);
      append_action_instructions(s, prompt.coarse_frames);
      s += "Turns remaining: " + std::to_string(prompt.turns_remaining) + ".\n";
      break;
    case PromptTag::Intermediate:
      s += "The requested clip is attached at fine granularity.\n";
      s += "Question: " + prompt.question + "\n";
      append_options(s, prompt.options);
      append_action_instructions(s, prompt.coarse_frames);
      s += "Turns remaining: " + std::to_string(prompt.turns_remaining) + ".\n";
      break;
    case PromptTag::SelfConfirm:
      s += "Answer the question using only the attached video clip.\n";
      s += "Question: " + prompt.question + "\n";
      append_options(s, prompt.options);
      s += "Reply with <think>...</think><answer>option letter</answer>.\n";
      break;
  }
  return s;
}

int grounding_action_count(const Trajectory& traj) {
  int n = 0;
  for (const Turn& t : traj.turns) {
    if (t.parsed.kind == TurnKind::Grounding) ++n;
  }
  return n;
}

const Turn* last_grounding_turn(const Trajectory& traj) {
  for (auto it = traj.turns.rbegin(); it != traj.turns.rend(); ++it) {
    if (it->parsed.kind == TurnKind::Grounding) return &*it;
  }
  return nullptr;
}

Trajectory run_trajectory(const Policy& policy, const Sample& sample, const RolloutConfig& cfg,
                          const SamplingParams& sampling, uint64_t rng_seed) {
  if (cfg.max_turns < 1) throw std::invalid_argument("run_trajectory: max_turns must be >= 1");

  const VideoMeta& video = sample.video;
  ViewPayload coarse;
  coarse.spec = coarse_view(video, cfg.grains.coarse_frames, cfg.grains.coarse_tokens_per_frame);
  coarse.frames = attachments_in_range(video, 0.0, video.duration_s);

  Trajectory traj;
  traj.sample_id = sample.sample_id;
  traj.initial_view = coarse;
  traj.seed = rng_seed;
  traj.template_version = std::string(kPromptTemplateVersion);

  std::vector<Message> context;
  context.push_back({Role::Environment,
                     render_prompt({PromptTag::Initial, sample.question, sample.options,
                                    cfg.max_turns, cfg.grains.coarse_frames}),
                     {coarse}});

  PromptTag prompt_used = PromptTag::Initial;
  for (int k = 1; k <= cfg.max_turns; ++k) {
    GenerationRequest req{context, sampling, mix_seed(rng_seed, static_cast<uint64_t>(k))};
    const GenerationResponse resp = policy.generate(req);
    ParsedTurn parsed = parse_turn_output(resp.text, cfg.grains.coarse_frames);

    Turn turn;
    turn.prompt_used = prompt_used;

    if (parsed.kind == TurnKind::Grounding) {
      const ClipSpec clip = ground_to_clip(video, *parsed.ground, cfg.grains.coarse_frames);
      ViewPayload fine;
      fine.spec = fine_view(clip, cfg.grains.fine_frames, cfg.grains.fine_tokens_per_frame);
      fine.frames = attachments_in_range(video, clip.start_s, clip.end_s);
      turn.parsed = std::move(parsed);
      turn.injected_view = fine;
      traj.turns.push_back(std::move(turn));
      if (k == cfg.max_turns) {
        traj.stop = StopReason::MaxTurns;
        break;
      }
      context.push_back({Role::Policy, resp.text, {}});
      context.push_back({Role::Environment,
                         render_prompt({PromptTag::Intermediate, sample.question, sample.options,
                                        cfg.max_turns - k, cfg.grains.coarse_frames}),
                         {fine}});
      prompt_used = PromptTag::Intermediate;
    } else if (parsed.kind == TurnKind::Answering) {
      traj.final_answer = parsed.answer;
      turn.parsed = std::move(parsed);
      traj.turns.push_back(std::move(turn));
      traj.stop = StopReason::Answered;
      break;
    } else {
      // Unparseable output stops the trajectory; the raw text is preserved
      // in the turn for the log.
      turn.parsed = std::move(parsed);
      traj.turns.push_back(std::move(turn));
      traj.stop = StopReason::Malformed;
      break;
    }
  }
  return traj;
}

}  // namespace twg
