#include "oracle.hpp"

#include <cctype>
#include <string_view>
#include <vector>

namespace twgtest {

using namespace twg;

namespace {

// --- independent helpers, deliberately not calling into the library ---

std::optional<char> first_standalone_capital(std::string_view text) {
  for (size_t i = 0; i < text.size(); ++i) {
    if (text[i] < 'A' || text[i] > 'Z') continue;
    const bool left = i == 0 || !std::isalnum(static_cast<unsigned char>(text[i - 1]));
    const bool right =
        i + 1 >= text.size() || !std::isalnum(static_cast<unsigned char>(text[i + 1]));
    if (left && right) return text[i];
  }
  return std::nullopt;
}

double iou_seconds(double a0, double a1, double b0, double b1) {
  const double lo = a0 > b0 ? a0 : b0;
  const double hi = a1 < b1 ? a1 : b1;
  const double inter = hi > lo ? hi - lo : 0.0;
  const double uni = (a1 - a0) + (b1 - b0) - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

// Re-derivation of the self-confirmation check: the text must consist of one
// think block with content followed by one answer block with a standalone
// option letter, and no other grammar tags anywhere.
struct ScCheck {
  bool answered = false;
  std::optional<char> letter;
};

size_t count_occurrences(std::string_view text, std::string_view needle) {
  size_t n = 0;
  size_t pos = 0;
  while ((pos = text.find(needle, pos)) != std::string_view::npos) {
    ++n;
    ++pos;
  }
  return n;
}

ScCheck check_self_confirm_text(std::string_view text) {
  ScCheck result;
  const char* tags[] = {"<think>", "</think>", "<answer>", "</answer>"};
  for (const char* tag : tags) {
    if (count_occurrences(text, tag) != 1) return result;
  }
  if (count_occurrences(text, "<ground>") != 0 || count_occurrences(text, "</ground>") != 0) {
    return result;
  }
  const size_t think_open = text.find("<think>");
  const size_t think_close = text.find("</think>");
  const size_t answer_open = text.find("<answer>");
  const size_t answer_close = text.find("</answer>");
  if (!(think_open < think_close && think_close < answer_open && answer_open < answer_close)) {
    return result;
  }
  if (think_close == think_open + 7) return result;  // empty think
  std::string_view answer = text.substr(answer_open + 8, answer_close - (answer_open + 8));
  size_t b = 0;
  size_t e = answer.size();
  while (b < e && std::isspace(static_cast<unsigned char>(answer[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(answer[e - 1]))) --e;
  if (b == e) return result;
  result.answered = true;
  result.letter = first_standalone_capital(answer.substr(b, e - b));
  return result;
}

}  // namespace

RewardBreakdown oracle_reward(const Trajectory& traj, const Sample& sample,
                              const GateConfig& gate, const RewardSwitches& switches,
                              const GrainConfig& grains,
                              const std::optional<std::string>& self_confirm_raw) {
  RewardBreakdown b;

  // accuracy
  b.r_acc = 0.0;
  if (traj.final_answer) {
    const auto letter = first_standalone_capital(traj.final_answer->text);
    if (letter && sample.answer_key.size() == 1 && *letter == sample.answer_key[0]) {
      b.r_acc = 1.0;
    }
  }

  // format
  b.r_format = 0.2;
  for (const Turn& t : traj.turns) {
    if (t.parsed.kind == TurnKind::Malformed) {
      b.r_format = 0.0;
      break;
    }
  }

  b.total = b.r_acc + b.r_format;

  const GroundAction* last = nullptr;
  for (const Turn& t : traj.turns) {
    if (t.parsed.kind == TurnKind::Grounding) last = &*t.parsed.ground;
  }
  if (!last) return b;

  const bool gate_fires = gate.gate_enabled && b.r_acc == 0.0;
  if (sample.gt_grounding) {
    const double duration = sample.video.duration_s;
    const double frames = static_cast<double>(grains.coarse_frames);
    const double g0 = last->start_frame * duration / frames;
    const double g1 = last->end_frame + 1 == grains.coarse_frames
                          ? duration
                          : (last->end_frame + 1) * duration / frames;
    double t0 = sample.gt_grounding->start_s;
    double t1 = sample.gt_grounding->end_s;
    if (t1 - t0 <= 0.0) {  // widen a zero-length label by one coarse segment
      const double seg = duration / frames;
      t1 = t0 + seg < duration ? t0 + seg : duration;
      if (t1 - t0 <= 0.0) t0 = t1 - seg > 0.0 ? t1 - seg : 0.0;
    }
    const double iou = iou_seconds(g0, g1, t0, t1);
    b.r_soft = switches.soft_reward ? iou : 0.0;
    b.r_hard = switches.hard_reward && iou > 0.0 ? 0.5 : 0.0;
    b.r_grounding = *b.r_soft + *b.r_hard;
    b.gated = gate_fires;
    if (!gate_fires) b.total += *b.r_grounding;
  } else if (switches.pseudo_reward) {
    const std::string raw = self_confirm_raw.value_or(std::string());
    const ScCheck check = check_self_confirm_text(raw);
    if (!check.answered || !check.letter) {
      b.r_pseudo = -gate.pseudo_penalty;
      b.pseudo_parse_failed = true;
    } else if (sample.answer_key.size() == 1 && *check.letter == sample.answer_key[0]) {
      b.r_pseudo = 0.0;
    } else {
      b.r_pseudo = -gate.pseudo_penalty;
    }
    b.self_confirm_raw = raw;
    b.gated = gate_fires;
    if (!gate_fires) b.total += *b.r_pseudo;
  }
  return b;
}

}  // namespace twgtest
