#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace twg {

// Turn grammar. A well-formed policy output is one think block followed by
// exactly one action block:
//
//   <think>reasoning text</think><ground>start_frame, end_frame</ground>
//   <think>reasoning text</think><answer>final answer</answer>
//
// Tag names are case-sensitive lowercase. Whitespace around the ground
// integers is ignored; text outside the recognized blocks is tolerated and
// discarded. Everything else is Malformed.

enum class TurnKind { Grounding, Answering, Malformed };

// Frame indices in the coarse view index space, 0-based, inclusive.
struct GroundAction {
  int start_frame = 0;
  int end_frame = 0;
  bool operator==(const GroundAction&) const = default;
};

struct AnswerAction {
  std::string text;
  bool operator==(const AnswerAction&) const = default;
};

struct ParsedTurn {
  TurnKind kind = TurnKind::Malformed;
  std::string think;                   // verbatim content between think tags
  std::optional<GroundAction> ground;  // present iff kind == Grounding
  std::optional<AnswerAction> answer;  // present iff kind == Answering
  std::string raw;                     // original text, always preserved
  bool operator==(const ParsedTurn&) const = default;
};

// Classifies one policy output against the grammar. Malformed input is a
// value, never an exception: duplicate blocks, both actions present, bad
// integers, start > end, indices outside [0, f_coarse_frames - 1] and an
// empty think block all map to Malformed. Throws only if f_coarse_frames < 1
// (a caller bug, not model output).
ParsedTurn parse_turn_output(std::string_view text, int f_coarse_frames);

// Canonical text for a valid turn. Parsing the result yields a turn with the
// same kind, think and action. Throws std::invalid_argument on Malformed.
std::string render_action(const ParsedTurn& turn);

// kind/think/action equality, ignoring the raw provenance field.
bool same_turn_content(const ParsedTurn& a, const ParsedTurn& b);

// First standalone capital letter in the text (neighbors not alphanumeric).
// This is the multiple-choice option-letter normalization.
std::optional<char> normalize_option_letter(std::string_view answer_text);

}  // namespace twg
