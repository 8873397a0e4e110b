#include "twg/tagfmt.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <stdexcept>

namespace twg {

namespace {

enum Tag {
  kThinkOpen,
  kThinkClose,
  kGroundOpen,
  kGroundClose,
  kAnswerOpen,
  kAnswerClose,
};

constexpr std::array<std::string_view, 6> kTagText = {
    "<think>", "</think>", "<ground>", "</ground>", "<answer>", "</answer>",
};

struct TagHit {
  size_t pos;
  Tag tag;
};

// Every occurrence of any grammar tag, in text order. Duplicates and stray
// tags are how malformedness gets detected, so nothing is filtered here.
std::vector<TagHit> scan_tags(std::string_view text) {
  std::vector<TagHit> hits;
  for (int t = 0; t < 6; ++t) {
    const std::string_view needle = kTagText[t];
    size_t pos = 0;
    while ((pos = text.find(needle, pos)) != std::string_view::npos) {
      hits.push_back({pos, static_cast<Tag>(t)});
      pos += 1;
    }
  }
  std::sort(hits.begin(), hits.end(), [](const TagHit& a, const TagHit& b) {
    return a.pos < b.pos;
  });
  return hits;
}

std::string_view trim(std::string_view s) {
  size_t b = 0;
  size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool parse_int(std::string_view s, int& out) {
  s = trim(s);
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

}  // namespace

ParsedTurn parse_turn_output(std::string_view text, int f_coarse_frames) {
  if (f_coarse_frames < 1) {
    throw std::invalid_argument("parse_turn_output: f_coarse_frames must be >= 1");
  }
  ParsedTurn out;
  out.raw = std::string(text);

  const std::vector<TagHit> hits = scan_tags(text);
  // A valid turn is exactly <think>...</think> followed by one action block.
  if (hits.size() != 4) return out;
  if (hits[0].tag != kThinkOpen || hits[1].tag != kThinkClose) return out;
  const bool ground_block = hits[2].tag == kGroundOpen && hits[3].tag == kGroundClose;
  const bool answer_block = hits[2].tag == kAnswerOpen && hits[3].tag == kAnswerClose;
  if (!ground_block && !answer_block) return out;

  const size_t think_begin = hits[0].pos + kTagText[kThinkOpen].size();
  const size_t think_end = hits[1].pos;
  const size_t body_begin = hits[2].pos + kTagText[hits[2].tag].size();
  const size_t body_end = hits[3].pos;

  std::string_view think = text.substr(think_begin, think_end - think_begin);
  if (think.empty()) return out;
  std::string_view body = text.substr(body_begin, body_end - body_begin);

  if (ground_block) {
    const size_t comma = body.find(',');
    if (comma == std::string_view::npos) return out;
    if (body.find(',', comma + 1) != std::string_view::npos) return out;
    int start = 0;
    int end = 0;
    if (!parse_int(body.substr(0, comma), start)) return out;
    if (!parse_int(body.substr(comma + 1), end)) return out;
    if (start < 0 || start > end || end > f_coarse_frames - 1) return out;
    out.kind = TurnKind::Grounding;
    out.think = std::string(think);
    out.ground = GroundAction{start, end};
    return out;
  }

  const std::string_view answer = trim(body);
  if (answer.empty()) return out;
  out.kind = TurnKind::Answering;
  out.think = std::string(think);
  out.answer = AnswerAction{std::string(answer)};
  return out;
}

std::string render_action(const ParsedTurn& turn) {
  if (turn.kind == TurnKind::Malformed) {
    throw std::invalid_argument("render_action: cannot render a Malformed turn");
  }
  std::string s = "<think>" + turn.think + "</think>";
  if (turn.kind == TurnKind::Grounding) {
    s += "<ground>" + std::to_string(turn.ground->start_frame) + ", " +
         std::to_string(turn.ground->end_frame) + "</ground>";
  } else {
    s += "<answer>" + turn.answer->text + "</answer>";
  }
  return s;
}

bool same_turn_content(const ParsedTurn& a, const ParsedTurn& b) {
  return a.kind == b.kind && a.think == b.think && a.ground == b.ground && a.answer == b.answer;
}

std::optional<char> normalize_option_letter(std::string_view answer_text) {
  for (size_t i = 0; i < answer_text.size(); ++i) {
    const char c = answer_text[i];
    if (c < 'A' || c > 'Z') continue;
    const bool left_ok =
        i == 0 || !std::isalnum(static_cast<unsigned char>(answer_text[i - 1]));
    const bool right_ok = i + 1 == answer_text.size() ||
                          !std::isalnum(static_cast<unsigned char>(answer_text[i + 1]));
    if (left_ok && right_ok) return c;
  }
  return std::nullopt;
}

}  // namespace twg
