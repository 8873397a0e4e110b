#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "twg/data.hpp"

namespace twg {

// Needle-in-a-haystack corpus for closed-loop experiments. Each video hides
// an answer descriptor ("needle") inside one window; a low-detail hint marks
// the window in the coarse view, the needle itself is only visible at the
// fine token budget. Questions are answerable only after grounding into the
// right window. A configurable fraction of "global" questions instead exposes
// the answer at coarse detail, so grounding is redundant for them.
struct SyntheticSpec {
  int n_samples = 64;
  int n_windows = 4;
  int n_options = 4;
  double duration_s = 640.0;
  int coarse_frames = 64;     // window geometry uses this index space
  int gt_segments = 1;        // label length in coarse segments
  double labeled_fraction = 1.0;
  double global_fraction = 0.0;
  // Fraction of questions with no visible evidence at any grain: only
  // guessing can answer them. They keep reward variance alive inside groups
  // after the answerable questions saturate.
  double guess_fraction = 0.0;
  int hint_detail = 1;        // visible at any token budget
  int needle_detail = 64;     // visible only at the fine budget
  // Place each global marker in the window indexed by its answer option
  // (instead of a random window), which makes grounding targets learnable
  // from the revealed observation alone.
  bool global_window_by_option = false;
  uint64_t seed = 0;
};

std::string synthetic_event_payload(int detail, std::string_view key, int value);

std::vector<Sample> make_needle_corpus(const SyntheticSpec& spec);

}  // namespace twg
