#include "twg/synthetic.hpp"

#include <stdexcept>

#include "twg/rng.hpp"

namespace twg {

std::string synthetic_event_payload(int detail, std::string_view key, int value) {
  return "detail=" + std::to_string(detail) + "|" + std::string(key) + "=" +
         std::to_string(value);
}

std::vector<Sample> make_needle_corpus(const SyntheticSpec& spec) {
  if (spec.n_samples < 1 || spec.n_windows < 1 || spec.n_options < 2 ||
      spec.n_options > 26 || !(spec.duration_s > 0.0)) {
    throw std::invalid_argument("make_needle_corpus: invalid spec");
  }
  if (spec.coarse_frames % spec.n_windows != 0) {
    throw std::invalid_argument("make_needle_corpus: coarse_frames must be divisible by windows");
  }

  Rng rng(mix_seed(spec.seed, "needle-corpus"));
  const double window_len = spec.duration_s / spec.n_windows;
  const double segment = spec.duration_s / spec.coarse_frames;
  const double gt_len = segment * spec.gt_segments;

  std::vector<Sample> corpus;
  corpus.reserve(spec.n_samples);
  for (int i = 0; i < spec.n_samples; ++i) {
    Sample s;
    s.sample_id = "syn-" + std::to_string(i);
    s.video.video_id = "synvid-" + std::to_string(i);
    s.video.duration_s = spec.duration_s;
    s.video.source_uri = "synthetic://" + s.sample_id;
    s.source = SampleSource::Synthetic;

    const int option = rng.below_int(spec.n_options);
    s.answer_key = std::string(1, static_cast<char>('A' + option));
    for (int o = 0; o < spec.n_options; ++o) {
      s.options.push_back("marker " + std::string(1, static_cast<char>('A' + o)));
    }

    const double kind_draw = rng.next_double();
    if (kind_draw < spec.guess_fraction) {
      // No evidence anywhere. A label still exists so scoring paths are
      // exercised, placed on a random thin slice.
      s.question = "Which marker would fit the unmarked moment?";
      const int window = rng.below_int(spec.n_windows);
      const double center = (window + 0.5) * window_len;
      if (rng.next_double() < spec.labeled_fraction) {
        s.gt_grounding = Interval{center - gt_len / 2.0, center + gt_len / 2.0};
      }
      corpus.push_back(std::move(s));
      continue;
    }
    const bool global = kind_draw < spec.guess_fraction + spec.global_fraction;
    if (global) {
      // Answer descriptor readable at any detail: the question is answerable
      // from the coarse view alone and grounding is redundant. The marker
      // sits at a window center so a label, when requested, is well-defined.
      s.question = "Which marker is shown across the whole video?";
      const int window =
          spec.global_window_by_option ? option % spec.n_windows : rng.below_int(spec.n_windows);
      const double t = (window + 0.5) * window_len;
      s.video.frame_attachments[t] =
          synthetic_event_payload(spec.hint_detail, "answer", option);
      if (rng.next_double() < spec.labeled_fraction) {
        s.gt_grounding = Interval{t - gt_len / 2.0, t + gt_len / 2.0};
      }
    } else {
      // Needle readable only at the fine budget, inside one hinted window.
      s.question = "Which marker appears in the highlighted moment?";
      const int window = rng.below_int(spec.n_windows);
      const double center = (window + 0.5) * window_len;
      s.video.frame_attachments[center - segment * 0.25] =
          synthetic_event_payload(spec.hint_detail, "hint", window);
      s.video.frame_attachments[center + segment * 0.25] =
          synthetic_event_payload(spec.needle_detail, "answer", option);
      if (rng.next_double() < spec.labeled_fraction) {
        s.gt_grounding = Interval{center - gt_len / 2.0, center + gt_len / 2.0};
      }
    }
    corpus.push_back(std::move(s));
  }
  return corpus;
}

}  // namespace twg
