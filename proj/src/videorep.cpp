#include "twg/videorep.hpp"

#include <stdexcept>
#include <string>

namespace twg {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

ViewSpec coarse_view(const VideoMeta& video, int frames, int tokens_per_frame) {
  require(video.duration_s > 0.0, "coarse_view: duration must be positive");
  require(frames >= 1, "coarse_view: frame count must be positive");
  require(tokens_per_frame >= 1, "coarse_view: token budget must be positive");
  ViewSpec view;
  view.frame_count = frames;
  view.tokens_per_frame = tokens_per_frame;
  view.grain = Grain::Coarse;
  view.timestamps.reserve(frames);
  for (int i = 0; i < frames; ++i) {
    view.timestamps.push_back((i + 0.5) * video.duration_s / frames);
  }
  return view;
}

ClipSpec ground_to_clip(const VideoMeta& video, const GroundAction& g, int coarse_frames) {
  require(video.duration_s > 0.0, "ground_to_clip: duration must be positive");
  require(coarse_frames >= 1, "ground_to_clip: coarse_frames must be positive");
  require(g.start_frame >= 0 && g.start_frame <= g.end_frame &&
              g.end_frame <= coarse_frames - 1,
          "ground_to_clip: frame indices outside [0, coarse_frames - 1]");
  ClipSpec clip;
  clip.start_s = g.start_frame * video.duration_s / coarse_frames;
  // The last segment ends exactly at the video end; computing it as
  // (end+1)*duration/frames can drift by one ulp.
  clip.end_s = (g.end_frame + 1 == coarse_frames)
                   ? video.duration_s
                   : (g.end_frame + 1) * video.duration_s / coarse_frames;
  clip.parent = video;
  return clip;
}

ViewSpec fine_view(const ClipSpec& clip, int frames, int tokens_per_frame) {
  require(clip.start_s >= 0.0 && clip.start_s < clip.end_s &&
              clip.end_s <= clip.parent.duration_s,
          "fine_view: invalid clip range");
  require(frames >= 1, "fine_view: frame count must be positive");
  require(tokens_per_frame >= 1, "fine_view: token budget must be positive");
  ViewSpec view;
  view.frame_count = frames;
  view.tokens_per_frame = tokens_per_frame;
  view.grain = Grain::Fine;
  view.timestamps.reserve(frames);
  const double span = clip.end_s - clip.start_s;
  for (int i = 0; i < frames; ++i) {
    view.timestamps.push_back(clip.start_s + (i + 0.5) * span / frames);
  }
  return view;
}

std::vector<FrameAttachment> attachments_in_range(const VideoMeta& video, double start_s,
                                                  double end_s) {
  std::vector<FrameAttachment> out;
  auto it = video.frame_attachments.lower_bound(start_s);
  for (; it != video.frame_attachments.end() && it->first <= end_s; ++it) {
    out.push_back({it->first, it->second});
  }
  return out;
}

}  // namespace twg
