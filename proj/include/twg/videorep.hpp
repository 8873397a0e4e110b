#pragma once

#include <map>
#include <string>
#include <vector>

#include "twg/interval.hpp"
#include "twg/tagfmt.hpp"

namespace twg {

// Opaque per-timestamp payload forwarded to the policy endpoint. The engine
// never interprets payloads; the synthetic environment stores symbolic event
// descriptors in them, real deployments would store frame handles.
struct FrameAttachment {
  double t = 0.0;
  std::string payload;
  bool operator==(const FrameAttachment&) const = default;
};

struct VideoMeta {
  std::string video_id;
  double duration_s = 0.0;
  std::string source_uri;
  std::map<double, std::string> frame_attachments;  // timestamp -> payload
  bool operator==(const VideoMeta&) const = default;
};

enum class Grain { Coarse, Fine };

// A frame sampling plan: which timestamps to show and at what per-frame token
// budget. tokens_per_frame is a cap; actual tokenization is the policy
// server's concern.
struct ViewSpec {
  int frame_count = 0;
  int tokens_per_frame = 0;
  std::vector<double> timestamps;  // strictly increasing, seconds
  Grain grain = Grain::Coarse;
  bool operator==(const ViewSpec&) const = default;
};

struct ClipSpec {
  double start_s = 0.0;
  double end_s = 0.0;
  VideoMeta parent;
};

// Frame counts and token budgets for the two grains. Shipped configurations
// normally have coarse_frames > fine_frames and coarse tokens < fine tokens;
// the config loader warns when that is inverted.
struct GrainConfig {
  int coarse_frames = 64;
  int coarse_tokens_per_frame = 16;
  int fine_frames = 16;
  int fine_tokens_per_frame = 64;
  bool operator==(const GrainConfig&) const = default;
};

// Uniform midpoint sampling over the whole video: timestamp_i is
// (i + 0.5) * duration / frames.
ViewSpec coarse_view(const VideoMeta& video, int frames, int tokens_per_frame);

// Converts a coarse-frame index pair into seconds. The clip covers the full
// segments named by both endpoints: [start * w, (end + 1) * w] with
// w = duration / coarse_frames. The whole-range action (0, coarse_frames - 1)
// yields exactly [0, duration].
ClipSpec ground_to_clip(const VideoMeta& video, const GroundAction& g, int coarse_frames);

// Midpoint sampling inside the clip at the fine grain.
ViewSpec fine_view(const ClipSpec& clip, int frames, int tokens_per_frame);

// Attachments with timestamps inside [start_s, end_s], ordered by time.
std::vector<FrameAttachment> attachments_in_range(const VideoMeta& video, double start_s,
                                                  double end_s);

}  // namespace twg
