#pragma once

#include <string>
#include <vector>

#include "twg/policy.hpp"
#include "twg/rollout.hpp"

namespace twg {

// Tabular softmax policy over discrete action templates, the desk-scale
// stand-in for a video LLM. Observations are symbolic summaries of the
// context (which views are present, which synthetic events they reveal), so
// log-probabilities are exact and every piece of the optimizer math is
// checkable against closed forms.
//
// Observation rows:
//   [0, windows)            pre-reveal, keyed by the hint window visible in
//                           the coarse view (0 when no hint is visible)
//   [windows, windows+opts) an answer descriptor is visible, keyed by option
//   windows+opts            self-confirm context with nothing revealed
// Action templates (columns):
//   [0, windows)            ground the whole coarse-index window w
//   [windows, windows+opts) answer option o
//   windows+opts            emit unparseable text (the format hazard a real
//                           sampler carries on every turn, with a learnable
//                           probability)
// Self-confirm contexts mask the ground templates and renormalize.
struct ToyPolicyParams {
  int n_windows = 4;
  int n_options = 4;
  // Irreducible probability of emitting the noise template, mixed into every
  // turn regardless of the logits: p(t) = floor * [t == noise] +
  // (1 - floor) * softmax(logits)[t]. Models the format-failure rate a real
  // sampler never trains away. Not touched by the optimizer.
  double noise_floor = 0.0;
  std::vector<double> logits;  // rows() * templates(), row-major

  int templates() const { return n_windows + n_options + 1; }
  int rows() const { return n_windows + n_options + 1; }
  int noise_template() const { return n_windows + n_options; }

  static ToyPolicyParams zeros(int windows, int options);
  bool operator==(const ToyPolicyParams&) const = default;
};

struct ToyObservation {
  int row = 0;
  bool answers_only = false;
};

// Theta-independent skeleton of a trajectory: the observation row and chosen
// template per turn. Extracted once, then scored under many parameter
// vectors.
struct ToyTraceStep {
  int row = 0;
  int tmpl = 0;
};

struct ToyTrace {
  std::vector<ToyTraceStep> steps;
};

// Synthetic event descriptors live in frame payloads as
// "detail=<d>|hint=<w>" or "detail=<d>|answer=<o>"; an event is visible in a
// view iff the view's token budget is at least d.
ToyObservation toy_observe(const std::vector<ViewPayload>& views, bool has_coarse, int windows,
                           int options);

class ToyPolicy : public Policy {
 public:
  ToyPolicy(ToyPolicyParams params, GrainConfig grains);

  std::string kind() const override { return "toy"; }
  bool reports_logprobs() const override { return true; }
  GenerationResponse generate(const GenerationRequest& req) const override;
  double score_trajectory(const Trajectory& traj) const override;

  // Maps each turn to (observation row, template id). Throws
  // std::invalid_argument for trajectories outside the template set.
  ToyTrace trace(const Trajectory& traj) const;
  static double trace_logprob(const ToyPolicyParams& params, const ToyTrace& trace);

  // Unit-temperature distribution at an observation (masked + renormalized
  // for answers_only rows).
  std::vector<double> action_distribution(const ToyObservation& obs) const;

  const ToyPolicyParams& params() const { return params_; }
  void set_params(ToyPolicyParams p);

 private:
  int template_of(const ParsedTurn& parsed) const;
  std::string render_template(int tmpl) const;

  ToyPolicyParams params_;
  GrainConfig grains_;
  int window_span_;  // coarse frames per ground window
};

void save_toy_params(const ToyPolicyParams& params, const std::string& path);
ToyPolicyParams load_toy_params(const std::string& path);

}  // namespace twg
