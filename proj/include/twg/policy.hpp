#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "twg/videorep.hpp"

namespace twg {

struct Trajectory;

struct SamplingParams {
  double temperature = 1.0;
  double top_p = 0.9;
  int top_k = 50;
  double repetition_penalty = 1.0;
  int max_new_tokens = 1024;
  bool operator==(const SamplingParams&) const = default;
};

enum class Role { Environment, Policy };  // "user" / "assistant" on the wire

// A view plus the attachments the engine resolved for its time range.
struct ViewPayload {
  ViewSpec spec;
  std::vector<FrameAttachment> frames;
  bool operator==(const ViewPayload&) const = default;
};

struct Message {
  Role role = Role::Environment;
  std::string text;
  std::vector<ViewPayload> views;
};

struct GenerationRequest {
  std::vector<Message> context;
  SamplingParams sampling;
  uint64_t seed = 0;
};

struct GenerationResponse {
  std::string text;
  std::optional<double> total_logprob;
  int token_count = 0;
};

// Endpoint unreachable after retries. Distinct from Malformed output: a
// transport failure is not a trajectory and must not enter reward statistics.
struct TransportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Capability missing (e.g. log-probs requested from an endpoint that cannot
// report them).
struct UnsupportedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ScriptError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string kind() const = 0;
  virtual bool reports_logprobs() const = 0;
  virtual GenerationResponse generate(const GenerationRequest& req) const = 0;

  // Total log-probability of all policy-generated turn texts, conditioned on
  // their preceding contexts. Injected views and prompts are environment
  // content and never counted. Default: capability absent.
  virtual double score_trajectory(const Trajectory& traj) const;
};

// Deterministic fixture policy: replays a fixed output per rollout turn and a
// fixed self-confirmation output. Thread-safe.
class ScriptedPolicy : public Policy {
 public:
  explicit ScriptedPolicy(std::vector<std::string> turn_outputs,
                          std::string self_confirm_output = "");

  std::string kind() const override { return "scripted"; }
  bool reports_logprobs() const override { return true; }
  GenerationResponse generate(const GenerationRequest& req) const override;
  double score_trajectory(const Trajectory& traj) const override;

  struct CallStats {
    int messages = 0;
    int coarse_views = 0;
    int fine_views = 0;
    bool self_confirm = false;
  };
  std::vector<CallStats> calls() const;
  void reset_calls();

 private:
  std::vector<std::string> outputs_;
  std::string self_confirm_output_;
  mutable std::mutex mu_;
  mutable std::vector<CallStats> calls_;
};

int approximate_token_count(std::string_view text);

}  // namespace twg
