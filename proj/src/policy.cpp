#include "twg/policy.hpp"

#include "twg/rollout.hpp"

namespace twg {

namespace {

bool is_self_confirm_request(const GenerationRequest& req) {
  for (const Message& m : req.context) {
    for (const ViewPayload& v : m.views) {
      if (v.spec.grain == Grain::Coarse) return false;
    }
  }
  return true;
}

size_t rollout_turn_index(const GenerationRequest& req) {
  size_t assistant_turns = 0;
  for (const Message& m : req.context) {
    if (m.role == Role::Policy) ++assistant_turns;
  }
  return assistant_turns;
}

}  // namespace

int approximate_token_count(std::string_view text) {
  int words = 0;
  bool in_word = false;
  for (char c : text) {
    const bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r';
    if (!space && !in_word) ++words;
    in_word = !space;
  }
  return words < 1 ? 1 : words;
}

double Policy::score_trajectory(const Trajectory&) const {
  throw UnsupportedError(kind() + " policy does not report log-probabilities");
}

ScriptedPolicy::ScriptedPolicy(std::vector<std::string> turn_outputs,
                               std::string self_confirm_output)
    : outputs_(std::move(turn_outputs)), self_confirm_output_(std::move(self_confirm_output)) {}

GenerationResponse ScriptedPolicy::generate(const GenerationRequest& req) const {
  if (req.context.empty()) throw std::invalid_argument("generate: empty context");
  CallStats stats;
  stats.messages = static_cast<int>(req.context.size());
  for (const Message& m : req.context) {
    for (const ViewPayload& v : m.views) {
      if (v.spec.grain == Grain::Coarse) {
        ++stats.coarse_views;
      } else {
        ++stats.fine_views;
      }
    }
  }
  stats.self_confirm = is_self_confirm_request(req);
  {
    std::lock_guard<std::mutex> lock(mu_);
    calls_.push_back(stats);
  }

  if (stats.self_confirm) {
    if (self_confirm_output_.empty()) {
      throw ScriptError("scripted policy has no self-confirm output");
    }
    return {self_confirm_output_, 0.0, approximate_token_count(self_confirm_output_)};
  }
  const size_t idx = rollout_turn_index(req);
  if (idx >= outputs_.size()) {
    throw ScriptError("script exhausted at turn " + std::to_string(idx));
  }
  return {outputs_[idx], 0.0, approximate_token_count(outputs_[idx])};
}

double ScriptedPolicy::score_trajectory(const Trajectory&) const {
  // Deterministic replay: every scripted output has probability 1.
  return 0.0;
}

std::vector<ScriptedPolicy::CallStats> ScriptedPolicy::calls() const {
  std::lock_guard<std::mutex> lock(mu_);
  return calls_;
}

void ScriptedPolicy::reset_calls() {
  std::lock_guard<std::mutex> lock(mu_);
  calls_.clear();
}

}  // namespace twg
