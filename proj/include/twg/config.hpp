#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "twg/data.hpp"
#include "twg/grpo.hpp"
#include "twg/policy.hpp"
#include "twg/remote_policy.hpp"
#include "twg/rewards.hpp"
#include "twg/rollout.hpp"

namespace twg {

struct ToyConfig {
  int windows = 4;
  int options = 4;
  double step_size = 1.0;
  double fd_eps = 1e-3;
  double noise_floor = 0.0;
};

// Engine-wide configuration. Defaults are the shipped training setting:
// 3 turns, 64 coarse frames at 16 tokens, 16 fine frames at 64 tokens, groups
// of 8 in batches of 32, kl_beta 0.005, pseudo penalty 0.1, sampling
// (1.0, 0.9, 50, 1.0) for training and greedy for evaluation. clip_eps 0.2 is
// an assumed default, flagged in docs/formats.md.
struct EngineConfig {
  int max_turns = 3;
  GrainConfig grains;
  GrpoConfig grpo;
  GateConfig gate;
  RewardSwitches rewards;
  Stage stage = Stage::Stage1;
  std::set<SampleSource> stage1_sources = {SampleSource::NextGQA};
  SamplingParams train_sampling;  // 1.0 / 0.9 / 50 / 1.0
  SamplingParams eval_sampling;   // temperature 0
  int worker_cap = 0;             // 0 = all hardware threads
  uint64_t seed = 0;
  std::string template_version = std::string(kPromptTemplateVersion);
  int resample_budget = 2;
  int eval_retry_limit = 3;
  int max_degenerate_batches = 25;  // trainer gives up after this many in a row
  ToyConfig toy;
  RemoteConfig endpoint;

  EngineConfig();

  RolloutConfig rollout_config() const { return RolloutConfig{max_turns, grains}; }
  CurriculumStage curriculum() const;

  // Throws DataError on invalid values; returns human-readable warnings
  // (e.g. inverted grain budgets).
  std::vector<std::string> validate() const;

  static EngineConfig from_json(const nlohmann::json& j);
  static EngineConfig load(const std::string& path);
  nlohmann::ordered_json to_json() const;

  // TWG_ENDPOINT_URL / TWG_ENDPOINT_TOKEN override the endpoint block.
  void apply_env();
};

}  // namespace twg
