#include "twg/config.hpp"

#include <cstdlib>
#include <fstream>

namespace twg {

using nlohmann::json;
using nlohmann::ordered_json;

EngineConfig::EngineConfig() {
  eval_sampling.temperature = 0.0;
}

CurriculumStage EngineConfig::curriculum() const {
  CurriculumStage cs;
  cs.stage = stage;
  cs.admitted_sources = stage1_sources;
  return cs;
}

std::vector<std::string> EngineConfig::validate() const {
  if (max_turns < 1) throw DataError("config: max_turns must be >= 1");
  if (grains.coarse_frames < 1 || grains.coarse_tokens_per_frame < 1 ||
      grains.fine_frames < 1 || grains.fine_tokens_per_frame < 1) {
    throw DataError("config: grain frame counts and token budgets must be positive");
  }
  if (grpo.group_size < 2) throw DataError("config: group_size must be >= 2");
  if (grpo.batch_size < 1) throw DataError("config: batch_size must be >= 1");
  if (!(grpo.clip_eps > 0.0)) throw DataError("config: clip_eps must be > 0");
  if (grpo.kl_beta < 0.0) throw DataError("config: kl_beta must be >= 0");
  if (!(gate.pseudo_penalty > 0.0)) throw DataError("config: pseudo_penalty must be > 0");
  for (const SamplingParams* s : {&train_sampling, &eval_sampling}) {
    if (s->temperature < 0.0) throw DataError("config: temperature must be >= 0");
    if (!(s->top_p > 0.0 && s->top_p <= 1.0)) throw DataError("config: top_p must be in (0, 1]");
    if (s->top_k < 1) throw DataError("config: top_k must be >= 1");
    if (!(s->repetition_penalty > 0.0)) {
      throw DataError("config: repetition_penalty must be > 0");
    }
    if (s->max_new_tokens < 1) throw DataError("config: max_new_tokens must be >= 1");
  }
  if (resample_budget < 0) throw DataError("config: resample_budget must be >= 0");
  if (eval_retry_limit < 0) throw DataError("config: eval_retry_limit must be >= 0");

  std::vector<std::string> warnings;
  if (grains.coarse_frames <= grains.fine_frames) {
    warnings.push_back("grains: coarse_frames <= fine_frames; shipped configurations use more "
                       "coarse frames than fine frames");
  }
  if (grains.coarse_tokens_per_frame >= grains.fine_tokens_per_frame) {
    warnings.push_back("grains: coarse tokens/frame >= fine tokens/frame; shipped "
                       "configurations use a smaller coarse budget");
  }
  return warnings;
}

namespace {

SamplingParams sampling_from_json(const json& j, SamplingParams base) {
  base.temperature = j.value("temperature", base.temperature);
  base.top_p = j.value("top_p", base.top_p);
  base.top_k = j.value("top_k", base.top_k);
  base.repetition_penalty = j.value("repetition_penalty", base.repetition_penalty);
  base.max_new_tokens = j.value("max_new_tokens", base.max_new_tokens);
  return base;
}

ordered_json sampling_to_json(const SamplingParams& s) {
  ordered_json j;
  j["temperature"] = s.temperature;
  j["top_p"] = s.top_p;
  j["top_k"] = s.top_k;
  j["repetition_penalty"] = s.repetition_penalty;
  j["max_new_tokens"] = s.max_new_tokens;
  return j;
}

}  // namespace

EngineConfig EngineConfig::from_json(const json& j) {
  EngineConfig cfg;
  cfg.max_turns = j.value("max_turns", cfg.max_turns);
  cfg.grains.coarse_frames = j.value("coarse_frames", cfg.grains.coarse_frames);
  cfg.grains.coarse_tokens_per_frame =
      j.value("coarse_tokens_per_frame", cfg.grains.coarse_tokens_per_frame);
  cfg.grains.fine_frames = j.value("fine_frames", cfg.grains.fine_frames);
  cfg.grains.fine_tokens_per_frame =
      j.value("fine_tokens_per_frame", cfg.grains.fine_tokens_per_frame);
  cfg.grpo.group_size = j.value("group_size", cfg.grpo.group_size);
  cfg.grpo.batch_size = j.value("batch_size", cfg.grpo.batch_size);
  cfg.grpo.clip_eps = j.value("clip_eps", cfg.grpo.clip_eps);
  cfg.grpo.kl_beta = j.value("kl_beta", cfg.grpo.kl_beta);
  cfg.grpo.sample_std = j.value("sample_std", cfg.grpo.sample_std);
  cfg.gate.pseudo_penalty = j.value("pseudo_penalty", cfg.gate.pseudo_penalty);
  cfg.gate.gate_enabled = j.value("gate_enabled", cfg.gate.gate_enabled);
  cfg.rewards.soft_reward = j.value("soft_reward", cfg.rewards.soft_reward);
  cfg.rewards.hard_reward = j.value("hard_reward", cfg.rewards.hard_reward);
  cfg.rewards.pseudo_reward = j.value("pseudo_reward", cfg.rewards.pseudo_reward);
  cfg.stage = j.value("stage", 1) == 2 ? Stage::Stage2 : Stage::Stage1;
  if (j.contains("stage1_sources")) {
    cfg.stage1_sources.clear();
    for (const json& s : j.at("stage1_sources")) {
      const auto src = source_from_string(s.get<std::string>());
      if (!src) throw DataError("config: unknown source '" + s.get<std::string>() + "'");
      cfg.stage1_sources.insert(*src);
    }
  }
  if (j.contains("train_sampling")) {
    cfg.train_sampling = sampling_from_json(j.at("train_sampling"), cfg.train_sampling);
  }
  if (j.contains("eval_sampling")) {
    cfg.eval_sampling = sampling_from_json(j.at("eval_sampling"), cfg.eval_sampling);
  }
  cfg.worker_cap = j.value("workers", cfg.worker_cap);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.resample_budget = j.value("resample_budget", cfg.resample_budget);
  cfg.eval_retry_limit = j.value("eval_retry_limit", cfg.eval_retry_limit);
  cfg.max_degenerate_batches = j.value("max_degenerate_batches", cfg.max_degenerate_batches);
  if (j.contains("toy")) {
    const json& t = j.at("toy");
    cfg.toy.windows = t.value("windows", cfg.toy.windows);
    cfg.toy.options = t.value("options", cfg.toy.options);
    cfg.toy.step_size = t.value("step_size", cfg.toy.step_size);
    cfg.toy.fd_eps = t.value("fd_eps", cfg.toy.fd_eps);
    cfg.toy.noise_floor = t.value("noise_floor", cfg.toy.noise_floor);
  }
  if (j.contains("endpoint")) {
    const json& e = j.at("endpoint");
    cfg.endpoint.base_url = e.value("url", cfg.endpoint.base_url);
    cfg.endpoint.path = e.value("path", cfg.endpoint.path);
    cfg.endpoint.api_token = e.value("token", cfg.endpoint.api_token);
    cfg.endpoint.model = e.value("model", cfg.endpoint.model);
    cfg.endpoint.timeout_ms = e.value("timeout_ms", cfg.endpoint.timeout_ms);
    cfg.endpoint.max_attempts = e.value("max_attempts", cfg.endpoint.max_attempts);
    cfg.endpoint.backoff_base_ms = e.value("backoff_base_ms", cfg.endpoint.backoff_base_ms);
    cfg.endpoint.max_inflight = e.value("max_inflight", cfg.endpoint.max_inflight);
    cfg.endpoint.expect_logprobs = e.value("expect_logprobs", cfg.endpoint.expect_logprobs);
  }
  return cfg;
}

EngineConfig EngineConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("config file '" + path + "': " + e.what());
  }
  return from_json(j);
}

ordered_json EngineConfig::to_json() const {
  ordered_json j;
  j["max_turns"] = max_turns;
  j["coarse_frames"] = grains.coarse_frames;
  j["coarse_tokens_per_frame"] = grains.coarse_tokens_per_frame;
  j["fine_frames"] = grains.fine_frames;
  j["fine_tokens_per_frame"] = grains.fine_tokens_per_frame;
  j["group_size"] = grpo.group_size;
  j["batch_size"] = grpo.batch_size;
  j["clip_eps"] = grpo.clip_eps;
  j["kl_beta"] = grpo.kl_beta;
  j["sample_std"] = grpo.sample_std;
  j["pseudo_penalty"] = gate.pseudo_penalty;
  j["gate_enabled"] = gate.gate_enabled;
  j["soft_reward"] = rewards.soft_reward;
  j["hard_reward"] = rewards.hard_reward;
  j["pseudo_reward"] = rewards.pseudo_reward;
  j["stage"] = stage == Stage::Stage2 ? 2 : 1;
  ordered_json sources = ordered_json::array();
  for (SampleSource s : stage1_sources) sources.push_back(to_string(s));
  j["stage1_sources"] = std::move(sources);
  j["train_sampling"] = sampling_to_json(train_sampling);
  j["eval_sampling"] = sampling_to_json(eval_sampling);
  j["workers"] = worker_cap;
  j["seed"] = seed;
  j["resample_budget"] = resample_budget;
  j["eval_retry_limit"] = eval_retry_limit;
  j["max_degenerate_batches"] = max_degenerate_batches;
  j["toy"] = ordered_json{{"windows", toy.windows},
                          {"options", toy.options},
                          {"step_size", toy.step_size},
                          {"fd_eps", toy.fd_eps},
                          {"noise_floor", toy.noise_floor}};
  j["endpoint"] = ordered_json{{"url", endpoint.base_url},
                               {"path", endpoint.path},
                               {"token", endpoint.api_token},
                               {"model", endpoint.model},
                               {"timeout_ms", endpoint.timeout_ms},
                               {"max_attempts", endpoint.max_attempts},
                               {"backoff_base_ms", endpoint.backoff_base_ms},
                               {"max_inflight", endpoint.max_inflight},
                               {"expect_logprobs", endpoint.expect_logprobs}};
  return j;
}

void EngineConfig::apply_env() {
  if (const char* url = std::getenv("TWG_ENDPOINT_URL")) endpoint.base_url = url;
  if (const char* token = std::getenv("TWG_ENDPOINT_TOKEN")) endpoint.api_token = token;
}

}  // namespace twg
