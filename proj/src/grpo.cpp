#include "twg/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace twg {

namespace {

void require_finite(std::span<const double> xs, const char* what) {
  for (double x : xs) {
    if (!std::isfinite(x)) throw std::invalid_argument(std::string(what) + ": non-finite value");
  }
}

}  // namespace

bool zero_reward_variance(std::span<const double> rewards) {
  if (rewards.size() < 2) return true;
  const auto [mn, mx] = std::minmax_element(rewards.begin(), rewards.end());
  return *mn == *mx;
}

bool zero_reward_variance(const Group& group) { return zero_reward_variance(group.rewards); }

void group_advantages_into(std::span<const double> rewards, bool sample_std,
                           std::span<double> out) {
  const size_t n = rewards.size();
  if (n < 2) throw std::invalid_argument("group_advantages: need at least 2 rewards");
  if (out.size() != n) throw std::invalid_argument("group_advantages: output size mismatch");
  require_finite(rewards, "group_advantages");
  if (zero_reward_variance(rewards)) {
    throw DegenerateGroup("group_advantages: zero reward variance");
  }
  double sum = 0.0;
  for (double r : rewards) sum += r;
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (double r : rewards) {
    const double d = r - mean;
    ss += d * d;
  }
  const double denom = sample_std ? static_cast<double>(n - 1) : static_cast<double>(n);
  const double sd = std::sqrt(ss / denom);
  for (size_t i = 0; i < n; ++i) out[i] = (rewards[i] - mean) / sd;
}

std::vector<double> group_advantages(std::span<const double> rewards, bool sample_std) {
  std::vector<double> adv(rewards.size());
  group_advantages_into(rewards, sample_std, adv);
  return adv;
}

void standardize_groups(std::vector<Group>& groups, bool sample_std, ExecMode exec, int workers) {
  // Allocation stays serial; only the math runs inside the parallel region.
  for (Group& g : groups) {
    if (zero_reward_variance(g)) {
      throw DegenerateGroup("standardize_groups: degenerate group '" + g.sample_id + "'");
    }
    g.advantages.emplace(g.rewards.size());
  }
  const auto body = [&](size_t i) {
    group_advantages_into(groups[i].rewards, sample_std, *groups[i].advantages);
  };
  if (exec == ExecMode::Parallel) {
    const int n_threads = resolve_workers(workers);
#pragma omp parallel for schedule(static) num_threads(n_threads)
    for (long long i = 0; i < static_cast<long long>(groups.size()); ++i) {
      body(static_cast<size_t>(i));
    }
  } else {
    for (size_t i = 0; i < groups.size(); ++i) body(i);
  }
}

double clipped_objective(std::span<const double> logp_new, std::span<const double> logp_old,
                         std::span<const double> advantages, double clip_eps) {
  const size_t n = logp_new.size();
  if (n == 0 || logp_old.size() != n || advantages.size() != n) {
    throw std::invalid_argument("clipped_objective: length mismatch");
  }
  if (!(clip_eps > 0.0)) throw std::invalid_argument("clipped_objective: clip_eps must be > 0");
  require_finite(logp_new, "clipped_objective");
  require_finite(logp_old, "clipped_objective");
  require_finite(advantages, "clipped_objective");
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double ratio = std::exp(logp_new[i] - logp_old[i]);
    const double clipped = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
    acc += std::min(ratio * advantages[i], clipped * advantages[i]);
  }
  return acc / static_cast<double>(n);
}

double kl_penalty(std::span<const double> logp_policy, std::span<const double> logp_ref,
                  double beta) {
  const size_t n = logp_policy.size();
  if (n == 0 || logp_ref.size() != n) throw std::invalid_argument("kl_penalty: length mismatch");
  if (beta < 0.0) throw std::invalid_argument("kl_penalty: beta must be >= 0");
  require_finite(logp_policy, "kl_penalty");
  require_finite(logp_ref, "kl_penalty");
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double d = logp_ref[i] - logp_policy[i];
    acc += std::exp(d) - d - 1.0;
  }
  return beta * (acc / static_cast<double>(n));
}

ResampleResult dynamic_resample(std::vector<Group> groups, int budget,
                                const std::function<Group(const std::string& sample_id,
                                                          int attempt)>& fresh) {
  if (budget < 0) throw std::invalid_argument("dynamic_resample: budget must be >= 0");
  ResampleResult res;
  for (Group& g : groups) {
    if (!zero_reward_variance(g)) {
      res.groups.push_back(std::move(g));
      continue;
    }
    bool rescued = false;
    int attempt = 0;
    for (; attempt < budget; ++attempt) {
      Group candidate = fresh(g.sample_id, attempt);
      if (!zero_reward_variance(candidate)) {
        res.groups.push_back(std::move(candidate));
        ++res.resampled;
        rescued = true;
        ++attempt;
        break;
      }
    }
    if (!rescued) {
      res.abandoned.push_back(
          {g.sample_id, attempt, "zero reward variance after resampling budget"});
    }
  }
  return res;
}

ObjectiveGroup make_objective_group(const ToyPolicy& scorer, const Group& group) {
  if (!group.advantages || !group.logp_old || !group.logp_ref) {
    throw std::invalid_argument("make_objective_group: group missing advantages or log-probs");
  }
  ObjectiveGroup og;
  og.traces.reserve(group.trajectories.size());
  for (const Trajectory& t : group.trajectories) og.traces.push_back(scorer.trace(t));
  og.logp_old = *group.logp_old;
  og.logp_ref = *group.logp_ref;
  og.advantages = *group.advantages;
  return og;
}

namespace {

// Allocation-free objective evaluation; summation order matches
// clipped_objective and kl_penalty term for term.
double objective_eval(const ToyPolicyParams& params, std::span<const ObjectiveGroup> groups,
                      double clip_eps, double kl_beta) {
  if (groups.empty()) return 0.0;
  double surrogate = 0.0;
  double kl_acc = 0.0;
  size_t total = 0;
  for (const ObjectiveGroup& g : groups) {
    const size_t n = g.traces.size();
    double group_acc = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const double logp = ToyPolicy::trace_logprob(params, g.traces[i]);
      const double ratio = std::exp(logp - g.logp_old[i]);
      const double clipped = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
      group_acc += std::min(ratio * g.advantages[i], clipped * g.advantages[i]);
      const double d = g.logp_ref[i] - logp;
      kl_acc += std::exp(d) - d - 1.0;
      ++total;
    }
    surrogate += group_acc / static_cast<double>(n);
  }
  surrogate /= static_cast<double>(groups.size());
  if (kl_beta > 0.0 && total > 0) {
    return surrogate - kl_beta * (kl_acc / static_cast<double>(total));
  }
  return surrogate;
}

}  // namespace

double grpo_objective(const ToyPolicyParams& params, std::span<const ObjectiveGroup> groups,
                      double clip_eps, double kl_beta) {
  return objective_eval(params, groups, clip_eps, kl_beta);
}

std::vector<double> fd_gradient(const ToyPolicyParams& params,
                                std::span<const ObjectiveGroup> groups, double clip_eps,
                                double kl_beta, double fd_eps, ExecMode exec, int workers) {
  if (!(fd_eps > 0.0)) throw std::invalid_argument("fd_gradient: fd_eps must be > 0");
  std::vector<double> grad(params.logits.size(), 0.0);
  const long long n_params = static_cast<long long>(grad.size());

  if (exec == ExecMode::Parallel) {
    const int n_threads = resolve_workers(workers);
#pragma omp parallel num_threads(n_threads)
    {
      ToyPolicyParams scratch = params;  // one working copy per thread
#pragma omp for schedule(static)
      for (long long j = 0; j < n_params; ++j) {
        scratch.logits[j] = params.logits[j] + fd_eps;
        const double plus = objective_eval(scratch, groups, clip_eps, kl_beta);
        scratch.logits[j] = params.logits[j] - fd_eps;
        const double minus = objective_eval(scratch, groups, clip_eps, kl_beta);
        scratch.logits[j] = params.logits[j];
        grad[j] = (plus - minus) / (2.0 * fd_eps);
      }
    }
  } else {
    ToyPolicyParams scratch = params;
    for (long long j = 0; j < n_params; ++j) {
      scratch.logits[j] = params.logits[j] + fd_eps;
      const double plus = objective_eval(scratch, groups, clip_eps, kl_beta);
      scratch.logits[j] = params.logits[j] - fd_eps;
      const double minus = objective_eval(scratch, groups, clip_eps, kl_beta);
      scratch.logits[j] = params.logits[j];
      grad[j] = (plus - minus) / (2.0 * fd_eps);
    }
  }
  return grad;
}

ToyPolicyParams toy_policy_step(const ToyPolicyParams& params, const std::vector<Group>& groups,
                                const GrpoConfig& cfg, double step_size, double fd_eps,
                                const GrainConfig& grains, ExecMode exec, int workers,
                                StepStats* stats) {
  ToyPolicy scorer(params, grains);
  std::vector<ObjectiveGroup> inputs;
  inputs.reserve(groups.size());
  for (const Group& g : groups) inputs.push_back(make_objective_group(scorer, g));

  const double before = grpo_objective(params, inputs, cfg.clip_eps, cfg.kl_beta);
  const std::vector<double> grad =
      fd_gradient(params, inputs, cfg.clip_eps, cfg.kl_beta, fd_eps, exec, workers);

  double norm_sq = 0.0;
  bool finite = true;
  for (double g : grad) {
    if (!std::isfinite(g)) {
      finite = false;
      break;
    }
    norm_sq += g * g;
  }
  if (!finite) {
    if (stats) {
      stats->objective_before = before;
      stats->objective_after = before;
      stats->aborted = true;
    }
    return params;
  }

  ToyPolicyParams next = params;
  for (size_t j = 0; j < grad.size(); ++j) next.logits[j] += step_size * grad[j];

  if (stats) {
    stats->objective_before = before;
    stats->objective_after = grpo_objective(next, inputs, cfg.clip_eps, cfg.kl_beta);
    std::vector<double> all_new;
    std::vector<double> all_ref;
    for (const ObjectiveGroup& g : inputs) {
      for (size_t i = 0; i < g.traces.size(); ++i) {
        all_new.push_back(ToyPolicy::trace_logprob(next, g.traces[i]));
      }
      all_ref.insert(all_ref.end(), g.logp_ref.begin(), g.logp_ref.end());
    }
    stats->kl_value = all_new.empty() ? 0.0 : kl_penalty(all_new, all_ref, 1.0);
    stats->grad_norm = std::sqrt(norm_sq);
    stats->aborted = false;
  }
  return next;
}

}  // namespace twg
