#pragma once

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "twg/exec.hpp"
#include "twg/rewards.hpp"
#include "twg/rollout.hpp"
#include "twg/toy_policy.hpp"

namespace twg {

// Zero reward variance in a group: no learning signal, the caller must
// resample or drop it.
struct DegenerateGroup : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GrpoConfig {
  int group_size = 8;
  double clip_eps = 0.2;  // assumed default, see docs/formats.md
  double kl_beta = 0.005;
  int batch_size = 32;
  bool sample_std = false;  // population std by default
};

// One sample's rollouts with rewards and (after standardization) advantages.
struct Group {
  std::string sample_id;
  std::vector<Trajectory> trajectories;
  std::vector<RewardBreakdown> breakdowns;
  std::vector<double> rewards;
  std::optional<std::vector<double>> advantages;
  std::optional<std::vector<double>> logp_old;
  std::optional<std::vector<double>> logp_ref;
};

bool zero_reward_variance(std::span<const double> rewards);
bool zero_reward_variance(const Group& group);

// (R_i - mean) / std within the group. Output has mean 0 and std 1 up to
// rounding. Throws DegenerateGroup when all rewards are equal. The _into form
// writes to caller-owned storage so batch callers allocate outside their
// parallel loops.
std::vector<double> group_advantages(std::span<const double> rewards, bool sample_std = false);
void group_advantages_into(std::span<const double> rewards, bool sample_std,
                           std::span<double> out);

// Standardizes every group in place. Precondition: no degenerate groups.
void standardize_groups(std::vector<Group>& groups, bool sample_std, ExecMode exec, int workers);

// (1/G) * sum_i min(r_i * A_i, clip(r_i, 1-eps, 1+eps) * A_i) with
// r_i = exp(logp_new_i - logp_old_i). Trajectory-level ratios.
double clipped_objective(std::span<const double> logp_new, std::span<const double> logp_old,
                         std::span<const double> advantages, double clip_eps);

// beta * mean_i(exp(d_i) - d_i - 1) with d_i = logp_ref_i - logp_policy_i.
// Nonnegative, zero iff the log-probs match elementwise. Subtracted from the
// objective by the caller.
double kl_penalty(std::span<const double> logp_policy, std::span<const double> logp_ref,
                  double beta);

struct ResampleLogEntry {
  std::string sample_id;
  int attempts = 0;
  std::string reason;
};

struct ResampleResult {
  std::vector<Group> groups;
  int resampled = 0;
  std::vector<ResampleLogEntry> abandoned;
};

// Drops zero-variance groups and asks `fresh` for replacement rollouts, up to
// `budget` attempts per sample. Survivors all carry positive reward variance;
// the rest are abandoned with a log entry, never an exception.
ResampleResult dynamic_resample(std::vector<Group> groups, int budget,
                                const std::function<Group(const std::string& sample_id,
                                                          int attempt)>& fresh);

// Inputs the toy optimizer needs per kept group.
struct ObjectiveGroup {
  std::vector<ToyTrace> traces;
  std::vector<double> logp_old;
  std::vector<double> logp_ref;
  std::vector<double> advantages;
};

ObjectiveGroup make_objective_group(const ToyPolicy& scorer, const Group& group);

// Mean clipped surrogate over groups minus the KL penalty over all
// trajectories, evaluated at `params`.
double grpo_objective(const ToyPolicyParams& params, std::span<const ObjectiveGroup> groups,
                      double clip_eps, double kl_beta);

// Central finite differences of grpo_objective in every parameter.
std::vector<double> fd_gradient(const ToyPolicyParams& params,
                                std::span<const ObjectiveGroup> groups, double clip_eps,
                                double kl_beta, double fd_eps, ExecMode exec, int workers);

struct StepStats {
  double objective_before = 0.0;
  double objective_after = 0.0;
  double kl_value = 0.0;
  double grad_norm = 0.0;
  bool aborted = false;  // non-finite gradient component
};

// One ascent step of size step_size along the finite-difference gradient.
// Groups must carry advantages, logp_old and logp_ref.
ToyPolicyParams toy_policy_step(const ToyPolicyParams& params, const std::vector<Group>& groups,
                                const GrpoConfig& cfg, double step_size, double fd_eps,
                                const GrainConfig& grains, ExecMode exec, int workers,
                                StepStats* stats);

}  // namespace twg
