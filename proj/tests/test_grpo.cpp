#include "doctest.h"

#include <cmath>

#include "twg/grpo.hpp"
#include "twg/rng.hpp"
#include "twg/synthetic.hpp"

using namespace twg;

TEST_CASE("group advantages: worked examples") {
  const auto a = group_advantages(std::vector<double>{1.0, 0.0});
  REQUIRE(a.size() == 2);
  CHECK(a[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(a[1] == doctest::Approx(-1.0).epsilon(1e-12));

  const auto b = group_advantages(std::vector<double>{2.0, 1.0, 0.0, 1.0});
  CHECK(b[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(b[1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(b[2] == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-12));
  CHECK(b[3] == doctest::Approx(0.0).epsilon(1e-12));

  CHECK_THROWS_AS(group_advantages(std::vector<double>{1.2, 1.2, 1.2}), DegenerateGroup);
  CHECK_THROWS_AS(group_advantages(std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("group advantages: standardization over random groups") {
  Rng rng(100);
  for (int trial = 0; trial < 3000; ++trial) {
    const int n = 2 + rng.below_int(63);
    std::vector<double> rewards(n);
    for (double& r : rewards) r = rng.next_double() * 3.0 - 0.2;
    const auto adv = group_advantages(rewards);
    double mean = 0.0;
    for (double a : adv) mean += a;
    mean /= n;
    double var = 0.0;
    for (double a : adv) var += (a - mean) * (a - mean);
    var /= n;
    REQUIRE(std::abs(mean) < 1e-9);
    REQUIRE(std::abs(std::sqrt(var) - 1.0) < 1e-9);
  }
}

TEST_CASE("group advantages: exact shift and scale invariance on dyadic inputs") {
  // Dyadic rewards, power-of-two group sizes, dyadic shifts and power-of-two
  // scales keep every intermediate exactly representable, so invariance is
  // bitwise.
  Rng rng(200);
  const int sizes[] = {2, 4, 8, 16, 32, 64};
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = sizes[rng.below_int(6)];
    std::vector<double> rewards(n);
    for (double& r : rewards) r = static_cast<double>(rng.below_int(256)) / 64.0;
    if (zero_reward_variance(rewards)) rewards[0] += 1.0;

    const auto base = group_advantages(rewards);

    const double shift = static_cast<double>(rng.below_int(64)) / 8.0;
    std::vector<double> shifted = rewards;
    for (double& r : shifted) r += shift;
    const auto shifted_adv = group_advantages(shifted);

    const double scale = std::ldexp(1.0, rng.below_int(5));  // 1, 2, 4, 8, 16
    std::vector<double> scaled = rewards;
    for (double& r : scaled) r *= scale;
    const auto scaled_adv = group_advantages(scaled);

    for (int i = 0; i < n; ++i) {
      REQUIRE(shifted_adv[i] == base[i]);
      REQUIRE(scaled_adv[i] == base[i]);
    }
  }
}

TEST_CASE("clipped objective: worked examples") {
  const double eps = 0.2;
  // ratio 1, advantage 1 -> 1
  CHECK(clipped_objective(std::vector<double>{0.0}, std::vector<double>{0.0},
                          std::vector<double>{1.0}, eps) == doctest::Approx(1.0).epsilon(1e-12));
  // ratio 2 clips at 1.2
  CHECK(clipped_objective(std::vector<double>{std::log(2.0)}, std::vector<double>{0.0},
                          std::vector<double>{1.0}, eps) == doctest::Approx(1.2).epsilon(1e-12));
  // ratio 0.5 with advantage -1: min picks the clipped branch, -0.8
  CHECK(clipped_objective(std::vector<double>{std::log(0.5)}, std::vector<double>{0.0},
                          std::vector<double>{-1.0}, eps) ==
        doctest::Approx(-0.8).epsilon(1e-12));

  CHECK_THROWS_AS(clipped_objective(std::vector<double>{0.0}, std::vector<double>{0.0, 1.0},
                                    std::vector<double>{1.0}, eps),
                  std::invalid_argument);
}

TEST_CASE("clipped objective: per-trajectory contribution is bounded") {
  Rng rng(300);
  const double eps = 0.2;
  for (int trial = 0; trial < 2000; ++trial) {
    const double lp_new = rng.next_double() * 6.0 - 3.0;
    const double lp_old = rng.next_double() * 6.0 - 3.0;
    const double adv = rng.next_double() * 8.0 - 4.0;
    const double value = clipped_objective(std::vector<double>{lp_new},
                                           std::vector<double>{lp_old},
                                           std::vector<double>{adv}, eps);
    REQUIRE(value <= (1.0 + eps) * std::abs(adv) + 1e-12);
  }
}

TEST_CASE("kl penalty: estimator values and nonnegativity") {
  CHECK(kl_penalty(std::vector<double>{-1.3, 0.4}, std::vector<double>{-1.3, 0.4}, 0.5) == 0.0);
  // ratio e: estimator e - 2
  CHECK(kl_penalty(std::vector<double>{0.0}, std::vector<double>{1.0}, 1.0) ==
        doctest::Approx(std::exp(1.0) - 2.0).epsilon(1e-12));
  CHECK(kl_penalty(std::vector<double>{0.0}, std::vector<double>{1.0}, 0.005) ==
        doctest::Approx(0.005 * (std::exp(1.0) - 2.0)).epsilon(1e-12));

  Rng rng(400);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<double> lp_policy(4);
    std::vector<double> lp_ref(4);
    for (int i = 0; i < 4; ++i) {
      lp_policy[i] = rng.next_double() * 4.0 - 2.0;
      lp_ref[i] = rng.next_double() * 4.0 - 2.0;
    }
    REQUIRE(kl_penalty(lp_policy, lp_ref, 1.0) >= 0.0);
  }
}

namespace {

Group reward_only_group(std::string id, std::vector<double> rewards) {
  Group g;
  g.sample_id = std::move(id);
  g.rewards = std::move(rewards);
  return g;
}

}  // namespace

TEST_CASE("dynamic resampling") {
  int fresh_calls = 0;
  const auto fresh = [&](const std::string& id, int attempt) {
    ++fresh_calls;
    // first replacement attempt is still flat, the second carries signal
    if (attempt == 0) return reward_only_group(id, {0.2, 0.2});
    return reward_only_group(id, {1.2, 0.2});
  };

  std::vector<Group> groups;
  groups.push_back(reward_only_group("flat", {1.2, 1.2, 1.2, 1.2}));
  groups.push_back(reward_only_group("ok", {1.2, 0.2}));

  const ResampleResult out = dynamic_resample(std::move(groups), 3, fresh);
  REQUIRE(out.groups.size() == 2);
  CHECK(out.resampled == 1);
  CHECK(out.abandoned.empty());
  CHECK(fresh_calls == 2);
  for (const Group& g : out.groups) CHECK(!zero_reward_variance(g));

  // budget 0: degenerate group is abandoned with a log entry
  std::vector<Group> again;
  again.push_back(reward_only_group("flat", {0.2, 0.2}));
  const ResampleResult none = dynamic_resample(std::move(again), 0, fresh);
  CHECK(none.groups.empty());
  REQUIRE(none.abandoned.size() == 1);
  CHECK(none.abandoned[0].sample_id == "flat");
  CHECK(!none.abandoned[0].reason.empty());
}

namespace {

// One-row policy with three templates {ground, answer, noise} whose
// objective has a closed form.
struct TinySetup {
  ToyPolicyParams params = ToyPolicyParams::zeros(1, 1);
  GrainConfig grains;
  std::vector<ObjectiveGroup> groups;

  TinySetup(std::vector<int> templates, std::vector<double> advantages, double theta0,
            double theta1) {
    grains.coarse_frames = 8;
    params.logits[0] = theta0;
    params.logits[1] = theta1;
    ObjectiveGroup og;
    for (size_t i = 0; i < templates.size(); ++i) {
      ToyTrace trace;
      trace.steps.push_back({0, templates[i]});
      og.traces.push_back(trace);
      og.logp_old.push_back(ToyPolicy::trace_logprob(params, trace));
      og.logp_ref.push_back(og.logp_old.back());
    }
    og.advantages = std::move(advantages);
    groups.push_back(std::move(og));
  }
};

}  // namespace

TEST_CASE("finite differences match the analytic softmax policy gradient at ratio 1") {
  // At theta = theta_old the ratio is 1, the clip is inactive and the
  // gradient of the surrogate is mean_i A_i * d(logp_i)/d(theta) with
  // d logp(t)/d logit_j = [j == t] - p_j within the observation row.
  const std::vector<int> templates = {0, 1, 0, 2};
  const std::vector<double> adv = {1.5, -0.5, 0.25, 1.0};
  TinySetup setup(templates, adv, 0.3, -0.2);
  const double kl_beta = 0.0;
  const auto grad = fd_gradient(setup.params, setup.groups, 0.2, kl_beta, 1e-4,
                                ExecMode::Serial, 1);

  double probs[3];
  double z = 0.0;
  for (int j = 0; j < 3; ++j) z += std::exp(setup.params.logits[j]);
  for (int j = 0; j < 3; ++j) probs[j] = std::exp(setup.params.logits[j]) / z;

  for (int j = 0; j < 3; ++j) {
    double analytic = 0.0;
    for (size_t i = 0; i < templates.size(); ++i) {
      analytic += adv[i] * ((templates[i] == j ? 1.0 : 0.0) - probs[j]);
    }
    analytic /= static_cast<double>(templates.size());
    REQUIRE(std::abs(grad[j] - analytic) / std::abs(analytic) < 1e-4);
  }
  // untouched rows have zero gradient
  for (size_t j = 3; j < grad.size(); ++j) REQUIRE(grad[j] == 0.0);
}

TEST_CASE("toy step: zero advantages leave the parameters unchanged") {
  TinySetup setup({0, 1}, {0.0, 0.0}, 0.1, 0.4);
  GrpoConfig cfg;
  cfg.kl_beta = 0.0;

  Group group;
  group.sample_id = "g";
  group.rewards = {1.0, 0.0};
  group.advantages = std::vector<double>{0.0, 0.0};
  group.logp_old = setup.groups[0].logp_old;
  group.logp_ref = setup.groups[0].logp_ref;
  // build matching trajectories for the trace extraction
  ToyPolicy policy(setup.params, setup.grains);
  ViewPayload coarse;
  coarse.spec = ViewSpec{8, 16, {1, 2, 3, 4, 5, 6, 7, 8}, Grain::Coarse};
  for (int t = 0; t < 2; ++t) {
    Trajectory traj;
    traj.initial_view = coarse;
    Turn turn;
    turn.parsed = parse_turn_output(
        t == 0 ? "<think>x</think><ground>0, 7</ground>" : "<think>x</think><answer>A</answer>",
        8);
    if (t == 0) {
      ViewPayload fine;
      fine.spec = ViewSpec{4, 64, {1, 2, 3, 4}, Grain::Fine};
      turn.injected_view = fine;
    }
    traj.turns.push_back(turn);
    traj.stop = t == 0 ? StopReason::MaxTurns : StopReason::Answered;
    group.trajectories.push_back(traj);
  }

  StepStats stats;
  const ToyPolicyParams next = toy_policy_step(setup.params, {group}, cfg, 0.7, 1e-4,
                                               setup.grains, ExecMode::Serial, 1, &stats);
  CHECK(next.logits == setup.params.logits);
  CHECK(!stats.aborted);
  CHECK(stats.objective_before == 0.0);
}

TEST_CASE("toy steps on a synthetic batch increase the objective") {
  // Closed-loop smoke: reward answering option B at the revealed row.
  GrainConfig grains;
  grains.coarse_frames = 8;
  ToyPolicyParams params = ToyPolicyParams::zeros(2, 2);
  Rng rng(55);
  for (double& logit : params.logits) logit = rng.next_double() * 0.1;

  ToyPolicy policy(params, grains);
  ObjectiveGroup og;
  for (int i = 0; i < 8; ++i) {
    ToyTrace trace;
    trace.steps.push_back({0, i % 4});  // mix of grounds and answers
    og.traces.push_back(trace);
    og.logp_old.push_back(ToyPolicy::trace_logprob(params, trace));
    og.logp_ref.push_back(og.logp_old.back());
    og.advantages.push_back(i % 4 == 3 ? 1.5 : -0.5);  // favor template 3
  }
  const std::vector<ObjectiveGroup> groups{og};

  ToyPolicyParams current = params;
  double prev = grpo_objective(current, groups, 0.2, 0.005);
  for (int step = 0; step < 5; ++step) {
    const auto grad = fd_gradient(current, groups, 0.2, 0.005, 1e-4, ExecMode::Serial, 1);
    for (size_t j = 0; j < grad.size(); ++j) current.logits[j] += 0.5 * grad[j];
    const double now = grpo_objective(current, groups, 0.2, 0.005);
    REQUIRE(now >= prev - 1e-9);
    prev = now;
  }
}
