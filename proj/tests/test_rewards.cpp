#include "doctest.h"

#include "generators.hpp"
#include "oracle.hpp"
#include "twg/rewards.hpp"

using namespace twg;

namespace {

Sample labeled_sample(double duration, Interval gt) {
  Sample s;
  s.sample_id = "s";
  s.video.video_id = "v";
  s.video.duration_s = duration;
  s.question = "q";
  s.options = {"a", "b", "c", "d"};
  s.answer_key = "B";
  s.gt_grounding = gt;
  s.source = SampleSource::NextGQA;
  return s;
}

Sample unlabeled_sample(double duration) {
  Sample s = labeled_sample(duration, {});
  s.gt_grounding.reset();
  s.source = SampleSource::GeneralQA;
  return s;
}

Trajectory run_scripted(const Sample& sample, std::vector<std::string> script,
                        std::string sc = "") {
  ScriptedPolicy policy(std::move(script), std::move(sc));
  RolloutConfig cfg;
  cfg.max_turns = 3;
  return run_trajectory(policy, sample, cfg, SamplingParams{}, 31);
}

const std::string kGround = "<think>g</think><ground>16, 31</ground>";
const std::string kAnswerB = "<think>a</think><answer>B</answer>";
const std::string kAnswerA = "<think>a</think><answer>A</answer>";

}  // namespace

TEST_CASE("accuracy reward") {
  const Sample s = labeled_sample(640, {160, 320});
  CHECK(accuracy_reward(run_scripted(s, {kAnswerB}), "B") == 1.0);
  CHECK(accuracy_reward(run_scripted(s, {kAnswerA}), "B") == 0.0);
  // no answer at the turn budget
  CHECK(accuracy_reward(run_scripted(s, {kGround, kGround, kGround}), "B") == 0.0);
  // decorated answers normalize to the option letter
  CHECK(accuracy_reward(run_scripted(s, {"<think>t</think><answer>(B)</answer>"}), "B") == 1.0);
}

TEST_CASE("format reward") {
  const Sample s = labeled_sample(640, {160, 320});
  CHECK(format_reward(run_scripted(s, {kGround, kGround, kAnswerB})) == 0.2);
  CHECK(format_reward(run_scripted(s, {kGround, "junk"})) == 0.0);
  // a full-budget trajectory of well-formed groundings still earns format
  CHECK(format_reward(run_scripted(s, {kGround, kGround, kGround})) == 0.2);
}

TEST_CASE("temporal IoU on the worked intervals") {
  CHECK(temporal_iou({0, 10}, {0, 10}) == 1.0);
  CHECK(temporal_iou({0, 5}, {5, 10}) == 0.0);                       // touching
  CHECK(temporal_iou({0, 10}, {5, 15}) == doctest::Approx(5.0 / 15.0).epsilon(1e-15));
  CHECK(temporal_iou({3, 3}, {3, 3}) == 0.0);                        // degenerate pair
  CHECK(temporal_iou({0, 10}, {2, 4}) == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("IoU symmetry and identity properties") {
  Rng rng(5);
  for (int i = 0; i < 2000; ++i) {
    const double a0 = rng.next_double() * 100.0;
    const double a1 = a0 + rng.next_double() * 100.0;
    const double b0 = rng.next_double() * 100.0;
    const double b1 = b0 + rng.next_double() * 100.0;
    const Interval a{a0, a1};
    const Interval b{b0, b1};
    REQUIRE(temporal_iou(a, b) == temporal_iou(b, a));
    REQUIRE(temporal_iou(a, a) == 1.0);
    const double iou = temporal_iou(a, b);
    REQUIRE(iou >= 0.0);
    REQUIRE(iou <= 1.0);
  }
}

TEST_CASE("grounding reward: soft plus hard") {
  CHECK(grounding_reward({0, 10}, {0, 10}) == 1.5);
  CHECK(grounding_reward({0, 5}, {5, 10}) == 0.0);
  CHECK(grounding_reward({0, 10}, {5, 15}) ==
        doctest::Approx(5.0 / 15.0 + 0.5).epsilon(1e-15));
  //0.4 IoU -> 0.9
  CHECK(grounding_reward({0, 4}, {0, 10}) == doctest::Approx(0.9).epsilon(1e-15));
}

TEST_CASE("degenerate labels are widened by one coarse segment") {
  // 640 s, 64 frames: segment 10 s
  const Interval widened = widen_degenerate_label({100, 100}, 640, 64);
  CHECK(widened.start_s == 100.0);
  CHECK(widened.end_s == 110.0);
  // at the video end the widening extends backwards
  const Interval tail = widen_degenerate_label({640, 640}, 640, 64);
  CHECK(tail.start_s == 630.0);
  CHECK(tail.end_s == 640.0);
  // proper labels pass through untouched
  const Interval same = widen_degenerate_label({5, 9}, 640, 64);
  CHECK(same == Interval{5, 9});
}

TEST_CASE("total reward: the four worked cases") {
  GateConfig gate;
  RewardSwitches sw;
  GrainConfig grains;

  // (a) no grounding, correct, well-formatted -> 1.2
  {
    const Sample s = unlabeled_sample(640);
    ScriptedPolicy policy({kAnswerB});
    const Trajectory traj = run_scripted(s, {kAnswerB});
    const RewardBreakdown b = total_reward(traj, s, policy, gate, sw, grains);
    CHECK(b.total == doctest::Approx(1.2).epsilon(1e-15));
    CHECK(!b.r_grounding.has_value());
    CHECK(!b.r_pseudo.has_value());
  }
  // (b) labeled, correct, IoU 1 -> 2.7
  {
    const Sample s = labeled_sample(640, {160, 320});
    ScriptedPolicy policy({kGround, kAnswerB});
    const Trajectory traj = run_scripted(s, {kGround, kAnswerB});
    const RewardBreakdown b = total_reward(traj, s, policy, gate, sw, grains);
    CHECK(b.r_acc == 1.0);
    CHECK(b.r_format == 0.2);
    CHECK(*b.r_soft == 1.0);
    CHECK(*b.r_hard == 0.5);
    CHECK(*b.r_grounding == 1.5);
    CHECK(!b.gated);
    CHECK(b.total == doctest::Approx(2.7).epsilon(1e-15));
  }
  // (b) labeled, wrong answer, IoU 1 -> gated to 0.2
  {
    const Sample s = labeled_sample(640, {160, 320});
    ScriptedPolicy policy({kGround, kAnswerA});
    const Trajectory traj = run_scripted(s, {kGround, kAnswerA});
    const RewardBreakdown b = total_reward(traj, s, policy, gate, sw, grains);
    CHECK(b.r_acc == 0.0);
    CHECK(*b.r_grounding == 1.5);  // raw component still recorded
    CHECK(b.gated);
    CHECK(b.total == 0.2);
  }
  // (c) unlabeled, correct, self-confirmation fails -> 1.1
  {
    const Sample s = unlabeled_sample(640);
    const Trajectory traj = run_scripted(s, {kGround, kAnswerB}, "<think>c</think><answer>D</answer>");
    ScriptedPolicy policy({}, "<think>c</think><answer>D</answer>");
    const RewardBreakdown b = total_reward(traj, s, policy, gate, sw, grains);
    CHECK(*b.r_pseudo == doctest::Approx(-0.1).epsilon(1e-15));
    CHECK(!b.pseudo_parse_failed);
    CHECK(b.total == doctest::Approx(1.1).epsilon(1e-15));
    REQUIRE(b.self_confirm_raw.has_value());
  }
  // (c) unlabeled, correct, self-confirmation succeeds -> 1.2
  {
    const Sample s = unlabeled_sample(640);
    const Trajectory traj = run_scripted(s, {kGround, kAnswerB}, "<think>c</think><answer>B</answer>");
    ScriptedPolicy policy({}, "<think>c</think><answer>B</answer>");
    const RewardBreakdown b = total_reward(traj, s, policy, gate, sw, grains);
    CHECK(*b.r_pseudo == 0.0);
    CHECK(b.total == doctest::Approx(1.2).epsilon(1e-15));
  }
  // (c) unparseable self-confirmation counts as incorrect and is flagged
  {
    const Sample s = unlabeled_sample(640);
    const Trajectory traj = run_scripted(s, {kGround, kAnswerB}, "no idea");
    ScriptedPolicy policy({}, "no idea");
    const RewardBreakdown b = total_reward(traj, s, policy, gate, sw, grains);
    CHECK(*b.r_pseudo == doctest::Approx(-0.1).epsilon(1e-15));
    CHECK(b.pseudo_parse_failed);
  }
}

TEST_CASE("total reward: only the last grounding action matters") {
  GateConfig gate;
  RewardSwitches sw;
  GrainConfig grains;
  const Sample s = labeled_sample(640, {160, 320});
  // first grounding is perfect, the last one misses entirely
  const std::string miss = "<think>g</think><ground>48, 63</ground>";
  const Trajectory traj = run_scripted(s, {kGround, miss, kAnswerB});
  ScriptedPolicy policy({});
  const RewardBreakdown b = total_reward(traj, s, policy, gate, sw, grains);
  CHECK(*b.r_grounding == 0.0);
  CHECK(b.total == doctest::Approx(1.2).epsilon(1e-15));
}

TEST_CASE("total reward: ablation switches") {
  GrainConfig grains;
  const Sample s = labeled_sample(640, {160, 320});
  const Trajectory traj = run_scripted(s, {kGround, kAnswerB});
  ScriptedPolicy policy({});

  RewardSwitches soft_only;
  soft_only.hard_reward = false;
  const RewardBreakdown b1 = total_reward(traj, s, policy, GateConfig{}, soft_only, grains);
  CHECK(*b1.r_soft == 1.0);
  CHECK(*b1.r_hard == 0.0);
  CHECK(b1.total == doctest::Approx(2.2).epsilon(1e-15));

  RewardSwitches hard_only;
  hard_only.soft_reward = false;
  const RewardBreakdown b2 = total_reward(traj, s, policy, GateConfig{}, hard_only, grains);
  CHECK(*b2.r_soft == 0.0);
  CHECK(b2.total == doctest::Approx(1.7).epsilon(1e-15));

  // gate off: the grounding term lands even on wrong answers
  GateConfig no_gate;
  no_gate.gate_enabled = false;
  const Trajectory wrong = run_scripted(s, {kGround, kAnswerA});
  const RewardBreakdown b3 = total_reward(wrong, s, policy, no_gate, RewardSwitches{}, grains);
  CHECK(!b3.gated);
  CHECK(b3.total == doctest::Approx(0.2 + 1.5).epsilon(1e-15));

  // pseudo off: unlabeled grounded trajectories take the plain composition
  const Sample u = unlabeled_sample(640);
  RewardSwitches no_pseudo;
  no_pseudo.pseudo_reward = false;
  const Trajectory ut = run_scripted(u, {kGround, kAnswerB});
  const RewardBreakdown b4 = total_reward(ut, u, policy, GateConfig{}, no_pseudo, grains);
  CHECK(!b4.r_pseudo.has_value());
  CHECK(b4.total == doctest::Approx(1.2).epsilon(1e-15));
}

TEST_CASE("gate soundness and component consistency over the scripted corpus") {
  const twgtest::RewardCorpus corpus = twgtest::make_reward_corpus(600, 17);
  for (const TrajectoryRecord& rec : corpus.records) {
    const RewardBreakdown& b = rec.reward;
    // wrong answers earn exactly the format reward
    if (b.r_acc == 0.0) REQUIRE(b.total == b.r_format);
    // soft/hard coupling
    if (b.r_hard) REQUIRE((*b.r_hard == 0.5) == (*b.r_soft > 0.0));
    if (b.r_grounding) {
      REQUIRE(*b.r_grounding == *b.r_soft + *b.r_hard);
      REQUIRE(*b.r_grounding >= 0.0);
      REQUIRE(*b.r_grounding <= 1.5);
      REQUIRE(!b.r_pseudo.has_value());  // labeled and unlabeled paths are exclusive
    }
    REQUIRE((b.r_acc == 0.0 || b.r_acc == 1.0));
    REQUIRE((b.r_format == 0.0 || b.r_format == 0.2));
    REQUIRE(b.total >= 0.0);
    REQUIRE(b.total <= 2.7);
  }
}

TEST_CASE("replay matches the live path and the oracle agrees exactly") {
  const twgtest::RewardCorpus corpus = twgtest::make_reward_corpus(300, 23);
  for (size_t i = 0; i < corpus.records.size(); ++i) {
    const TrajectoryRecord& rec = corpus.records[i];
    const Sample& sample = corpus.samples[i];
    const RewardBreakdown replayed =
        replay_reward(rec.traj, sample, corpus.cfg.gate, corpus.cfg.rewards, corpus.cfg.grains,
                      rec.reward.self_confirm_raw);
    REQUIRE(replayed == rec.reward);
    const RewardBreakdown oracled =
        twgtest::oracle_reward(rec.traj, sample, corpus.cfg.gate, corpus.cfg.rewards,
                               corpus.cfg.grains, rec.reward.self_confirm_raw);
    REQUIRE(oracled == rec.reward);
  }
}
