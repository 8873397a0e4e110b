// Benchmark comparing the OpenMP kernels against their serial reference
// twins: batch rollout + reward scoring, the finite-difference gradient and
// group standardization. The two paths are bit-identical (asserted here too);
// this tool reports the speedup.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "twg/harness.hpp"
#include "twg/rng.hpp"
#include "twg/synthetic.hpp"

using namespace twg;

namespace {

double seconds_of(const std::function<void()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(t1 - t0).count();
}

void report(const char* name, double serial_s, double parallel_s, bool identical) {
  std::printf("%-28s serial %8.3f s   openmp %8.3f s   speedup %5.2fx   %s\n", name, serial_s,
              parallel_s, serial_s / parallel_s, identical ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"serial vs OpenMP benchmark"};
  int samples = 768;
  int fd_groups = 96;
  int std_groups = 400000;
  app.add_option("--samples", samples, "synthetic samples for the rollout benchmark");
  app.add_option("--fd-groups", fd_groups, "groups for the gradient benchmark");
  app.add_option("--std-groups", std_groups, "groups for the standardization benchmark");
  CLI11_PARSE(app, argc, argv);

  SyntheticSpec spec;
  spec.n_samples = samples;
  spec.labeled_fraction = 0.5;
  spec.global_fraction = 0.25;
  spec.seed = 9;
  const std::vector<Sample> corpus = make_needle_corpus(spec);

  EngineConfig cfg;
  cfg.stage = Stage::Stage2;
  cfg.seed = 1;
  ToyPolicyParams params = ToyPolicyParams::zeros(4, 4);
  Rng rng(2);
  for (double& logit : params.logits) logit = rng.next_double() - 0.5;
  const ToyPolicy policy(params, cfg.grains);

  std::vector<const Sample*> batch;
  for (const Sample& s : corpus) batch.push_back(&s);

  // batch rollout + reward scoring
  std::vector<Group> gs;
  std::vector<Group> gp;
  const double roll_serial =
      seconds_of([&] { gs = rollout_groups(policy, batch, cfg, 33, ExecMode::Serial); });
  const double roll_parallel =
      seconds_of([&] { gp = rollout_groups(policy, batch, cfg, 33, ExecMode::Parallel); });
  bool same = gs.size() == gp.size();
  for (size_t i = 0; same && i < gs.size(); ++i) same = gs[i].rewards == gp[i].rewards;
  report("rollout + rewards", roll_serial, roll_parallel, same);

  // finite-difference gradient
  std::vector<Group> kept;
  for (Group& g : gs) {
    if (!zero_reward_variance(g) && static_cast<int>(kept.size()) < fd_groups) {
      kept.push_back(std::move(g));
    }
  }
  standardize_groups(kept, false, ExecMode::Serial, 0);
  std::vector<ObjectiveGroup> inputs;
  for (Group& g : kept) {
    g.logp_ref = *g.logp_old;
    inputs.push_back(make_objective_group(policy, g));
  }
  std::vector<double> grad_s;
  std::vector<double> grad_p;
  const double fd_serial = seconds_of(
      [&] { grad_s = fd_gradient(params, inputs, 0.2, 0.005, 1e-3, ExecMode::Serial, 0); });
  const double fd_parallel = seconds_of(
      [&] { grad_p = fd_gradient(params, inputs, 0.2, 0.005, 1e-3, ExecMode::Parallel, 0); });
  report("fd gradient", fd_serial, fd_parallel, grad_s == grad_p);

  // group standardization
  std::vector<Group> flat(std_groups);
  Rng reward_rng(3);
  for (int i = 0; i < std_groups; ++i) {
    flat[i].sample_id = std::to_string(i);
    flat[i].rewards.resize(8);
    for (double& r : flat[i].rewards) r = reward_rng.next_double() * 2.7;
  }
  std::vector<Group> flat_copy = flat;
  const double std_serial =
      seconds_of([&] { standardize_groups(flat, false, ExecMode::Serial, 0); });
  const double std_parallel =
      seconds_of([&] { standardize_groups(flat_copy, false, ExecMode::Parallel, 0); });
  same = true;
  for (int i = 0; same && i < std_groups; ++i) {
    same = *flat[i].advantages == *flat_copy[i].advantages;
  }
  report("group standardization", std_serial, std_parallel, same);
  return 0;
}
