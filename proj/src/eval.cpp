#include <exception>
#include <unordered_map>

#include "twg/harness.hpp"
#include "twg/rng.hpp"

namespace twg {

namespace {

std::string stop_label(StopReason s) {
  switch (s) {
    case StopReason::Answered: return "answered";
    case StopReason::Malformed: return "malformed";
    case StopReason::MaxTurns: return "max_turns";
  }
  return "max_turns";
}

}  // namespace

EvalReport report_from_records(std::span<const TrajectoryRecord> records,
                               std::span<const Sample> corpus, int failed_samples) {
  std::unordered_map<std::string, const Sample*> by_id;
  for (const Sample& s : corpus) by_id[s.sample_id] = &s;

  EvalReport report;
  report.corpus_size = static_cast<int>(corpus.size());
  report.scored_samples = static_cast<int>(records.size());
  report.failed_samples = failed_samples;

  std::map<std::string, std::pair<int, int>> per_source;  // correct, total
  int correct = 0;
  long long groundings = 0;
  for (const TrajectoryRecord& rec : records) {
    const auto it = by_id.find(rec.traj.sample_id);
    const std::string source =
        it != by_id.end() ? to_string(it->second->source) : std::string("unknown");
    const bool is_correct = rec.reward.r_acc > 0.0;
    correct += is_correct ? 1 : 0;
    auto& bucket = per_source[source];
    bucket.first += is_correct ? 1 : 0;
    bucket.second += 1;

    const int n_ground = grounding_action_count(rec.traj);
    groundings += n_ground;
    if (n_ground > 0) ++report.samples_with_grounding;
    ++report.turn_count_histogram[static_cast<int>(rec.traj.turns.size())];
    ++report.stop_reason_counts[stop_label(rec.traj.stop)];
    report.total_retries += rec.traj.retry_count;
  }
  if (!records.empty()) {
    report.overall_accuracy = static_cast<double>(correct) / static_cast<double>(records.size());
    report.mean_groundings_per_sample =
        static_cast<double>(groundings) / static_cast<double>(records.size());
  }
  for (const auto& [source, counts] : per_source) {
    report.accuracy_per_source[source] =
        static_cast<double>(counts.first) / static_cast<double>(counts.second);
  }
  return report;
}

EvalReport run_eval(const Policy& policy, std::span<const Sample> corpus,
                    const EngineConfig& cfg, ExecMode exec,
                    std::vector<TrajectoryRecord>* out_records) {
  struct Slot {
    std::optional<TrajectoryRecord> record;
    bool failed = false;
    std::exception_ptr fatal;
  };
  std::vector<Slot> slots(corpus.size());

  const auto body = [&](long long idx) {
    const Sample& sample = corpus[static_cast<size_t>(idx)];
    Slot& slot = slots[static_cast<size_t>(idx)];
    const uint64_t base_seed = mix_seed(mix_seed(cfg.seed, "eval"), sample.sample_id);
    try {
      Trajectory traj =
          run_trajectory(policy, sample, cfg.rollout_config(), cfg.eval_sampling, base_seed);
      // A prediction that cannot be parsed is retried with the training
      // sampling parameters; the retry replaces the failed attempt.
      int retries = 0;
      while (traj.stop != StopReason::Answered && retries < cfg.eval_retry_limit) {
        ++retries;
        traj = run_trajectory(policy, sample, cfg.rollout_config(), cfg.train_sampling,
                              mix_seed(base_seed, static_cast<uint64_t>(retries)));
      }
      traj.retry_count = retries;
      TrajectoryRecord rec;
      rec.reward = total_reward(traj, sample, policy, cfg.gate, cfg.rewards, cfg.grains);
      if (policy.reports_logprobs()) rec.logp_old = policy.score_trajectory(traj);
      rec.traj = std::move(traj);
      slot.record = std::move(rec);
    } catch (const TransportError&) {
      slot.failed = true;
    } catch (...) {
      slot.fatal = std::current_exception();
    }
  };

  if (exec == ExecMode::Parallel) {
    const int n_threads = resolve_workers(cfg.worker_cap);
#pragma omp parallel for schedule(dynamic) num_threads(n_threads)
    for (long long idx = 0; idx < static_cast<long long>(corpus.size()); ++idx) body(idx);
  } else {
    for (long long idx = 0; idx < static_cast<long long>(corpus.size()); ++idx) body(idx);
  }

  std::vector<TrajectoryRecord> records;
  int failed = 0;
  for (Slot& slot : slots) {
    if (slot.fatal) std::rethrow_exception(slot.fatal);
    if (slot.failed) {
      ++failed;
    } else if (slot.record) {
      records.push_back(std::move(*slot.record));
    }
  }

  const EvalReport report = report_from_records(records, corpus, failed);
  if (out_records) *out_records = std::move(records);
  return report;
}

nlohmann::ordered_json EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["corpus_size"] = corpus_size;
  j["scored_samples"] = scored_samples;
  j["failed_samples"] = failed_samples;
  j["overall_accuracy"] = overall_accuracy;
  j["accuracy_per_source"] = accuracy_per_source;
  j["mean_groundings_per_sample"] = mean_groundings_per_sample;
  j["samples_with_grounding"] = samples_with_grounding;
  nlohmann::ordered_json hist = nlohmann::ordered_json::object();
  for (const auto& [turns, count] : turn_count_histogram) hist[std::to_string(turns)] = count;
  j["turn_count_histogram"] = std::move(hist);
  j["stop_reason_counts"] = stop_reason_counts;
  j["total_retries"] = total_retries;
  return j;
}

}  // namespace twg
