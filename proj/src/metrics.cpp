#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

#include "twg/harness.hpp"

namespace twg {

namespace {

void append_double(std::string& s, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  s += buf;
}

}  // namespace

std::string metrics_csv(std::span<const MetricsRow> rows) {
  std::string out =
      "step,group_count,traj_count,mean_total,mean_acc,mean_format,mean_soft,mean_hard,"
      "mean_grounding,mean_pseudo,mean_turns,frac_grounded,resampled_groups,abandoned_groups,"
      "objective,kl\n";
  for (const MetricsRow& r : rows) {
    out += std::to_string(r.step) + "," + std::to_string(r.group_count) + "," +
           std::to_string(r.traj_count) + ",";
    append_double(out, r.mean_total);
    out += ",";
    append_double(out, r.mean_acc);
    out += ",";
    append_double(out, r.mean_format);
    out += ",";
    append_double(out, r.mean_soft);
    out += ",";
    append_double(out, r.mean_hard);
    out += ",";
    append_double(out, r.mean_grounding);
    out += ",";
    append_double(out, r.mean_pseudo);
    out += ",";
    append_double(out, r.mean_turns);
    out += ",";
    append_double(out, r.frac_grounded);
    out += "," + std::to_string(r.resampled_groups) + "," + std::to_string(r.abandoned_groups) +
           ",";
    append_double(out, r.objective);
    out += ",";
    append_double(out, r.kl_value);
    out += "\n";
  }
  return out;
}

void emit_metrics(std::span<const MetricsRow> rows, const std::string& path) {
  if (rows.empty()) throw std::invalid_argument("emit_metrics: no rows");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write metrics file '" + path + "'");
  out << metrics_csv(rows);
}

std::vector<RewardBreakdown> replay_rewards(std::span<const TrajectoryRecord> records,
                                            std::span<const Sample> corpus,
                                            const EngineConfig& cfg,
                                            std::vector<size_t>* mismatches) {
  std::unordered_map<std::string, const Sample*> by_id;
  for (const Sample& s : corpus) by_id[s.sample_id] = &s;

  std::vector<RewardBreakdown> recomputed;
  recomputed.reserve(records.size());
  for (size_t i = 0; i < records.size(); ++i) {
    const TrajectoryRecord& rec = records[i];
    const auto it = by_id.find(rec.traj.sample_id);
    if (it == by_id.end()) {
      throw DataError("replay: sample '" + rec.traj.sample_id + "' not found in dataset");
    }
    RewardBreakdown b = replay_reward(rec.traj, *it->second, cfg.gate, cfg.rewards, cfg.grains,
                                      rec.reward.self_confirm_raw);
    if (mismatches && !(b == rec.reward)) mismatches->push_back(i);
    recomputed.push_back(std::move(b));
  }
  return recomputed;
}

}  // namespace twg
