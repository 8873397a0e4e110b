#include "twg/logio.hpp"

#include <fstream>
#include <stdexcept>

namespace twg {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string stop_name(StopReason s) {
  switch (s) {
    case StopReason::Answered: return "answered";
    case StopReason::Malformed: return "malformed";
    case StopReason::MaxTurns: return "max_turns";
  }
  return "max_turns";
}

StopReason stop_from_name(const std::string& s) {
  if (s == "answered") return StopReason::Answered;
  if (s == "malformed") return StopReason::Malformed;
  if (s == "max_turns") return StopReason::MaxTurns;
  throw std::runtime_error("log: unknown stop reason '" + s + "'");
}

std::string kind_name(TurnKind k) {
  switch (k) {
    case TurnKind::Grounding: return "grounding";
    case TurnKind::Answering: return "answering";
    case TurnKind::Malformed: return "malformed";
  }
  return "malformed";
}

TurnKind kind_from_name(const std::string& s) {
  if (s == "grounding") return TurnKind::Grounding;
  if (s == "answering") return TurnKind::Answering;
  if (s == "malformed") return TurnKind::Malformed;
  throw std::runtime_error("log: unknown turn kind '" + s + "'");
}

std::string prompt_name(PromptTag t) {
  switch (t) {
    case PromptTag::Initial: return "initial";
    case PromptTag::Intermediate: return "intermediate";
    case PromptTag::SelfConfirm: return "self_confirm";
  }
  return "initial";
}

PromptTag prompt_from_name(const std::string& s) {
  if (s == "initial") return PromptTag::Initial;
  if (s == "intermediate") return PromptTag::Intermediate;
  if (s == "self_confirm") return PromptTag::SelfConfirm;
  throw std::runtime_error("log: unknown prompt tag '" + s + "'");
}

ordered_json view_payload_to_json(const ViewPayload& v) {
  ordered_json j;
  j["grain"] = v.spec.grain == Grain::Coarse ? "coarse" : "fine";
  j["frame_count"] = v.spec.frame_count;
  j["tokens_per_frame"] = v.spec.tokens_per_frame;
  j["timestamps"] = v.spec.timestamps;
  ordered_json frames = ordered_json::array();
  for (const FrameAttachment& f : v.frames) {
    frames.push_back(ordered_json{{"t", f.t}, {"payload", f.payload}});
  }
  j["frames"] = std::move(frames);
  return j;
}

ViewPayload view_payload_from_json(const json& j) {
  ViewPayload v;
  v.spec.grain = j.at("grain").get<std::string>() == "coarse" ? Grain::Coarse : Grain::Fine;
  v.spec.frame_count = j.at("frame_count").get<int>();
  v.spec.tokens_per_frame = j.at("tokens_per_frame").get<int>();
  v.spec.timestamps = j.at("timestamps").get<std::vector<double>>();
  for (const json& f : j.at("frames")) {
    v.frames.push_back({f.at("t").get<double>(), f.at("payload").get<std::string>()});
  }
  return v;
}

ordered_json reward_to_json(const RewardBreakdown& r) {
  ordered_json j;
  j["r_acc"] = r.r_acc;
  j["r_format"] = r.r_format;
  if (r.r_soft) j["r_soft"] = *r.r_soft;
  if (r.r_hard) j["r_hard"] = *r.r_hard;
  if (r.r_grounding) j["r_grounding"] = *r.r_grounding;
  if (r.r_pseudo) j["r_pseudo"] = *r.r_pseudo;
  j["gated"] = r.gated;
  j["pseudo_parse_failed"] = r.pseudo_parse_failed;
  if (r.self_confirm_raw) j["self_confirm_raw"] = *r.self_confirm_raw;
  j["total"] = r.total;
  return j;
}

RewardBreakdown reward_from_json(const json& j) {
  RewardBreakdown r;
  r.r_acc = j.at("r_acc").get<double>();
  r.r_format = j.at("r_format").get<double>();
  if (j.contains("r_soft")) r.r_soft = j.at("r_soft").get<double>();
  if (j.contains("r_hard")) r.r_hard = j.at("r_hard").get<double>();
  if (j.contains("r_grounding")) r.r_grounding = j.at("r_grounding").get<double>();
  if (j.contains("r_pseudo")) r.r_pseudo = j.at("r_pseudo").get<double>();
  r.gated = j.at("gated").get<bool>();
  r.pseudo_parse_failed = j.at("pseudo_parse_failed").get<bool>();
  if (j.contains("self_confirm_raw")) {
    r.self_confirm_raw = j.at("self_confirm_raw").get<std::string>();
  }
  r.total = j.at("total").get<double>();
  return r;
}

}  // namespace

ordered_json trajectory_record_to_json(const TrajectoryRecord& rec) {
  const Trajectory& t = rec.traj;
  ordered_json j;
  j["schema"] = "twg-traj-v1";
  j["sample_id"] = t.sample_id;
  j["template_version"] = t.template_version;
  j["seed"] = t.seed;
  j["retry_count"] = t.retry_count;
  j["stop"] = stop_name(t.stop);
  if (t.final_answer) j["final_answer"] = t.final_answer->text;
  j["initial_view"] = view_payload_to_json(t.initial_view);
  ordered_json turns = ordered_json::array();
  for (const Turn& turn : t.turns) {
    ordered_json tj;
    tj["raw"] = turn.parsed.raw;
    tj["kind"] = kind_name(turn.parsed.kind);
    if (turn.parsed.kind != TurnKind::Malformed) tj["think"] = turn.parsed.think;
    if (turn.parsed.ground) {
      tj["ground"] = ordered_json{{"start_frame", turn.parsed.ground->start_frame},
                                  {"end_frame", turn.parsed.ground->end_frame}};
    }
    if (turn.parsed.answer) tj["answer"] = turn.parsed.answer->text;
    tj["prompt"] = prompt_name(turn.prompt_used);
    if (turn.injected_view) tj["view"] = view_payload_to_json(*turn.injected_view);
    turns.push_back(std::move(tj));
  }
  j["turns"] = std::move(turns);
  j["reward"] = reward_to_json(rec.reward);
  if (rec.logp_old) j["logp_old"] = *rec.logp_old;
  return j;
}

TrajectoryRecord trajectory_record_from_json(const json& j) {
  if (j.value("schema", std::string()) != "twg-traj-v1") {
    throw std::runtime_error("log: missing or unknown schema tag");
  }
  TrajectoryRecord rec;
  Trajectory& t = rec.traj;
  t.sample_id = j.at("sample_id").get<std::string>();
  t.template_version = j.at("template_version").get<std::string>();
  t.seed = j.at("seed").get<uint64_t>();
  t.retry_count = j.at("retry_count").get<int>();
  t.stop = stop_from_name(j.at("stop").get<std::string>());
  if (j.contains("final_answer")) {
    t.final_answer = AnswerAction{j.at("final_answer").get<std::string>()};
  }
  t.initial_view = view_payload_from_json(j.at("initial_view"));
  for (const json& tj : j.at("turns")) {
    Turn turn;
    turn.parsed.raw = tj.at("raw").get<std::string>();
    turn.parsed.kind = kind_from_name(tj.at("kind").get<std::string>());
    if (tj.contains("think")) turn.parsed.think = tj.at("think").get<std::string>();
    if (tj.contains("ground")) {
      turn.parsed.ground = GroundAction{tj.at("ground").at("start_frame").get<int>(),
                                        tj.at("ground").at("end_frame").get<int>()};
    }
    if (tj.contains("answer")) {
      turn.parsed.answer = AnswerAction{tj.at("answer").get<std::string>()};
    }
    turn.prompt_used = prompt_from_name(tj.at("prompt").get<std::string>());
    if (tj.contains("view")) turn.injected_view = view_payload_from_json(tj.at("view"));
    t.turns.push_back(std::move(turn));
  }
  rec.reward = reward_from_json(j.at("reward"));
  if (j.contains("logp_old")) rec.logp_old = j.at("logp_old").get<double>();
  return rec;
}

void write_trajectory_log(const std::vector<TrajectoryRecord>& records,
                          const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trajectory log '" + path + "'");
  for (const TrajectoryRecord& rec : records) {
    out << trajectory_record_to_json(rec).dump() << "\n";
  }
}

std::vector<TrajectoryRecord> read_trajectory_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read trajectory log '" + path + "'");
  std::vector<TrajectoryRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      records.push_back(trajectory_record_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error("trajectory log '" + path + "' line " + std::to_string(line_no) +
                               ": " + e.what());
    }
  }
  return records;
}

ordered_json group_to_json(const Group& group) {
  ordered_json j;
  j["schema"] = "twg-group-v1";
  j["sample_id"] = group.sample_id;
  j["rewards"] = group.rewards;
  if (group.advantages) j["advantages"] = *group.advantages;
  if (group.logp_old) j["logp_old"] = *group.logp_old;
  if (group.logp_ref) j["logp_ref"] = *group.logp_ref;
  return j;
}

void write_group_log(const std::vector<Group>& groups, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write group log '" + path + "'");
  for (const Group& g : groups) out << group_to_json(g).dump() << "\n";
}

}  // namespace twg
