#include "twg/toy_policy.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "json.hpp"
#include "twg/rng.hpp"

namespace twg {

namespace {

// Payload grammar: "detail=<d>|<key>=<value>".
struct EventDescriptor {
  int detail = 0;
  std::string_view key;
  int value = 0;
};

bool parse_event(std::string_view payload, EventDescriptor& out) {
  if (!payload.starts_with("detail=")) return false;
  const size_t bar = payload.find('|');
  if (bar == std::string_view::npos) return false;
  const std::string_view detail_str = payload.substr(7, bar - 7);
  auto [p1, e1] = std::from_chars(detail_str.data(), detail_str.data() + detail_str.size(),
                                  out.detail);
  if (e1 != std::errc() || p1 != detail_str.data() + detail_str.size()) return false;
  const std::string_view rest = payload.substr(bar + 1);
  const size_t eq = rest.find('=');
  if (eq == std::string_view::npos) return false;
  out.key = rest.substr(0, eq);
  const std::string_view value_str = rest.substr(eq + 1);
  auto [p2, e2] =
      std::from_chars(value_str.data(), value_str.data() + value_str.size(), out.value);
  return e2 == std::errc() && p2 == value_str.data() + value_str.size();
}

}  // namespace

ToyPolicyParams ToyPolicyParams::zeros(int windows, int options) {
  ToyPolicyParams p;
  p.n_windows = windows;
  p.n_options = options;
  p.logits.assign(static_cast<size_t>(p.rows()) * p.templates(), 0.0);
  return p;
}

ToyObservation toy_observe(const std::vector<ViewPayload>& views, bool has_coarse, int windows,
                           int options) {
  int revealed = -1;
  int hint = 0;
  for (const ViewPayload& view : views) {
    for (const FrameAttachment& frame : view.frames) {
      EventDescriptor ev;
      if (!parse_event(frame.payload, ev)) continue;
      if (view.spec.tokens_per_frame < ev.detail) continue;  // below required detail
      if (ev.key == "answer" && revealed < 0 && ev.value >= 0 && ev.value < options) {
        revealed = ev.value;
      } else if (ev.key == "hint" && ev.value >= 0 && ev.value < windows) {
        hint = ev.value;
      }
    }
  }
  ToyObservation obs;
  obs.answers_only = !has_coarse;
  if (revealed >= 0) {
    obs.row = windows + revealed;
  } else if (!has_coarse) {
    obs.row = windows + options;  // self-confirm, nothing visible
  } else {
    obs.row = hint;
  }
  return obs;
}

ToyPolicy::ToyPolicy(ToyPolicyParams params, GrainConfig grains)
    : params_(std::move(params)), grains_(grains) {
  if (params_.n_windows < 1 || params_.n_options < 1) {
    throw std::invalid_argument("ToyPolicy: windows and options must be positive");
  }
  if (params_.logits.size() != static_cast<size_t>(params_.rows()) * params_.templates()) {
    throw std::invalid_argument("ToyPolicy: logits size does not match rows * templates");
  }
  if (grains_.coarse_frames % params_.n_windows != 0) {
    throw std::invalid_argument("ToyPolicy: coarse_frames must be divisible by windows");
  }
  if (params_.noise_floor < 0.0 || params_.noise_floor >= 1.0) {
    throw std::invalid_argument("ToyPolicy: noise_floor must be in [0, 1)");
  }
  window_span_ = grains_.coarse_frames / params_.n_windows;
}

void ToyPolicy::set_params(ToyPolicyParams p) {
  if (p.logits.size() != params_.logits.size() || p.n_windows != params_.n_windows ||
      p.n_options != params_.n_options) {
    throw std::invalid_argument("ToyPolicy::set_params: shape mismatch");
  }
  params_ = std::move(p);
}

std::vector<double> ToyPolicy::action_distribution(const ToyObservation& obs) const {
  const int t = params_.templates();
  const int first = obs.answers_only ? params_.n_windows : 0;
  const double* row = params_.logits.data() + static_cast<size_t>(obs.row) * t;
  double max_logit = -std::numeric_limits<double>::infinity();
  for (int i = first; i < t; ++i) max_logit = std::max(max_logit, row[i]);
  std::vector<double> probs(t, 0.0);
  double z = 0.0;
  for (int i = first; i < t; ++i) {
    probs[i] = std::exp(row[i] - max_logit);
    z += probs[i];
  }
  const double keep = 1.0 - params_.noise_floor;
  for (int i = first; i < t; ++i) probs[i] = keep * probs[i] / z;
  probs[params_.noise_template()] += params_.noise_floor;
  return probs;
}

GenerationResponse ToyPolicy::generate(const GenerationRequest& req) const {
  if (req.context.empty()) throw std::invalid_argument("generate: empty context");
  std::vector<ViewPayload> views;
  bool has_coarse = false;
  for (const Message& m : req.context) {
    for (const ViewPayload& v : m.views) {
      views.push_back(v);
      if (v.spec.grain == Grain::Coarse) has_coarse = true;
    }
  }
  const ToyObservation obs = toy_observe(views, has_coarse, params_.n_windows, params_.n_options);
  const std::vector<double> canonical = action_distribution(obs);
  const int t = params_.templates();
  const int first = obs.answers_only ? params_.n_windows : 0;

  int chosen = first;
  if (req.sampling.temperature == 0.0) {
    for (int i = first; i < t; ++i) {
      if (canonical[i] > canonical[chosen]) chosen = i;
    }
  } else {
    // Tempered sampling over the logits, mixed with the noise floor.
    // Top-p/top-k filters are a token-level concern for remote endpoints and
    // are not applied to the template distribution.
    Rng rng(req.seed);
    if (rng.next_double() < params_.noise_floor) {
      chosen = params_.noise_template();
    } else {
      const double* row = params_.logits.data() + static_cast<size_t>(obs.row) * t;
      double max_logit = -std::numeric_limits<double>::infinity();
      for (int i = first; i < t; ++i) {
        max_logit = std::max(max_logit, row[i] / req.sampling.temperature);
      }
      std::vector<double> weights(t, 0.0);
      double z = 0.0;
      for (int i = first; i < t; ++i) {
        weights[i] = std::exp(row[i] / req.sampling.temperature - max_logit);
        z += weights[i];
      }
      double u = rng.next_double() * z;
      chosen = t - 1;
      for (int i = first; i < t; ++i) {
        if (u < weights[i]) {
          chosen = i;
          break;
        }
        u -= weights[i];
      }
    }
  }

  GenerationResponse resp;
  resp.text = render_template(chosen);
  // Log-prob under the unit-temperature policy, so summed per-turn values
  // always match score_trajectory.
  resp.total_logprob = std::log(canonical[chosen]);
  resp.token_count = approximate_token_count(resp.text);
  return resp;
}

std::string ToyPolicy::render_template(int tmpl) const {
  if (tmpl == params_.noise_template()) {
    return "hmm, hard to say";  // deliberately breaks the turn grammar
  }
  ParsedTurn turn;
  if (tmpl < params_.n_windows) {
    turn.kind = TurnKind::Grounding;
    turn.think = "inspect segment " + std::to_string(tmpl);
    turn.ground = GroundAction{tmpl * window_span_, (tmpl + 1) * window_span_ - 1};
  } else {
    const int option = tmpl - params_.n_windows;
    turn.kind = TurnKind::Answering;
    turn.think = "commit to an option";
    turn.answer = AnswerAction{std::string(1, static_cast<char>('A' + option))};
  }
  return render_action(turn);
}

int ToyPolicy::template_of(const ParsedTurn& parsed) const {
  if (parsed.kind == TurnKind::Grounding) {
    const int s = parsed.ground->start_frame;
    const int e = parsed.ground->end_frame;
    if (s % window_span_ != 0 || e != s + window_span_ - 1) {
      throw std::invalid_argument("toy policy: grounding action is not a whole window");
    }
    return s / window_span_;
  }
  if (parsed.kind == TurnKind::Answering) {
    const auto letter = normalize_option_letter(parsed.answer->text);
    if (!letter || *letter - 'A' >= params_.n_options) {
      throw std::invalid_argument("toy policy: answer outside the option set");
    }
    return params_.n_windows + (*letter - 'A');
  }
  return params_.noise_template();
}

ToyTrace ToyPolicy::trace(const Trajectory& traj) const {
  ToyTrace tr;
  std::vector<ViewPayload> views{traj.initial_view};
  for (const Turn& turn : traj.turns) {
    const ToyObservation obs =
        toy_observe(views, /*has_coarse=*/true, params_.n_windows, params_.n_options);
    tr.steps.push_back({obs.row, template_of(turn.parsed)});
    if (turn.injected_view) views.push_back(*turn.injected_view);
  }
  return tr;
}

double ToyPolicy::trace_logprob(const ToyPolicyParams& params, const ToyTrace& trace) {
  const int t = params.templates();
  double total = 0.0;
  for (const ToyTraceStep& step : trace.steps) {
    const double* row = params.logits.data() + static_cast<size_t>(step.row) * t;
    double max_logit = row[0];
    for (int i = 1; i < t; ++i) max_logit = std::max(max_logit, row[i]);
    double z = 0.0;
    for (int i = 0; i < t; ++i) z += std::exp(row[i] - max_logit);
    double p = (1.0 - params.noise_floor) * std::exp(row[step.tmpl] - max_logit) / z;
    if (step.tmpl == params.noise_template()) p += params.noise_floor;
    total += std::log(p);
  }
  return total;
}

double ToyPolicy::score_trajectory(const Trajectory& traj) const {
  return trace_logprob(params_, trace(traj));
}

void save_toy_params(const ToyPolicyParams& params, const std::string& path) {
  nlohmann::ordered_json j;
  j["n_windows"] = params.n_windows;
  j["n_options"] = params.n_options;
  j["noise_floor"] = params.noise_floor;
  j["logits"] = params.logits;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write toy params to '" + path + "'");
  out << j.dump() << "\n";
}

ToyPolicyParams load_toy_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read toy params from '" + path + "'");
  nlohmann::json j;
  in >> j;
  ToyPolicyParams p;
  p.n_windows = j.at("n_windows").get<int>();
  p.n_options = j.at("n_options").get<int>();
  p.noise_floor = j.value("noise_floor", 0.0);
  p.logits = j.at("logits").get<std::vector<double>>();
  if (p.logits.size() != static_cast<size_t>(p.rows()) * p.templates()) {
    throw std::runtime_error("toy params file has wrong logits size");
  }
  return p;
}

}  // namespace twg
