#include "twg/data.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "twg/rng.hpp"

namespace twg {

using nlohmann::json;

std::string to_string(SampleSource s) {
  switch (s) {
    case SampleSource::NextGQA: return "NextGQA";
    case SampleSource::CGBench: return "CGBench";
    case SampleSource::GeneralQA: return "GeneralQA";
    case SampleSource::Synthetic: return "Synthetic";
  }
  return "GeneralQA";
}

std::optional<SampleSource> source_from_string(std::string_view s) {
  if (s == "NextGQA") return SampleSource::NextGQA;
  if (s == "CGBench") return SampleSource::CGBench;
  if (s == "GeneralQA") return SampleSource::GeneralQA;
  if (s == "Synthetic") return SampleSource::Synthetic;
  return std::nullopt;
}

namespace {

// Parses one record, throwing DataError with a message that the caller
// prefixes with the line number.
Sample parse_record(const json& j) {
  if (!j.is_object()) throw DataError("record is not a JSON object");
  if (j.contains("schema") && j.at("schema").get<std::string>() != "twg-sample-v1") {
    throw DataError("unknown schema tag '" + j.at("schema").get<std::string>() + "'");
  }

  Sample s;
  if (!j.contains("sample_id") || !j.at("sample_id").is_string()) {
    throw DataError("missing string field 'sample_id'");
  }
  s.sample_id = j.at("sample_id").get<std::string>();
  if (s.sample_id.empty()) throw DataError("sample_id is empty");

  if (!j.contains("video") || !j.at("video").is_object()) {
    throw DataError("missing object field 'video'");
  }
  const json& v = j.at("video");
  if (!v.contains("video_id") || !v.at("video_id").is_string()) {
    throw DataError("missing string field 'video.video_id'");
  }
  s.video.video_id = v.at("video_id").get<std::string>();
  if (!v.contains("duration_s") || !v.at("duration_s").is_number()) {
    throw DataError("missing numeric field 'video.duration_s'");
  }
  s.video.duration_s = v.at("duration_s").get<double>();
  if (!(s.video.duration_s > 0.0)) throw DataError("video.duration_s must be positive");
  s.video.source_uri = v.value("uri", std::string());
  if (v.contains("attachments")) {
    if (!v.at("attachments").is_array()) throw DataError("'video.attachments' must be an array");
    for (const json& a : v.at("attachments")) {
      const double t = a.at("t").get<double>();
      if (t < 0.0 || t > s.video.duration_s) {
        throw DataError("attachment timestamp outside [0, duration]");
      }
      s.video.frame_attachments[t] = a.at("payload").get<std::string>();
    }
  }

  if (!j.contains("question") || !j.at("question").is_string()) {
    throw DataError("missing string field 'question'");
  }
  s.question = j.at("question").get<std::string>();
  if (s.question.empty()) throw DataError("question is empty");

  if (!j.contains("options") || !j.at("options").is_array()) {
    throw DataError("missing array field 'options'");
  }
  for (const json& o : j.at("options")) {
    if (!o.is_string()) throw DataError("options must be strings");
    s.options.push_back(o.get<std::string>());
  }
  if (s.options.size() < 2) throw DataError("need at least 2 options");
  if (s.options.size() > 26) throw DataError("more than 26 options");

  if (!j.contains("answer_key") || !j.at("answer_key").is_string()) {
    throw DataError("missing string field 'answer_key'");
  }
  s.answer_key = j.at("answer_key").get<std::string>();
  if (s.answer_key.size() != 1 || s.answer_key[0] < 'A' ||
      s.answer_key[0] >= static_cast<char>('A' + s.options.size())) {
    throw DataError("answer_key '" + s.answer_key + "' does not index the " +
                    std::to_string(s.options.size()) + " options");
  }

  if (j.contains("grounding") && !j.at("grounding").is_null()) {
    const json& g = j.at("grounding");
    Interval gt;
    gt.start_s = g.at("start_s").get<double>();
    gt.end_s = g.at("end_s").get<double>();
    if (gt.start_s > gt.end_s) throw DataError("grounding start_s > end_s");
    if (gt.start_s < 0.0 || gt.end_s > s.video.duration_s) {
      throw DataError("grounding outside [0, duration]");
    }
    s.gt_grounding = gt;
  }

  const std::string source = j.value("source", std::string("GeneralQA"));
  const auto parsed = source_from_string(source);
  if (!parsed) throw DataError("unknown source '" + source + "'");
  s.source = *parsed;
  return s;
}

}  // namespace

std::vector<Sample> load_samples(std::istream& in, std::vector<Diagnostic>* diagnostics) {
  std::vector<Sample> samples;
  std::unordered_set<std::string> seen_ids;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    // Tolerate blank lines between records.
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      Sample s = parse_record(j);
      if (!seen_ids.insert(s.sample_id).second) {
        throw DataError("duplicate sample_id '" + s.sample_id + "'");
      }
      samples.push_back(std::move(s));
    } catch (const json::exception& e) {
      if (diagnostics) diagnostics->push_back({line_no, std::string("JSON: ") + e.what()});
    } catch (const DataError& e) {
      if (diagnostics) diagnostics->push_back({line_no, e.what()});
    }
  }
  return samples;
}

std::vector<Sample> load_samples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file '" + path + "'");
  std::vector<Diagnostic> diags;
  std::vector<Sample> samples = load_samples(in, &diags);
  if (!diags.empty()) {
    std::ostringstream msg;
    msg << path << ": " << diags.size() << " invalid record(s)";
    for (const Diagnostic& d : diags) msg << "\n  line " << d.line << ": " << d.message;
    throw DataError(msg.str());
  }
  return samples;
}

nlohmann::ordered_json sample_to_json(const Sample& s) {
  nlohmann::ordered_json j;
  j["schema"] = "twg-sample-v1";
  j["sample_id"] = s.sample_id;
  nlohmann::ordered_json video;
  video["video_id"] = s.video.video_id;
  video["duration_s"] = s.video.duration_s;
  video["uri"] = s.video.source_uri;
  if (!s.video.frame_attachments.empty()) {
    nlohmann::ordered_json attachments = nlohmann::ordered_json::array();
    for (const auto& [t, payload] : s.video.frame_attachments) {
      attachments.push_back(nlohmann::ordered_json{{"t", t}, {"payload", payload}});
    }
    video["attachments"] = std::move(attachments);
  }
  j["video"] = std::move(video);
  j["question"] = s.question;
  j["options"] = s.options;
  j["answer_key"] = s.answer_key;
  if (s.gt_grounding) {
    j["grounding"] = nlohmann::ordered_json{{"start_s", s.gt_grounding->start_s},
                                            {"end_s", s.gt_grounding->end_s}};
  }
  j["source"] = to_string(s.source);
  return j;
}

void write_samples(const std::vector<Sample>& samples, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write dataset file '" + path + "'");
  for (const Sample& s : samples) out << sample_to_json(s).dump() << "\n";
}

std::vector<Sample> filter_min_duration(const std::vector<Sample>& samples, double min_s) {
  if (!(min_s > 0.0)) throw std::invalid_argument("filter_min_duration: min_s must be positive");
  std::vector<Sample> kept;
  for (const Sample& s : samples) {
    if (s.video.duration_s >= min_s) kept.push_back(s);
  }
  return kept;
}

std::vector<Sample> filter_label_coverage(const std::vector<Sample>& samples, double min_iou) {
  if (!(min_iou > 0.0 && min_iou < 1.0)) {
    throw std::invalid_argument("filter_label_coverage: min_iou must be in (0, 1)");
  }
  std::vector<Sample> kept;
  for (const Sample& s : samples) {
    if (s.gt_grounding) {
      const Interval whole{0.0, s.video.duration_s};
      if (temporal_iou(*s.gt_grounding, whole) < min_iou) continue;
    }
    kept.push_back(s);
  }
  return kept;
}

BatchStream::BatchStream(const CurriculumStage& stage, const std::vector<Sample>& corpus,
                         int batch_size, uint64_t seed)
    : batch_size_(batch_size), seed_(seed) {
  if (batch_size < 1) throw std::invalid_argument("BatchStream: batch_size must be >= 1");
  for (const Sample& s : corpus) {
    if (stage.stage == Stage::Stage1) {
      if (!s.labeled() || !stage.admitted_sources.contains(s.source)) continue;
    }
    admitted_.push_back(&s);
  }
  if (admitted_.empty()) throw DataError("curriculum stage admits no samples");
  order_.resize(admitted_.size());
  reshuffle();
}

void BatchStream::reshuffle() {
  for (size_t i = 0; i < order_.size(); ++i) order_[i] = i;
  Rng rng(mix_seed(seed_, static_cast<uint64_t>(epoch_)));
  for (size_t i = order_.size(); i > 1; --i) {
    const size_t j = rng.below(i);
    std::swap(order_[i - 1], order_[j]);
  }
  cursor_ = 0;
}

std::vector<const Sample*> BatchStream::next() {
  if (cursor_ >= order_.size()) {
    ++epoch_;
    reshuffle();
  }
  std::vector<const Sample*> batch;
  const size_t end = std::min(cursor_ + static_cast<size_t>(batch_size_), order_.size());
  for (; cursor_ < end; ++cursor_) batch.push_back(admitted_[order_[cursor_]]);
  return batch;
}

DatasetStats compute_stats(const std::vector<Sample>& samples) {
  DatasetStats stats;
  static constexpr double kEdges[5] = {20.0, 60.0, 180.0, 600.0, 1800.0};
  for (const Sample& s : samples) {
    ++stats.total;
    if (s.labeled()) {
      ++stats.labeled;
    } else {
      ++stats.unlabeled;
    }
    ++stats.per_source[to_string(s.source)];
    size_t bucket = 5;
    for (size_t b = 0; b < 5; ++b) {
      if (s.video.duration_s < kEdges[b]) {
        bucket = b;
        break;
      }
    }
    ++stats.duration_histogram[bucket];
  }
  return stats;
}

}  // namespace twg
