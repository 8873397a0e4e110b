#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "twg/interval.hpp"
#include "twg/videorep.hpp"

namespace twg {

enum class SampleSource { NextGQA, CGBench, GeneralQA, Synthetic };

std::string to_string(SampleSource s);
std::optional<SampleSource> source_from_string(std::string_view s);

// One multiple-choice QA instance. gt_grounding is the evidence interval in
// seconds when the source dataset annotates one.
struct Sample {
  std::string sample_id;
  VideoMeta video;
  std::string question;
  std::vector<std::string> options;
  std::string answer_key;  // single option letter, "A"..
  std::optional<Interval> gt_grounding;
  SampleSource source = SampleSource::GeneralQA;

  bool labeled() const { return gt_grounding.has_value(); }
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Diagnostic {
  int line = 0;
  std::string message;
};

// JSON-lines loader for the sample schema (see docs/formats.md). The lenient
// form records one diagnostic per rejected line and returns the valid
// records; the strict form throws DataError listing every problem.
std::vector<Sample> load_samples(std::istream& in, std::vector<Diagnostic>* diagnostics);
std::vector<Sample> load_samples(const std::string& path);

nlohmann::ordered_json sample_to_json(const Sample& s);
void write_samples(const std::vector<Sample>& samples, const std::string& path);

// Drops samples with video shorter than min_s (boundary kept).
std::vector<Sample> filter_min_duration(const std::vector<Sample>& samples, double min_s);

// Drops labeled samples whose label covers less than min_iou of the whole
// video, measured as temporal_iou(label, [0, duration]). Boundary kept;
// unlabeled samples pass through.
std::vector<Sample> filter_label_coverage(const std::vector<Sample>& samples, double min_iou);

enum class Stage { Stage1, Stage2 };

// Stage1 is the cold-start curriculum slice: labeled samples from the
// admitted sources only. Stage2 streams the whole corpus.
struct CurriculumStage {
  Stage stage = Stage::Stage1;
  std::set<SampleSource> admitted_sources = {SampleSource::NextGQA};
};

// Deterministic epoch-shuffled batch stream. Batches within one epoch are
// disjoint and together cover the admitted multiset; the final batch of an
// epoch may be short.
class BatchStream {
 public:
  BatchStream(const CurriculumStage& stage, const std::vector<Sample>& corpus, int batch_size,
              uint64_t seed);

  std::vector<const Sample*> next();
  int epoch() const { return epoch_; }
  size_t admitted_size() const { return order_.size(); }

 private:
  void reshuffle();

  std::vector<const Sample*> admitted_;
  std::vector<size_t> order_;
  int batch_size_;
  uint64_t seed_;
  int epoch_ = 0;
  size_t cursor_ = 0;
};

struct DatasetStats {
  int total = 0;
  int labeled = 0;
  int unlabeled = 0;
  std::map<std::string, int> per_source;
  // duration histogram, fixed edges in seconds:
  // [0,20) [20,60) [60,180) [180,600) [600,1800) [1800,inf)
  std::vector<int> duration_histogram = std::vector<int>(6, 0);
};

DatasetStats compute_stats(const std::vector<Sample>& samples);

}  // namespace twg
