#include "doctest.h"

#include <map>
#include <sstream>

#include "twg/data.hpp"
#include "twg/synthetic.hpp"

using namespace twg;

namespace {

const char* kGoodRecord =
    R"({"sample_id":"s1","video":{"video_id":"v1","duration_s":120.5,"uri":"file://a"},)"
    R"("question":"what?","options":["x","y","z","w"],"answer_key":"B",)"
    R"("grounding":{"start_s":3.0,"end_s":9.5},"source":"NextGQA"})";

Sample mk(double duration, const char* id, std::optional<Interval> gt,
          SampleSource source = SampleSource::NextGQA) {
  Sample s;
  s.sample_id = id;
  s.video.video_id = std::string("v-") + id;
  s.video.duration_s = duration;
  s.question = "q";
  s.options = {"a", "b"};
  s.answer_key = "A";
  s.gt_grounding = gt;
  s.source = source;
  return s;
}

}  // namespace

TEST_CASE("loader: well-formed records") {
  std::istringstream in(std::string(kGoodRecord) + "\n" +
                        R"({"sample_id":"s2","video":{"video_id":"v2","duration_s":45},)" +
                        R"("question":"?","options":["a","b"],"answer_key":"A"})" + "\n\n" +
                        R"({"sample_id":"s3","video":{"video_id":"v3","duration_s":400,)" +
                        R"("attachments":[{"t":9.0,"payload":"detail=1|hint=2"}]},)" +
                        R"("question":"?","options":["a","b","c"],"answer_key":"C",)" +
                        R"("source":"Synthetic"})");
  std::vector<Diagnostic> diags;
  const auto samples = load_samples(in, &diags);
  CHECK(diags.empty());
  REQUIRE(samples.size() == 3);
  CHECK(samples[0].gt_grounding.has_value());
  CHECK(samples[0].source == SampleSource::NextGQA);
  CHECK(samples[1].source == SampleSource::GeneralQA);  // default
  CHECK(!samples[1].gt_grounding.has_value());
  CHECK(samples[2].video.frame_attachments.size() == 1);
}

TEST_CASE("loader: rejects invalid records with line numbers") {
  std::istringstream in(
      std::string(R"({"sample_id":"a","video":{"video_id":"v","duration_s":60},)") +
      R"("question":"?","options":["x","y","z","w"],"answer_key":"E"})" + "\n" +
      R"({"sample_id":"b","video":{"video_id":"v","duration_s":60},)" +
      R"("question":"?","options":["x","y"],"answer_key":"A",)" +
      R"("grounding":{"start_s":10.0,"end_s":70.0}})" + "\n" + kGoodRecord + "\n" +
      kGoodRecord);  // duplicate id on line 4
  std::vector<Diagnostic> diags;
  const auto samples = load_samples(in, &diags);
  CHECK(samples.size() == 1);
  REQUIRE(diags.size() == 3);
  CHECK(diags[0].line == 1);  // answer key outside options
  CHECK(diags[1].line == 2);  // grounding beyond duration
  CHECK(diags[2].line == 4);
  CHECK(diags[2].message.find("duplicate") != std::string::npos);
}

TEST_CASE("filter_min_duration keeps the boundary") {
  std::vector<Sample> corpus{mk(15.0, "short", std::nullopt), mk(20.0, "boundary", std::nullopt),
                             mk(300.0, "long", std::nullopt)};
  const auto kept = filter_min_duration(corpus, 20.0);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].sample_id == "boundary");
  CHECK(kept[1].sample_id == "long");
}

TEST_CASE("filter_label_coverage applies only to labeled samples") {
  std::vector<Sample> corpus{
      mk(1000.0, "tiny-label", Interval{0.0, 5.0}),    // coverage 0.005
      mk(1000.0, "ok-label", Interval{0.0, 60.0}),     // coverage 0.06
      mk(1000.0, "boundary", Interval{0.0, 10.0}),     // coverage 0.01 exactly, kept
      mk(1000.0, "unlabeled", std::nullopt),
  };
  const auto kept = filter_label_coverage(corpus, 0.01);
  REQUIRE(kept.size() == 3);
  CHECK(kept[0].sample_id == "ok-label");
  CHECK(kept[1].sample_id == "boundary");
  CHECK(kept[2].sample_id == "unlabeled");
}

TEST_CASE("filters are pointwise, so composition order does not matter") {
  std::vector<Sample> corpus;
  for (int i = 0; i < 40; ++i) {
    const double duration = 10.0 + i * 7.0;
    corpus.push_back(mk(duration, ("s" + std::to_string(i)).c_str(),
                        i % 3 == 0 ? std::optional<Interval>(Interval{0.0, duration * 0.004})
                                   : std::nullopt));
  }
  const auto a = filter_label_coverage(filter_min_duration(corpus, 20.0), 0.01);
  const auto b = filter_min_duration(filter_label_coverage(corpus, 0.01), 20.0);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) CHECK(a[i].sample_id == b[i].sample_id);
}

TEST_CASE("curriculum: stage 1 admits labeled admitted-source samples only") {
  std::vector<Sample> corpus{
      mk(60, "ng-labeled", Interval{1, 2}, SampleSource::NextGQA),
      mk(60, "ng-unlabeled", std::nullopt, SampleSource::NextGQA),
      mk(60, "cg-labeled", Interval{1, 2}, SampleSource::CGBench),
      mk(60, "gen", std::nullopt, SampleSource::GeneralQA),
  };
  BatchStream stream(CurriculumStage{}, corpus, 8, 42);
  CHECK(stream.admitted_size() == 1);
  const auto batch = stream.next();
  REQUIRE(batch.size() == 1);
  CHECK(batch[0]->sample_id == "ng-labeled");

  // empty admitted set is an error
  std::vector<Sample> unlabeled_only{mk(60, "u", std::nullopt, SampleSource::GeneralQA)};
  CHECK_THROWS_AS(BatchStream(CurriculumStage{}, unlabeled_only, 8, 42), DataError);
}

TEST_CASE("curriculum: stage 2 preserves the corpus multiset per epoch") {
  std::vector<Sample> corpus;
  for (int i = 0; i < 23; ++i) {
    corpus.push_back(mk(60, ("s" + std::to_string(i)).c_str(),
                        i % 2 ? std::optional<Interval>(Interval{1, 2}) : std::nullopt,
                        i % 3 ? SampleSource::GeneralQA : SampleSource::NextGQA));
  }
  BatchStream stream(CurriculumStage{Stage::Stage2, {}}, corpus, 5, 99);
  CHECK(stream.admitted_size() == 23);

  // one epoch covers the 23 samples exactly: 4 full batches plus one of 3
  std::map<std::string, int> seen;
  size_t total = 0;
  for (int batch = 0; batch < 5; ++batch) {
    const auto items = stream.next();
    total += items.size();
    for (const Sample* s : items) ++seen[s->sample_id];
  }
  CHECK(total == 23);
  CHECK(seen.size() == 23);
  for (const auto& [id, count] : seen) {
    CHECK(count == 1);
  }
  CHECK(stream.epoch() == 0);
  stream.next();  // first batch of the next epoch reshuffles
  CHECK(stream.epoch() == 1);
}

TEST_CASE("curriculum: same seed, same batch sequence") {
  std::vector<Sample> corpus;
  for (int i = 0; i < 17; ++i) {
    corpus.push_back(mk(60, ("s" + std::to_string(i)).c_str(), Interval{1, 2}));
  }
  BatchStream a(CurriculumStage{}, corpus, 4, 7);
  BatchStream b(CurriculumStage{}, corpus, 4, 7);
  for (int i = 0; i < 12; ++i) {
    const auto ba = a.next();
    const auto bb = b.next();
    REQUIRE(ba.size() == bb.size());
    for (size_t k = 0; k < ba.size(); ++k) CHECK(ba[k]->sample_id == bb[k]->sample_id);
  }
  BatchStream c(CurriculumStage{}, corpus, 4, 8);
  bool differs = false;
  BatchStream a2(CurriculumStage{}, corpus, 4, 7);
  for (int i = 0; i < 12 && !differs; ++i) {
    const auto ba = a2.next();
    const auto bc = c.next();
    for (size_t k = 0; k < ba.size() && k < bc.size(); ++k) {
      if (ba[k]->sample_id != bc[k]->sample_id) differs = true;
    }
  }
  CHECK(differs);
}

TEST_CASE("stats recount the stream") {
  std::vector<Sample> corpus{
      mk(15, "a", Interval{1, 2}, SampleSource::NextGQA),
      mk(25, "b", std::nullopt, SampleSource::GeneralQA),
      mk(700, "c", Interval{1, 2}, SampleSource::CGBench),
      mk(2500, "d", std::nullopt, SampleSource::GeneralQA),
  };
  const DatasetStats stats = compute_stats(corpus);
  CHECK(stats.total == 4);
  CHECK(stats.labeled == 2);
  CHECK(stats.unlabeled == 2);
  CHECK(stats.per_source.at("GeneralQA") == 2);
  CHECK(stats.duration_histogram[0] == 1);  // 15 s
  CHECK(stats.duration_histogram[1] == 1);  // 25 s
  CHECK(stats.duration_histogram[4] == 1);  // 700 s
  CHECK(stats.duration_histogram[5] == 1);  // 2500 s
}

TEST_CASE("synthetic corpus: geometry and label placement") {
  SyntheticSpec spec;
  spec.n_samples = 40;
  spec.labeled_fraction = 1.0;
  spec.global_fraction = 0.0;
  spec.seed = 3;
  const auto corpus = make_needle_corpus(spec);
  REQUIRE(corpus.size() == 40);
  for (const Sample& s : corpus) {
    REQUIRE(s.source == SampleSource::Synthetic);
    REQUIRE(s.gt_grounding.has_value());
    REQUIRE(s.gt_grounding->start_s >= 0.0);
    REQUIRE(s.gt_grounding->end_s <= s.video.duration_s);
    REQUIRE(s.options.size() == 4);
    // hint + needle markers
    REQUIRE(s.video.frame_attachments.size() == 2);
  }
  // deterministic for a fixed seed
  const auto again = make_needle_corpus(spec);
  CHECK(again[7].answer_key == corpus[7].answer_key);
  CHECK(again[7].gt_grounding->start_s == corpus[7].gt_grounding->start_s);
}
