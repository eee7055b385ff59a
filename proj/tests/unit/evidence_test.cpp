#include <doctest.h>

#include <filesystem>
#include <random>

#include "flashguard/dataset.hpp"
#include "flashguard/error.hpp"
#include "flashguard/evidence.hpp"

using namespace flashguard;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("flashguard_evidence_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::vector<Detection> frame_with(bool face, bool eye) {
  return {{DetectorKind::face, face, std::nullopt}, {DetectorKind::eye, eye, std::nullopt}};
}

// Users draw face/eye outcomes from class-conditional rates.
std::vector<LabeledDetections> drawn_corpus(std::uint64_t seed, std::size_t users, double pi,
                                            double face_n, double face_f) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution is_normal(pi);
  std::vector<LabeledDetections> out;
  for (std::size_t u = 0; u < users; ++u) {
    const bool normal = is_normal(rng);
    std::bernoulli_distribution face(normal ? face_n : face_f), eye(0.5);
    LabeledDetections rec{"u" + std::to_string(u), normal, {}};
    for (int f = 0; f < 3; ++f) rec.frames.push_back(frame_with(face(rng), eye(rng)));
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace

TEST_CASE("detector names") {
  for (auto kind : kAllDetectors) CHECK(detector_from_string(to_string(kind)) == kind);
  CHECK(to_string(DetectorKind::upper_body) == "upper_body");
  CHECK_FALSE(detector_from_string("torso"));
}

TEST_CASE("published reliability table") {
  const auto t = ReliabilityTable::published();
  CHECK(t.entries.size() == 5);
  CHECK(t.find(DetectorKind::face)->rel_present == 0.984);
  CHECK(t.find(DetectorKind::face)->rel_absent == 0.327);
  CHECK(t.find(DetectorKind::eye)->rel_present == 0.773);
  CHECK(t.find(DetectorKind::nose)->rel_absent == 0.455);
  CHECK(t.find(DetectorKind::mouth)->stdev_absent == 0.020);
  CHECK(t.find(DetectorKind::upper_body)->rel_present == 0.821);
  CHECK(t.find(DetectorKind::upper_body)->stdev_present == 0.030);
  ReliabilityTable bad = t;
  bad.entries[DetectorKind::eye].rel_present = 1.2;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("sidecars are strict") {
  const auto d = parse_sidecar(R"({"face": {"present": true, "box": [1, 2, 3, 4]}, "eye": {"present": false}})");
  REQUIRE(d.size() == 2);
  const auto face = std::find_if(d.begin(), d.end(), [](const Detection& x) { return x.kind == DetectorKind::face; });
  CHECK(face->box == FaceBox{1, 2, 3, 4});
  CHECK(parse_sidecar(sidecar_json(d)) == d);
  CHECK_THROWS_AS(parse_sidecar(R"({"eye": {"present": true, "box": [1, 2, 3, 4]}})"), Error);
  CHECK_THROWS_AS(parse_sidecar(R"({"face": {"present": false, "box": [1, 2, 3, 4]}})"), Error);
  CHECK_THROWS_AS(parse_sidecar(R"({"face": {"present": "yes"}})"), Error);
  CHECK_THROWS_AS(parse_sidecar("[1, 2]"), Error);
  CHECK_THROWS_AS(parse_sidecar("{"), Error);
  CHECK(parse_sidecar(R"({"torso": {"present": true}})").empty());
}

TEST_CASE("first face is clipped to the frame") {
  const std::vector<Detection> ds{{DetectorKind::eye, true, std::nullopt},
                                  {DetectorKind::face, true, FaceBox{-5, 10, 20, 100}}};
  const auto f = first_face(ds, 40, 30);
  REQUIRE(f);
  CHECK(*f == FaceBox{0, 10, 15, 20});
  CHECK_FALSE(first_face(frame_with(true, true), 40, 30));
}

TEST_CASE("missing kinds count as absent") {
  const std::vector<DetectorKind> kinds{DetectorKind::face, DetectorKind::mouth};
  const std::vector<Detection> raw{{DetectorKind::mouth, true, std::nullopt}};
  const auto out = complete_detections(raw, kinds, "f");
  REQUIRE(out.size() == 2);
  CHECK(out[0] == Detection{DetectorKind::face, false, std::nullopt});
  CHECK(out[1].present);
}

TEST_CASE("providers") {
  const auto frame = Frame::filled(4, 4, {});
  ConstantProvider on(true, FaceBox{0, 0, 2, 2});
  const auto ds = on.detect(frame, "x");
  CHECK(ds.size() == kAllDetectors.size());
  CHECK(ds[0].box == FaceBox{0, 0, 2, 2});

  RecordedProvider rec;
  rec.add("a", frame_with(true, false));
  CHECK(rec.detect(frame, "a").size() == 2);
  CHECK(rec.detect(frame, "b").empty());

  const auto dir = scratch("sidecars");
  write_text_file(dir / "frame_1.det.json", R"({"face": {"present": true}})");
  const SidecarProvider side(dir);
  CHECK(side.detect(frame, "/elsewhere/frame_1.png").size() == 1);
  CHECK(side.detect(frame, "/elsewhere/frame_2.png").empty());
  const SidecarProvider beside;
  CHECK(beside.detect(frame, (dir / "frame_1.png").string()).size() == 1);
  CHECK(sidecar_path("a/b/frame_3.png", std::nullopt) == fs::path("a/b/frame_3.det.json"));
  try {
    SidecarProvider missing(dir / "nope");
    FAIL("expected provider_unavailable");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::provider_unavailable);
  }
}

TEST_CASE("detections JSONL round-trip") {
  const auto corpus = drawn_corpus(1, 20, 0.6, 0.8, 0.2);
  const auto back = parse_detections_jsonl(detections_jsonl(corpus));
  REQUIRE(back.size() == corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    CHECK(back[i].user_id == corpus[i].user_id);
    CHECK(back[i].normal == corpus[i].normal);
    CHECK(back[i].frames == corpus[i].frames);
  }
  CHECK_THROWS_AS(parse_detections_jsonl("{\"user_id\": 1}\n"), Error);
}

TEST_CASE("bootstrap on a perfectly separating detector") {
  std::vector<LabeledDetections> corpus;
  for (int u = 0; u < 50; ++u) {
    const bool normal = u % 3 != 0;
    corpus.push_back({"u" + std::to_string(u), normal, {frame_with(normal, u % 2 == 0)}});
  }
  CalibrationConfig cfg;
  cfg.sample_size = 200;
  cfg.seed = 3;
  const auto t = calibrate_reliability(corpus, cfg);
  const auto* face = t.find(DetectorKind::face);
  REQUIRE(face);
  CHECK(face->rel_present == 1.0);
  CHECK(face->rel_absent == 0.0);
  CHECK(face->stdev_present == 0.0);
  CHECK(face->stdev_absent == 0.0);
  CHECK_FALSE(t.find(DetectorKind::nose));
}

TEST_CASE("bootstrap mean tracks the corpus precision") {
  const auto corpus = drawn_corpus(9, 4000, 0.6, 0.7, 0.05);
  // Corpus-level precision by direct counting.
  double fired = 0, fired_normal = 0, silent = 0, silent_normal = 0;
  for (const auto& u : corpus) {
    for (const auto& f : u.frames) {
      (f[0].present ? fired : silent) += 1;
      if (u.normal) (f[0].present ? fired_normal : silent_normal) += 1;
    }
  }
  CalibrationConfig cfg;
  cfg.seed = 11;
  const auto t = calibrate_reliability(corpus, cfg);
  const auto* face = t.find(DetectorKind::face);
  CHECK(std::abs(face->rel_present - fired_normal / fired) < 4 * face->stdev_present + 1e-3);
  CHECK(std::abs(face->rel_absent - silent_normal / silent) < 4 * face->stdev_absent + 1e-3);
  CHECK(face->stdev_present > 0.0);
  // Expected precision from the generating rates.
  const double expected = 0.6 * 0.7 / (0.6 * 0.7 + 0.4 * 0.05);
  CHECK(std::abs(face->rel_present - expected) < 0.02);
  // Same seed, same table.
  CHECK(calibrate_reliability(corpus, cfg) == t);
  cfg.seed = 12;
  CHECK_FALSE(calibrate_reliability(corpus, cfg) == t);
}

TEST_CASE("bootstrap errors") {
  CalibrationConfig cfg;
  CHECK_THROWS_AS(calibrate_reliability({}, cfg), Error);
  std::vector<LabeledDetections> one_sided{{"a", true, {frame_with(true, true)}},
                                           {"b", false, {frame_with(true, false)}}};
  try {
    calibrate_reliability(one_sided, cfg);
    FAIL("expected empty_outcome_class");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::empty_outcome_class);
  }
  cfg.k = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.k = 10;
  cfg.sample_size = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}
