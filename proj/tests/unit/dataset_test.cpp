#include <doctest.h>

#include <filesystem>

#include "flashguard/dataset.hpp"
#include "flashguard/error.hpp"
#include "flashguard/synthetic.hpp"

using namespace flashguard;
namespace fs = std::filesystem;

TEST_CASE("labels CSV") {
  const auto labels = parse_labels_csv(
      "user_id,class,subtype\n"
      "a,offensive,obscene\n"
      "b,normal,potential_normal\n"
      "c,misbehaving,\n"
      "d,normal\n");
  REQUIRE(labels.size() == 4);
  CHECK(labels[0].misbehaving());
  CHECK(labels[1].subtype == UserSubtype::potential_normal);
  CHECK(labels[2].subtype == UserSubtype::obscene);
  CHECK_FALSE(labels[3].misbehaving());
  CHECK(parse_labels_csv(labels_csv(labels)).size() == 4);
  CHECK_THROWS_AS(parse_labels_csv("id,class\na,normal\n"), Error);
  CHECK_THROWS_AS(parse_labels_csv("user_id,class\na,weird\n"), Error);
  CHECK_THROWS_AS(parse_labels_csv("user_id,class,subtype\na,normal,obscene\n"), Error);
  CHECK_THROWS_AS(parse_labels_csv("user_id,class\na\n"), Error);
}

TEST_CASE("training table CSV") {
  const std::vector<TrainingRow> rows{{"a", {0.1, 0.2, 0.3}, true}, {"b", {0.0, 0.5, 1.0}, false}};
  const auto back = parse_training_csv(training_csv(rows));
  REQUIRE(back.size() == 2);
  CHECK(back[0].sp == rows[0].sp);
  CHECK(back[0].misbehaving);
  CHECK_FALSE(back[1].misbehaving);
  CHECK_THROWS_AS(parse_training_csv("user_id,sp1,sp2,sp3,label\na,0.1,0.2,x,normal\n"), Error);
  CHECK_THROWS_AS(parse_training_csv("user_id,sp1,sp2,sp3,label\na,0.1,0.2,0.3,maybe\n"), Error);
  CHECK_THROWS_AS(parse_training_csv("user_id,sp1\n"), Error);
}

TEST_CASE("dataset directory round-trip") {
  synthetic::CorpusOptions opts;
  opts.width = 32;
  opts.height = 24;
  opts.seed = 4;
  const auto ds = synthetic::generate_corpus(6, opts);
  const auto root = fs::temp_directory_path() / "flashguard_dataset_test";
  fs::remove_all(root);
  save_dataset(root, ds);
  CHECK(fs::exists(root / "labels.csv"));
  CHECK(fs::exists(root / ds.users[0].label.user_id / "frame_1.png"));
  CHECK(fs::exists(root / ds.users[0].label.user_id / "frame_1.det.json"));
  CHECK(fs::exists(root / ds.users[0].label.user_id / "frame_1.skin.png"));

  const auto back = load_dataset(root);
  REQUIRE(back.users.size() == ds.users.size());
  for (std::size_t u = 0; u < ds.users.size(); ++u) {
    const auto& a = ds.users[u];
    const auto& b = back.users[u];
    CHECK(b.label.user_id == a.label.user_id);
    CHECK(b.label.cls == a.label.cls);
    REQUIRE(b.seq.frames.size() == a.seq.frames.size());
    for (std::size_t f = 0; f < a.seq.frames.size(); ++f) {
      CHECK(b.seq.frames[f].pixels().size() == a.seq.frames[f].pixels().size());
      CHECK(std::equal(b.seq.frames[f].pixels().begin(), b.seq.frames[f].pixels().end(),
                       a.seq.frames[f].pixels().begin(),
                       [](const Rgb& x, const Rgb& y) { return x.r == y.r && x.g == y.g && x.b == y.b; }));
      CHECK(b.detections[f] == a.detections[f]);
      CHECK(b.masks[f] == a.masks[f]);
    }
    // Frame ids are image paths, so the provider replays the sidecars.
    const auto provider = b.provider();
    CHECK(provider.detect(b.seq.frames[0], b.seq.frame_id(0)) == *a.detections[0]);
  }

  fs::remove_all(root / ds.users[2].label.user_id);
  try {
    load_dataset(root);
    FAIL("expected io error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::io);
  }
}
