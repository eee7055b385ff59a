#include "flashguard/pipeline.hpp"

#include <json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>

#include "flashguard/error.hpp"

namespace flashguard {

using nlohmann::ordered_json;

namespace {

ordered_json belief_json(const BeliefPair& b) {
  return {{"bel_n", b.bel_n}, {"bel_f", b.bel_f}};
}

BeliefPair read_belief(const ordered_json& j) {
  return {j.at("bel_n").get<double>(), j.at("bel_f").get<double>()};
}

ordered_json detection_json(const Detection& d) {
  ordered_json j{{"kind", std::string(to_string(d.kind))}, {"present", d.present}};
  if (d.box) j["box"] = {d.box->x, d.box->y, d.box->w, d.box->h};
  return j;
}

Detection read_detection(const ordered_json& j) {
  const auto kind = detector_from_string(j.at("kind").get<std::string>());
  if (!kind) throw Error(Errc::parse, "unknown detector in verdict");
  Detection d{*kind, j.at("present").get<bool>(), std::nullopt};
  if (j.contains("box")) {
    const auto& b = j["box"];
    d.box = FaceBox{b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>(), b.at(3).get<int>()};
  }
  return d;
}

template <typename F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), std::string(name) + ": " + e.what());
  }
}

}  // namespace

std::string to_json(const Verdict& v) {
  ordered_json j;
  j["user_id"] = v.user_id;
  j["decision"] = to_string(v.decision);
  j["fused"] = belief_json(v.fused);
  j["per_frame_beliefs"] = ordered_json::array();
  for (const auto& b : v.per_frame_beliefs) j["per_frame_beliefs"].push_back(belief_json(b));
  j["chosen_frame"] = v.chosen_frame;
  j["skin_probability"] = v.skin_probability;
  j["skc"] = v.skc;
  j["sp"] = {v.sp.sp1, v.sp.sp2, v.sp.sp3};
  j["best_pair"] = v.best_pair;
  j["target_area"] = v.target_area;
  j["evidence_log"] = ordered_json::array();
  for (const auto& frame : v.evidence_log) {
    ordered_json f = ordered_json::array();
    for (const auto& d : frame) f.push_back(detection_json(d));
    j["evidence_log"].push_back(f);
  }
  return j.dump();
}

Verdict verdict_from_json(std::string_view text) {
  try {
    const auto j = ordered_json::parse(text);
    Verdict v;
    v.user_id = j.at("user_id").get<std::string>();
    v.decision = decision_from_string(j.at("decision").get<std::string>());
    v.fused = read_belief(j.at("fused"));
    for (const auto& b : j.at("per_frame_beliefs")) v.per_frame_beliefs.push_back(read_belief(b));
    v.chosen_frame = j.at("chosen_frame").get<std::size_t>();
    v.skin_probability = j.at("skin_probability").get<double>();
    v.skc = j.at("skc").get<double>();
    const auto& sp = j.at("sp");
    v.sp = {sp.at(0).get<double>(), sp.at(1).get<double>(), sp.at(2).get<double>()};
    v.best_pair = j.at("best_pair").get<std::size_t>();
    v.target_area = j.at("target_area").get<std::size_t>();
    for (const auto& frame : j.at("evidence_log")) {
      std::vector<Detection> ds;
      for (const auto& d : frame) ds.push_back(read_detection(d));
      v.evidence_log.push_back(std::move(ds));
    }
    return v;
  } catch (const ordered_json::exception& e) {
    throw Error(Errc::parse, std::string("verdict: ") + e.what());
  }
}

SkinAnalysis analyze_skin(const FrameSequence& seq, const ModelBundle& bundle,
                          std::span<const std::vector<Detection>> detections) {
  SkinAnalysis out;
  out.maps = consecutive_target_maps(seq, bundle.motion);
  out.best_pair = select_best_target_map_index(out.maps, bundle.motion);
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    const auto& f = seq.frames[i];
    out.faces.push_back(i < detections.size() ? first_face(detections[i], f.width(), f.height())
                                              : std::nullopt);
  }
  out.sp = user_sp(seq, out.maps[out.best_pair], out.best_pair, out.faces, bundle.palettes);
  return out;
}

Verdict classify_user(const FrameSequence& seq, const ModelBundle& bundle,
                      const DetectorProvider& provider) {
  seq.validate();
  Verdict v;
  v.user_id = seq.user_id;
  if (is_dark_sequence(seq, bundle.darkness_tau)) {
    v.decision = Decision::dark_webcam;
    return v;
  }

  const auto kinds = bundle.reliability.kinds();
  std::vector<std::vector<Detection>> raw;
  raw.reserve(seq.frames.size());
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    raw.push_back(provider.detect(seq.frames[i], seq.frame_id(i)));
    v.evidence_log.push_back(complete_detections(raw.back(), kinds, seq.frame_id(i)));
  }

  const auto analysis = analyze_skin(seq, bundle, raw);
  v.sp = analysis.sp;
  v.best_pair = analysis.best_pair;
  v.target_area = analysis.maps[analysis.best_pair].area();
  v.skc = skc(v.sp, bundle.skc);
  v.skin_probability = misbehaving_probability(v.skc, bundle.skc);
  const auto skin_mass = mass_from_probability(v.skin_probability);

  std::vector<FrameFusion> frames;
  frames.reserve(seq.frames.size());
  for (const auto& detections : v.evidence_log) {
    std::vector<BinaryEvidence> evidences;
    for (const auto& d : detections) {
      const auto* rel = bundle.reliability.find(d.kind);
      evidences.push_back({d.present, rel->rel_present, rel->rel_absent});
    }
    frames.push_back(fuse_frame(evidences, skin_mass));
  }
  const auto decided = decide_user(frames, bundle.theta);
  v.per_frame_beliefs = decided.per_frame;
  v.fused = decided.fused;
  v.chosen_frame = decided.chosen_frame;
  v.decision = decided.decision;
  return v;
}

std::vector<Verdict> classify_dataset(const Dataset& dataset, const ModelBundle& bundle,
                                      unsigned threads) {
  std::vector<Verdict> out(dataset.users.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, out.size())));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  const auto work = [&] {
    for (std::size_t i = next++; i < out.size() && !failed; i = next++) {
      try {
        const auto& rec = dataset.users[i];
        out[i] = classify_user(rec.seq, bundle, rec.provider());
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

namespace {

std::vector<double> skc_values(const SkcModel& model, std::span<const TrainingRow> rows) {
  std::vector<double> xs;
  xs.reserve(rows.size());
  for (const auto& r : rows) xs.push_back(skc(r.sp, model));
  return xs;
}

std::vector<std::uint8_t> label_bytes(std::span<const TrainingRow> rows) {
  std::vector<std::uint8_t> ys;
  ys.reserve(rows.size());
  for (const auto& r : rows) ys.push_back(r.misbehaving ? 1 : 0);
  return ys;
}

void fill_logistic(SkinModelFit& fit, std::span<const TrainingRow> rows) {
  const auto xs = skc_values(fit.model, rows);
  const auto ys = label_bytes(rows);
  fit.logistic = fit_logistic(xs, ys);
  fit.model.alpha = fit.logistic.alpha;
  fit.model.beta = fit.logistic.beta;
  fit.model.beta_se = fit.logistic.beta_se;
  constexpr int kGroups = 10;
  if (rows.size() >= static_cast<std::size_t>(kGroups)) {
    std::vector<double> probs;
    probs.reserve(xs.size());
    for (double x : xs) probs.push_back(misbehaving_probability(x, fit.model));
    fit.goodness = hosmer_lemeshow(probs, ys, kGroups);
  } else {
    spdlog::warn("only {} training rows; skipping the Hosmer-Lemeshow test", rows.size());
  }
  if (fit.model.beta_se > 0.0) fit.goodness.wald = wald(fit.model.beta, fit.model.beta_se);
}

std::vector<SkinProportionVector> sp_rows(std::span<const TrainingRow> rows) {
  std::vector<SkinProportionVector> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.sp);
  return out;
}

}  // namespace

SkinModelFit fit_skin_model(std::span<const TrainingRow> rows) {
  SkinModelFit fit;
  const auto sps = sp_rows(rows);
  fit.pca = fit_pca(sps);
  fit.model.standardization = fit.pca.standardization;
  fit.model.loadings = fit.pca.loadings;
  fill_logistic(fit, rows);
  return fit;
}

SkinModelFit refit_logistic(const SkcModel& base, std::span<const TrainingRow> rows) {
  SkinModelFit fit;
  fit.model = base;
  fill_logistic(fit, rows);
  return fit;
}

std::vector<LabeledDetections> labeled_detections(const Dataset& dataset,
                                                  std::span<const DetectorKind> kinds) {
  std::vector<LabeledDetections> out;
  for (const auto& rec : dataset.users) {
    LabeledDetections ld{rec.label.user_id, !rec.label.misbehaving(), {}};
    for (std::size_t i = 0; i < rec.detections.size(); ++i) {
      if (!rec.detections[i]) continue;
      std::vector<Detection> frame;
      for (auto kind : kinds) {
        const auto it = std::find_if(rec.detections[i]->begin(), rec.detections[i]->end(),
                                     [kind](const Detection& d) { return d.kind == kind; });
        frame.push_back(it == rec.detections[i]->end() ? Detection{kind, false, std::nullopt}
                                                       : *it);
      }
      ld.frames.push_back(std::move(frame));
    }
    if (!ld.frames.empty()) out.push_back(std::move(ld));
  }
  return out;
}

namespace {

struct PreparedTraining {
  ModelBundle bundle;
  std::vector<TrainingRow> table;
  std::vector<LabeledDetections> detections;
  std::size_t dark_users = 0;
};

PreparedTraining prepare(const Dataset& dataset, const TrainOptions& options) {
  if (dataset.users.empty()) throw Error(Errc::empty_input, "dataset has no users");
  PreparedTraining prep;
  prep.bundle = ModelBundle::defaults();
  prep.bundle.motion = options.motion;
  prep.bundle.theta = options.theta;
  prep.bundle.darkness_tau = options.darkness_tau;
  prep.bundle.motion.validate();

  std::vector<const UserRecord*> usable;
  for (const auto& rec : dataset.users) {
    rec.seq.validate();
    if (is_dark_sequence(rec.seq, options.darkness_tau)) {
      ++prep.dark_users;
    } else {
      usable.push_back(&rec);
    }
  }
  if (prep.dark_users > 0) spdlog::info("skipping {} dark users", prep.dark_users);

  prep.bundle.palettes[2] = stage("palette3", [&] {
    std::vector<MarkedFrame> marked;
    for (const auto* rec : usable) {
      if (!rec->label.misbehaving()) continue;
      for (std::size_t i = 0; i < rec->masks.size() && i < rec->seq.frames.size(); ++i) {
        if (rec->masks[i]) marked.push_back({rec->seq.frames[i], *rec->masks[i]});
      }
    }
    return train_palette3(marked, options.palette3);
  });

  prep.table = stage("skin-proportion", [&] {
    std::vector<TrainingRow> rows;
    rows.reserve(usable.size());
    for (const auto* rec : usable) {
      std::vector<std::vector<Detection>> dets;
      for (std::size_t i = 0; i < rec->seq.frames.size(); ++i) {
        dets.push_back(i < rec->detections.size() && rec->detections[i] ? *rec->detections[i]
                                                                        : std::vector<Detection>{});
      }
      const auto analysis = analyze_skin(rec->seq, prep.bundle, dets);
      rows.push_back({rec->label.user_id, analysis.sp, rec->label.misbehaving()});
    }
    return rows;
  });

  stage("reliability", [&] {
    Dataset light;
    for (const auto* rec : usable) {
      UserRecord r;
      r.label = rec->label;
      r.detections = rec->detections;
      light.users.push_back(std::move(r));
    }
    prep.detections = labeled_detections(light, kAllDetectors);
    if (prep.detections.empty()) {
      spdlog::warn("dataset carries no detection sidecars; keeping the published reliability table");
      return;
    }
    auto cfg = options.calibration;
    cfg.seed = options.seed;
    prep.bundle.reliability = calibrate_reliability(prep.detections, cfg);
  });
  return prep;
}

}  // namespace

TrainResult train(const Dataset& dataset, const TrainOptions& options) {
  auto prep = prepare(dataset, options);
  TrainResult out;
  out.skin = stage("skin-model", [&] { return fit_skin_model(prep.table); });
  prep.bundle.skc = out.skin.model;
  prep.bundle.validate();
  out.bundle = std::move(prep.bundle);
  out.table = std::move(prep.table);
  out.detections = std::move(prep.detections);
  out.dark_users = prep.dark_users;
  return out;
}

TrainResult calibrate(const Dataset& dataset, const TrainOptions& options) {
  auto prep = prepare(dataset, options);
  TrainResult out;
  out.skin = stage("skin-model", [&] {
    SkinModelFit fit;
    const auto sps = sp_rows(prep.table);
    fit.model = SkcModel::published();
    fit.model.standardization = standardization_of(sps);
    return fit;
  });
  prep.bundle.skc = out.skin.model;
  prep.bundle.validate();
  out.bundle = std::move(prep.bundle);
  out.table = std::move(prep.table);
  out.detections = std::move(prep.detections);
  out.dark_users = prep.dark_users;
  return out;
}

}  // namespace flashguard
