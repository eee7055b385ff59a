#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flashguard/bundle.hpp"
#include "flashguard/dataset.hpp"
#include "flashguard/evidence.hpp"
#include "flashguard/fusion.hpp"
#include "flashguard/image.hpp"
#include "flashguard/imaging.hpp"
#include "flashguard/skin.hpp"
#include "flashguard/skinmodel.hpp"

namespace flashguard {

struct Verdict {
  std::string user_id;
  Decision decision = Decision::normal;
  std::vector<BeliefPair> per_frame_beliefs;  // empty for dark users
  BeliefPair fused;
  std::size_t chosen_frame = 0;
  double skin_probability = 0.0;
  double skc = 0.0;
  SkinProportionVector sp;
  std::size_t best_pair = 0;
  std::size_t target_area = 0;
  std::vector<std::vector<Detection>> evidence_log;  // per frame, configured detectors
};

std::string to_json(const Verdict& v);
Verdict verdict_from_json(std::string_view text);

/// Motion and skin intermediates for one user.
struct SkinAnalysis {
  std::vector<TargetMap> maps;
  std::size_t best_pair = 0;
  std::vector<std::optional<FaceBox>> faces;
  SkinProportionVector sp;
};

SkinAnalysis analyze_skin(const FrameSequence& seq, const ModelBundle& bundle,
                          std::span<const std::vector<Detection>> detections);

/// Darkness filter, best consecutive target map, user SP, SKC, skin mass,
/// per-frame fusion with the configured detectors, maximum-belief decision.
Verdict classify_user(const FrameSequence& seq, const ModelBundle& bundle,
                      const DetectorProvider& provider);

/// Classifies each user independently on up to `threads` workers; output
/// order follows input order.
std::vector<Verdict> classify_dataset(const Dataset& dataset, const ModelBundle& bundle,
                                      unsigned threads = 0);

struct TrainOptions {
  std::uint64_t seed = 0;
  MotionConfig motion;
  Palette3Options palette3;
  CalibrationConfig calibration;
  double theta = 0.5;
  double darkness_tau = kDefaultDarknessTau;
};

struct SkinModelFit {
  SkcModel model;
  PcaResult pca;
  LogisticFit logistic;
  GoodnessOfFit goodness;
};

/// PCA + logistic regression on an SP table.
SkinModelFit fit_skin_model(std::span<const TrainingRow> rows);

/// Refit only the logistic link, keeping loadings and standardization.
SkinModelFit refit_logistic(const SkcModel& base, std::span<const TrainingRow> rows);

struct TrainResult {
  ModelBundle bundle;
  SkinModelFit skin;
  std::vector<TrainingRow> table;
  std::vector<LabeledDetections> detections;
  std::size_t dark_users = 0;
};

/// Palette 3 from offensive users' masks, the SP table, PCA + logistic, and
/// bootstrap reliability. Stage failures are rethrown with the stage name.
TrainResult train(const Dataset& dataset, const TrainOptions& options);

/// Like train, but keeps the published loadings and logistic coefficients:
/// only palette 3, the SP standardization and reliability come from data.
TrainResult calibrate(const Dataset& dataset, const TrainOptions& options);

/// Labelled detector outcomes for reliability calibration.
std::vector<LabeledDetections> labeled_detections(const Dataset& dataset,
                                                  std::span<const DetectorKind> kinds);

}  // namespace flashguard
