#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "flashguard/bundle.hpp"
#include "flashguard/dataset.hpp"
#include "flashguard/evidence.hpp"
#include "flashguard/gateway/store.hpp"
#include "flashguard/pipeline.hpp"

namespace flashguard::gateway {

struct RecalibrationOptions {
  std::size_t min_rows = 200;
  CalibrationConfig calibration;
};

struct RecalibrationResult {
  ModelBundle bundle;
  SkinModelFit skin;
  std::size_t training_rows = 0;
  std::size_t feedback_rows = 0;
};

/// Refits the logistic link and the reliability table on the original
/// training data plus moderator feedback. Loadings, standardization,
/// palettes and thresholds are carried over from `base`. Feedback with fewer
/// than `min_rows` rows or a single label throws Errc::insufficient_feedback.
RecalibrationResult recalibrate(const ModelBundle& base, std::span<const TrainingRow> training,
                                std::span<const LabeledDetections> training_detections,
                                std::span<const FeedbackRow> feedback,
                                const RecalibrationOptions& options = {});

/// Same, reading everything from a store and using its active bundle.
RecalibrationResult recalibrate(const Store& store, const RecalibrationOptions& options = {});

}  // namespace flashguard::gateway
