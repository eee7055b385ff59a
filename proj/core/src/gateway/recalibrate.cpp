#include "flashguard/gateway/recalibrate.hpp"

#include <string>

#include "flashguard/error.hpp"

namespace flashguard::gateway {

RecalibrationResult recalibrate(const ModelBundle& base, std::span<const TrainingRow> training,
                                std::span<const LabeledDetections> training_detections,
                                std::span<const FeedbackRow> feedback,
                                const RecalibrationOptions& options) {
  base.validate();
  std::size_t positives = 0;
  for (const auto& f : feedback) positives += f.misbehaving ? 1 : 0;
  if (feedback.size() < options.min_rows) {
    throw Error(Errc::insufficient_feedback,
                std::to_string(feedback.size()) + " feedback rows, need " +
                    std::to_string(options.min_rows));
  }
  if (positives == 0 || positives == feedback.size()) {
    throw Error(Errc::insufficient_feedback, "feedback holds a single label");
  }

  std::vector<TrainingRow> rows(training.begin(), training.end());
  std::vector<LabeledDetections> detections(training_detections.begin(),
                                            training_detections.end());
  for (const auto& f : feedback) {
    rows.push_back({f.user_id, f.sp, f.misbehaving});
    detections.push_back({f.user_id, !f.misbehaving, f.detections});
  }

  RecalibrationResult out;
  out.training_rows = training.size();
  out.feedback_rows = feedback.size();
  out.skin = refit_logistic(base.skc, rows);
  out.bundle = base;
  out.bundle.skc = out.skin.model;
  out.bundle.reliability = calibrate_reliability(detections, options.calibration);
  out.bundle.validate();
  return out;
}

RecalibrationResult recalibrate(const Store& store, const RecalibrationOptions& options) {
  const auto active = store.active_bundle();
  if (!active) throw Error(Errc::not_found, "store has no active bundle");
  const auto base = store.bundle(*active);
  const auto table = store.training_table();
  const auto detections = store.training_detections();
  const auto feedback = store.feedback();
  return recalibrate(base, table, detections, feedback, options);
}

}  // namespace flashguard::gateway
