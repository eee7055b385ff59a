#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flashguard/bundle.hpp"
#include "flashguard/dataset.hpp"
#include "flashguard/evidence.hpp"
#include "flashguard/pipeline.hpp"

namespace flashguard::gateway {

enum class ReviewStatus { pending, confirmed_misbehaving, overridden_normal };

std::string to_string(ReviewStatus s);
ReviewStatus review_status_from_string(const std::string& s);

struct StoredVerdict {
  std::string verdict_id;
  std::string bundle_version;
  double created_at = 0.0;
  std::vector<std::string> frames;  // paths relative to the store root
  Verdict verdict;
};

struct ReviewItem {
  std::string item_id;
  std::string user_id;
  std::string verdict_id;
  std::vector<std::string> frames;
  Verdict verdict;
  ReviewStatus status = ReviewStatus::pending;
  std::optional<std::string> moderator_id;
  std::optional<double> decided_at;
  double created_at = 0.0;
};

/// One moderator decision, in the shape recalibration consumes.
struct FeedbackRow {
  std::string item_id;
  std::string user_id;
  bool misbehaving = false;
  SkinProportionVector sp;
  std::vector<std::vector<Detection>> detections;
  std::string moderator_id;
  double decided_at = 0.0;
};

struct SubmitResult {
  StoredVerdict verdict;
  std::optional<ReviewItem> review_item;
};

double now_seconds();

/// Append-only JSON-lines store:
///   verdicts.jsonl, review.jsonl, feedback.jsonl, activations.jsonl,
///   images/<verdict_id>/frame_<k>.png, bundles/<version>.json,
///   training/table.csv, training/detections.jsonl.
/// Every record is one line written with a single append and fsync. On open,
/// a torn trailing line is dropped, misbehaving verdicts without a review
/// item are enqueued, and decided items without feedback get their feedback
/// row. All methods are thread-safe; appends are serialised.
class Store {
 public:
  explicit Store(std::filesystem::path root, bool read_only = false);

  const std::filesystem::path& root() const noexcept { return root_; }

  /// Writes the frames, then the verdict, then (for misbehaving verdicts) the
  /// review item.
  SubmitResult submit(const Verdict& verdict,
                      std::span<const std::vector<std::uint8_t>> png_frames,
                      const std::string& bundle_version);

  std::optional<StoredVerdict> latest_verdict(const std::string& user_id) const;
  std::optional<StoredVerdict> verdict(const std::string& verdict_id) const;
  std::vector<ReviewItem> queue(std::optional<ReviewStatus> status = std::nullopt) const;
  std::optional<ReviewItem> item(const std::string& item_id) const;

  /// pending -> confirmed_misbehaving / overridden_normal, exactly once.
  /// Throws Errc::not_found or Errc::conflict.
  ReviewItem decide(const std::string& item_id, bool confirm, const std::string& moderator_id);

  std::vector<FeedbackRow> feedback() const;

  /// Registers a bundle under a new version name; does not activate it.
  std::string add_bundle(const ModelBundle& bundle);
  /// Version of an identical stored bundle, if any.
  std::optional<std::string> find_bundle(const ModelBundle& bundle) const;
  ModelBundle bundle(const std::string& version) const;
  std::vector<std::string> bundle_versions() const;
  std::optional<std::string> active_bundle() const;
  /// Throws Errc::not_found for an unknown version.
  void activate(const std::string& version);

  void set_training_data(std::span<const TrainingRow> table,
                         std::span<const LabeledDetections> detections);
  std::vector<TrainingRow> training_table() const;
  std::vector<LabeledDetections> training_detections() const;

 private:
  void load();
  void append(const std::string& file, const std::string& line);
  std::filesystem::path path(const std::string& name) const { return root_ / name; }
  ReviewItem enqueue_locked(const StoredVerdict& v, double created_at);
  FeedbackRow feedback_for(const ReviewItem& item) const;

  std::filesystem::path root_;
  bool read_only_;
  mutable std::mutex mutex_;
  std::vector<StoredVerdict> verdicts_;
  std::map<std::string, std::size_t> verdict_index_;
  std::map<std::string, std::size_t> latest_by_user_;
  std::map<std::string, ReviewItem> items_;
  std::map<std::string, std::string> item_by_verdict_;
  std::vector<FeedbackRow> feedback_;
  std::vector<std::string> bundle_versions_;
  std::optional<std::string> active_;
  std::size_t next_item_ = 1;
};

}  // namespace flashguard::gateway
