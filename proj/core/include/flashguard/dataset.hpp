#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flashguard/evidence.hpp"
#include "flashguard/image.hpp"
#include "flashguard/skin.hpp"

namespace flashguard {

enum class UserClass { offensive, normal };
enum class UserSubtype {
  obscene,
  potential_offensive,
  advertisement,
  normal_content,
  potential_normal,
  other,
};

struct UserLabel {
  std::string user_id;
  UserClass cls = UserClass::normal;
  UserSubtype subtype = UserSubtype::normal_content;

  bool misbehaving() const noexcept { return cls == UserClass::offensive; }
  /// The first three subtypes belong to the offensive class.
  void validate() const;
};

std::string to_string(UserClass c);
std::string to_string(UserSubtype s);

/// `user_id,class[,subtype]` with a header row. A missing subtype defaults to
/// obscene (offensive) or normal_content (normal).
std::vector<UserLabel> parse_labels_csv(std::string_view text);
std::string labels_csv(std::span<const UserLabel> labels);

/// Everything known about one user in a dataset.
struct UserRecord {
  FrameSequence seq;
  std::vector<std::optional<std::vector<Detection>>> detections;  // per frame
  std::vector<std::optional<SkinMask>> masks;                     // per frame
  UserLabel label;

  /// Provider replaying this record's detections.
  RecordedProvider provider() const;
};

struct Dataset {
  std::vector<UserRecord> users;
};

/// Layout: <root>/labels.csv and <root>/<user_id>/frame_<k>.png with optional
/// frame_<k>.det.json and frame_<k>.skin.png. Users listed in labels.csv but
/// missing on disk throw Errc::io.
Dataset load_dataset(const std::filesystem::path& root);
void save_dataset(const std::filesystem::path& root, const Dataset& dataset);

/// Row of the SP training table: user_id,sp1,sp2,sp3,label.
struct TrainingRow {
  std::string user_id;
  SkinProportionVector sp;
  bool misbehaving = false;
};

std::vector<TrainingRow> parse_training_csv(std::string_view text);
std::string training_csv(std::span<const TrainingRow> rows);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace flashguard
