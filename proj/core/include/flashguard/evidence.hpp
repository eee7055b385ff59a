#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flashguard/image.hpp"
#include "flashguard/skin.hpp"

namespace flashguard {

enum class DetectorKind { face, eye, nose, mouth, upper_body };

inline constexpr std::array<DetectorKind, 5> kAllDetectors{
    DetectorKind::face, DetectorKind::eye, DetectorKind::nose, DetectorKind::mouth,
    DetectorKind::upper_body};

std::string_view to_string(DetectorKind kind) noexcept;
std::optional<DetectorKind> detector_from_string(std::string_view name) noexcept;

struct Detection {
  DetectorKind kind = DetectorKind::face;
  bool present = false;
  std::optional<FaceBox> box;  // face detections only

  friend bool operator==(const Detection&, const Detection&) = default;
};

/// The first present face detection that carries a box, clipped to the frame.
std::optional<FaceBox> first_face(std::span<const Detection> detections, int width,
                                  int height);

struct Reliability {
  double rel_present = 0.0;  // P(normal | detector fired)
  double rel_absent = 0.0;   // P(normal | detector silent)
  double stdev_present = 0.0;
  double stdev_absent = 0.0;

  friend bool operator==(const Reliability&, const Reliability&) = default;
};

/// Reliability per configured detector. Detectors without an entry do not
/// take part in fusion.
struct ReliabilityTable {
  std::map<DetectorKind, Reliability> entries;

  /// Throws Errc::invalid_argument if any value leaves [0, 1].
  void validate() const;
  std::vector<DetectorKind> kinds() const;
  const Reliability* find(DetectorKind kind) const;

  /// Bootstrap means and stdevs shipped as defaults.
  static ReliabilityTable published();

  friend bool operator==(const ReliabilityTable&, const ReliabilityTable&) = default;
};

class DetectorProvider {
 public:
  virtual ~DetectorProvider() = default;
  /// Raw detections for one frame; kinds may be missing.
  virtual std::vector<Detection> detect(const Frame& frame,
                                        std::string_view frame_id) const = 0;
};

/// One Detection per requested kind, in the requested order. Kinds the
/// provider did not report become present=false and are logged.
std::vector<Detection> run_detectors(const Frame& frame, std::string_view frame_id,
                                     const DetectorProvider& provider,
                                     std::span<const DetectorKind> kinds);

/// The normalisation step of run_detectors applied to raw provider output.
std::vector<Detection> complete_detections(std::span<const Detection> raw,
                                           std::span<const DetectorKind> kinds,
                                           std::string_view frame_id);

std::vector<Detection> parse_sidecar(std::string_view json_text);
std::string sidecar_json(std::span<const Detection> detections);

/// Sidecar path for an image: `<dir>/<stem>.det.json`, dir defaulting to the
/// image's own directory.
std::filesystem::path sidecar_path(const std::filesystem::path& image,
                                   const std::optional<std::filesystem::path>& dir);

/// Reads `.det.json` sidecars; the frame id is the image path. A missing
/// sidecar means nothing was detected.
class SidecarProvider final : public DetectorProvider {
 public:
  /// Throws Errc::provider_unavailable if `directory` is given but absent.
  explicit SidecarProvider(std::optional<std::filesystem::path> directory = std::nullopt);
  std::vector<Detection> detect(const Frame& frame, std::string_view frame_id) const override;

 private:
  std::optional<std::filesystem::path> directory_;
};

/// Detections captured ahead of time, keyed by frame id.
class RecordedProvider final : public DetectorProvider {
 public:
  RecordedProvider() = default;
  void add(std::string frame_id, std::vector<Detection> detections);
  std::vector<Detection> detect(const Frame& frame, std::string_view frame_id) const override;

 private:
  std::map<std::string, std::vector<Detection>, std::less<>> records_;
};

/// Test fixture: every detector reports the same outcome. When present, the
/// face box is `face_box`.
class ConstantProvider final : public DetectorProvider {
 public:
  explicit ConstantProvider(bool present, std::optional<FaceBox> face_box = std::nullopt)
      : present_(present), face_box_(face_box) {}
  std::vector<Detection> detect(const Frame& frame, std::string_view frame_id) const override;

 private:
  bool present_;
  std::optional<FaceBox> face_box_;
};

/// Detector outcomes of one labelled user, frame by frame.
struct LabeledDetections {
  std::string user_id;
  bool normal = true;
  std::vector<std::vector<Detection>> frames;
};

struct CalibrationConfig {
  int k = 10;
  std::size_t sample_size = 1000;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Bootstrap reliability: k draws of sample_size users with replacement; per
/// draw and outcome, precision = share of normal users among frames with that
/// outcome. Reports mean and sample stdev over draws. Kinds that never occur
/// in the corpus are left out; a kind lacking one outcome throws
/// Errc::empty_outcome_class.
/// One JSON object per line: {"user_id", "normal", "frames": [sidecar, ...]}.
std::string detections_jsonl(std::span<const LabeledDetections> corpus);
std::vector<LabeledDetections> parse_detections_jsonl(std::string_view text);

ReliabilityTable calibrate_reliability(std::span<const LabeledDetections> corpus,
                                       const CalibrationConfig& cfg);

}  // namespace flashguard
