#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "flashguard/image.hpp"
#include "flashguard/imaging.hpp"

namespace flashguard {

using SkinMask = Mask;

/// Hexcone HSV: hue in degrees [0, 360), saturation and value in [0, 1].
struct Hsv {
  double h = 0.0;
  double s = 0.0;
  double v = 0.0;
};

Hsv to_hsv(Rgb p) noexcept;

struct HueRange {
  double lo = 0.0;
  double hi = 0.0;
};

/// Quantised HSV histogram: 30 hue x 8 saturation x 8 value bins.
struct SkinHistogram {
  static constexpr int kHueBins = 30;
  static constexpr int kSatBins = 8;
  static constexpr int kValBins = 8;
  static constexpr std::size_t kBins = kHueBins * kSatBins * kValBins;

  std::vector<std::uint8_t> skin;  // kBins flags

  static std::size_t bin_of(const Hsv& hsv) noexcept;
  bool flagged(const Hsv& hsv) const noexcept { return skin[bin_of(hsv)] != 0; }
};

enum class PaletteId { p1, p2, p3 };

struct SkinPalette {
  PaletteId id = PaletteId::p1;
  std::vector<HueRange> hue_ranges;
  double sat_min = 0.0;
  double val_min = 0.0;
  std::optional<SkinHistogram> histogram;  // set for P3 only

  void validate() const;
  bool accepts(Rgb pixel) const noexcept;

  /// Hue-threshold palette for yellow/orange skin: hue [3, 33], S and V >= 0.15.
  static SkinPalette palette1();
  /// Palette 1 widened with pinkish hues [0, 60] and [300, 360].
  static SkinPalette palette2();
};

using SkinPalettes = std::array<SkinPalette, 3>;

struct Palette3Options {
  double ratio_threshold = 0.5;
  std::size_t min_count = 20;
};

struct MarkedFrame {
  Frame frame;
  SkinMask truth;
};

SkinMask detect_skin(const Frame& frame, const SkinPalette& palette);

/// Flags bins where P(skin | bin) >= ratio_threshold and the bin holds at
/// least min_count samples. Throws Errc::empty_input for an empty corpus or
/// one without any marked pixel.
SkinPalette train_palette3(std::span<const MarkedFrame> samples,
                           const Palette3Options& options = {});

struct FaceBox {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  friend bool operator==(const FaceBox&, const FaceBox&) = default;
};

/// Skin below the jaw line (row > face.y + face.h); all skin without a face.
SkinMask non_face_skin(const SkinMask& mask, const std::optional<FaceBox>& face);

/// Fraction of target-region pixels covered by the mask. Throws
/// Errc::empty_target_region when the map has no set cell.
double skin_proportion(const SkinMask& mask, const TargetMap& map);

struct SkinProportionVector {
  double sp1 = 0.0;
  double sp2 = 0.0;
  double sp3 = 0.0;

  double operator[](std::size_t i) const { return i == 0 ? sp1 : i == 1 ? sp2 : sp3; }
  friend bool operator==(const SkinProportionVector&, const SkinProportionVector&) = default;
};

/// Per palette, the larger skin proportion of the two frames bounding the
/// best map (frames best_pair and best_pair + 1). An empty target region
/// yields zeros.
SkinProportionVector user_sp(const FrameSequence& seq, const TargetMap& best,
                             std::size_t best_pair,
                             std::span<const std::optional<FaceBox>> faces,
                             const SkinPalettes& palettes);

}  // namespace flashguard
