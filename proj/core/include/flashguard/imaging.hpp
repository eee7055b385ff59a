#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "flashguard/image.hpp"

namespace flashguard {

/// Half-open pixel interval covered by one tile along one axis.
struct TileSpan {
  int begin = 0;
  int end = 0;
};

/// Tile `index` of `count` along an axis of `extent` pixels. Tiles are
/// extent / count wide; the last tile absorbs the remainder.
TileSpan tile_span(int extent, int count, int index) noexcept;

/// Mean RGB intensity per tile on the 0-255 scale.
struct TileGrid {
  int n = 0;
  std::vector<double> means;  // row-major n x n

  double at(int row, int col) const { return means[static_cast<std::size_t>(row) * n + col]; }
};

/// N x N binary motion map and the frame geometry it was computed on.
struct TargetMap {
  int n = 0;
  std::vector<std::uint8_t> cells;  // row-major n x n, each 0 or 1
  double threshold = 0.0;
  int frame_width = 0;
  int frame_height = 0;

  bool at(int row, int col) const { return cells[static_cast<std::size_t>(row) * n + col] != 0; }
  std::size_t area() const noexcept;
  int tile_width() const noexcept { return n > 0 ? frame_width / n : 0; }
  int tile_height() const noexcept { return n > 0 ? frame_height / n : 0; }
  /// Number of frame pixels covered by the 1-cells.
  std::size_t region_pixels() const noexcept;
};

struct MotionConfig {
  int n = 16;
  double diff_threshold = 9.0;
  double ta_min_fraction = 0.10;
  int morphology_radius = 1;

  /// Throws Errc::invalid_argument on out-of-range fields.
  void validate() const;
};

TileGrid tile_average(const Frame& frame, int n);

/// Thresholded tile differences without morphological cleanup.
TargetMap raw_target_map(const Frame& a, const Frame& b, const MotionConfig& cfg);

/// raw_target_map followed by morph_clean(cfg.morphology_radius).
TargetMap target_map(const Frame& a, const Frame& b, const MotionConfig& cfg);

TargetMap dilate(const TargetMap& map, int radius);
/// Cells outside the grid count as set.
TargetMap erode(const TargetMap& map, int radius);

/// Closing (fill holes) then opening (remove glitches). Radius 0 is identity.
TargetMap morph_clean(const TargetMap& map, int radius);

/// Index form of select_best_target_map.
std::size_t select_best_target_map_index(std::span<const TargetMap> maps,
                                         const MotionConfig& cfg);

/// Of the maps whose area reaches ta_min_fraction * n^2, the smallest; if none
/// does, the largest. Ties go to the earliest map.
TargetMap select_best_target_map(std::span<const TargetMap> maps,
                                 const MotionConfig& cfg);

/// Target maps for consecutive pairs (0,1), (1,2), ...
std::vector<TargetMap> consecutive_target_maps(const FrameSequence& seq,
                                               const MotionConfig& cfg);

inline constexpr double kDefaultDarknessTau = 26.0;

/// Mean luminance 0.299R + 0.587G + 0.114B strictly below tau.
bool is_dark(const Frame& frame, double tau = kDefaultDarknessTau);

/// A user is dark only when every frame is.
bool is_dark_sequence(const FrameSequence& seq, double tau = kDefaultDarknessTau);

}  // namespace flashguard
