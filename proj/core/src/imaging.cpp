#include "flashguard/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "flashguard/error.hpp"

namespace flashguard {

TileSpan tile_span(int extent, int count, int index) noexcept {
  const int size = extent / count;
  const int begin = index * size;
  const int end = index == count - 1 ? extent : begin + size;
  return {begin, end};
}

std::size_t TargetMap::area() const noexcept {
  return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), 1));
}

std::size_t TargetMap::region_pixels() const noexcept {
  std::size_t total = 0;
  for (int r = 0; r < n; ++r) {
    const auto rows = tile_span(frame_height, n, r);
    for (int c = 0; c < n; ++c) {
      if (!at(r, c)) continue;
      const auto cols = tile_span(frame_width, n, c);
      total += static_cast<std::size_t>(rows.end - rows.begin) * (cols.end - cols.begin);
    }
  }
  return total;
}

void MotionConfig::validate() const {
  if (n < 2) throw Error(Errc::invalid_argument, "motion.n must be >= 2");
  if (!(diff_threshold >= 0.0)) {
    throw Error(Errc::invalid_argument, "motion.diff_threshold must be >= 0");
  }
  if (!(ta_min_fraction > 0.0 && ta_min_fraction < 1.0)) {
    throw Error(Errc::invalid_argument, "motion.ta_min_fraction must be in (0, 1)");
  }
  if (morphology_radius < 0) {
    throw Error(Errc::invalid_argument, "motion.morphology_radius must be >= 0");
  }
}

TileGrid tile_average(const Frame& frame, int n) {
  if (n < 1) throw Error(Errc::invalid_argument, "tile count must be positive");
  if (frame.width() < n || frame.height() < n) {
    throw Error(Errc::dimension_too_small,
                "frame " + std::to_string(frame.width()) + "x" +
                    std::to_string(frame.height()) + " is smaller than " +
                    std::to_string(n) + " tiles per side");
  }
  TileGrid grid{n, std::vector<double>(static_cast<std::size_t>(n) * n, 0.0)};
  for (int r = 0; r < n; ++r) {
    const auto rows = tile_span(frame.height(), n, r);
    for (int c = 0; c < n; ++c) {
      const auto cols = tile_span(frame.width(), n, c);
      std::uint64_t sum = 0;
      for (int y = rows.begin; y < rows.end; ++y) {
        for (int x = cols.begin; x < cols.end; ++x) {
          const auto& p = frame.at(x, y);
          sum += static_cast<std::uint64_t>(p.r) + p.g + p.b;
        }
      }
      const auto count = static_cast<double>(rows.end - rows.begin) * (cols.end - cols.begin);
      grid.means[static_cast<std::size_t>(r) * n + c] = static_cast<double>(sum) / (count * 3.0);
    }
  }
  return grid;
}

TargetMap raw_target_map(const Frame& a, const Frame& b, const MotionConfig& cfg) {
  cfg.validate();
  if (a.width() != b.width() || a.height() != b.height()) {
    throw Error(Errc::dimension_mismatch, "target map needs frames of equal size");
  }
  const auto ta = tile_average(a, cfg.n);
  const auto tb = tile_average(b, cfg.n);
  TargetMap map;
  map.n = cfg.n;
  map.threshold = cfg.diff_threshold;
  map.frame_width = a.width();
  map.frame_height = a.height();
  map.cells.resize(ta.means.size());
  for (std::size_t i = 0; i < ta.means.size(); ++i) {
    map.cells[i] = std::abs(ta.means[i] - tb.means[i]) > cfg.diff_threshold ? 1 : 0;
  }
  return map;
}

TargetMap target_map(const Frame& a, const Frame& b, const MotionConfig& cfg) {
  return morph_clean(raw_target_map(a, b, cfg), cfg.morphology_radius);
}

namespace {

// Square structuring element of side 2*radius+1. `outside` is the value
// assumed for cells beyond the grid border; `want` is the value that decides
// the output (1 for dilation: any set neighbour; 0 for erosion: any clear one).
TargetMap sweep(const TargetMap& map, int radius, std::uint8_t outside,
                std::uint8_t want) {
  TargetMap out = map;
  const int n = map.n;
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      bool hit = false;
      for (int dr = -radius; dr <= radius && !hit; ++dr) {
        for (int dc = -radius; dc <= radius && !hit; ++dc) {
          const int rr = r + dr;
          const int cc = c + dc;
          const bool inside = rr >= 0 && rr < n && cc >= 0 && cc < n;
          const std::uint8_t v = inside ? map.cells[static_cast<std::size_t>(rr) * n + cc] : outside;
          hit = v == want;
        }
      }
      out.cells[static_cast<std::size_t>(r) * n + c] = hit ? want : static_cast<std::uint8_t>(1 - want);
    }
  }
  return out;
}

}  // namespace

TargetMap dilate(const TargetMap& map, int radius) {
  if (radius <= 0) return map;
  return sweep(map, radius, 0, 1);
}

TargetMap erode(const TargetMap& map, int radius) {
  if (radius <= 0) return map;
  return sweep(map, radius, 1, 0);
}

TargetMap morph_clean(const TargetMap& map, int radius) {
  if (radius < 0) throw Error(Errc::invalid_argument, "morphology radius must be >= 0");
  if (radius == 0) return map;
  const auto closed = erode(dilate(map, radius), radius);
  return dilate(erode(closed, radius), radius);
}

std::size_t select_best_target_map_index(std::span<const TargetMap> maps,
                                         const MotionConfig& cfg) {
  if (maps.empty()) throw Error(Errc::empty_input, "no target maps to select from");
  for (const auto& m : maps) {
    if (m.n != maps.front().n) {
      throw Error(Errc::dimension_mismatch, "target maps differ in tile geometry");
    }
  }
  const double ta_min = cfg.ta_min_fraction * maps.front().n * maps.front().n;
  std::size_t best = maps.size();
  for (std::size_t i = 0; i < maps.size(); ++i) {
    const auto area = static_cast<double>(maps[i].area());
    if (area >= ta_min && (best == maps.size() || maps[i].area() < maps[best].area())) {
      best = i;
    }
  }
  if (best != maps.size()) return best;
  best = 0;
  for (std::size_t i = 1; i < maps.size(); ++i) {
    if (maps[i].area() > maps[best].area()) best = i;
  }
  return best;
}

TargetMap select_best_target_map(std::span<const TargetMap> maps,
                                 const MotionConfig& cfg) {
  return maps[select_best_target_map_index(maps, cfg)];
}

std::vector<TargetMap> consecutive_target_maps(const FrameSequence& seq,
                                               const MotionConfig& cfg) {
  seq.validate();
  std::vector<TargetMap> maps;
  maps.reserve(seq.frames.size() - 1);
  for (std::size_t i = 0; i + 1 < seq.frames.size(); ++i) {
    maps.push_back(target_map(seq.frames[i], seq.frames[i + 1], cfg));
  }
  return maps;
}

bool is_dark(const Frame& frame, double tau) {
  if (frame.pixel_count() == 0) return true;
  // Integer luminance in thousandths keeps the threshold comparison exact.
  std::uint64_t sum = 0;
  for (const auto& p : frame.pixels()) {
    sum += 299ull * p.r + 587ull * p.g + 114ull * p.b;
  }
  return static_cast<double>(sum) < tau * 1000.0 * static_cast<double>(frame.pixel_count());
}

bool is_dark_sequence(const FrameSequence& seq, double tau) {
  return std::all_of(seq.frames.begin(), seq.frames.end(),
                     [tau](const Frame& f) { return is_dark(f, tau); });
}

}  // namespace flashguard
