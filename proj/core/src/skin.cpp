#include "flashguard/skin.hpp"

#include <algorithm>
#include <cmath>

#include "flashguard/error.hpp"

namespace flashguard {

Hsv to_hsv(Rgb p) noexcept {
  const int mx = std::max({p.r, p.g, p.b});
  const int mn = std::min({p.r, p.g, p.b});
  const double delta = mx - mn;
  Hsv out;
  out.v = mx / 255.0;
  out.s = mx == 0 ? 0.0 : delta / mx;
  if (delta == 0) return out;
  double h = 0.0;
  if (mx == p.r) {
    h = 60.0 * (p.g - p.b) / delta;
  } else if (mx == p.g) {
    h = 60.0 * (2.0 + (p.b - p.r) / delta);
  } else {
    h = 60.0 * (4.0 + (p.r - p.g) / delta);
  }
  if (h < 0.0) h += 360.0;
  if (h >= 360.0) h -= 360.0;
  out.h = h;
  return out;
}

std::size_t SkinHistogram::bin_of(const Hsv& hsv) noexcept {
  const auto quantise = [](double x, double scale, int bins) {
    return std::clamp(static_cast<int>(std::floor(x * scale)), 0, bins - 1);
  };
  const int hb = quantise(hsv.h, kHueBins / 360.0, kHueBins);
  const int sb = quantise(hsv.s, kSatBins, kSatBins);
  const int vb = quantise(hsv.v, kValBins, kValBins);
  return (static_cast<std::size_t>(hb) * kSatBins + sb) * kValBins + vb;
}

void SkinPalette::validate() const {
  for (const auto& r : hue_ranges) {
    if (!(r.lo >= 0.0 && r.hi <= 360.0 && r.lo <= r.hi)) {
      throw Error(Errc::invalid_argument, "palette hue range outside [0, 360]");
    }
  }
  if (!(sat_min >= 0.0 && sat_min <= 1.0 && val_min >= 0.0 && val_min <= 1.0)) {
    throw Error(Errc::invalid_argument, "palette sat_min/val_min outside [0, 1]");
  }
  if (id == PaletteId::p3) {
    if (!histogram || histogram->skin.size() != SkinHistogram::kBins) {
      throw Error(Errc::invalid_argument, "palette 3 needs a full histogram");
    }
  } else if (histogram) {
    throw Error(Errc::invalid_argument, "only palette 3 carries a histogram");
  }
}

bool SkinPalette::accepts(Rgb pixel) const noexcept {
  const auto hsv = to_hsv(pixel);
  if (histogram) return histogram->flagged(hsv);
  if (hsv.s < sat_min || hsv.v < val_min) return false;
  return std::any_of(hue_ranges.begin(), hue_ranges.end(), [&](const HueRange& r) {
    return hsv.h >= r.lo && hsv.h <= r.hi;
  });
}

SkinPalette SkinPalette::palette1() {
  return {PaletteId::p1, {{3.0, 33.0}}, 0.15, 0.15, std::nullopt};
}

SkinPalette SkinPalette::palette2() {
  auto p = palette1();
  p.id = PaletteId::p2;
  p.hue_ranges.push_back({0.0, 60.0});
  p.hue_ranges.push_back({300.0, 360.0});
  return p;
}

SkinMask detect_skin(const Frame& frame, const SkinPalette& palette) {
  SkinMask mask(frame.width(), frame.height());
  for (int y = 0; y < frame.height(); ++y) {
    for (int x = 0; x < frame.width(); ++x) {
      if (palette.accepts(frame.at(x, y))) mask.set(x, y, true);
    }
  }
  return mask;
}

SkinPalette train_palette3(std::span<const MarkedFrame> samples,
                           const Palette3Options& options) {
  if (samples.empty()) throw Error(Errc::empty_input, "palette 3 training corpus is empty");
  std::vector<std::size_t> skin(SkinHistogram::kBins, 0);
  std::vector<std::size_t> total(SkinHistogram::kBins, 0);
  std::size_t marked = 0;
  for (const auto& s : samples) {
    if (s.truth.width() != s.frame.width() || s.truth.height() != s.frame.height()) {
      throw Error(Errc::dimension_mismatch, "skin mask does not match its frame");
    }
    for (int y = 0; y < s.frame.height(); ++y) {
      for (int x = 0; x < s.frame.width(); ++x) {
        const auto bin = SkinHistogram::bin_of(to_hsv(s.frame.at(x, y)));
        ++total[bin];
        if (s.truth.at(x, y)) {
          ++skin[bin];
          ++marked;
        }
      }
    }
  }
  if (marked == 0) throw Error(Errc::empty_input, "palette 3 corpus has no marked skin pixel");

  SkinHistogram hist{std::vector<std::uint8_t>(SkinHistogram::kBins, 0)};
  for (std::size_t b = 0; b < SkinHistogram::kBins; ++b) {
    if (total[b] == 0 || total[b] < options.min_count) continue;
    const double ratio = static_cast<double>(skin[b]) / static_cast<double>(total[b]);
    if (ratio >= options.ratio_threshold) hist.skin[b] = 1;
  }
  return {PaletteId::p3, {}, 0.0, 0.0, std::move(hist)};
}

SkinMask non_face_skin(const SkinMask& mask, const std::optional<FaceBox>& face) {
  if (!face) return mask;
  SkinMask out(mask.width(), mask.height());
  const int jaw = face->y + face->h;
  for (int y = std::max(jaw + 1, 0); y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask.at(x, y)) out.set(x, y, true);
    }
  }
  return out;
}

double skin_proportion(const SkinMask& mask, const TargetMap& map) {
  if (mask.width() != map.frame_width || mask.height() != map.frame_height) {
    throw Error(Errc::dimension_mismatch, "skin mask and target map differ in size");
  }
  std::size_t region = 0;
  std::size_t covered = 0;
  for (int r = 0; r < map.n; ++r) {
    const auto rows = tile_span(map.frame_height, map.n, r);
    for (int c = 0; c < map.n; ++c) {
      if (!map.at(r, c)) continue;
      const auto cols = tile_span(map.frame_width, map.n, c);
      for (int y = rows.begin; y < rows.end; ++y) {
        for (int x = cols.begin; x < cols.end; ++x) {
          ++region;
          if (mask.at(x, y)) ++covered;
        }
      }
    }
  }
  if (region == 0) throw Error(Errc::empty_target_region, "target region is empty");
  return static_cast<double>(covered) / static_cast<double>(region);
}

SkinProportionVector user_sp(const FrameSequence& seq, const TargetMap& best,
                             std::size_t best_pair,
                             std::span<const std::optional<FaceBox>> faces,
                             const SkinPalettes& palettes) {
  if (best_pair + 1 >= seq.frames.size()) {
    throw Error(Errc::invalid_argument, "best pair index out of range");
  }
  if (faces.size() != seq.frames.size()) {
    throw Error(Errc::invalid_argument, "one optional face box per frame is required");
  }
  if (best.area() == 0) return {};

  std::array<double, 3> sp{0.0, 0.0, 0.0};
  for (std::size_t p = 0; p < palettes.size(); ++p) {
    for (std::size_t f = best_pair; f <= best_pair + 1; ++f) {
      const auto mask = non_face_skin(detect_skin(seq.frames[f], palettes[p]), faces[f]);
      sp[p] = std::max(sp[p], skin_proportion(mask, best));
    }
  }
  return {sp[0], sp[1], sp[2]};
}

}  // namespace flashguard
