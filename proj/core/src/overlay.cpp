#include "flashguard/overlay.hpp"

#include <algorithm>
#include <vector>

#include "flashguard/error.hpp"
#include "flashguard/pipeline.hpp"

namespace flashguard {

Frame render_overlay(const Frame& frame, const TargetMap& map, const SkinMask& non_face,
                     const std::optional<FaceBox>& face) {
  if (map.frame_width != frame.width() || map.frame_height != frame.height() ||
      non_face.width() != frame.width() || non_face.height() != frame.height()) {
    throw Error(Errc::dimension_mismatch, "overlay inputs differ in size");
  }
  std::vector<Rgb> px(frame.pixels().begin(), frame.pixels().end());
  const auto w = frame.width();
  for (int r = 0; r < map.n; ++r) {
    const auto rows = tile_span(map.frame_height, map.n, r);
    for (int c = 0; c < map.n; ++c) {
      if (!map.at(r, c)) continue;
      const auto cols = tile_span(map.frame_width, map.n, c);
      for (int y = rows.begin; y < rows.end; ++y) {
        for (int x = cols.begin; x < cols.end; ++x) {
          auto& p = px[static_cast<std::size_t>(y) * w + x];
          p = {static_cast<std::uint8_t>((p.r + 255) / 2), static_cast<std::uint8_t>((p.g + 255) / 2),
               static_cast<std::uint8_t>((p.b + 255) / 2)};
        }
      }
    }
  }
  for (int y = 0; y < frame.height(); ++y) {
    for (int x = 0; x < w; ++x) {
      if (non_face.at(x, y)) px[static_cast<std::size_t>(y) * w + x] = {255, 0, 0};
    }
  }
  if (face && face->w > 0 && face->h > 0) {
    const int x0 = std::clamp(face->x, 0, w - 1);
    const int y0 = std::clamp(face->y, 0, frame.height() - 1);
    const int x1 = std::clamp(face->x + face->w - 1, 0, w - 1);
    const int y1 = std::clamp(face->y + face->h - 1, 0, frame.height() - 1);
    const Rgb green{0, 255, 0};
    for (int x = x0; x <= x1; ++x) {
      px[static_cast<std::size_t>(y0) * w + x] = green;
      px[static_cast<std::size_t>(y1) * w + x] = green;
    }
    for (int y = y0; y <= y1; ++y) {
      px[static_cast<std::size_t>(y) * w + x0] = green;
      px[static_cast<std::size_t>(y) * w + x1] = green;
    }
  }
  return Frame(frame.width(), frame.height(), std::move(px), frame.captured_at());
}

std::vector<Frame> render_user_overlays(const FrameSequence& seq, const ModelBundle& bundle,
                                        std::span<const std::vector<Detection>> detections,
                                        std::size_t palette_index) {
  if (palette_index >= bundle.palettes.size()) {
    throw Error(Errc::invalid_argument, "palette index out of range");
  }
  const auto analysis = analyze_skin(seq, bundle, detections);
  const auto& best = analysis.maps[analysis.best_pair];
  std::vector<Frame> out;
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    const auto skin = non_face_skin(detect_skin(seq.frames[i], bundle.palettes[palette_index]),
                                    analysis.faces[i]);
    out.push_back(render_overlay(seq.frames[i], best, skin, analysis.faces[i]));
  }
  return out;
}

}  // namespace flashguard
