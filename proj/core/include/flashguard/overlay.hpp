#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "flashguard/bundle.hpp"
#include "flashguard/evidence.hpp"
#include "flashguard/image.hpp"
#include "flashguard/imaging.hpp"
#include "flashguard/skin.hpp"

namespace flashguard {

/// Frame with the target region blended white, non-face skin painted red and
/// the face box outlined green.
Frame render_overlay(const Frame& frame, const TargetMap& map, const SkinMask& non_face,
                     const std::optional<FaceBox>& face);

/// One overlay per frame of the sequence, using the best consecutive target
/// map and skin from palette `palette_index` (0-2).
std::vector<Frame> render_user_overlays(const FrameSequence& seq, const ModelBundle& bundle,
                                        std::span<const std::vector<Detection>> detections,
                                        std::size_t palette_index = 1);

}  // namespace flashguard
