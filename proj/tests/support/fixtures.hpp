#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "flashguard/bundle.hpp"
#include "flashguard/image.hpp"
#include "flashguard/skin.hpp"

namespace fixture {

inline constexpr flashguard::Rgb kSkin{215, 160, 120};
inline constexpr flashguard::Rgb kWall{40, 70, 130};
inline constexpr flashguard::Rgb kCloth{20, 20, 20};

inline flashguard::Rgb brighter(flashguard::Rgb c) {
  auto up = [](std::uint8_t v) { return static_cast<std::uint8_t>(std::min(255, v + 20)); };
  return {up(c.r), up(c.g), up(c.b)};
}

// A tile-aligned body block over a static wall whose shading changes from
// frame to frame, so the motion region is exactly the block.
inline flashguard::FrameSequence moving_block(const std::string& id, flashguard::Rgb block,
                                              int size = 64) {
  using namespace flashguard;
  FrameSequence seq;
  seq.user_id = id;
  const int unit = size / 8;
  for (int f = 0; f < 3; ++f) {
    std::vector<Rgb> px(static_cast<std::size_t>(size) * size, kWall);
    const Rgb shade = f % 2 ? brighter(block) : block;
    for (int y = 2 * unit; y < size; ++y) {
      for (int x = 2 * unit; x < 5 * unit; ++x) px[static_cast<std::size_t>(y) * size + x] = shade;
    }
    seq.frames.emplace_back(size, size, std::move(px));
  }
  return seq;
}

// Published coefficients with a standardization under which a fully exposed
// body scores p_f of about 0.99, and palette 3 trained on the fixture skin.
inline flashguard::ModelBundle bundle() {
  using namespace flashguard;
  auto b = ModelBundle::defaults();
  b.motion.n = 8;
  b.skc.standardization = Standardization{{0.3, 0.3, 0.3}, {0.15, 0.15, 0.15}};
  SkinMask all(8, 8);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) all.set(x, y, true);
  }
  const std::vector<MarkedFrame> marked{{Frame::filled(8, 8, kSkin), all},
                                        {Frame::filled(8, 8, brighter(kSkin)), all}};
  b.palettes[2] = train_palette3(marked);
  return b;
}

}  // namespace fixture
