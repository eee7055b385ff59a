#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace flashguard {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// An immutable 8-bit RGB screenshot stored row-major.
class Frame {
 public:
  Frame() = default;
  /// Throws Errc::invalid_argument unless pixels.size() == width * height.
  Frame(int width, int height, std::vector<Rgb> pixels,
        std::optional<double> captured_at = std::nullopt);

  static Frame filled(int width, int height, Rgb colour);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept { return pixels_.size(); }
  std::span<const Rgb> pixels() const noexcept { return pixels_; }
  const Rgb& at(int x, int y) const noexcept {
    return pixels_[static_cast<std::size_t>(y) * width_ + x];
  }
  std::optional<double> captured_at() const noexcept { return captured_at_; }

  friend bool operator==(const Frame&, const Frame&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<Rgb> pixels_;
  std::optional<double> captured_at_;
};

/// Per-user capture unit: frames in capture order, all of one geometry.
struct FrameSequence {
  std::string user_id;
  std::vector<Frame> frames;
  /// Opaque per-frame keys (usually source paths) used by detector providers.
  std::vector<std::string> frame_ids;
  double interval = 10.0;

  /// Throws Errc::invalid_argument for fewer than two frames or a frame_ids
  /// size mismatch, Errc::dimension_mismatch for mixed geometry.
  void validate() const;
  std::string frame_id(std::size_t index) const;
};

/// Per-pixel binary image.
class Mask {
 public:
  Mask() = default;
  Mask(int width, int height);
  Mask(int width, int height, std::vector<std::uint8_t> bits);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool at(int x, int y) const noexcept {
    return bits_[static_cast<std::size_t>(y) * width_ + x] != 0;
  }
  void set(int x, int y, bool on) noexcept {
    bits_[static_cast<std::size_t>(y) * width_ + x] = on ? 1 : 0;
  }
  std::span<const std::uint8_t> bits() const noexcept { return bits_; }
  std::size_t count() const noexcept;

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

}  // namespace flashguard
