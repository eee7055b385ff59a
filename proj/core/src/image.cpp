#include "flashguard/image.hpp"

#include <algorithm>

#include "flashguard/error.hpp"

namespace flashguard {

Frame::Frame(int width, int height, std::vector<Rgb> pixels,
             std::optional<double> captured_at)
    : width_(width), height_(height), pixels_(std::move(pixels)),
      captured_at_(captured_at) {
  if (width < 0 || height < 0 ||
      pixels_.size() != static_cast<std::size_t>(width) * height) {
    throw Error(Errc::invalid_argument,
                "frame pixel count does not match width x height");
  }
}

Frame Frame::filled(int width, int height, Rgb colour) {
  return Frame(width, height,
               std::vector<Rgb>(static_cast<std::size_t>(width) * height, colour));
}

void FrameSequence::validate() const {
  if (frames.size() < 2) {
    throw Error(Errc::invalid_argument,
                "a frame sequence needs at least two frames");
  }
  if (!frame_ids.empty() && frame_ids.size() != frames.size()) {
    throw Error(Errc::invalid_argument, "frame_ids size differs from frames");
  }
  for (const auto& f : frames) {
    if (f.width() != frames.front().width() ||
        f.height() != frames.front().height()) {
      throw Error(Errc::dimension_mismatch,
                  "frames in a sequence must share dimensions");
    }
  }
}

std::string FrameSequence::frame_id(std::size_t index) const {
  if (index < frame_ids.size()) return frame_ids[index];
  return user_id + "/frame_" + std::to_string(index + 1);
}

Mask::Mask(int width, int height)
    : width_(width), height_(height),
      bits_(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0), 0) {}

Mask::Mask(int width, int height, std::vector<std::uint8_t> bits)
    : width_(width), height_(height), bits_(std::move(bits)) {
  if (width < 0 || height < 0 ||
      bits_.size() != static_cast<std::size_t>(width) * height) {
    throw Error(Errc::invalid_argument,
                "mask bit count does not match width x height");
  }
  for (auto& b : bits_) b = b ? 1 : 0;
}

std::size_t Mask::count() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
}

}  // namespace flashguard
