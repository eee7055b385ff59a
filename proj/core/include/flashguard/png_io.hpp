#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "flashguard/image.hpp"

namespace flashguard {

// RGBA input has its alpha dropped; grey and palette images are expanded.
// Failures throw Errc::io (file) or Errc::parse (undecodable bytes).
Frame decode_png(std::span<const std::uint8_t> bytes);
Frame read_png(const std::filesystem::path& path);

// Single-channel mask: any nonzero sample is "on". Colour input is reduced
// to its luminance first.
Mask decode_mask_png(std::span<const std::uint8_t> bytes);
Mask read_mask_png(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_png(const Frame& frame);
std::vector<std::uint8_t> encode_mask_png(const Mask& mask);
void write_png(const std::filesystem::path& path, const Frame& frame);
void write_mask_png(const std::filesystem::path& path, const Mask& mask);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path,
                      std::span<const std::uint8_t> bytes);

}  // namespace flashguard
