#include "flashguard/png_io.hpp"

#include <png.h>

#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "flashguard/error.hpp"

namespace flashguard {
namespace {

struct PngImage {
  png_image image{};
  PngImage() {
    image.version = PNG_IMAGE_VERSION;
  }
  ~PngImage() { png_image_free(&image); }
  PngImage(const PngImage&) = delete;
  PngImage& operator=(const PngImage&) = delete;
};

std::vector<std::uint8_t> decode_raw(std::span<const std::uint8_t> bytes,
                                     png_uint_32 format, int& width,
                                     int& height) {
  PngImage png;
  if (!png_image_begin_read_from_memory(&png.image, bytes.data(), bytes.size())) {
    throw Error(Errc::parse, std::string("cannot decode PNG: ") + png.image.message);
  }
  png.image.format = format;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(png.image));
  if (!png_image_finish_read(&png.image, nullptr, buffer.data(), 0, nullptr)) {
    throw Error(Errc::parse, std::string("cannot decode PNG: ") + png.image.message);
  }
  width = static_cast<int>(png.image.width);
  height = static_cast<int>(png.image.height);
  return buffer;
}

std::vector<std::uint8_t> encode_raw(const void* data, int width, int height,
                                     png_uint_32 format) {
  PngImage png;
  png.image.width = static_cast<png_uint_32>(width);
  png.image.height = static_cast<png_uint_32>(height);
  png.image.format = format;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png.image, nullptr, &size, 0, data, 0, nullptr)) {
    throw Error(Errc::io, std::string("cannot encode PNG: ") + png.image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&png.image, out.data(), &size, 0, data, 0,
                                 nullptr)) {
    throw Error(Errc::io, std::string("cannot encode PNG: ") + png.image.message);
  }
  out.resize(size);
  return out;
}

}  // namespace

Frame decode_png(std::span<const std::uint8_t> bytes) {
  int width = 0;
  int height = 0;
  auto raw = decode_raw(bytes, PNG_FORMAT_RGB, width, height);
  std::vector<Rgb> pixels(static_cast<std::size_t>(width) * height);
  std::memcpy(pixels.data(), raw.data(), raw.size());
  return Frame(width, height, std::move(pixels));
}

Frame read_png(const std::filesystem::path& path) {
  auto bytes = read_file_bytes(path);
  try {
    return decode_png(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

Mask decode_mask_png(std::span<const std::uint8_t> bytes) {
  int width = 0;
  int height = 0;
  auto raw = decode_raw(bytes, PNG_FORMAT_GRAY, width, height);
  return Mask(width, height, std::move(raw));
}

Mask read_mask_png(const std::filesystem::path& path) {
  auto bytes = read_file_bytes(path);
  try {
    return decode_mask_png(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_png(const Frame& frame) {
  static_assert(sizeof(Rgb) == 3);
  return encode_raw(frame.pixels().data(), frame.width(), frame.height(),
                    PNG_FORMAT_RGB);
}

std::vector<std::uint8_t> encode_mask_png(const Mask& mask) {
  std::vector<std::uint8_t> grey(mask.bits().size());
  for (std::size_t i = 0; i < grey.size(); ++i) grey[i] = mask.bits()[i] ? 255 : 0;
  return encode_raw(grey.data(), mask.width(), mask.height(), PNG_FORMAT_GRAY);
}

void write_png(const std::filesystem::path& path, const Frame& frame) {
  write_file_bytes(path, encode_png(frame));
}

void write_mask_png(const std::filesystem::path& path, const Mask& mask) {
  write_file_bytes(path, encode_mask_png(mask));
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path,
                      std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::io, "short write to " + path.string());
}

}  // namespace flashguard
