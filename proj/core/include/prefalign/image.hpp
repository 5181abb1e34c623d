#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace prefalign {

enum class ImageFormat { kPng, kJpeg };

struct ImageInfo {
  ImageFormat format;
  int width;
  int height;
};

// 8-bit interleaved RGB.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // width*height*3

  bool operator==(const RgbImage&) const = default;
};

// Fully decodes the bytes as PNG or JPEG. Throws kOversizeImage when the
// payload exceeds max_bytes (0 disables the cap) and kInvalidImage when it
// does not decode.
ImageInfo inspect_image(std::span<const std::uint8_t> bytes, std::size_t max_bytes);

std::vector<std::uint8_t> encode_png(const RgbImage& image);
RgbImage decode_png(std::span<const std::uint8_t> bytes);

const char* mime_type(ImageFormat format);

}  // namespace prefalign
