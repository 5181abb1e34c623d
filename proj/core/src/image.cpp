#include "prefalign/image.hpp"

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <string>

#include <jpeglib.h>
#include <png.h>

#include "prefalign/error.hpp"

namespace prefalign {
namespace {

constexpr std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};

bool has_png_signature(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSignature, 8) == 0;
}

bool has_jpeg_signature(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF;
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

void jpeg_silent(j_common_ptr, int) {}

ImageInfo inspect_jpeg(std::span<const std::uint8_t> bytes) {
  jpeg_decompress_struct cinfo{};
  JpegErrorManager err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  err.base.emit_message = jpeg_silent;
  std::vector<JSAMPLE> row;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    fail(ErrorCode::kInvalidImage, std::string("JPEG decode failed: ") + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  jpeg_start_decompress(&cinfo);
  row.resize(static_cast<std::size_t>(cinfo.output_width) * cinfo.output_components);
  JSAMPROW row_ptr = row.data();
  while (cinfo.output_scanline < cinfo.output_height) {
    jpeg_read_scanlines(&cinfo, &row_ptr, 1);
  }
  const ImageInfo info{ImageFormat::kJpeg, static_cast<int>(cinfo.output_width),
                       static_cast<int>(cinfo.output_height)};
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return info;
}

}  // namespace

RgbImage decode_png(std::span<const std::uint8_t> bytes) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
    fail(ErrorCode::kInvalidImage, std::string("PNG decode failed: ") + img.message);
  }
  img.format = PNG_FORMAT_RGB;
  RgbImage out;
  out.width = static_cast<int>(img.width);
  out.height = static_cast<int>(img.height);
  out.pixels.resize(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, out.pixels.data(), 0, nullptr)) {
    std::string msg = img.message;
    png_image_free(&img);
    fail(ErrorCode::kInvalidImage, "PNG decode failed: " + msg);
  }
  return out;
}

ImageInfo inspect_image(std::span<const std::uint8_t> bytes, std::size_t max_bytes) {
  if (max_bytes != 0 && bytes.size() > max_bytes) {
    fail(ErrorCode::kOversizeImage, "image is " + std::to_string(bytes.size()) +
                                        " bytes; cap is " + std::to_string(max_bytes));
  }
  if (has_png_signature(bytes)) {
    const RgbImage decoded = decode_png(bytes);
    return {ImageFormat::kPng, decoded.width, decoded.height};
  }
  if (has_jpeg_signature(bytes)) return inspect_jpeg(bytes);
  fail(ErrorCode::kInvalidImage, "image is neither PNG nor JPEG");
}

std::vector<std::uint8_t> encode_png(const RgbImage& image) {
  if (image.width <= 0 || image.height <= 0 ||
      image.pixels.size() != static_cast<std::size_t>(image.width) * image.height * 3) {
    fail(ErrorCode::kInvalidArgument, "RGB buffer does not match image dimensions");
  }
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width);
  img.height = static_cast<png_uint_32>(image.height);
  img.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&img, nullptr, &size, 0, image.pixels.data(), 0, nullptr)) {
    fail(ErrorCode::kIo, std::string("PNG encode failed: ") + img.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, image.pixels.data(), 0, nullptr)) {
    fail(ErrorCode::kIo, std::string("PNG encode failed: ") + img.message);
  }
  out.resize(size);
  return out;
}

const char* mime_type(ImageFormat format) {
  return format == ImageFormat::kPng ? "image/png" : "image/jpeg";
}

}  // namespace prefalign
