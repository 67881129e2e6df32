#include <png.h>

#include <algorithm>
#include <csetjmp>
#include <cmath>
#include <cstdio>
#include <memory>
#include <string>

#include "gforge/error.h"
#include "gforge/io.h"

namespace gforge {

void RgbdFrame::validate() const {
  const int w = camera.width();
  const int h = camera.height();
  if (!rgb.same_size(w, h) || rgb.channels() != 3 || !depth.same_size(w, h) || depth.channels() != 1 ||
      !valid.same_size(w, h) || valid.channels() != 1) {
    fail_invalid("frame image shapes do not match its camera");
  }
  for (std::size_t i = 0; i < depth.pixel_count(); ++i) {
    if (valid.data()[i] && !(std::isfinite(depth.data()[i]) && depth.data()[i] > 0.0)) {
      fail_invalid("valid pixel with non-positive or non-finite depth");
    }
  }
  for (double c : rgb.data()) {
    if (!(c >= 0.0 && c <= 1.0)) fail_invalid("frame color outside [0, 1]");
  }
}

std::size_t RgbdFrame::valid_count() const {
  std::size_t n = 0;
  for (auto v : valid.data()) n += v ? 1 : 0;
  return n;
}

RgbdFrame make_frame(ColorImage rgb, DepthImage depth, const Pose& pose, const CameraModel& camera) {
  RgbdFrame f;
  f.valid = MaskImage(depth.width(), depth.height(), 1, 0);
  for (std::size_t i = 0; i < depth.pixel_count(); ++i) {
    const double d = depth.data()[i];
    f.valid.data()[i] = (std::isfinite(d) && d > 0.0) ? 1 : 0;
  }
  f.rgb = std::move(rgb);
  f.depth = std::move(depth);
  f.pose = pose;
  f.camera = camera;
  f.validate();
  return f;
}

double GuidanceImage::coverage() const {
  if (valid.pixel_count() == 0) return 0.0;
  std::size_t n = 0;
  for (auto v : valid.data()) n += v ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(valid.pixel_count());
}

void GuidanceImage::validate() const {
  const int w = width();
  const int h = height();
  if (!rgb.same_size(w, h) || !valid.same_size(w, h)) fail_invalid("guidance shapes disagree");
  for (std::size_t i = 0; i < valid.pixel_count(); ++i) {
    const double d = depth.data()[i];
    if (valid.data()[i]) {
      if (!(d > 0.0)) fail_invalid("valid guidance pixel without positive depth");
    } else if (d != 0.0 || rgb.data()[3 * i] != 0.0 || rgb.data()[3 * i + 1] != 0.0 ||
               rgb.data()[3 * i + 2] != 0.0) {
      fail_invalid("invalid guidance pixel carries data");
    }
  }
}

GuidanceImage GuidanceImage::blank(int width, int height) {
  return GuidanceImage{ColorImage(width, height, 3, 0.0), DepthImage(width, height, 1, 0.0),
                       MaskImage(width, height, 1, 0)};
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct RawPng {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<std::uint16_t> samples;
};

struct PngErrorSink {
  std::string message;
};

void png_error_handler(png_structp png, png_const_charp msg) {
  static_cast<PngErrorSink*>(png_get_error_ptr(png))->message = msg;
  png_longjmp(png, 1);
}
void png_warning_handler(png_structp, png_const_charp) {}

RawPng read_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) fail_io("cannot open " + path.string());
  PngErrorSink sink;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &sink, png_error_handler, png_warning_handler);
  png_infop info = png_create_info_struct(png);
  RawPng raw;
  std::vector<unsigned char> buffer;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail_io(path.string() + ": " + sink.message);
  }
  {
    png_init_io(png, fp.get());
    png_read_info(png, info);
    const int color = png_get_color_type(png, info);
    raw.bit_depth = png_get_bit_depth(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && raw.bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (raw.bit_depth == 16) png_set_swap(png);  // host little-endian samples
    png_read_update_info(png, info);
    raw.width = static_cast<int>(png_get_image_width(png, info));
    raw.height = static_cast<int>(png_get_image_height(png, info));
    raw.channels = png_get_channels(png, info);
    raw.bit_depth = png_get_bit_depth(png, info);
    const std::size_t rowbytes = png_get_rowbytes(png, info);
    buffer.resize(rowbytes * raw.height);
    rows.resize(raw.height);
    for (int y = 0; y < raw.height; ++y) rows[y] = buffer.data() + y * rowbytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    const std::size_t n = static_cast<std::size_t>(raw.width) * raw.height * raw.channels;
    raw.samples.resize(n);
    if (raw.bit_depth == 16) {
      for (std::size_t i = 0; i < n; ++i) {
        raw.samples[i] = static_cast<std::uint16_t>(buffer[2 * i] | (buffer[2 * i + 1] << 8));
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) raw.samples[i] = buffer[i];
    }
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return raw;
}

void write_png(const std::filesystem::path& path, int width, int height, int channels, int bit_depth,
               const std::vector<std::uint16_t>& samples) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) fail_io("cannot write " + path.string());
  PngErrorSink sink;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &sink, png_error_handler, png_warning_handler);
  png_infop info = png_create_info_struct(png);
  const int bytes = bit_depth / 8;
  std::vector<unsigned char> row(static_cast<std::size_t>(width) * channels * bytes);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail_io(path.string() + ": " + sink.message);
  }
  {
    png_init_io(png, fp.get());
    png_set_compression_level(png, 6);
    const int color = channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY;
    png_set_IHDR(png, info, width, height, bit_depth, color, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < height; ++y) {
      for (std::size_t i = 0; i < static_cast<std::size_t>(width) * channels; ++i) {
        const std::uint16_t s = samples[static_cast<std::size_t>(y) * width * channels + i];
        if (bytes == 2) {
          row[2 * i] = static_cast<unsigned char>(s >> 8);  // PNG is big-endian
          row[2 * i + 1] = static_cast<unsigned char>(s & 0xff);
        } else {
          row[i] = static_cast<unsigned char>(s);
        }
      }
      png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
  }
  png_destroy_write_struct(&png, &info);
}

}  // namespace

ColorImage read_rgb_png(const std::filesystem::path& path) {
  RawPng raw = read_png(path);
  if (raw.bit_depth != 8 || raw.channels < 3) fail_io(path.string() + ": expected 8-bit RGB PNG");
  ColorImage out(raw.width, raw.height, 3);
  for (std::size_t p = 0; p < out.pixel_count(); ++p) {
    for (int c = 0; c < 3; ++c) out.data()[3 * p + c] = raw.samples[p * raw.channels + c] / 255.0;
  }
  return out;
}

void write_rgb_png(const std::filesystem::path& path, const ColorImage& rgb) {
  if (rgb.channels() != 3) fail_invalid("write_rgb_png expects 3 channels");
  std::vector<std::uint16_t> samples(rgb.data().size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    samples[i] = static_cast<std::uint16_t>(std::lround(std::clamp(rgb.data()[i], 0.0, 1.0) * 255.0));
  }
  write_png(path, rgb.width(), rgb.height(), 3, 8, samples);
}

std::uint16_t depth_to_millimeters(double meters) {
  if (!std::isfinite(meters) || meters <= 0.0) return 0;
  const long mm = std::lround(meters * 1000.0);
  return static_cast<std::uint16_t>(std::clamp<long>(mm, 0, 65535));
}

DepthImage read_depth_png(const std::filesystem::path& path) {
  RawPng raw = read_png(path);
  if (raw.bit_depth != 16 || raw.channels != 1) fail_io(path.string() + ": expected 16-bit grayscale PNG");
  DepthImage out(raw.width, raw.height, 1);
  for (std::size_t i = 0; i < out.pixel_count(); ++i) out.data()[i] = raw.samples[i] / 1000.0;
  return out;
}

void write_depth_png(const std::filesystem::path& path, const DepthImage& depth) {
  if (depth.channels() != 1) fail_invalid("write_depth_png expects 1 channel");
  std::vector<std::uint16_t> samples(depth.pixel_count());
  for (std::size_t i = 0; i < samples.size(); ++i) samples[i] = depth_to_millimeters(depth.data()[i]);
  write_png(path, depth.width(), depth.height(), 1, 16, samples);
}

}  // namespace gforge
