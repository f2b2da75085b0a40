#include "amodal/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

namespace amodal {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

std::uint8_t to_byte(float v) {
  const float c = std::clamp(v, 0.0f, 1.0f);
  return static_cast<std::uint8_t>(std::lround(c * 255.0f));
}

void write_png_impl(int height, int width, int channels,
                    const std::uint8_t* data, const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw std::runtime_error("cannot open for writing: " + path);

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng failure while writing " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, width, height, 8,
               channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> rows(height);
  for (int r = 0; r < height; ++r) {
    rows[r] = const_cast<png_bytep>(
        data + static_cast<std::size_t>(r) * width * channels);
  }
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

RgbImage to_rgb(const Image& image) {
  RgbImage rgb(image.height, image.width);
  for (int r = 0; r < image.height; ++r) {
    for (int c = 0; c < image.width; ++c) {
      const std::uint8_t v = to_byte(image.at(r, c));
      rgb.set(r, c, {v, v, v});
    }
  }
  return rgb;
}

Image resize_nearest(const Image& image, int out_height, int out_width) {
  Image out(out_height, out_width);
  for (int r = 0; r < out_height; ++r) {
    const int sr = std::min(image.height - 1,
                            static_cast<int>(static_cast<std::int64_t>(r) *
                                             image.height / out_height));
    for (int c = 0; c < out_width; ++c) {
      const int sc = std::min(image.width - 1,
                              static_cast<int>(static_cast<std::int64_t>(c) *
                                               image.width / out_width));
      out.at(r, c) = image.at(sr, sc);
    }
  }
  return out;
}

void write_png(const Image& image, const std::string& path) {
  std::vector<std::uint8_t> bytes(image.pixels.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    bytes[i] = to_byte(image.pixels[i]);
  }
  write_png_impl(image.height, image.width, 1, bytes.data(), path);
}

void write_png(const RgbImage& image, const std::string& path) {
  write_png_impl(image.height, image.width, 3, image.pixels.data(), path);
}

Image read_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw std::runtime_error("cannot open: " + path);

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw std::runtime_error("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("libpng failure while reading " + path);
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);

  // Normalize everything to 8-bit RGB, then average to gray.
  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);

  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  std::vector<std::uint8_t> raw(static_cast<std::size_t>(height) * width * 3);
  std::vector<png_bytep> rows(height);
  for (int r = 0; r < height; ++r) {
    rows[r] = raw.data() + static_cast<std::size_t>(r) * width * 3;
  }
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  Image image(height, width);
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    const float sum = static_cast<float>(raw[3 * i]) +
                      static_cast<float>(raw[3 * i + 1]) +
                      static_cast<float>(raw[3 * i + 2]);
    image.pixels[i] = sum / (3.0f * 255.0f);
  }
  return image;
}

}  // namespace amodal
