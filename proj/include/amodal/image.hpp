#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace amodal {

/// Grayscale image, row-major float pixels in [0, 1].
struct Image {
  int height = 0;
  int width = 0;
  std::vector<float> pixels;

  Image() = default;
  Image(int h, int w, float fill = 0.0f)
      : height(h), width(w),
        pixels(static_cast<std::size_t>(h) * w, fill) {}

  float at(int row, int col) const {
    return pixels[static_cast<std::size_t>(row) * width + col];
  }
  float& at(int row, int col) {
    return pixels[static_cast<std::size_t>(row) * width + col];
  }
};

/// RGB image used only for overlay output.
struct RgbImage {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> pixels;  // 3 bytes per pixel, row-major

  RgbImage() = default;
  RgbImage(int h, int w)
      : height(h), width(w),
        pixels(static_cast<std::size_t>(h) * w * 3, 0) {}

  void set(int row, int col, std::array<std::uint8_t, 3> rgb) {
    auto* p = &pixels[(static_cast<std::size_t>(row) * width + col) * 3];
    p[0] = rgb[0];
    p[1] = rgb[1];
    p[2] = rgb[2];
  }
};

RgbImage to_rgb(const Image& image);

/// Nearest-neighbour resize (used to adapt inputs to the model grid).
Image resize_nearest(const Image& image, int out_height, int out_width);

void write_png(const Image& image, const std::string& path);
void write_png(const RgbImage& image, const std::string& path);

/// Reads any PNG as grayscale (RGB inputs are averaged).
Image read_png(const std::string& path);

}  // namespace amodal
