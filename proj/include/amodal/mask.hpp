#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "amodal/errors.hpp"

namespace amodal {

enum class BoxKind { modal, amodal };

/// Axis-aligned box in pixel-corner coordinates, half-open:
/// covers [x, x+w) x [y, y+h).
struct BoundingBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;
  BoxKind kind = BoxKind::modal;

  double x2() const { return x + w; }
  double y2() const { return y + h; }
  double cx() const { return x + 0.5 * w; }
  double cy() const { return y + 0.5 * h; }
  bool degenerate() const { return w <= 0.0 || h <= 0.0; }

  /// Intersects the box with [0,width) x [0,height). The result may be
  /// degenerate (zero area) when the box lies fully outside.
  BoundingBox clamped(int image_width, int image_height) const;
};

/// Dense binary grid over image pixels, row-major storage.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int height, int width)
      : height_(height), width_(width),
        pixels_(static_cast<std::size_t>(height) * width, 0) {}

  static BinaryMask from_pixels(int height, int width,
                                std::vector<std::uint8_t> pixels);

  int height() const { return height_; }
  int width() const { return width_; }
  std::int64_t size() const {
    return static_cast<std::int64_t>(height_) * width_;
  }

  bool at(int row, int col) const {
    return pixels_[static_cast<std::size_t>(row) * width_ + col] != 0;
  }
  void set(int row, int col, bool value) {
    pixels_[static_cast<std::size_t>(row) * width_ + col] = value ? 1 : 0;
  }

  const std::vector<std::uint8_t>& pixels() const { return pixels_; }
  std::vector<std::uint8_t>& pixels() { return pixels_; }

  bool same_shape(const BinaryMask& other) const {
    return height_ == other.height_ && width_ == other.width_;
  }

  bool operator==(const BinaryMask& other) const {
    return height_ == other.height_ && width_ == other.width_ &&
           pixels_ == other.pixels_;
  }

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> pixels_;
};

/// Uncompressed COCO run-length encoding: column-major run counts,
/// starting with the run of zeros (possibly empty).
struct RunLengthEncoding {
  int height = 0;
  int width = 0;
  std::vector<std::int64_t> counts;
};

RunLengthEncoding rle_encode(const BinaryMask& mask);

/// Throws SchemaError when the counts do not sum to height*width or a
/// count is negative.
BinaryMask rle_decode(const RunLengthEncoding& rle);

/// COCO compressed string codec (the char-packed form used in
/// annotation files). Optional alternative to the counts array.
std::string rle_to_string(const RunLengthEncoding& rle);
RunLengthEncoding rle_from_string(const std::string& s, int height, int width);

// --- geometry -------------------------------------------------------------

std::int64_t mask_area(const BinaryMask& mask);

/// |a n b| / |a u b|; 1.0 when both masks are empty.
/// Throws DimensionError on shape mismatch.
double mask_iou(const BinaryMask& a, const BinaryMask& b);

/// Set pixels of `amodal` not covered by `cover`.
BinaryMask subtract(const BinaryMask& amodal, const BinaryMask& cover);

BinaryMask mask_intersect(const BinaryMask& a, const BinaryMask& b);
BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b);

/// True when every set pixel of `inner` is set in `outer`.
bool mask_contains(const BinaryMask& outer, const BinaryMask& inner);

/// Minimal axis-aligned box covering all set pixels.
/// Throws EmptyMaskError on an empty mask.
BoundingBox tight_bbox(const BinaryMask& mask, BoxKind kind = BoxKind::modal);

}  // namespace amodal
