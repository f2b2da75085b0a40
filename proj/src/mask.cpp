#include "amodal/mask.hpp"

#include <algorithm>
#include <cmath>

namespace amodal {

BoundingBox BoundingBox::clamped(int image_width, int image_height) const {
  const double nx = std::clamp(x, 0.0, static_cast<double>(image_width));
  const double ny = std::clamp(y, 0.0, static_cast<double>(image_height));
  const double nx2 = std::clamp(x2(), 0.0, static_cast<double>(image_width));
  const double ny2 = std::clamp(y2(), 0.0, static_cast<double>(image_height));
  return BoundingBox{nx, ny, std::max(0.0, nx2 - nx), std::max(0.0, ny2 - ny),
                     kind};
}

BinaryMask BinaryMask::from_pixels(int height, int width,
                                   std::vector<std::uint8_t> pixels) {
  if (pixels.size() != static_cast<std::size_t>(height) * width) {
    throw DimensionError("pixel buffer does not match height*width");
  }
  BinaryMask m(height, width);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    m.pixels_[i] = pixels[i] ? 1 : 0;
  }
  return m;
}

RunLengthEncoding rle_encode(const BinaryMask& mask) {
  RunLengthEncoding rle;
  rle.height = mask.height();
  rle.width = mask.width();
  std::uint8_t prev = 0;  // RLE starts with the zero run
  std::int64_t run = 0;
  for (int col = 0; col < mask.width(); ++col) {
    for (int row = 0; row < mask.height(); ++row) {
      const std::uint8_t value = mask.at(row, col) ? 1 : 0;
      if (value != prev) {
        rle.counts.push_back(run);
        run = 0;
        prev = value;
      }
      ++run;
    }
  }
  rle.counts.push_back(run);
  if (rle.counts.empty()) rle.counts.push_back(0);
  return rle;
}

BinaryMask rle_decode(const RunLengthEncoding& rle) {
  std::int64_t total = 0;
  for (const auto c : rle.counts) {
    if (c < 0) throw SchemaError("RLE count is negative");
    total += c;
  }
  const std::int64_t expected =
      static_cast<std::int64_t>(rle.height) * rle.width;
  if (total != expected) {
    throw SchemaError("RLE counts sum to " + std::to_string(total) +
                      ", expected " + std::to_string(expected));
  }
  BinaryMask mask(rle.height, rle.width);
  std::int64_t pos = 0;
  bool value = false;
  for (const auto c : rle.counts) {
    for (std::int64_t i = 0; i < c; ++i, ++pos) {
      if (value) {
        const int col = static_cast<int>(pos / rle.height);
        const int row = static_cast<int>(pos % rle.height);
        mask.set(row, col, true);
      }
    }
    value = !value;
  }
  return mask;
}

std::string rle_to_string(const RunLengthEncoding& rle) {
  // Matches the COCO char codec: 5 bits per chunk, LEB-style continuation,
  // counts beyond the first two stored as deltas.
  std::string s;
  for (std::size_t i = 0; i < rle.counts.size(); ++i) {
    std::int64_t x = rle.counts[i];
    if (i > 2) x -= rle.counts[i - 2];
    bool more = true;
    while (more) {
      std::int64_t c = x & 0x1f;
      x >>= 5;
      more = (c & 0x10) ? x != -1 : x != 0;
      if (more) c |= 0x20;
      s.push_back(static_cast<char>(c + 48));
    }
  }
  return s;
}

RunLengthEncoding rle_from_string(const std::string& s, int height,
                                  int width) {
  RunLengthEncoding rle;
  rle.height = height;
  rle.width = width;
  std::size_t pos = 0;
  while (pos < s.size()) {
    std::int64_t x = 0;
    int k = 0;
    bool more = true;
    while (more) {
      if (pos >= s.size()) throw SchemaError("truncated RLE string");
      const std::int64_t c = static_cast<std::int64_t>(s[pos]) - 48;
      x |= (c & 0x1f) << (5 * k);
      more = (c & 0x20) != 0;
      ++pos;
      ++k;
      if (!more && (c & 0x10)) x |= -1LL << (5 * k);
    }
    if (rle.counts.size() > 2) x += rle.counts[rle.counts.size() - 2];
    rle.counts.push_back(x);
  }
  return rle;
}

std::int64_t mask_area(const BinaryMask& mask) {
  std::int64_t area = 0;
  for (const auto p : mask.pixels()) area += p;
  return area;
}

double mask_iou(const BinaryMask& a, const BinaryMask& b) {
  if (!a.same_shape(b)) {
    throw DimensionError("mask_iou: shape mismatch");
  }
  std::int64_t inter = 0;
  std::int64_t uni = 0;
  const auto& pa = a.pixels();
  const auto& pb = b.pixels();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    inter += pa[i] & pb[i];
    uni += pa[i] | pb[i];
  }
  if (uni == 0) return 1.0;  // both empty: perfect agreement
  return static_cast<double>(inter) / static_cast<double>(uni);
}

BinaryMask subtract(const BinaryMask& amodal, const BinaryMask& cover) {
  if (!amodal.same_shape(cover)) {
    throw DimensionError("subtract: shape mismatch");
  }
  BinaryMask out(amodal.height(), amodal.width());
  const auto& pa = amodal.pixels();
  const auto& pc = cover.pixels();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    out.pixels()[i] = pa[i] & static_cast<std::uint8_t>(!pc[i]);
  }
  return out;
}

BinaryMask mask_intersect(const BinaryMask& a, const BinaryMask& b) {
  if (!a.same_shape(b)) throw DimensionError("mask_intersect: shape mismatch");
  BinaryMask out(a.height(), a.width());
  for (std::size_t i = 0; i < out.pixels().size(); ++i) {
    out.pixels()[i] = a.pixels()[i] & b.pixels()[i];
  }
  return out;
}

BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b) {
  if (!a.same_shape(b)) throw DimensionError("mask_union: shape mismatch");
  BinaryMask out(a.height(), a.width());
  for (std::size_t i = 0; i < out.pixels().size(); ++i) {
    out.pixels()[i] = a.pixels()[i] | b.pixels()[i];
  }
  return out;
}

bool mask_contains(const BinaryMask& outer, const BinaryMask& inner) {
  if (!outer.same_shape(inner)) {
    throw DimensionError("mask_contains: shape mismatch");
  }
  for (std::size_t i = 0; i < outer.pixels().size(); ++i) {
    if (inner.pixels()[i] && !outer.pixels()[i]) return false;
  }
  return true;
}

BoundingBox tight_bbox(const BinaryMask& mask, BoxKind kind) {
  int min_row = mask.height();
  int max_row = -1;
  int min_col = mask.width();
  int max_col = -1;
  for (int row = 0; row < mask.height(); ++row) {
    for (int col = 0; col < mask.width(); ++col) {
      if (!mask.at(row, col)) continue;
      min_row = std::min(min_row, row);
      max_row = std::max(max_row, row);
      min_col = std::min(min_col, col);
      max_col = std::max(max_col, col);
    }
  }
  if (max_row < 0) throw EmptyMaskError("tight_bbox: empty mask");
  return BoundingBox{static_cast<double>(min_col), static_cast<double>(min_row),
                     static_cast<double>(max_col - min_col + 1),
                     static_cast<double>(max_row - min_row + 1), kind};
}

}  // namespace amodal
