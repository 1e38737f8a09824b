#pragma once

#include <string>

#include "cropper/errors.hpp"

namespace cropper {

// One of the three coordinate systems the prompt grammars use, plus the pixel
// space ground truth lives in. Pixel spaces carry the image dimensions.
struct CoordSpace {
  enum class Kind { Pixel, Norm1000, Unit };

  Kind kind = Kind::Pixel;
  int width = 0;   // Pixel only
  int height = 0;  // Pixel only

  static CoordSpace pixel(int width, int height);
  static CoordSpace norm1000() { return {Kind::Norm1000, 0, 0}; }
  static CoordSpace unit() { return {Kind::Unit, 0, 0}; }

  bool operator==(const CoordSpace&) const = default;
};

// Axis-aligned rectangle. Pixel boxes are half-open: x2/y2 exclusive, so
// area = (x2-x1)*(y2-y1) exactly.
struct CropBox {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
  CoordSpace space;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
};

// Validates invariants (x1 < x2, y1 < y2, coordinates in range) and returns
// the box. Throws InvalidBox on violation.
CropBox make_box(double x1, double y1, double x2, double y2, const CoordSpace& space);

// Clamps coordinates into the space's valid range, then validates. Degenerate
// boxes after clamping still throw InvalidBox.
CropBox clamp_and_validate(double x1, double y1, double x2, double y2, const CoordSpace& space);

// Reduced-form aspect ratio, e.g. 16:9.
struct AspectRatio {
  int w = 1;
  int h = 1;

  AspectRatio() = default;
  AspectRatio(int w, int h);  // reduces; throws InvalidBox when w,h <= 0

  double value() const { return static_cast<double>(w) / h; }
  std::string str() const { return std::to_string(w) + ":" + std::to_string(h); }

  static AspectRatio parse(const std::string& text);  // "16:9"

  bool operator==(const AspectRatio&) const = default;
  bool operator<(const AspectRatio& o) const { return value() < o.value(); }
};

// Re-expresses the same physical rectangle in `to`. Norm1000 targets round
// half-up to the integer grid and clamp to [1,1000]; Pixel and Unit targets
// stay real-valued so Unit<->Pixel is exact.
CropBox convert(const CropBox& box, const CoordSpace& to);

// Intersection over union; both boxes must share a coordinate space.
double iou(const CropBox& a, const CropBox& b);

// Mean L1 distance of the four edges, each normalized by the image dimension.
// Both boxes are converted into `img` first.
double displacement(const CropBox& pred, const CropBox& gt, const CoordSpace& img);

// Crop area divided by image area; the crop must lie inside the image.
double area_fraction(const CropBox& crop, const CoordSpace& img);

// Physical width/height of the crop in pixels. `img` supplies dimensions when
// the box lives in a normalized space.
double ratio_of(const CropBox& box, const CoordSpace& img);

}  // namespace cropper
