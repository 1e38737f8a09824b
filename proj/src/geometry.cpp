#include "cropper/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cropper {

namespace {

constexpr double kNormMax = 1000.0;

double round_half_up(double v) { return std::floor(v + 0.5); }

void space_range(const CoordSpace& s, double& lo, double& hi_x, double& hi_y) {
  switch (s.kind) {
    case CoordSpace::Kind::Pixel:
      lo = 0.0;
      hi_x = s.width;
      hi_y = s.height;
      break;
    case CoordSpace::Kind::Norm1000:
      lo = 1.0;
      hi_x = hi_y = kNormMax;
      break;
    case CoordSpace::Kind::Unit:
      lo = 0.0;
      hi_x = hi_y = 1.0;
      break;
  }
}

void require_dims(const CoordSpace& s) {
  if (s.kind == CoordSpace::Kind::Pixel && (s.width < 1 || s.height < 1))
    throw MissingDimensions("pixel space lacks width/height");
}

// Maps a coordinate to the shared unit interval.
double to_unit(double v, const CoordSpace& s, double dim) {
  switch (s.kind) {
    case CoordSpace::Kind::Pixel:
      return v / dim;
    case CoordSpace::Kind::Norm1000:
      return v / kNormMax;
    case CoordSpace::Kind::Unit:
      return v;
  }
  return v;
}

double from_unit(double u, const CoordSpace& s, double dim) {
  switch (s.kind) {
    case CoordSpace::Kind::Pixel:
      return u * dim;
    case CoordSpace::Kind::Norm1000:
      return std::clamp(round_half_up(u * kNormMax), 1.0, kNormMax);
    case CoordSpace::Kind::Unit:
      return u;
  }
  return u;
}

}  // namespace

CoordSpace CoordSpace::pixel(int width, int height) {
  if (width < 1 || height < 1)
    throw MissingDimensions("pixel space requires width >= 1 and height >= 1");
  return {Kind::Pixel, width, height};
}

CropBox make_box(double x1, double y1, double x2, double y2, const CoordSpace& space) {
  require_dims(space);
  if (!(std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) && std::isfinite(y2)))
    throw InvalidBox("non-finite coordinate");
  if (!(x1 < x2 && y1 < y2)) throw InvalidBox("zero-area or inverted box");
  double lo, hi_x, hi_y;
  space_range(space, lo, hi_x, hi_y);
  if (x1 < lo || y1 < lo || x2 > hi_x || y2 > hi_y)
    throw InvalidBox("coordinates outside space range");
  return CropBox{x1, y1, x2, y2, space};
}

CropBox clamp_and_validate(double x1, double y1, double x2, double y2,
                           const CoordSpace& space) {
  require_dims(space);
  if (!(std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) && std::isfinite(y2)))
    throw InvalidBox("non-finite coordinate");
  double lo, hi_x, hi_y;
  space_range(space, lo, hi_x, hi_y);
  x1 = std::clamp(x1, lo, hi_x);
  x2 = std::clamp(x2, lo, hi_x);
  y1 = std::clamp(y1, lo, hi_y);
  y2 = std::clamp(y2, lo, hi_y);
  return make_box(x1, y1, x2, y2, space);
}

AspectRatio::AspectRatio(int w_, int h_) {
  if (w_ <= 0 || h_ <= 0) throw InvalidBox("aspect ratio requires positive terms");
  int g = std::gcd(w_, h_);
  w = w_ / g;
  h = h_ / g;
}

AspectRatio AspectRatio::parse(const std::string& text) {
  auto colon = text.find(':');
  if (colon == std::string::npos) throw InvalidBox("aspect ratio must be W:H");
  try {
    int w = std::stoi(text.substr(0, colon));
    int h = std::stoi(text.substr(colon + 1));
    return AspectRatio(w, h);
  } catch (const std::logic_error&) {
    throw InvalidBox("aspect ratio must be W:H with integer terms");
  }
}

CropBox convert(const CropBox& box, const CoordSpace& to) {
  const CoordSpace& from = box.space;
  require_dims(from);
  require_dims(to);
  // Validate the input against its own space.
  make_box(box.x1, box.y1, box.x2, box.y2, from);
  if (from == to) return box;
  bool needs_dims = (from.kind == CoordSpace::Kind::Pixel) !=
                    (to.kind == CoordSpace::Kind::Pixel);
  double wdim = 0, hdim = 0;
  if (needs_dims) {
    const CoordSpace& px = from.kind == CoordSpace::Kind::Pixel ? from : to;
    wdim = px.width;
    hdim = px.height;
  } else {
    wdim = hdim = 1.0;  // unused by the pure normalized mappings
  }
  double x1 = from_unit(to_unit(box.x1, from, wdim), to, wdim);
  double x2 = from_unit(to_unit(box.x2, from, wdim), to, wdim);
  double y1 = from_unit(to_unit(box.y1, from, hdim), to, hdim);
  double y2 = from_unit(to_unit(box.y2, from, hdim), to, hdim);
  // Quantization can collapse a very thin box onto one Norm1000 grid line.
  if (to.kind == CoordSpace::Kind::Norm1000) {
    if (x2 <= x1) x2 = std::min(x1 + 1.0, kNormMax), x1 = x2 - 1.0;
    if (y2 <= y1) y2 = std::min(y1 + 1.0, kNormMax), y1 = y2 - 1.0;
  }
  return make_box(x1, y1, x2, y2, to);
}

double iou(const CropBox& a, const CropBox& b) {
  if (a.space != b.space) throw SpaceMismatch("iou requires a shared coordinate space");
  double ix = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  double iy = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  double inter = ix * iy;
  double uni = a.area() + b.area() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

double displacement(const CropBox& pred, const CropBox& gt, const CoordSpace& img) {
  if (img.kind != CoordSpace::Kind::Pixel)
    throw SpaceMismatch("displacement requires a pixel reference space");
  require_dims(img);
  CropBox p = convert(pred, img);
  CropBox g = convert(gt, img);
  double w = img.width, h = img.height;
  return (std::abs(p.x1 - g.x1) / w + std::abs(p.x2 - g.x2) / w +
          std::abs(p.y1 - g.y1) / h + std::abs(p.y2 - g.y2) / h) /
         4.0;
}

double area_fraction(const CropBox& crop, const CoordSpace& img) {
  if (img.kind != CoordSpace::Kind::Pixel)
    throw SpaceMismatch("area_fraction requires a pixel reference space");
  require_dims(img);
  CropBox c = convert(crop, img);
  return c.area() / (static_cast<double>(img.width) * img.height);
}

double ratio_of(const CropBox& box, const CoordSpace& img) {
  if (box.space.kind == CoordSpace::Kind::Pixel)
    return box.width() / box.height();
  if (img.kind != CoordSpace::Kind::Pixel)
    throw MissingDimensions("ratio of a normalized box needs pixel dimensions");
  require_dims(img);
  CropBox px = convert(box, img);
  return px.width() / px.height();
}

}  // namespace cropper
