#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cropper/geometry.hpp"

namespace cropper {

using ImageBytes = std::vector<unsigned char>;

ImageBytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::byte> data);

// Decoded dimensions of an encoded image. Throws DecodeError.
struct ImageDims {
  int width = 0;
  int height = 0;
};
ImageDims decode_dims(const ImageBytes& encoded);

// Cuts the pixel-space box out of the encoded image and re-encodes losslessly
// (PNG), so record/replay digests stay byte-stable. Real-valued coordinates
// are rounded half-up and clamped to at least one pixel.
ImageBytes extract_crop(const ImageBytes& encoded, const CropBox& box);

// Hash of the decoded pixel content (layout-independent of the container
// format); request digests use this so re-encoding does not break replay.
std::string pixel_digest(const ImageBytes& encoded);

// Deterministic synthetic test image (gradient + seed-colored block).
ImageBytes make_test_image(int width, int height, unsigned seed = 0);

}  // namespace cropper
