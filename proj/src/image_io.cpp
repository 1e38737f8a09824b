#include "cropper/image_io.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <cmath>
#include <fstream>

#include "cropper/digest.hpp"

namespace cropper {

namespace {

cv::Mat decode(const ImageBytes& encoded) {
  if (encoded.empty()) throw DecodeError("empty image buffer");
  cv::Mat raw(1, static_cast<int>(encoded.size()), CV_8UC1,
              const_cast<unsigned char*>(encoded.data()));
  cv::Mat img = cv::imdecode(raw, cv::IMREAD_COLOR);
  if (img.empty()) throw DecodeError("failed to decode image");
  return img;
}

ImageBytes encode_png(const cv::Mat& img) {
  std::vector<unsigned char> out;
  if (!cv::imencode(".png", img, out)) throw DecodeError("failed to encode png");
  return out;
}

}  // namespace

ImageBytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DecodeError("cannot open " + path.string());
  return ImageBytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::span<const std::byte> data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StorageError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size()));
}

ImageDims decode_dims(const ImageBytes& encoded) {
  cv::Mat img = decode(encoded);
  return {img.cols, img.rows};
}

ImageBytes extract_crop(const ImageBytes& encoded, const CropBox& box) {
  cv::Mat img = decode(encoded);
  CoordSpace px = CoordSpace::pixel(img.cols, img.rows);
  CropBox b = convert(box, px);
  int x1 = static_cast<int>(std::floor(b.x1 + 0.5));
  int y1 = static_cast<int>(std::floor(b.y1 + 0.5));
  int x2 = static_cast<int>(std::floor(b.x2 + 0.5));
  int y2 = static_cast<int>(std::floor(b.y2 + 0.5));
  x1 = std::clamp(x1, 0, img.cols - 1);
  y1 = std::clamp(y1, 0, img.rows - 1);
  x2 = std::clamp(x2, x1 + 1, img.cols);
  y2 = std::clamp(y2, y1 + 1, img.rows);
  cv::Mat roi = img(cv::Rect(x1, y1, x2 - x1, y2 - y1));
  return encode_png(roi);
}

std::string pixel_digest(const ImageBytes& encoded) {
  cv::Mat img = decode(encoded);
  Sha256 h;
  std::string header = std::to_string(img.cols) + "x" + std::to_string(img.rows) + ":";
  h.update(header);
  for (int r = 0; r < img.rows; ++r) {
    const unsigned char* row = img.ptr<unsigned char>(r);
    h.update(std::span<const std::byte>(reinterpret_cast<const std::byte*>(row),
                                        static_cast<size_t>(img.cols) * img.channels()));
  }
  return h.hex();
}

ImageBytes make_test_image(int width, int height, unsigned seed) {
  cv::Mat img(height, width, CV_8UC3);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      img.at<cv::Vec3b>(y, x) =
          cv::Vec3b(static_cast<unsigned char>((x * 255) / std::max(1, width - 1)),
                    static_cast<unsigned char>((y * 255) / std::max(1, height - 1)),
                    static_cast<unsigned char>((seed * 37) % 256));
    }
  }
  // A block whose position depends on the seed, so differently seeded images
  // have distinct pixel digests even at equal sizes.
  int bx = static_cast<int>(seed % std::max(1u, static_cast<unsigned>(width / 2)));
  int by = static_cast<int>((seed / 7) % std::max(1u, static_cast<unsigned>(height / 2)));
  cv::rectangle(img, cv::Rect(bx, by, width / 4 + 1, height / 4 + 1),
                cv::Scalar(255, 255, 255), cv::FILLED);
  return [&] {
    std::vector<unsigned char> out;
    cv::imencode(".png", img, out);
    return out;
  }();
}

}  // namespace cropper
