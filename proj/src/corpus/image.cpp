#include "memejudge/corpus/image.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "memejudge/common/errors.hpp"

namespace memejudge::corpus {

namespace {

ImageTensor normalize_rgb(const cv::Mat& rgb, std::size_t image_size, const ImageNormalization& norm) {
  cv::Mat sized;
  const int target = static_cast<int>(image_size);
  if (rgb.rows == target && rgb.cols == target) {
    sized = rgb;
  } else {
    cv::resize(rgb, sized, cv::Size(target, target), 0, 0, cv::INTER_LINEAR);
  }
  ImageTensor out(image_size, image_size);
  for (int y = 0; y < target; ++y) {
    const auto* row = sized.ptr<cv::Vec3b>(y);
    for (int x = 0; x < target; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double v = row[x][c] / 255.0;
        out.at(static_cast<std::size_t>(c), static_cast<std::size_t>(y), static_cast<std::size_t>(x)) =
            (v - norm.mean[c]) / norm.stddev[c];
      }
    }
  }
  return out;
}

}  // namespace

ImageTensor load_image(const std::filesystem::path& path, std::size_t image_size,
                       const ImageNormalization& norm) {
  if (image_size == 0) throw ValidationError("image_size must be positive");
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw ImageError("cannot decode image: " + path.string());
  if (bgr.rows == 0 || bgr.cols == 0) throw ImageError("zero-dimension image: " + path.string());
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  return normalize_rgb(rgb, image_size, norm);
}

ImageTensor image_from_rgb(const std::vector<std::uint8_t>& rgb, std::size_t height, std::size_t width,
                           std::size_t image_size, const ImageNormalization& norm) {
  if (height == 0 || width == 0) throw ImageError("zero-dimension image");
  if (rgb.size() != 3 * height * width) throw ValidationError("rgb buffer size does not match dimensions");
  if (image_size == 0) throw ValidationError("image_size must be positive");
  cv::Mat m(static_cast<int>(height), static_cast<int>(width), CV_8UC3,
            const_cast<std::uint8_t*>(rgb.data()));
  return normalize_rgb(m, image_size, norm);
}

void write_png_rgb(const std::filesystem::path& path, const std::vector<std::uint8_t>& rgb,
                   std::size_t height, std::size_t width) {
  if (rgb.size() != 3 * height * width) throw ValidationError("rgb buffer size does not match dimensions");
  cv::Mat m(static_cast<int>(height), static_cast<int>(width), CV_8UC3,
            const_cast<std::uint8_t*>(rgb.data()));
  cv::Mat bgr;
  cv::cvtColor(m, bgr, cv::COLOR_RGB2BGR);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), bgr)) throw ImageError("cannot write image: " + path.string());
}

}  // namespace memejudge::corpus
