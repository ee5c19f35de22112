#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace memejudge::corpus {

// Per-channel normalization statistics; owned by the vision extractor config.
struct ImageNormalization {
  std::array<double, 3> mean{0.48145466, 0.4578275, 0.40821073};
  std::array<double, 3> stddev{0.26862954, 0.26130258, 0.27577711};
};

// Channel-major [3, height, width] RGB tensor.
class ImageTensor {
 public:
  ImageTensor() = default;
  ImageTensor(std::size_t height, std::size_t width)
      : height_(height), width_(width), data_(3 * height * width, 0.0) {}

  std::size_t channels() const noexcept { return 3; }
  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }

  double& at(std::size_t c, std::size_t y, std::size_t x) {
    return data_[(c * height_ + y) * width_ + x];
  }
  double at(std::size_t c, std::size_t y, std::size_t x) const {
    return data_[(c * height_ + y) * width_ + x];
  }
  const std::vector<double>& data() const noexcept { return data_; }
  std::vector<double>& data() noexcept { return data_; }

  bool operator==(const ImageTensor&) const = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> data_;
};

// Decodes, resizes to image_size x image_size (bilinear, no augmentation) and normalizes.
ImageTensor load_image(const std::filesystem::path& path, std::size_t image_size,
                       const ImageNormalization& norm = {});

// Same pipeline on raw interleaved RGB8 pixels.
ImageTensor image_from_rgb(const std::vector<std::uint8_t>& rgb, std::size_t height,
                           std::size_t width, std::size_t image_size,
                           const ImageNormalization& norm = {});

void write_png_rgb(const std::filesystem::path& path, const std::vector<std::uint8_t>& rgb,
                   std::size_t height, std::size_t width);

}  // namespace memejudge::corpus
