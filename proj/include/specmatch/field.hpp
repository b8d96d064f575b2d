#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace specmatch {

/// Real multi-channel 2-D signal (image, latent or feature map).
///
/// Storage is channel-major, then row-major: element (c, y, x) lives at
/// `c * height * width + y * width + x`. Constructors reject empty extents
/// and non-finite samples.
class Field2D {
 public:
  Field2D(std::size_t channels, std::size_t height, std::size_t width);
  Field2D(std::size_t channels, std::size_t height, std::size_t width,
          std::vector<double> data);

  std::size_t channels() const noexcept { return channels_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t plane_size() const noexcept { return height_ * width_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t c, std::size_t y, std::size_t x) {
    return data_[(c * height_ + y) * width_ + x];
  }
  double operator()(std::size_t c, std::size_t y, std::size_t x) const {
    return data_[(c * height_ + y) * width_ + x];
  }

  std::span<double> channel(std::size_t c);
  std::span<const double> channel(std::size_t c) const;

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::vector<double>& values() noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  bool same_shape(const Field2D& other) const noexcept {
    return channels_ == other.channels_ && height_ == other.height_ &&
           width_ == other.width_;
  }

  friend bool operator==(const Field2D&, const Field2D&) = default;

 private:
  std::size_t channels_;
  std::size_t height_;
  std::size_t width_;
  std::vector<double> data_;
};

/// Largest absolute elementwise difference; throws SizeError on shape mismatch.
double max_abs_diff(const Field2D& a, const Field2D& b);

/// Sum of squared samples.
double squared_norm(const Field2D& f);

}  // namespace specmatch
