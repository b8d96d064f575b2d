#include "specmatch/field.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "specmatch/errors.hpp"
#include "specmatch/tokens.hpp"

namespace specmatch {

namespace {

void check_extents(std::size_t channels, std::size_t height, std::size_t width) {
  if (channels == 0 || height == 0 || width == 0) {
    throw SizeError("Field2D: channels, height and width must be positive");
  }
}

}  // namespace

Field2D::Field2D(std::size_t channels, std::size_t height, std::size_t width)
    : channels_(channels), height_(height), width_(width) {
  check_extents(channels, height, width);
  data_.assign(channels * height * width, 0.0);
}

Field2D::Field2D(std::size_t channels, std::size_t height, std::size_t width,
                 std::vector<double> data)
    : channels_(channels), height_(height), width_(width), data_(std::move(data)) {
  check_extents(channels, height, width);
  if (data_.size() != channels * height * width) {
    throw SizeError("Field2D: data length " + std::to_string(data_.size()) +
                    " != channels*height*width " +
                    std::to_string(channels * height * width));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw DomainError("Field2D: non-finite sample at index " + std::to_string(i));
    }
  }
}

std::span<double> Field2D::channel(std::size_t c) {
  return {data_.data() + c * plane_size(), plane_size()};
}

std::span<const double> Field2D::channel(std::size_t c) const {
  return {data_.data() + c * plane_size(), plane_size()};
}

double max_abs_diff(const Field2D& a, const Field2D& b) {
  if (!a.same_shape(b)) throw SizeError("max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  }
  return m;
}

double squared_norm(const Field2D& f) {
  double s = 0.0;
  for (double v : f.data()) s += v * v;
  return s;
}

TokenMatrix::TokenMatrix(std::size_t tokens, std::size_t dims, std::vector<double> values,
                         std::optional<GridShape> grid)
    : tokens_(tokens), dims_(dims), values_(std::move(values)), grid_(grid) {
  if (tokens == 0 || dims == 0) throw SizeError("TokenMatrix: empty token set");
  if (values_.size() != tokens * dims) {
    throw SizeError("TokenMatrix: value count " + std::to_string(values_.size()) +
                    " != T*D " + std::to_string(tokens * dims));
  }
  if (grid_ && grid_->height * grid_->width != tokens) {
    throw ShapeError("TokenMatrix: grid " + std::to_string(grid_->height) + "x" +
                     std::to_string(grid_->width) + " does not hold " +
                     std::to_string(tokens) + " tokens");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw DomainError("TokenMatrix: non-finite value");
  }
}

TokenMatrix::TokenMatrix(std::size_t tokens, std::size_t dims, std::optional<GridShape> grid)
    : TokenMatrix(tokens, dims, std::vector<double>(tokens * dims, 0.0), grid) {}

GridShape TokenMatrix::require_grid() const {
  if (!grid_) throw ShapeError("TokenMatrix: operation needs a spatial grid shape");
  return *grid_;
}

}  // namespace specmatch
