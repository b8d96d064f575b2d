#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace specmatch {

struct GridShape {
  std::size_t height;
  std::size_t width;
  friend bool operator==(const GridShape&, const GridShape&) = default;
};

/// T tokens by D feature dimensions, row-major (token t occupies row t).
///
/// An optional grid shape (h, w) with h * w == T gives the tokens a spatial
/// layout, row-major over the grid; spatial operations require it.
class TokenMatrix {
 public:
  TokenMatrix(std::size_t tokens, std::size_t dims, std::vector<double> values,
              std::optional<GridShape> grid = std::nullopt);
  TokenMatrix(std::size_t tokens, std::size_t dims,
              std::optional<GridShape> grid = std::nullopt);

  std::size_t tokens() const noexcept { return tokens_; }
  std::size_t dims() const noexcept { return dims_; }
  const std::optional<GridShape>& grid() const noexcept { return grid_; }

  double& operator()(std::size_t t, std::size_t d) { return values_[t * dims_ + d]; }
  double operator()(std::size_t t, std::size_t d) const { return values_[t * dims_ + d]; }

  std::span<double> token(std::size_t t) { return {values_.data() + t * dims_, dims_}; }
  std::span<const double> token(std::size_t t) const {
    return {values_.data() + t * dims_, dims_};
  }

  const std::vector<double>& values() const noexcept { return values_; }
  std::vector<double>& values() noexcept { return values_; }

  /// Grid shape, or ShapeError when absent.
  GridShape require_grid() const;

  friend bool operator==(const TokenMatrix&, const TokenMatrix&) = default;

 private:
  std::size_t tokens_;
  std::size_t dims_;
  std::vector<double> values_;
  std::optional<GridShape> grid_;
};

}  // namespace specmatch
