#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "specmatch/field.hpp"
#include "specmatch/rng.hpp"

namespace specmatch {

/// Low-pass keep-set over the 8x8 DCT lattice that removes the n
/// highest-frequency anti-diagonals: keep(i, j) iff i + j <= 14 - n.
class TriangularMask {
 public:
  static constexpr int kMaxRemoved = 14;

  explicit TriangularMask(int removed = 0);

  int removed() const noexcept { return removed_; }
  bool keep(std::size_t i, std::size_t j) const noexcept { return keep_[i * 8 + j]; }
  bool is_identity() const noexcept { return removed_ == 0; }
  std::size_t kept_count() const noexcept;

  /// 64 characters of '1' (keep) / '0' (drop), row-major.
  std::string to_string() const;

  /// Parses the 64-character form; the pattern must be a triangular mask.
  static TriangularMask from_string(std::string_view bits);

  friend bool operator==(const TriangularMask& a, const TriangularMask& b) {
    return a.removed_ == b.removed_;
  }

 private:
  int removed_;
  std::array<bool, 64> keep_{};
};

/// The mask family sampled during decoder training. Must contain n = 0.
class MaskFamily {
 public:
  explicit MaskFamily(std::vector<int> members, std::vector<double> weights = {});

  /// {0, 8, 10, 12}.
  static MaskFamily standard();

  const std::vector<int>& members() const noexcept { return members_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

 private:
  std::vector<int> members_;
  std::vector<double> weights_;  // normalized
};

/// Blockwise 8x8 DCT, zero the dropped coefficients, inverse DCT, for every
/// channel. Height and width must be multiples of 8. The identity mask
/// returns the input unchanged.
Field2D spectral_filter(const Field2D& field, const TriangularMask& mask);

/// Mean absolute difference between spectral_filter(x, mask) and x_hat_masked.
double dsm_loss(const Field2D& x, const Field2D& x_hat_masked, const TriangularMask& mask);

TriangularMask sample_mask(const MaskFamily& family, Rng& rng);

/// Half-resolution field built from the top-left 4x4 DCT coefficients of
/// every 8x8 block, inverted with the orthonormal 4x4 DCT and scaled by 1/2.
Field2D quadrant_downsample(const Field2D& field);

/// Half-resolution field obtained by evaluating the continuous DCT
/// interpolant of each quadrant-low-passed 8x8 block at the centres of its
/// 2x2 pixel groups (positions 2m + 1/2).
Field2D interpolant_downsample(const Field2D& field);

struct DownsampleReport {
  double max_abs_error = 0.0;
  std::size_t blocks = 0;
};

/// Compares quadrant_downsample against interpolant_downsample.
DownsampleReport quadrant_downsample_check(const Field2D& field);

}  // namespace specmatch
