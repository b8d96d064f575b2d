#include "specmatch/dct_mask.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "specmatch/errors.hpp"
#include "specmatch/transforms.hpp"

namespace specmatch {

TriangularMask::TriangularMask(int removed) : removed_(removed) {
  if (removed < 0 || removed > kMaxRemoved) {
    throw DomainError("TriangularMask: removed anti-diagonals must be in [0, 14], got " +
                      std::to_string(removed));
  }
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) keep_[i * 8 + j] = i + j <= kMaxRemoved - removed;
}

std::size_t TriangularMask::kept_count() const noexcept {
  return static_cast<std::size_t>(std::count(keep_.begin(), keep_.end(), true));
}

std::string TriangularMask::to_string() const {
  std::string s(64, '0');
  for (std::size_t i = 0; i < 64; ++i) s[i] = keep_[i] ? '1' : '0';
  return s;
}

TriangularMask TriangularMask::from_string(std::string_view bits) {
  if (bits.size() != 64) throw ParseError("mask string must have 64 characters");
  if (bits.find_first_not_of("01") != std::string_view::npos) {
    throw ParseError("mask string may only contain '0' and '1'");
  }
  for (int n = 0; n <= kMaxRemoved; ++n) {
    const TriangularMask candidate(n);
    if (candidate.to_string() == bits) return candidate;
  }
  throw ParseError("mask string is not a triangular low-pass mask");
}

MaskFamily::MaskFamily(std::vector<int> members, std::vector<double> weights)
    : members_(std::move(members)), weights_(std::move(weights)) {
  if (members_.empty()) throw DomainError("MaskFamily: no members");
  for (std::size_t i = 0; i < members_.size(); ++i) {
    TriangularMask check(members_[i]);
    for (std::size_t j = 0; j < i; ++j) {
      if (members_[j] == members_[i]) throw DomainError("MaskFamily: duplicate member");
    }
  }
  if (std::find(members_.begin(), members_.end(), 0) == members_.end()) {
    throw DomainError("MaskFamily: must contain n = 0 (unfiltered member)");
  }
  if (weights_.empty()) weights_.assign(members_.size(), 1.0);
  if (weights_.size() != members_.size()) throw SizeError("MaskFamily: weight count mismatch");
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("MaskFamily: invalid weight");
    total += w;
  }
  if (!(total > 0.0)) throw DomainError("MaskFamily: weights sum to zero");
  for (double& w : weights_) w /= total;
}

MaskFamily MaskFamily::standard() { return MaskFamily({0, 8, 10, 12}); }

namespace {

void check_blocked(const Field2D& f, const char* what) {
  if (f.height() % kBlock != 0 || f.width() % kBlock != 0) {
    throw SizeError(std::string(what) + ": height and width must be multiples of 8, got " +
                    std::to_string(f.height()) + "x" + std::to_string(f.width()));
  }
}

template <typename Fn>
void for_each_block(const Field2D& f, Fn&& fn) {
  for (std::size_t c = 0; c < f.channels(); ++c)
    for (std::size_t by = 0; by < f.height(); by += kBlock)
      for (std::size_t bx = 0; bx < f.width(); bx += kBlock) fn(c, by, bx);
}

Block8 load_block(const Field2D& f, std::size_t c, std::size_t by, std::size_t bx) {
  Block8 b{};
  for (std::size_t y = 0; y < kBlock; ++y)
    for (std::size_t x = 0; x < kBlock; ++x) b[y * kBlock + x] = f(c, by + y, bx + x);
  return b;
}

}  // namespace

Field2D spectral_filter(const Field2D& field, const TriangularMask& mask) {
  check_blocked(field, "spectral_filter");
  if (mask.is_identity()) return field;
  Field2D out(field.channels(), field.height(), field.width());
  for_each_block(field, [&](std::size_t c, std::size_t by, std::size_t bx) {
    Block8 coeffs = dct2_block(load_block(field, c, by, bx));
    for (std::size_t i = 0; i < kBlock; ++i)
      for (std::size_t j = 0; j < kBlock; ++j)
        if (!mask.keep(i, j)) coeffs[i * kBlock + j] = 0.0;
    const Block8 spatial = idct2_block(coeffs);
    for (std::size_t y = 0; y < kBlock; ++y)
      for (std::size_t x = 0; x < kBlock; ++x) out(c, by + y, bx + x) = spatial[y * kBlock + x];
  });
  return out;
}

double dsm_loss(const Field2D& x, const Field2D& x_hat_masked, const TriangularMask& mask) {
  if (!x.same_shape(x_hat_masked)) throw SizeError("dsm_loss: shape mismatch");
  const Field2D target = spectral_filter(x, mask);
  double sum = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    sum += std::abs(x_hat_masked.data()[i] - target.data()[i]);
  }
  return sum / static_cast<double>(target.size());
}

TriangularMask sample_mask(const MaskFamily& family, Rng& rng) {
  const auto& w = family.weights();
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    acc += w[i];
    if (u < acc) return TriangularMask(family.members()[i]);
  }
  return TriangularMask(family.members().back());
}

Field2D quadrant_downsample(const Field2D& field) {
  check_blocked(field, "quadrant_downsample");
  constexpr std::size_t kHalf = kBlock / 2;
  static const std::vector<double> c4 = dct_matrix(kHalf);
  Field2D out(field.channels(), field.height() / 2, field.width() / 2);
  for_each_block(field, [&](std::size_t c, std::size_t by, std::size_t bx) {
    const Block8 coeffs = dct2_block(load_block(field, c, by, bx));
    // out = 0.5 * C4^T Q C4 with Q the top-left 4x4 quadrant.
    std::array<double, kHalf * kHalf> tmp{};
    for (std::size_t y = 0; y < kHalf; ++y)
      for (std::size_t l = 0; l < kHalf; ++l) {
        double acc = 0.0;
        for (std::size_t k = 0; k < kHalf; ++k) acc += c4[k * kHalf + y] * coeffs[k * kBlock + l];
        tmp[y * kHalf + l] = acc;
      }
    for (std::size_t y = 0; y < kHalf; ++y)
      for (std::size_t x = 0; x < kHalf; ++x) {
        double acc = 0.0;
        for (std::size_t l = 0; l < kHalf; ++l) acc += tmp[y * kHalf + l] * c4[l * kHalf + x];
        out(c, by / 2 + y, bx / 2 + x) = 0.5 * acc;
      }
  });
  return out;
}

Field2D interpolant_downsample(const Field2D& field) {
  check_blocked(field, "interpolant_downsample");
  constexpr std::size_t kHalf = kBlock / 2;
  // basis[k][m]: 8-point orthonormal DCT basis k evaluated at position 2m + 1/2.
  std::array<double, kHalf * kHalf> basis{};
  for (std::size_t k = 0; k < kHalf; ++k) {
    const double s = k == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
    for (std::size_t m = 0; m < kHalf; ++m) {
      const double pos = 2.0 * static_cast<double>(m) + 0.5;
      basis[k * kHalf + m] =
          s * std::cos(std::numbers::pi * (2.0 * pos + 1.0) * static_cast<double>(k) / 16.0);
    }
  }
  Field2D out(field.channels(), field.height() / 2, field.width() / 2);
  for_each_block(field, [&](std::size_t c, std::size_t by, std::size_t bx) {
    const Block8 coeffs = dct2_block(load_block(field, c, by, bx));
    for (std::size_t my = 0; my < kHalf; ++my)
      for (std::size_t mx = 0; mx < kHalf; ++mx) {
        double v = 0.0;
        for (std::size_t k = 0; k < kHalf; ++k)
          for (std::size_t l = 0; l < kHalf; ++l)
            v += coeffs[k * kBlock + l] * basis[k * kHalf + my] * basis[l * kHalf + mx];
        out(c, by / 2 + my, bx / 2 + mx) = v;
      }
  });
  return out;
}

DownsampleReport quadrant_downsample_check(const Field2D& field) {
  const Field2D a = quadrant_downsample(field);
  const Field2D b = interpolant_downsample(field);
  DownsampleReport report;
  report.max_abs_error = max_abs_diff(a, b);
  report.blocks = field.channels() * (field.height() / kBlock) * (field.width() / kBlock);
  return report;
}

}  // namespace specmatch
