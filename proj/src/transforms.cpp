#include "specmatch/transforms.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "specmatch/detail/fft.hpp"
#include "specmatch/errors.hpp"

namespace specmatch {

namespace {

const std::vector<double>& block_basis() {
  static const std::vector<double> basis = dct_matrix(kBlock);
  return basis;
}

void check_block(std::span<const double> block, const char* what) {
  if (block.size() != kBlock * kBlock) {
    throw SizeError(std::string(what) + ": expected an 8x8 block (64 values), got " +
                    std::to_string(block.size()));
  }
}

}  // namespace

std::vector<double> dct_matrix(std::size_t n) {
  if (n == 0) throw SizeError("dct_matrix: order must be positive");
  std::vector<double> c(n * n);
  const double nd = static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double s = k == 0 ? std::sqrt(1.0 / nd) : std::sqrt(2.0 / nd);
    for (std::size_t t = 0; t < n; ++t) {
      c[k * n + t] = s * std::cos(std::numbers::pi * (2.0 * static_cast<double>(t) + 1.0) *
                                  static_cast<double>(k) / (2.0 * nd));
    }
  }
  return c;
}

Block8 dct2_block(std::span<const double> block) {
  check_block(block, "dct2_block");
  const auto& c = block_basis();
  // tmp = C * X, out = tmp * C^T
  Block8 tmp{};
  for (std::size_t k = 0; k < kBlock; ++k)
    for (std::size_t x = 0; x < kBlock; ++x) {
      double acc = 0.0;
      for (std::size_t y = 0; y < kBlock; ++y) acc += c[k * kBlock + y] * block[y * kBlock + x];
      tmp[k * kBlock + x] = acc;
    }
  Block8 out{};
  for (std::size_t k = 0; k < kBlock; ++k)
    for (std::size_t l = 0; l < kBlock; ++l) {
      double acc = 0.0;
      for (std::size_t x = 0; x < kBlock; ++x) acc += tmp[k * kBlock + x] * c[l * kBlock + x];
      out[k * kBlock + l] = acc;
    }
  return out;
}

Block8 idct2_block(std::span<const double> coeffs) {
  check_block(coeffs, "idct2_block");
  const auto& c = block_basis();
  // tmp = C^T * Y, out = tmp * C
  Block8 tmp{};
  for (std::size_t y = 0; y < kBlock; ++y)
    for (std::size_t l = 0; l < kBlock; ++l) {
      double acc = 0.0;
      for (std::size_t k = 0; k < kBlock; ++k) acc += c[k * kBlock + y] * coeffs[k * kBlock + l];
      tmp[y * kBlock + l] = acc;
    }
  Block8 out{};
  for (std::size_t y = 0; y < kBlock; ++y)
    for (std::size_t x = 0; x < kBlock; ++x) {
      double acc = 0.0;
      for (std::size_t l = 0; l < kBlock; ++l) acc += tmp[y * kBlock + l] * c[l * kBlock + x];
      out[y * kBlock + x] = acc;
    }
  return out;
}

TokenMatrix dct1_tokens(const TokenMatrix& tokens) {
  const std::size_t n = tokens.tokens();
  const std::size_t d = tokens.dims();
  const auto c = dct_matrix(n);
  TokenMatrix out(n, d, tokens.grid());
  for (std::size_t k = 0; k < n; ++k) {
    auto row = out.token(k);
    for (std::size_t t = 0; t < n; ++t) {
      const double ckt = c[k * n + t];
      const auto src = tokens.token(t);
      for (std::size_t j = 0; j < d; ++j) row[j] += ckt * src[j];
    }
  }
  return out;
}

Field2D dft2_power(const Field2D& field) {
  if (field.height() < 2 || field.width() < 2) {
    throw SizeError("dft2_power: height and width must be at least 2");
  }
  Field2D power(field.channels(), field.height(), field.width());
  for (std::size_t c = 0; c < field.channels(); ++c) {
    const auto spec = detail::dft2(field.channel(c), field.height(), field.width());
    auto dst = power.channel(c);
    for (std::size_t i = 0; i < spec.size(); ++i) dst[i] = std::norm(spec[i]);
  }
  return power;
}

double signed_frequency(std::size_t k, std::size_t n) {
  const auto ki = static_cast<double>(k);
  const auto ni = static_cast<double>(n);
  return (2 * k <= n ? ki : ki - ni) / ni;
}

}  // namespace specmatch
