#include "specmatch/detail/fft.hpp"

#include <cmath>
#include <numbers>
#include <utility>

namespace specmatch::detail {

namespace {

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

cplx unit_root(std::size_t k, std::size_t n) {
  const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
  return {std::cos(angle), std::sin(angle)};
}

}  // namespace

std::vector<cplx> naive_dft(std::span<const cplx> in, bool inverse) {
  const std::size_t n = in.size();
  std::vector<cplx> out(n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t k = 0; k < n; ++k) {
    cplx acc{0.0, 0.0};
    for (std::size_t t = 0; t < n; ++t) {
      cplx w = unit_root((k * t) % n, n);
      if (inverse) w = std::conj(w);
      acc += in[t] * w;
    }
    out[k] = acc * scale;
  }
  return out;
}

DftPlan::DftPlan(std::size_t n) : n_(n), pow2_(is_pow2(n)) {
  if (pow2_) {
    twiddle_.resize(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) twiddle_[k] = unit_root(k, n);
    bitrev_.resize(n);
    std::size_t bits = 0;
    while ((std::size_t{1} << bits) < n) ++bits;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = 0;
      for (std::size_t b = 0; b < bits; ++b) {
        if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
      }
      bitrev_[i] = r;
    }
  } else {
    twiddle_.resize(n);
    for (std::size_t k = 0; k < n; ++k) twiddle_[k] = unit_root(k, n);
  }
}

void DftPlan::run(std::span<cplx> data, bool inverse) const {
  const std::size_t n = n_;
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  if (!pow2_) {
    std::vector<cplx> out(n);
    for (std::size_t k = 0; k < n; ++k) {
      cplx acc{0.0, 0.0};
      for (std::size_t t = 0; t < n; ++t) {
        const cplx w = twiddle_[(k * t) % n];
        acc += data[t] * (inverse ? std::conj(w) : w);
      }
      out[k] = acc * scale;
    }
    std::copy(out.begin(), out.end(), data.begin());
    return;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (i < bitrev_[i]) std::swap(data[i], data[bitrev_[i]]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t stride = n / len;
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t j = 0; j < half; ++j) {
        cplx w = twiddle_[j * stride];
        if (inverse) w = std::conj(w);
        const cplx u = data[start + j];
        const cplx v = data[start + j + half] * w;
        data[start + j] = u + v;
        data[start + j + half] = u - v;
      }
    }
  }
  for (auto& v : data) v *= scale;
}

std::vector<cplx> dft2(std::span<const double> plane, std::size_t h, std::size_t w) {
  std::vector<cplx> spec(plane.begin(), plane.end());
  const DftPlan rows(w);
  const DftPlan cols(h);
  for (std::size_t y = 0; y < h; ++y) rows.forward({spec.data() + y * w, w});
  std::vector<cplx> column(h);
  for (std::size_t x = 0; x < w; ++x) {
    for (std::size_t y = 0; y < h; ++y) column[y] = spec[y * w + x];
    cols.forward(column);
    for (std::size_t y = 0; y < h; ++y) spec[y * w + x] = column[y];
  }
  return spec;
}

void idft2_inplace(std::vector<cplx>& spec, std::size_t h, std::size_t w) {
  const DftPlan rows(w);
  const DftPlan cols(h);
  for (std::size_t y = 0; y < h; ++y) rows.inverse({spec.data() + y * w, w});
  std::vector<cplx> column(h);
  for (std::size_t x = 0; x < w; ++x) {
    for (std::size_t y = 0; y < h; ++y) column[y] = spec[y * w + x];
    cols.inverse(column);
    for (std::size_t y = 0; y < h; ++y) spec[y * w + x] = column[y];
  }
}

}  // namespace specmatch::detail
