#include "specmatch/repa.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "specmatch/errors.hpp"
#include "specmatch/transforms.hpp"

namespace specmatch {

void DoGParams::validate() const {
  if (!(sigma1 > 0.0) || !(sigma2 > sigma1)) {
    throw DomainError("DoG: need 0 < sigma1 < sigma2");
  }
  if (!(epsilon > 0.0)) throw DomainError("DoG: epsilon must be positive");
}

namespace {

double token_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Reflection about the edge samples: ... 2 1 | 0 1 2 ... n-1 | n-2 ...
std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) {
  if (n == 1) return 0;
  const auto period = static_cast<std::ptrdiff_t>(2 * (n - 1));
  std::ptrdiff_t m = i % period;
  if (m < 0) m += period;
  if (m >= static_cast<std::ptrdiff_t>(n)) m = period - m;
  return static_cast<std::size_t>(m);
}

std::vector<double> blur_plane(const std::vector<double>& plane, std::size_t h, std::size_t w,
                               const std::vector<double>& taps) {
  const auto r = static_cast<std::ptrdiff_t>(taps.size() / 2);
  std::vector<double> tmp(h * w, 0.0), out(h * w, 0.0);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (std::ptrdiff_t k = -r; k <= r; ++k) {
        acc += taps[static_cast<std::size_t>(k + r)] *
               plane[y * w + reflect_index(static_cast<std::ptrdiff_t>(x) + k, w)];
      }
      tmp[y * w + x] = acc;
    }
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (std::ptrdiff_t k = -r; k <= r; ++k) {
        acc += taps[static_cast<std::size_t>(k + r)] *
               tmp[reflect_index(static_cast<std::ptrdiff_t>(y) + k, h) * w + x];
      }
      out[y * w + x] = acc;
    }
  return out;
}

struct ChannelStats {
  double mean;
  double std;
};

ChannelStats channel_stats(const TokenMatrix& z, std::size_t d) {
  const auto n = static_cast<double>(z.tokens());
  double mean = 0.0;
  for (std::size_t t = 0; t < z.tokens(); ++t) mean += z(t, d);
  mean /= n;
  double var = 0.0;
  for (std::size_t t = 0; t < z.tokens(); ++t) var += (z(t, d) - mean) * (z(t, d) - mean);
  return {mean, std::sqrt(var / n)};
}

}  // namespace

TokenMatrix normalize_tokens(const TokenMatrix& x) {
  TokenMatrix out = x;
  for (std::size_t t = 0; t < x.tokens(); ++t) {
    const double norm = token_norm(x.token(t));
    if (!(norm > 0.0)) {
      throw DomainError("token " + std::to_string(t) + " has zero norm");
    }
    for (double& v : out.token(t)) v /= norm;
  }
  return out;
}

std::vector<double> mean_direction(const TokenMatrix& x) {
  const TokenMatrix u = normalize_tokens(x);
  std::vector<double> mean(x.dims(), 0.0);
  for (std::size_t t = 0; t < u.tokens(); ++t) {
    const auto row = u.token(t);
    for (std::size_t d = 0; d < u.dims(); ++d) mean[d] += row[d];
  }
  for (double& m : mean) m /= static_cast<double>(x.tokens());
  return mean;
}

double rmsc(const TokenMatrix& x) {
  const TokenMatrix u = normalize_tokens(x);
  const std::vector<double> mean = mean_direction(x);
  double acc = 0.0;
  for (std::size_t t = 0; t < u.tokens(); ++t) {
    const auto row = u.token(t);
    for (std::size_t d = 0; d < u.dims(); ++d) acc += (row[d] - mean[d]) * (row[d] - mean[d]);
  }
  return std::sqrt(acc / static_cast<double>(x.tokens()));
}

double directional_energy(const TokenMatrix& x) {
  const TokenMatrix coeffs = dct1_tokens(normalize_tokens(x));
  double energy = 0.0;
  for (std::size_t k = 1; k < coeffs.tokens(); ++k)
    for (double v : coeffs.token(k)) energy += v * v;
  return energy / static_cast<double>(x.tokens());
}

TokenMatrix spatial_normalize(const TokenMatrix& z, double alpha, double epsilon) {
  z.require_grid();
  if (!(epsilon >= 0.0)) throw DomainError("spatial_normalize: epsilon must be >= 0");
  TokenMatrix out = z;
  for (std::size_t d = 0; d < z.dims(); ++d) {
    const auto stats = channel_stats(z, d);
    const double denom = stats.std + epsilon;
    for (std::size_t t = 0; t < z.tokens(); ++t) {
      const double centred = z(t, d) - alpha * stats.mean;
      out(t, d) = denom > 0.0 ? centred / denom : 0.0;
    }
  }
  return out;
}

std::vector<double> gaussian_taps(double sigma) {
  if (!(sigma > 0.0)) throw DomainError("gaussian_taps: sigma must be positive");
  const auto r = static_cast<std::size_t>(std::ceil(3.0 * sigma));
  std::vector<double> taps(2 * r + 1);
  double total = 0.0;
  for (std::size_t i = 0; i < taps.size(); ++i) {
    const double x = static_cast<double>(i) - static_cast<double>(r);
    taps[i] = std::exp(-x * x / (2.0 * sigma * sigma));
    total += taps[i];
  }
  for (double& t : taps) t /= total;
  return taps;
}

Field2D dog_kernel(const DoGParams& params) {
  params.validate();
  const auto g1 = gaussian_taps(params.sigma1);
  const auto g2 = gaussian_taps(params.sigma2);
  const std::size_t r2 = g2.size() / 2;
  const std::size_t r1 = g1.size() / 2;
  const std::size_t n = g2.size();
  Field2D k(1, n, n);
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t x = 0; x < n; ++x) {
      double v = -g2[y] * g2[x];
      const auto oy = static_cast<std::ptrdiff_t>(y) - static_cast<std::ptrdiff_t>(r2 - r1);
      const auto ox = static_cast<std::ptrdiff_t>(x) - static_cast<std::ptrdiff_t>(r2 - r1);
      if (oy >= 0 && ox >= 0 && oy < static_cast<std::ptrdiff_t>(g1.size()) &&
          ox < static_cast<std::ptrdiff_t>(g1.size())) {
        v += g1[static_cast<std::size_t>(oy)] * g1[static_cast<std::size_t>(ox)];
      }
      k(0, y, x) = v;
    }
  return k;
}

TokenMatrix dog_filter(const TokenMatrix& z, const DoGParams& params) {
  params.validate();
  const GridShape grid = z.require_grid();
  const auto g1 = gaussian_taps(params.sigma1);
  const auto g2 = gaussian_taps(params.sigma2);
  TokenMatrix out = z;
  std::vector<double> plane(z.tokens());
  for (std::size_t d = 0; d < z.dims(); ++d) {
    // Both blurs preserve constants, so centring does not change the difference.
    const auto stats = channel_stats(z, d);
    for (std::size_t t = 0; t < z.tokens(); ++t) plane[t] = z(t, d) - stats.mean;
    const double denom = stats.std + params.epsilon;
    const auto b1 = blur_plane(plane, grid.height, grid.width, g1);
    const auto b2 = blur_plane(plane, grid.height, grid.width, g2);
    for (std::size_t t = 0; t < z.tokens(); ++t) out(t, d) = (b1[t] - b2[t]) / denom;
  }
  return out;
}

std::vector<double> cosine_similarity_map(const TokenMatrix& z, std::size_t ref_index) {
  if (ref_index >= z.tokens()) {
    throw SizeError("cosine_similarity_map: reference index " + std::to_string(ref_index) +
                    " out of range");
  }
  const TokenMatrix u = normalize_tokens(z);
  const auto ref = u.token(ref_index);
  std::vector<double> sim(z.tokens());
  for (std::size_t t = 0; t < z.tokens(); ++t) {
    const auto row = u.token(t);
    double dot = 0.0;
    for (std::size_t d = 0; d < z.dims(); ++d) dot += row[d] * ref[d];
    sim[t] = std::clamp(dot, -1.0, 1.0);
  }
  sim[ref_index] = 1.0;
  return sim;
}

}  // namespace specmatch
