#include "specmatch/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "specmatch/detail/fft.hpp"
#include "specmatch/errors.hpp"
#include "specmatch/transforms.hpp"

namespace specmatch {

void RadialPSD::validate() const {
  if (power.size() != radius.size() || count.size() != radius.size()) {
    throw SizeError("RadialPSD: radius, power and count columns differ in length");
  }
  for (std::size_t b = 0; b < radius.size(); ++b) {
    if (!(radius[b] > 0.0) || radius[b] > kMaxRadius * (1.0 + 1e-9) || !std::isfinite(radius[b])) {
      throw DomainError("RadialPSD: radius out of (0, sqrt(2)/2] at bin " + std::to_string(b));
    }
    if (b > 0 && !(radius[b] > radius[b - 1])) {
      throw DomainError("RadialPSD: radii not strictly increasing at bin " + std::to_string(b));
    }
    if (!(power[b] >= 0.0) || !std::isfinite(power[b])) {
      throw DomainError("RadialPSD: negative or non-finite power at bin " + std::to_string(b));
    }
    if (count[b] == 0) throw DomainError("RadialPSD: empty bin " + std::to_string(b));
  }
}

std::size_t default_bin_count(std::size_t height, std::size_t width) {
  return std::clamp<std::size_t>(std::min(height, width) / 4, 8, 128);
}

RadialBinning make_radial_binning(std::size_t height, std::size_t width, std::size_t bins) {
  if (bins < 4) throw SizeError("radial binning: need at least 4 bins, got " + std::to_string(bins));
  if (height < 8 || width < 8) {
    throw SizeError("radial binning: field must be at least 8x8, got " + std::to_string(height) +
                    "x" + std::to_string(width));
  }
  const double step = kMaxRadius / static_cast<double>(bins);
  std::vector<std::ptrdiff_t> raw(height * width, -1);
  std::vector<double> radius_sum(bins, 0.0);
  std::vector<std::size_t> population(bins, 0);
  for (std::size_t y = 0; y < height; ++y) {
    const double fy = signed_frequency(y, height);
    for (std::size_t x = 0; x < width; ++x) {
      if (x == 0 && y == 0) continue;
      const double r = std::hypot(fy, signed_frequency(x, width));
      // Lattice radii that sit on an annulus edge go to the outer annulus.
      auto b = static_cast<std::size_t>(std::floor(r / step + 1e-9));
      b = std::min(b, bins - 1);
      raw[y * width + x] = static_cast<std::ptrdiff_t>(b);
      radius_sum[b] += r;
      ++population[b];
    }
  }
  RadialBinning out;
  out.height = height;
  out.width = width;
  std::vector<std::ptrdiff_t> remap(bins, -1);
  for (std::size_t b = 0; b < bins; ++b) {
    if (population[b] == 0) continue;
    remap[b] = static_cast<std::ptrdiff_t>(out.radius.size());
    out.radius.push_back(radius_sum[b] / static_cast<double>(population[b]));
    out.count.push_back(population[b]);
  }
  out.bin_of.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out.bin_of[i] = raw[i] < 0 ? -1 : remap[static_cast<std::size_t>(raw[i])];
  }
  return out;
}

namespace {

RadialPSD bin_power(const Field2D& power, const RadialBinning& binning) {
  RadialPSD psd;
  psd.radius = binning.radius;
  psd.count = binning.count;
  psd.power.assign(binning.bins(), 0.0);
  for (std::size_t c = 0; c < power.channels(); ++c) {
    const auto plane = power.channel(c);
    for (std::size_t i = 0; i < plane.size(); ++i) {
      const auto b = binning.bin_of[i];
      if (b >= 0) psd.power[static_cast<std::size_t>(b)] += plane[i];
    }
  }
  const auto channels = static_cast<double>(power.channels());
  for (std::size_t b = 0; b < psd.bins(); ++b) {
    psd.power[b] /= channels * static_cast<double>(psd.count[b]);
  }
  return psd;
}

}  // namespace

RadialPSD radial_psd(const Field2D& field, std::size_t bins) {
  const auto binning = make_radial_binning(field.height(), field.width(), bins);
  return bin_power(dft2_power(field), binning);
}

RadialPSD average_psd(std::span<const RadialPSD> psds) {
  if (psds.empty()) throw SizeError("average_psd: no spectra");
  RadialPSD out = psds.front();
  for (std::size_t i = 1; i < psds.size(); ++i) {
    if (psds[i].radius != out.radius) throw SizeError("average_psd: spectra use different bins");
    for (std::size_t b = 0; b < out.bins(); ++b) out.power[b] += psds[i].power[b];
  }
  for (auto& p : out.power) p /= static_cast<double>(psds.size());
  return out;
}

PowerLawFit fit_power_law(const RadialPSD& psd, double rmin, double rmax) {
  std::vector<double> lx, ly;
  for (std::size_t b = 0; b < psd.bins(); ++b) {
    if (psd.radius[b] < rmin || psd.radius[b] > rmax) continue;
    if (!(psd.power[b] > 0.0)) {
      throw DomainError("fit_power_law: nonpositive power at radius " +
                        std::to_string(psd.radius[b]));
    }
    lx.push_back(std::log(psd.radius[b]));
    ly.push_back(std::log(psd.power[b]));
  }
  if (lx.size() < 4) {
    throw SizeError("fit_power_law: need at least 4 bins in range, got " +
                    std::to_string(lx.size()));
  }
  const auto n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  PowerLawFit fit;
  const double slope = sxy / sxx;
  fit.alpha = -slope;
  fit.log_k = my - slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double e = ly[i] - (fit.log_k + slope * lx[i]);
    ss_res += e * e;
  }
  // A constant spectrum is fit perfectly by the flat line.
  fit.r2 = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  fit.bins_used = lx.size();
  return fit;
}

RadialPSD flatten_psd(const RadialPSD& psd, double delta) {
  if (!(delta >= 0.0)) throw DomainError("flatten_psd: delta must be >= 0");
  RadialPSD out = psd;
  if (delta == 0.0 || psd.bins() == 0) return out;
  const double ref = psd.radius.back();
  for (std::size_t b = 0; b < out.bins(); ++b) {
    out.power[b] *= std::pow(psd.radius[b] / ref, delta);
  }
  return out;
}

RadialPSD resample_psd(const RadialPSD& src, const RadialPSD& grid) {
  if (src.bins() < 2) throw SizeError("resample_psd: source needs at least 2 bins");
  std::vector<double> lx(src.bins()), ly(src.bins());
  for (std::size_t b = 0; b < src.bins(); ++b) {
    if (!(src.power[b] > 0.0)) throw DomainError("resample_psd: source power must be positive");
    lx[b] = std::log(src.radius[b]);
    ly[b] = std::log(src.power[b]);
  }
  RadialPSD out;
  out.radius = grid.radius;
  out.count = grid.count;
  out.power.resize(grid.bins());
  for (std::size_t b = 0; b < grid.bins(); ++b) {
    const double q = std::log(grid.radius[b]);
    auto hi = static_cast<std::size_t>(std::upper_bound(lx.begin(), lx.end(), q) - lx.begin());
    hi = std::clamp<std::size_t>(hi, 1, lx.size() - 1);
    const std::size_t lo = hi - 1;
    const double t = (q - lx[lo]) / (lx[hi] - lx[lo]);
    out.power[b] = std::exp(ly[lo] + t * (ly[hi] - ly[lo]));
  }
  return out;
}

SpectrumDistribution normalize_spectrum(const RadialPSD& psd, double floor) {
  const std::size_t n = psd.bins();
  if (n == 0) throw SizeError("normalize_spectrum: empty spectrum");
  if (!(floor > 0.0) || !(floor < 1.0 / static_cast<double>(n))) {
    throw DomainError("normalize_spectrum: floor must lie in (0, 1/bins)");
  }
  double total = 0.0;
  for (double p : psd.power) {
    if (!(p >= 0.0)) throw DomainError("normalize_spectrum: negative power");
    total += p;
  }
  if (!(total > 0.0)) throw DomainError("normalize_spectrum: spectrum has no positive power");
  SpectrumDistribution out;
  out.p.resize(n);
  double floored_total = 0.0;
  for (std::size_t b = 0; b < n; ++b) {
    out.p[b] = std::max(psd.power[b] / total, floor);
    floored_total += out.p[b];
  }
  for (auto& p : out.p) p /= floored_total;
  return out;
}

double esm_loss(const SpectrumDistribution& target, const SpectrumDistribution& latent) {
  if (target.bins() != latent.bins()) {
    throw SizeError("esm_loss: bin count mismatch (" + std::to_string(target.bins()) + " vs " +
                    std::to_string(latent.bins()) + ")");
  }
  double kl = 0.0;
  for (std::size_t b = 0; b < target.bins(); ++b) {
    if (!(target.p[b] > 0.0) || !(latent.p[b] > 0.0)) {
      throw DomainError("esm_loss: distributions must be strictly positive");
    }
    kl += target.p[b] * std::log(target.p[b] / latent.p[b]);
  }
  return std::max(kl, 0.0);
}

EsmEvaluation esm_evaluate(const Field2D& z, const SpectrumDistribution& target,
                           std::size_t bins, double floor) {
  const auto binning = make_radial_binning(z.height(), z.width(), bins);
  const std::size_t nb = binning.bins();
  if (target.bins() != nb) {
    throw SizeError("esm_loss_grad: target has " + std::to_string(target.bins()) +
                    " bins, latent grid has " + std::to_string(nb));
  }
  const std::size_t plane = z.plane_size();
  std::vector<std::vector<detail::cplx>> spectra;
  spectra.reserve(z.channels());
  Field2D power(z.channels(), z.height(), z.width());
  for (std::size_t c = 0; c < z.channels(); ++c) {
    spectra.push_back(detail::dft2(z.channel(c), z.height(), z.width()));
    auto dst = power.channel(c);
    for (std::size_t i = 0; i < plane; ++i) dst[i] = std::norm(spectra.back()[i]);
  }
  const RadialPSD psd = bin_power(power, binning);
  const SpectrumDistribution latent = normalize_spectrum(psd, floor);
  const double loss = esm_loss(target, latent);

  // Backward pass: KL -> floored probabilities -> raw shares -> bin power.
  double total = 0.0;
  for (double p : psd.power) total += p;
  double floored_total = 0.0;
  std::vector<double> share(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    share[b] = psd.power[b] / total;
    floored_total += std::max(share[b], floor);
  }
  std::vector<double> d_share(nb);
  double d_share_dot = 0.0;
  for (std::size_t b = 0; b < nb; ++b) {
    const double d_floored = (1.0 - target.p[b] / latent.p[b]) / floored_total;
    d_share[b] = share[b] >= floor ? d_floored : 0.0;
    d_share_dot += d_share[b] * share[b];
  }
  std::vector<double> d_lattice(nb);
  const auto channels = static_cast<double>(z.channels());
  for (std::size_t b = 0; b < nb; ++b) {
    const double d_power = (d_share[b] - d_share_dot) / total;
    d_lattice[b] = d_power / (channels * static_cast<double>(psd.count[b]));
  }

  // d|Y|^2 / dx = 2 Re(F^H (w Y)) for the unitary DFT F.
  Field2D grad(z.channels(), z.height(), z.width());
  for (std::size_t c = 0; c < z.channels(); ++c) {
    auto& spec = spectra[c];
    for (std::size_t i = 0; i < plane; ++i) {
      const auto b = binning.bin_of[i];
      spec[i] *= b >= 0 ? d_lattice[static_cast<std::size_t>(b)] : 0.0;
    }
    detail::idft2_inplace(spec, z.height(), z.width());
    auto dst = grad.channel(c);
    for (std::size_t i = 0; i < plane; ++i) dst[i] = 2.0 * spec[i].real();
  }
  return {loss, std::move(grad)};
}

Field2D esm_loss_grad(const Field2D& z, const SpectrumDistribution& target, std::size_t bins,
                      double floor) {
  return esm_evaluate(z, target, bins, floor).grad;
}

SpectrumDistribution esm_target(const RadialPSD& image_psd, const RadialPSD& latent_grid,
                                double delta, double floor) {
  return normalize_spectrum(resample_psd(flatten_psd(image_psd, delta), latent_grid), floor);
}

}  // namespace specmatch
