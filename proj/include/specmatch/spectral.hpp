#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "specmatch/field.hpp"

namespace specmatch {

inline constexpr double kDefaultProbabilityFloor = 1e-8;
inline constexpr double kDefaultFlattenDelta = 1.0;
inline constexpr double kDefaultEsmWeight = 0.01;

/// Radially binned power spectral density. DC is never part of any bin.
///
/// `radius[b]` is the mean radius (cycles/sample) of the lattice frequencies
/// that fall into bin b; `power[b]` is their mean power, averaged over channels.
struct RadialPSD {
  std::vector<double> radius;
  std::vector<double> power;
  std::vector<std::size_t> count;

  std::size_t bins() const noexcept { return radius.size(); }

  /// Throws if radii are not strictly increasing in (0, sqrt(2)/2], powers are
  /// negative or non-finite, counts are zero, or the columns differ in length.
  void validate() const;
};

/// Probability vector over radial bins.
struct SpectrumDistribution {
  std::vector<double> p;
  std::size_t bins() const noexcept { return p.size(); }
};

/// Least-squares fit of log power = logK - alpha * log radius.
struct PowerLawFit {
  double alpha = 0.0;
  double log_k = 0.0;
  double r2 = 0.0;
  std::size_t bins_used = 0;
};

/// Assignment of the DFT lattice of an h x w grid to radial bins.
///
/// Annuli have equal width sqrt(2)/2 / requested_bins over (0, sqrt(2)/2], so
/// grids of different resolution share bin edges in cycles/sample. Annuli
/// that contain no lattice frequency are dropped; `bin_of` maps every lattice
/// index to its reported bin, or -1 for DC.
struct RadialBinning {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::ptrdiff_t> bin_of;
  std::vector<double> radius;
  std::vector<std::size_t> count;

  std::size_t bins() const noexcept { return radius.size(); }
};

/// Largest radial frequency of a 2-D lattice, sqrt(0.5^2 + 0.5^2).
inline constexpr double kMaxRadius = 0.70710678118654752440;

/// min(h, w) / 4 clamped to [8, 128].
std::size_t default_bin_count(std::size_t height, std::size_t width);

RadialBinning make_radial_binning(std::size_t height, std::size_t width, std::size_t bins);

/// Channel-averaged radial PSD of the unitary DFT power. Needs bins >= 4 and
/// a field of at least 8x8.
RadialPSD radial_psd(const Field2D& field, std::size_t bins);

/// Bin-wise mean of PSDs that share the same radii.
RadialPSD average_psd(std::span<const RadialPSD> psds);

/// OLS over bins with rmin <= radius <= rmax; alpha is the negated slope.
PowerLawFit fit_power_law(const RadialPSD& psd, double rmin, double rmax);

/// power[b] * (radius[b] / radius[last])^delta; lowers a power-law exponent by delta.
RadialPSD flatten_psd(const RadialPSD& psd, double delta);

/// Re-evaluates `src` at the radii of `grid` by linear interpolation of
/// log power against log radius, extending the end segments linearly.
/// The result takes the radii and counts of `grid`.
RadialPSD resample_psd(const RadialPSD& src, const RadialPSD& grid);

/// Power proportional probabilities, floored at `floor` then renormalized.
SpectrumDistribution normalize_spectrum(const RadialPSD& psd,
                                        double floor = kDefaultProbabilityFloor);

/// KL(target || latent) = sum target * log(target / latent).
double esm_loss(const SpectrumDistribution& target, const SpectrumDistribution& latent);

struct EsmEvaluation {
  double loss;
  Field2D grad;
};

/// esm_loss(target, normalize_spectrum(radial_psd(z, bins), floor)) and its
/// exact gradient with respect to every sample of z. Floored bins contribute
/// a zero subgradient.
EsmEvaluation esm_evaluate(const Field2D& z, const SpectrumDistribution& target,
                           std::size_t bins, double floor = kDefaultProbabilityFloor);

/// Gradient part of esm_evaluate.
Field2D esm_loss_grad(const Field2D& z, const SpectrumDistribution& target, std::size_t bins,
                      double floor = kDefaultProbabilityFloor);

/// The flattened image spectrum evaluated on the radial grid of `latent_grid`
/// and normalized: the ESM target distribution for one image.
SpectrumDistribution esm_target(const RadialPSD& image_psd, const RadialPSD& latent_grid,
                                double delta, double floor = kDefaultProbabilityFloor);

}  // namespace specmatch
