#pragma once

#include <cstddef>
#include <vector>

#include "specmatch/field.hpp"
#include "specmatch/tokens.hpp"

namespace specmatch {

struct DoGParams {
  double sigma1 = 1.0;
  double sigma2 = 2.0;
  double epsilon = 1e-6;

  /// Throws DomainError unless 0 < sigma1 < sigma2 and epsilon > 0.
  void validate() const;
};

/// Every token divided by its Euclidean norm. A zero-norm token is a DomainError
/// naming its index.
TokenMatrix normalize_tokens(const TokenMatrix& x);

/// Mean of the unit-normalized tokens.
std::vector<double> mean_direction(const TokenMatrix& x);

/// Root-mean-square deviation of token directions from their mean direction.
double rmsc(const TokenMatrix& x);

/// (1/T) * sum_{k>=1} ||U_k||^2 with U = dct1_tokens(normalize_tokens(x)):
/// the non-DC DCT energy of the direction field. Equals rmsc(x)^2.
double directional_energy(const TokenMatrix& x);

/// (Z - alpha * mean) / (std + epsilon), per feature channel over the spatial
/// grid (population std). Requires a grid shape.
TokenMatrix spatial_normalize(const TokenMatrix& z, double alpha = 1.0, double epsilon = 1e-6);

/// Normalized 1-D Gaussian taps on [-ceil(3 sigma), ceil(3 sigma)].
std::vector<double> gaussian_taps(double sigma);

/// 2-D kernel g_sigma1 (x) g_sigma1 - g_sigma2 (x) g_sigma2 as a
/// (2r+1) x (2r+1) single-channel field, r = ceil(3 sigma2).
Field2D dog_kernel(const DoGParams& params);

/// Per channel: separable Gaussian blurs with reflect padding at sigma1 and
/// sigma2, their difference, divided by the channel's std before filtering
/// plus epsilon. Requires a grid shape.
TokenMatrix dog_filter(const TokenMatrix& z, const DoGParams& params);

/// Cosine similarity of every token direction with token `ref_index`, in
/// token order (row-major over the grid when one is present).
std::vector<double> cosine_similarity_map(const TokenMatrix& z, std::size_t ref_index);

}  // namespace specmatch
