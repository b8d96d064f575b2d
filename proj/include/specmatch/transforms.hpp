#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "specmatch/field.hpp"
#include "specmatch/tokens.hpp"

namespace specmatch {

inline constexpr std::size_t kBlock = 8;
using Block8 = std::array<double, kBlock * kBlock>;

/// Orthonormal DCT-II matrix of order n, row k = basis function k:
/// C[k][t] = s_k * cos(pi * (2t + 1) * k / (2n)), s_0 = sqrt(1/n), s_k = sqrt(2/n).
std::vector<double> dct_matrix(std::size_t n);

/// 2-D orthonormal DCT-II of a row-major 8x8 block. SizeError unless 64 values.
Block8 dct2_block(std::span<const double> block);

/// Inverse of dct2_block.
Block8 idct2_block(std::span<const double> coeffs);

/// Orthonormal DCT-II along the token index, independently per feature
/// dimension. Row k of the result holds frequency-k coefficients U_k.
TokenMatrix dct1_tokens(const TokenMatrix& tokens);

/// Squared magnitudes of the unitary 2-D DFT of each channel, laid out like
/// the input (row = vertical frequency index, column = horizontal).
Field2D dft2_power(const Field2D& field);

/// Signed frequency of DFT index k for length n, in cycles/sample, in (-0.5, 0.5].
double signed_frequency(std::size_t k, std::size_t n);

}  // namespace specmatch
