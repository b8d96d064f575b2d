#pragma once

// File formats.
//
// SPMT tensor file, all integers little-endian:
//   bytes 0..3   magic "SPMT"
//   u32          version (= 1)
//   u32          ndim (1..8)
//   u32 x ndim   dims, each >= 1
//   f32 x prod(dims)  payload, IEEE-754 little-endian, row-major
// Fields are stored as (C, H, W) (or (H, W) for one channel), token matrices
// as (T, D) or (h, w, D).
//
// CSV files use '\n' line ends and numbers printed with 9 significant digits.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "specmatch/diffusion.hpp"
#include "specmatch/field.hpp"
#include "specmatch/spectral.hpp"
#include "specmatch/tokens.hpp"

namespace specmatch {

struct SpmtTensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> values;
};

void write_spmt(std::ostream& out, const SpmtTensor& tensor);
/// Reads exactly one record from the stream.
SpmtTensor read_spmt(std::istream& in);

void save_spmt(const std::filesystem::path& path, const SpmtTensor& tensor);
/// Reads a file holding exactly one record.
SpmtTensor load_spmt(const std::filesystem::path& path);

SpmtTensor to_spmt(const Field2D& field);
SpmtTensor to_spmt(const TokenMatrix& tokens);
Field2D field_from_spmt(const SpmtTensor& tensor);
TokenMatrix tokens_from_spmt(const SpmtTensor& tensor);

/// 8-bit binary PGM (P5), samples mapped to [0, 1] by value / maxval.
Field2D load_pgm(const std::filesystem::path& path);

/// Loads a field from an SPMT or P5 PGM file, chosen by its magic bytes.
Field2D load_field(const std::filesystem::path& path);

void save_field(const std::filesystem::path& path, const Field2D& field);

/// printf("%.9g").
std::string format_g9(double v);

/// Header `radius,power,count`.
void write_psd_csv(std::ostream& out, const RadialPSD& psd);
RadialPSD read_psd_csv(std::istream& in);
void save_psd_csv(const std::filesystem::path& path, const RadialPSD& psd);
RadialPSD load_psd_csv(const std::filesystem::path& path);

/// Header `t,radius,snr,g`.
void write_gcurve_csv(std::ostream& out, const GCurve& curve);

}  // namespace specmatch
