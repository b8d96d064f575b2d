#pragma once

// Complex transforms used internally; the public API only exposes power spectra.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace specmatch::detail {

using cplx = std::complex<double>;

/// Unitary 1-D DFT by direct summation (reference implementation).
std::vector<cplx> naive_dft(std::span<const cplx> in, bool inverse);

/// Unitary 1-D DFT. Radix-2 for power-of-two lengths, direct summation otherwise.
class DftPlan {
 public:
  explicit DftPlan(std::size_t n);
  std::size_t size() const noexcept { return n_; }
  void forward(std::span<cplx> data) const { run(data, false); }
  void inverse(std::span<cplx> data) const { run(data, true); }

 private:
  void run(std::span<cplx> data, bool inverse) const;

  std::size_t n_;
  bool pow2_;
  std::vector<cplx> twiddle_;         // exp(-2 pi i k / n), k < n/2 (radix-2) or k < n
  std::vector<std::size_t> bitrev_;
};

/// Unitary forward 2-D DFT of a real h x w plane.
std::vector<cplx> dft2(std::span<const double> plane, std::size_t h, std::size_t w);

/// Unitary inverse 2-D DFT in place.
void idft2_inplace(std::vector<cplx>& spectrum, std::size_t h, std::size_t w);

}  // namespace specmatch::detail
