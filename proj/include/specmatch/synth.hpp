#pragma once

#include <cstddef>

#include "specmatch/field.hpp"
#include "specmatch/rng.hpp"

namespace specmatch {

struct PowerLawSpec {
  double alpha = 2.0;
  std::size_t height = 128;
  std::size_t width = 128;
  std::size_t channels = 1;

  /// alpha >= 0, height and width powers of two >= 16, channels >= 1.
  void validate() const;
};

/// Gaussian random field with expected PSD proportional to |omega|^-alpha.
///
/// Per channel: white Gaussian samples are transformed by the unitary DFT,
/// every non-DC coefficient is scaled by |omega|^(-alpha/2) (|omega| in
/// cycles/sample), DC is zeroed and the inverse DFT taken. The amplitude is
/// even in omega, so the spectrum stays Hermitian and the field real. The
/// result is centred and scaled to unit spatial variance.
Field2D gen_power_law(const PowerLawSpec& spec, Rng& rng);

/// iid standard normal samples, channel-major.
Field2D gen_white(std::size_t height, std::size_t width, std::size_t channels, Rng& rng);

}  // namespace specmatch
