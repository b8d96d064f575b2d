#include "specmatch/synth.hpp"

#include <cmath>

#include "specmatch/detail/fft.hpp"
#include "specmatch/errors.hpp"
#include "specmatch/transforms.hpp"

namespace specmatch {

namespace {
bool pow2_at_least_16(std::size_t n) { return n >= 16 && (n & (n - 1)) == 0; }
}  // namespace

void PowerLawSpec::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw DomainError("power-law spec: alpha must be >= 0");
  if (!pow2_at_least_16(height) || !pow2_at_least_16(width)) {
    throw DomainError("power-law spec: height and width must be powers of two >= 16");
  }
  if (channels == 0) throw DomainError("power-law spec: channels must be positive");
}

Field2D gen_white(std::size_t height, std::size_t width, std::size_t channels, Rng& rng) {
  Field2D f(channels, height, width);
  for (double& v : f.data()) v = rng.normal();
  return f;
}

Field2D gen_power_law(const PowerLawSpec& spec, Rng& rng) {
  spec.validate();
  const std::size_t h = spec.height;
  const std::size_t w = spec.width;
  std::vector<double> amplitude(h * w, 0.0);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      if (x == 0 && y == 0) continue;
      const double r = std::hypot(signed_frequency(y, h), signed_frequency(x, w));
      amplitude[y * w + x] = std::pow(r, -0.5 * spec.alpha);
    }

  Field2D out(spec.channels, h, w);
  for (std::size_t c = 0; c < spec.channels; ++c) {
    std::vector<double> white(h * w);
    for (double& v : white) v = rng.normal();
    auto spectrum = detail::dft2(white, h, w);
    for (std::size_t i = 0; i < spectrum.size(); ++i) spectrum[i] *= amplitude[i];
    detail::idft2_inplace(spectrum, h, w);

    auto dst = out.channel(c);
    double mean = 0.0;
    for (std::size_t i = 0; i < dst.size(); ++i) {
      dst[i] = spectrum[i].real();
      mean += dst[i];
    }
    mean /= static_cast<double>(dst.size());
    double var = 0.0;
    for (double& v : dst) {
      v -= mean;
      var += v * v;
    }
    const double scale = 1.0 / std::sqrt(var / static_cast<double>(dst.size()));
    for (double& v : dst) v *= scale;
  }
  return out;
}

}  // namespace specmatch
