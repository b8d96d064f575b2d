#include "specmatch/diffusion.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include <boost/math/distributions/normal.hpp>

#include "specmatch/errors.hpp"

namespace specmatch {

ScheduleKind parse_schedule_kind(std::string_view name) {
  if (name == "linear" || name == "linear-beta") return ScheduleKind::LinearBeta;
  if (name == "cosine") return ScheduleKind::Cosine;
  throw DomainError("unknown schedule '" + std::string(name) + "' (expected linear-beta or cosine)");
}

std::string_view to_string(ScheduleKind kind) {
  return kind == ScheduleKind::LinearBeta ? "linear-beta" : "cosine";
}

double NoiseSchedule::at(std::size_t t) const {
  if (t < 1 || t > alpha_bar.size()) {
    throw SizeError("timestep " + std::to_string(t) + " outside 1.." +
                    std::to_string(alpha_bar.size()));
  }
  return alpha_bar[t - 1];
}

NoiseSchedule make_schedule(ScheduleKind kind, std::size_t steps) {
  if (steps < 2) throw SizeError("make_schedule: need at least 2 timesteps");
  NoiseSchedule s{kind, std::vector<double>(steps)};
  const auto n = static_cast<double>(steps);
  if (kind == ScheduleKind::LinearBeta) {
    constexpr double kBeta0 = 1e-4;
    constexpr double kBeta1 = 0.02;
    double prod = 1.0;
    for (std::size_t t = 1; t <= steps; ++t) {
      const double beta = kBeta0 + (kBeta1 - kBeta0) * static_cast<double>(t - 1) / (n - 1.0);
      prod *= 1.0 - beta;
      s.alpha_bar[t - 1] = prod;
    }
  } else {
    constexpr double kOffset = 0.008;
    auto f = [&](double t) {
      const double c = std::cos((t / n + kOffset) / (1.0 + kOffset) * std::numbers::pi / 2.0);
      return c * c;
    };
    const double f0 = f(0.0);
    for (std::size_t t = 1; t <= steps; ++t) s.alpha_bar[t - 1] = f(static_cast<double>(t)) / f0;
  }
  return s;
}

GCurve g_curve(const RadialPSD& psd, const NoiseSchedule& schedule,
               std::span<const std::size_t> timesteps) {
  for (std::size_t b = 0; b < psd.bins(); ++b) {
    if (!(psd.power[b] > 0.0)) {
      throw DomainError("g_curve: PSD must be positive on every bin (bin " + std::to_string(b) + ")");
    }
  }
  GCurve curve;
  curve.points.reserve(timesteps.size() * psd.bins());
  for (std::size_t t : timesteps) {
    const double ab = schedule.at(t);
    if (ab >= 1.0) throw DomainError("g_curve: alpha_bar = 1 gives infinite SNR at t=" + std::to_string(t));
    for (std::size_t b = 0; b < psd.bins(); ++b) {
      const double s = psd.power[b];
      const double snr = ab * s / (1.0 - ab);
      curve.points.push_back({t, psd.radius[b], s, snr, s * snr / (1.0 + snr)});
    }
  }
  return curve;
}

double learnable_power(double signal_power, double alpha_bar) {
  return alpha_bar * signal_power * signal_power /
         (alpha_bar * signal_power + (1.0 - alpha_bar));
}

namespace {

constexpr std::size_t kReplicates = 10;

// Uniform on (0, 1), never exactly 0.
double open_uniform(Rng& rng) {
  return (static_cast<double>(rng.next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double replicate_estimate(double signal_power, double alpha_bar, std::size_t pairs, Rng& rng) {
  const boost::math::normal_distribution<double> unit;
  const double m = static_cast<double>(pairs);
  std::vector<std::size_t> perm(pairs);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = pairs; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);

  const double sig = std::sqrt(signal_power);
  const double a = std::sqrt(alpha_bar);
  const double b = std::sqrt(1.0 - alpha_bar);
  double s0 = 0.0, st = 0.0, s00 = 0.0, s0t = 0.0, stt = 0.0;
  for (std::size_t i = 0; i < pairs; ++i) {
    const double y0 = sig * boost::math::quantile(unit, (static_cast<double>(i) + open_uniform(rng)) / m);
    const double eta =
        boost::math::quantile(unit, (static_cast<double>(perm[i]) + open_uniform(rng)) / m);
    for (double e : {eta, -eta}) {
      const double yt = a * y0 + b * e;
      s0 += y0;
      st += yt;
      s00 += y0 * y0;
      s0t += y0 * yt;
      stt += yt * yt;
    }
  }
  const double n = 2.0 * m;
  const double cov = s0t / n - (s0 / n) * (st / n);
  const double var = stt / n - (st / n) * (st / n);
  const double c = cov / var;
  return c * c * (stt / n);
}

}  // namespace

LmmseEstimate lmmse_oracle(double signal_power, double alpha_bar, std::size_t samples, Rng& rng) {
  if (!(signal_power > 0.0) || !std::isfinite(signal_power)) {
    throw DomainError("lmmse_oracle: signal power must be positive");
  }
  if (!(alpha_bar > 0.0 && alpha_bar < 1.0)) {
    throw DomainError("lmmse_oracle: alpha_bar must lie in (0, 1)");
  }
  if (samples < 10000) throw DomainError("lmmse_oracle: need at least 10^4 samples");

  const std::size_t pairs = samples / (2 * kReplicates);
  std::vector<double> est(kReplicates);
  for (auto& e : est) e = replicate_estimate(signal_power, alpha_bar, pairs, rng);
  const double mean = std::accumulate(est.begin(), est.end(), 0.0) / kReplicates;
  double ss = 0.0;
  for (double e : est) ss += (e - mean) * (e - mean);
  const double sd = std::sqrt(ss / (kReplicates - 1));

  LmmseEstimate out;
  out.measured = mean;
  out.closed_form = learnable_power(signal_power, alpha_bar);
  out.std_error = sd / std::sqrt(static_cast<double>(kReplicates));
  out.samples = pairs * 2 * kReplicates;
  return out;
}

}  // namespace specmatch
