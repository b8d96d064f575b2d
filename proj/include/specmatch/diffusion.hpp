#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "specmatch/rng.hpp"
#include "specmatch/spectral.hpp"

namespace specmatch {

enum class ScheduleKind { LinearBeta, Cosine };

ScheduleKind parse_schedule_kind(std::string_view name);
std::string_view to_string(ScheduleKind kind);

/// Cumulative signal retention alpha_bar_t for t = 1..T (stored at index t-1).
///
/// LinearBeta: beta_t = 1e-4 + (0.02 - 1e-4) * (t - 1) / (T - 1),
///             alpha_bar_t = prod_{s<=t} (1 - beta_s).
/// Cosine:     f(t) = cos^2(((t / T) + 0.008) / 1.008 * pi / 2),
///             alpha_bar_t = f(t) / f(0).
struct NoiseSchedule {
  ScheduleKind kind;
  std::vector<double> alpha_bar;

  std::size_t steps() const noexcept { return alpha_bar.size(); }
  /// alpha_bar at 1-based timestep t.
  double at(std::size_t t) const;
};

NoiseSchedule make_schedule(ScheduleKind kind, std::size_t steps);

struct GCurvePoint {
  std::size_t t;
  double radius;
  double signal_power;  // S at this bin
  double snr;
  double g;
};

/// Learnable signal power per (timestep, radial bin), ordered by t then radius.
struct GCurve {
  std::vector<GCurvePoint> points;
};

/// SNR_t = alpha_bar_t S / (1 - alpha_bar_t), G = S SNR / (1 + SNR).
GCurve g_curve(const RadialPSD& psd, const NoiseSchedule& schedule,
               std::span<const std::size_t> timesteps);

/// Closed form alpha_bar S^2 / (alpha_bar S + 1 - alpha_bar).
double learnable_power(double signal_power, double alpha_bar);

struct LmmseEstimate {
  double measured = 0.0;     // Monte-Carlo E|c Y_t|^2
  double closed_form = 0.0;  // learnable_power(S, alpha_bar)
  double std_error = 0.0;    // across independent replicates
  std::size_t samples = 0;
};

/// Monte-Carlo check of the scalar LMMSE learnable power.
///
/// Draws Y0 ~ N(0, S) and eta ~ N(0, 1), forms Y_t = sqrt(ab) Y0 + sqrt(1-ab) eta,
/// estimates c = Cov(Y0, Y_t) / Var(Y_t) from the sample and returns the sample
/// mean of (c Y_t)^2. The draws are split into 10 independent replicates; each
/// replicate stratifies Y0 and eta over equiprobable normal quantile cells
/// (Latin hypercube, random pairing) and uses every eta together with -eta.
LmmseEstimate lmmse_oracle(double signal_power, double alpha_bar, std::size_t samples, Rng& rng);

}  // namespace specmatch
