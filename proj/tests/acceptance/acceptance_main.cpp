// Runs the twelve acceptance criteria and prints one line per criterion.
// Exit status is 0 only when every criterion passes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "specmatch/cli.hpp"
#include "specmatch/dct_mask.hpp"
#include "specmatch/diffusion.hpp"
#include "specmatch/io.hpp"
#include "specmatch/repa.hpp"
#include "specmatch/spectral.hpp"
#include "specmatch/synth.hpp"
#include "specmatch/toy_ae.hpp"

using namespace specmatch;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

// 1. T RMSC^2 against the non-DC DCT energy of the direction field, and
// RMSC^2 against 1 - |mean direction|^2.
Outcome token_identity() {
  Rng rng(1001);
  double worst_energy = 0.0, worst_mean = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t t = 1 + rng.below(64), d = 1 + rng.below(32);
    TokenMatrix x(t, d);
    for (double& v : x.values()) v = rng.normal() + (trial % 3 == 0 ? 1.5 : 0.0);
    const double r = rmsc(x);

    std::vector<std::vector<double>> unit(t, std::vector<double>(d));
    for (std::size_t i = 0; i < t; ++i) {
      double n = 0.0;
      for (std::size_t k = 0; k < d; ++k) n += x(i, k) * x(i, k);
      for (std::size_t k = 0; k < d; ++k) unit[i][k] = x(i, k) / std::sqrt(n);
    }
    double energy = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      std::vector<double> col(t);
      for (std::size_t i = 0; i < t; ++i) col[i] = unit[i][k];
      const auto c = oracle::dct1(col);
      for (std::size_t i = 1; i < t; ++i) energy += c[i] * c[i];
    }
    worst_energy = std::max({worst_energy, std::abs(t * r * r - energy),
                             std::abs(t * directional_energy(x) - energy)});
    double m2 = 0.0;
    for (double v : mean_direction(x)) m2 += v * v;
    worst_mean = std::max(worst_mean, std::abs(r * r - (1.0 - m2)));
  }
  return {worst_energy < 1e-9 && worst_mean < 1e-9,
          fmt("max|T*RMSC^2 - sum_k>=1 |U_k|^2|=%.3g max|RMSC^2 - (1-|u|^2)|=%.3g", worst_energy,
              worst_mean)};
}

// 2. Monte-Carlo learnable power on the 5 x 5 grid.
Outcome lmmse_grid() {
  Rng rng(1002);
  double worst = 0.0;
  for (double s : {0.25, 1.0, 4.0, 16.0, 64.0})
    for (double ab : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      const auto e = lmmse_oracle(s, ab, 1000000, rng);
      const double closed = ab * s * s / (ab * s + 1.0 - ab);
      worst = std::max(worst, std::abs(e.measured - closed) / closed);
    }
  return {worst < 0.01, fmt("25 cells x 1e6 samples, max rel err=%.3g", worst)};
}

// 3. G-curves of an exact alpha = 2 spectrum.
Outcome gcurve_monotone() {
  const auto grid = make_radial_binning(128, 128, default_bin_count(128, 128));
  RadialPSD psd{grid.radius, {}, grid.count};
  for (double r : psd.radius) psd.power.push_back(0.05 * std::pow(r, -2.0));
  const double alpha = fit_power_law(psd, 0.0, kMaxRadius).alpha;

  std::vector<std::size_t> ts;
  for (std::size_t k = 1; k <= 10; ++k) ts.push_back(k * 100 - 1);
  bool decreasing = true;
  for (auto kind : {ScheduleKind::LinearBeta, ScheduleKind::Cosine}) {
    const auto g = g_curve(psd, make_schedule(kind, 1000), ts);
    for (std::size_t i = 1; i < g.points.size(); ++i) {
      if (g.points[i].t == g.points[i - 1].t) decreasing = decreasing && g.points[i].g < g.points[i - 1].g;
    }
  }
  // One-step schedules with alpha_bar S = 1 - alpha_bar put every bin at SNR 1.
  double worst_half = 0.0;
  const std::vector<std::size_t> first{1};
  for (std::size_t b = 0; b < psd.bins(); ++b) {
    const NoiseSchedule at_one{ScheduleKind::LinearBeta, {1.0 / (1.0 + psd.power[b])}};
    const auto p = g_curve(psd, at_one, first).points[b];
    worst_half = std::max(worst_half, std::abs(p.g - p.signal_power / 2.0) / p.signal_power);
  }
  return {std::abs(alpha - 2.0) < 1e-9 && decreasing && worst_half < 1e-12,
          fmt("fitted alpha=%.9g, strictly decreasing over bins for both schedules: %s, max rel|G - S/2| at SNR 1=%.3g",
              alpha, decreasing ? "yes" : "no", worst_half)};
}

// 4. Ensemble fit of synthesized fields, then flattening.
Outcome synth_fit() {
  Rng rng(1004);
  std::vector<RadialPSD> psds;
  for (int i = 0; i < 64; ++i) {
    psds.push_back(radial_psd(gen_power_law({2.0, 128, 128, 1}, rng), default_bin_count(128, 128)));
  }
  const auto avg = average_psd(psds);
  const double a = fit_power_law(avg, 0.0, kMaxRadius).alpha;
  const double b = fit_power_law(flatten_psd(avg, 1.0), 0.0, kMaxRadius).alpha;
  return {a >= 1.9 && a <= 2.1 && b >= 0.9 && b <= 1.1, fmt("ensemble alpha=%.4f, after delta=1 alpha=%.4f", a, b)};
}

// 5. Analytic ESM gradient against central differences.
Outcome esm_gradient() {
  Rng rng(1005);
  constexpr double h = 1e-4;
  constexpr std::size_t bins = 8;
  double worst = 0.0;
  std::size_t compared = 0;
  for (int trial = 0; trial < 20; ++trial) {
    Field2D z = oracle::random_field(1, 16, 16, rng);
    const auto target = normalize_spectrum(radial_psd(gen_power_law({2.0, 16, 16, 1}, rng), bins));
    const Field2D g = esm_loss_grad(z, target, bins);
    for (std::size_t i = 0; i < z.size(); ++i) {
      if (std::abs(g.data()[i]) <= 1e-8) continue;
      const double keep = z.data()[i];
      z.data()[i] = keep + h;
      const double up = esm_loss(target, normalize_spectrum(radial_psd(z, bins)));
      z.data()[i] = keep - h;
      const double down = esm_loss(target, normalize_spectrum(radial_psd(z, bins)));
      z.data()[i] = keep;
      worst = std::max(worst, std::abs((up - down) / (2 * h) - g.data()[i]) / std::abs(g.data()[i]));
      ++compared;
    }
  }
  return {worst < 1e-4 && compared > 0, fmt("%zu entries compared, max rel err=%.3g", compared, worst)};
}

// 6. Filter identity, idempotence, nesting, zero loss and the {0} family.
Outcome dsm_structure() {
  Rng rng(1006);
  const Field2D x = oracle::random_field(2, 32, 32, rng);
  const double id_err = max_abs_diff(spectral_filter(x, TriangularMask(0)), x);
  double idem = 0.0, nest = 0.0, zero = 0.0;
  for (int n = 0; n <= 14; ++n) {
    const TriangularMask m(n);
    const Field2D once = spectral_filter(x, m);
    idem = std::max(idem, max_abs_diff(spectral_filter(once, m), once));
    for (int k = n; k <= 14; ++k) {
      nest = std::max(nest, max_abs_diff(spectral_filter(once, TriangularMask(k)),
                                         spectral_filter(x, TriangularMask(k))));
    }
    zero = std::max(zero, dsm_loss(x, once, m));
  }

  TrainConfig cfg;
  cfg.steps = 50;
  cfg.seed = 6;
  cfg.objective = Objective::Plain;
  const auto plain = train(cfg);
  cfg.objective = Objective::Dsm;
  cfg.family = MaskFamily({0});
  const auto dsm = train(cfg);
  bool bit_equal = plain.model.encoder == dsm.model.encoder && plain.model.decoder == dsm.model.decoder &&
                   plain.trace.size() == dsm.trace.size();
  for (std::size_t i = 0; bit_equal && i < plain.trace.size(); ++i) {
    bit_equal = plain.trace[i].recon_l1 == dsm.trace[i].recon_l1;
  }
  return {id_err < 1e-10 && idem < 1e-10 && nest < 1e-10 && zero == 0.0 && bit_equal,
          fmt("identity err=%.3g, idempotence err=%.3g, nesting err=%.3g, max dsm_loss(x, filter(x))=%.3g, "
              "{0}-family training bit-equal to plain over 50 steps: %s",
              id_err, idem, nest, zero, bit_equal ? "yes" : "no")};
}

// 7. Quadrant downsampling against the DCT interpolant.
Outcome quadrant() {
  Rng rng(1007);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    worst = std::max(worst, quadrant_downsample_check(oracle::random_field(1 + i % 3, 32, 32, rng)).max_abs_error);
  }
  return {worst < 1e-9, fmt("100 fields, max abs error=%.3g", worst)};
}

// 8. Log-sum bound for spectra with equal total power.
Outcome jensen() {
  Rng rng(1008);
  constexpr std::size_t b = 32;
  constexpr double total = 100.0;
  std::vector<std::vector<double>> spectra;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> s(b);
    double sum = 0.0;
    for (double& v : s) {
      v = std::exp(2.0 * rng.normal());
      sum += v;
    }
    for (double& v : s) v *= total / sum;
    spectra.push_back(s);
  }
  const auto r = jensen_check(spectra);
  const std::vector<std::vector<double>> flat{std::vector<double>(b, total / b)};
  const double gap = std::abs(jensen_check(flat).gaps[0]);
  return {r.violations == 0 && gap < 1e-12,
          fmt("1000 spectra, violations=%zu, flat-spectrum gap=%.3g", r.violations, gap)};
}

Outcome toy_esm() {
  TrainConfig cfg;
  const auto r = train(cfg);
  if (r.diverged) return {false, fmt("diverged at step %zu", r.failed_step)};
  const auto& first = r.trace.front();
  const auto& last = r.trace.back();
  const double ratio = last.spec_loss / first.spec_loss;
  return {last.spec_loss < 0.05 && ratio < 0.1 && std::abs(last.latent_alpha_fit - 1.0) <= 0.3,
          fmt("KL %.4f -> %.4f (ratio %.3f, need < 0.05 and < 0.1), latent alpha=%.3f (need 1.0 +/- 0.3), "
              "beta=%g delta=%g steps=%zu",
              first.spec_loss, last.spec_loss, ratio, last.latent_alpha_fit, cfg.beta, cfg.delta, cfg.steps)};
}

Outcome toy_dsm() {
  TrainConfig cfg;
  cfg.objective = Objective::Dsm;
  const auto r = train(cfg);
  if (r.diverged) return {false, fmt("diverged at step %zu", r.failed_step)};
  const double a = r.trace.back().latent_alpha_fit;
  return {a < cfg.data_alpha, fmt("latent alpha=%.3f after %zu steps, input alpha=%.1f", a, cfg.steps, cfg.data_alpha)};
}

// 11. DoG band-pass and spatial normalization.
Outcome dog() {
  const DoGParams params;
  const Field2D k = dog_kernel(params);
  // Zero-padded 32 x 32 spectrum of the kernel.
  std::vector<double> plane(32 * 32, 0.0);
  for (std::size_t y = 0; y < k.height(); ++y)
    for (std::size_t x = 0; x < k.width(); ++x) plane[y * 32 + x] = k(0, y, x);
  const auto power = oracle::dft2_power(plane.data(), 32, 32);
  const double peak = std::sqrt(*std::max_element(power.begin(), power.end()));
  const double dc = std::sqrt(power[0]);

  const GridShape grid{16, 16};
  TokenMatrix constant(256, 3, grid);
  for (std::size_t t = 0; t < 256; ++t)
    for (std::size_t d = 0; d < 3; ++d) constant(t, d) = 0.5 + static_cast<double>(d);
  double worst_const = 0.0;
  const auto filtered = dog_filter(constant, params);
  for (double v : filtered.values()) worst_const = std::max(worst_const, std::abs(v));

  Rng rng(1011);
  TokenMatrix z(256, 8, grid);
  for (double& v : z.values()) v = 3.0 + 2.0 * rng.normal();
  const auto s = spatial_normalize(z, 1.0, params.epsilon);
  double worst_mean = 0.0;
  for (std::size_t d = 0; d < 8; ++d) {
    double m = 0.0;
    for (std::size_t t = 0; t < 256; ++t) m += s(t, d);
    worst_mean = std::max(worst_mean, std::abs(m / 256.0));
  }
  return {dc < 1e-6 * peak && worst_const == 0.0 && worst_mean < 1e-10,
          fmt("|K(0)|/max|K|=%.3g, max |dog(constant)|=%.3g, max spatial mean after normalize=%.3g", dc / peak,
              worst_const, worst_mean)};
}

// 12. Every command twice; stdout and written files must match byte for byte.
Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "specmatch_acceptance";
  fs::remove_all(root);
  std::vector<std::string> runs;
  std::vector<std::string> mismatched;
  bool all_ok = true;
  for (int pass = 0; pass < 2; ++pass) {
    const fs::path d = root / std::to_string(pass);
    fs::create_directories(d);
    auto p = [&](const char* name) { return (d / name).string(); };
    {
      std::ofstream cfg(p("train.cfg"));
      cfg << "image_size = 32\nfactor = 4\nbatch_size = 2\nsteps = 20\nlog_every = 5\nseed = 4\n";
      std::ofstream dog_cfg(p("dog.cfg"));
      dog_cfg << "sigma1 = 0.8\nsigma2 = 1.6\nepsilon = 1e-5\n";
    }
    std::vector<std::vector<std::string>> commands = {
        {"synth", "--alpha", "2.0", "--size", "64", "--seed", "7", "--out", p("x.spmt")},
        {"synth", "--alpha", "1.0", "--size", "16", "--channels", "6", "--seed", "8", "--out", p("z.spmt")},
        {"psd", p("x.spmt"), "--out", p("x.csv")},
        {"psd", p("x.spmt")},
        {"fit", p("x.csv")},
        {"flatten", p("x.csv"), "--delta", "1.0", "--out", p("flat.csv")},
        {"esm", "--target", p("flat.csv"), "--latent", p("z.spmt"), "--grad-out", p("grad.spmt")},
        {"filter", p("x.spmt"), p("xf.spmt"), "--n", "10"},
        {"dsm", "--x", p("x.spmt"), "--xhat", p("xf.spmt"), "--n", "8"},
        {"gcurve", p("x.csv"), "--schedule", "cosine", "--count", "10", "--out", p("g.csv")},
        {"lmmse", "--signal-power", "4", "--alpha-bar", "0.3", "--samples", "100000", "--seed", "3"},
        {"rmsc", p("grad.spmt")},
        {"dog", p("z.spmt"), p("dog.spmt"), "--config", p("dog.cfg")},
        {"dog", p("z.spmt"), p("sn.spmt"), "--mode", "spatial-norm", "--alpha", "0.5"},
        {"train", "--config", p("train.cfg"), "--objective", "dsm", "--trace", p("t.csv"), "--model", p("t.spmw")},
        {"train", "--config", p("train.cfg"), "--trace", p("e.csv")},
        {"check", "--all", "--seed", "5"},
    };
    for (std::size_t i = 0; i < commands.size(); ++i) {
      std::ostringstream out, err;
      const int code = cli::run(commands[i], out, err);
      all_ok = all_ok && code == 0;
      if (pass == 0) {
        runs.push_back(out.str());
      } else if (runs[i] != out.str()) {
        mismatched.push_back(commands[i][0] + " stdout");
      }
    }
    if (pass == 1) {
      for (const auto& e : fs::directory_iterator(root / "0")) {
        std::ifstream a(e.path(), std::ios::binary), b(d / e.path().filename(), std::ios::binary);
        const std::string sa{std::istreambuf_iterator<char>(a), {}}, sb{std::istreambuf_iterator<char>(b), {}};
        if (sa != sb) mismatched.push_back(e.path().filename().string());
      }
    }
  }
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(root / "0")) ++files;
  std::string detail = fmt("%zu commands, %zu output files compared, all exit 0: %s", runs.size(), files,
                           all_ok ? "yes" : "no");
  for (const auto& m : mismatched) detail += ", differs: " + m;
  return {all_ok && mismatched.empty(), detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"token direction identity", token_identity},
      {"LMMSE learnable power", lmmse_grid},
      {"G-curve monotonicity", gcurve_monotone},
      {"power-law synthesis and fit", synth_fit},
      {"ESM gradient", esm_gradient},
      {"DSM structure", dsm_structure},
      {"quadrant downsampling", quadrant},
      {"log-sum bound", jensen},
      {"toy ESM training", toy_esm},
      {"toy DSM training", toy_dsm},
      {"DoG band-pass", dog},
      {"CLI determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !o.pass;
    std::printf("[%s] %2zu %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
