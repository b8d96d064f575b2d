#include "specmatch/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <vector>

#include <CLI11.hpp>

#include "specmatch/dct_mask.hpp"
#include "specmatch/diffusion.hpp"
#include "specmatch/errors.hpp"
#include "specmatch/io.hpp"
#include "specmatch/spectral.hpp"
#include "specmatch/synth.hpp"
#include "specmatch/transforms.hpp"

namespace specmatch::cli {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out)) {
    throw ParseError("config: " + key + " expects a number, got '" + v + "'");
  }
  return out;
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ParseError("config: " + key + " expects a non-negative integer, got '" + v + "'");
  }
  return out;
}

MaskFamily parse_family(const std::string& v) {
  std::vector<int> members;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    int n = 0;
    const auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), n);
    if (item.empty() || ec != std::errc() || p != item.data() + item.size()) {
      throw ParseError("mask family expects a comma list of integers, got '" + v + "'");
    }
    members.push_back(n);
  }
  try {
    return MaskFamily(members);
  } catch (const std::logic_error& e) {
    throw ParseError(std::string("mask family: ") + e.what());
  }
}

void print_line(std::ostream& out, const std::string& text) { out << text << '\n'; }

std::string kv(const char* key, double v) { return std::string(key) + "=" + format_g9(v); }

TriangularMask mask_from(int n, const std::string& bits) {
  if (!bits.empty()) return TriangularMask::from_string(bits);
  return TriangularMask(n);
}

// --- check suite ---------------------------------------------------------

struct CheckResult {
  bool pass;
  std::string detail;
};

CheckResult check_jensen(Rng& rng) {
  constexpr std::size_t kVectors = 1000;
  constexpr std::size_t kBins = 32;
  constexpr double kPower = 1.0;
  std::vector<std::vector<double>> spectra;
  for (std::size_t i = 0; i < kVectors; ++i) {
    std::vector<double> s(kBins);
    double total = 0.0;
    for (double& v : s) {
      v = std::exp(4.0 * rng.normal());
      total += v;
    }
    for (double& v : s) v *= kPower / total;
    spectra.push_back(std::move(s));
  }
  const auto report = jensen_check(spectra);
  const std::vector<std::vector<double>> flat{std::vector<double>(kBins, kPower / kBins)};
  const auto flat_report = jensen_check(flat);
  const double flat_gap = std::abs(flat_report.gaps.front());
  const bool pass = report.violations == 0 && flat_gap <= 1e-12;
  return {pass, std::to_string(report.vectors) + " spectra, " + std::to_string(report.violations) +
                    " violations, flat gap " + format_g9(flat_gap)};
}

CheckResult check_downsample(Rng& rng) {
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const Field2D f = gen_white(16, 16, 2, rng);
    worst = std::max(worst, quadrant_downsample_check(f).max_abs_error);
  }
  return {worst < 1e-9, "max abs error " + format_g9(worst) + " over 20 fields"};
}

CheckResult check_direction_energy(Rng& rng) {
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const std::size_t t = 2 + rng.below(63);
    const std::size_t d = 1 + rng.below(32);
    TokenMatrix x(t, d);
    for (double& v : x.values()) v = rng.normal();
    const double r = rmsc(x);
    const auto u = mean_direction(x);
    double u2 = 0.0;
    for (double v : u) u2 += v * v;
    const double e = directional_energy(x);
    worst = std::max({worst, std::abs(r * r - e) * static_cast<double>(t),
                      std::abs(r * r - (1.0 - u2))});
  }
  return {worst < 1e-9, "max identity residual " + format_g9(worst) + " over 50 token sets"};
}

CheckResult check_esm_grad(Rng& rng) {
  constexpr double h = 1e-4;
  double worst = 0.0;
  std::size_t compared = 0;
  for (int i = 0; i < 3; ++i) {
    Field2D z = gen_white(8, 8, 2, rng);
    Field2D zt = gen_white(8, 8, 2, rng);
    const auto target = normalize_spectrum(radial_psd(zt, 8));
    const auto eval = esm_evaluate(z, target, 8);
    for (std::size_t j = 0; j < z.size(); ++j) {
      const double g = eval.grad.data()[j];
      if (std::abs(g) <= 1e-8) continue;
      const double keep = z.data()[j];
      z.data()[j] = keep + h;
      const double up = esm_evaluate(z, target, 8).loss;
      z.data()[j] = keep - h;
      const double down = esm_evaluate(z, target, 8).loss;
      z.data()[j] = keep;
      const double fd = (up - down) / (2.0 * h);
      worst = std::max(worst, std::abs(fd - g) / std::max(std::abs(g), std::abs(fd)));
      ++compared;
    }
  }
  return {worst < 1e-4, std::to_string(compared) + " entries, max rel err " + format_g9(worst)};
}

// Central differences on every weight of a small model. The L1 term is piecewise
// linear in each single weight, so a coordinate is compared only when the
// differences at h and h/2 agree, i.e. no residual changed sign inside the stencil.
CheckResult check_ae_grad(Rng& rng) {
  constexpr double h = 1e-4;
  std::vector<Field2D> batch;
  for (int i = 0; i < 3; ++i) batch.push_back(gen_power_law({2.0, 32, 32, 1}, rng));
  LinearAE model = LinearAE::random(1, 4, 4, rng);
  TrainConfig config;
  const auto targets = esm_targets(model, batch, config);
  const MaskFamily family = MaskFamily::standard();

  double worst = 0.0;
  std::size_t compared = 0;
  std::size_t skipped = 0;
  for (int objective = 0; objective < 2; ++objective) {
    auto loss = [&](const LinearAE& m) {
      if (objective == 0) return loss_esm_ae(m, batch, config, targets).loss;
      Rng mask_rng(7);
      return loss_dsm_ae(m, batch, family, mask_rng).loss;
    };
    Rng mask_rng(7);
    const AeLoss analytic = objective == 0 ? loss_esm_ae(model, batch, config, targets)
                                           : loss_dsm_ae(model, batch, family, mask_rng);
    for (int part = 0; part < 2; ++part) {
      auto& weights = part == 0 ? model.encoder : model.decoder;
      const auto& grads = part == 0 ? analytic.grad.encoder : analytic.grad.decoder;
      for (std::size_t j = 0; j < weights.size(); ++j) {
        const double keep = weights[j];
        auto diff = [&](double step) {
          weights[j] = keep + step;
          const double up = loss(model);
          weights[j] = keep - step;
          const double down = loss(model);
          weights[j] = keep;
          return (up - down) / (2.0 * step);
        };
        const double fd = diff(h);
        const double fd_half = diff(h / 2);
        const double scale = std::max({std::abs(grads[j]), std::abs(fd), 1e-6});
        if (std::abs(fd - fd_half) > 1e-6 * scale + 1e-9) {
          ++skipped;
          continue;
        }
        worst = std::max(worst, std::abs(fd - grads[j]) / scale);
        ++compared;
      }
    }
  }
  const bool pass = worst < 1e-3 && compared >= 4 * skipped;
  return {pass, std::to_string(compared) + " weights, " + std::to_string(skipped) +
                    " skipped at kinks, max rel err " + format_g9(worst)};
}

// --- config --------------------------------------------------------------

void apply_key(CliConfig& c, const std::string& key, const std::string& v) {
  TrainConfig& t = c.train;
  if (key == "objective") t.objective = parse_objective(v);
  else if (key == "beta") t.beta = parse_double(key, v);
  else if (key == "delta") t.delta = parse_double(key, v);
  else if (key == "mask_family") t.family = parse_family(v);
  else if (key == "learning_rate") t.learning_rate = parse_double(key, v);
  else if (key == "steps") t.steps = parse_uint(key, v);
  else if (key == "batch_size") t.batch_size = parse_uint(key, v);
  else if (key == "seed") {
    t.seed = parse_uint(key, v);
    c.has_seed = true;
  } else if (key == "image_size") t.image_size = parse_uint(key, v);
  else if (key == "channels") t.channels = parse_uint(key, v);
  else if (key == "factor") t.factor = parse_uint(key, v);
  else if (key == "depth") t.depth = parse_uint(key, v);
  else if (key == "data_alpha") t.data_alpha = parse_double(key, v);
  else if (key == "bins") t.bins = parse_uint(key, v);
  else if (key == "floor") t.floor = parse_double(key, v);
  else if (key == "target") t.target = parse_target_mode(v);
  else if (key == "log_every") t.log_every = parse_uint(key, v);
  else if (key == "encoder_gain") t.encoder_gain = parse_double(key, v);
  else if (key == "decoder_gain") t.decoder_gain = parse_double(key, v);
  else if (key == "sigma1") c.dog.sigma1 = parse_double(key, v);
  else if (key == "sigma2") c.dog.sigma2 = parse_double(key, v);
  else if (key == "epsilon") c.dog.epsilon = parse_double(key, v);
  else throw ParseError("config: unknown key '" + key + "'");
}

}  // namespace

CliConfig parse_config(std::istream& in) {
  CliConfig c;
  std::map<std::string, std::size_t> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ParseError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    if (auto [it, fresh] = seen.emplace(key, lineno); !fresh) {
      throw ParseError("config line " + std::to_string(lineno) + ": key '" + key +
                       "' already set on line " + std::to_string(it->second));
    }
    apply_key(c, key, value);
  }
  return c;
}

CliConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  return parse_config(in);
}

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::ofstream open_text(const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  return f;
}

void close_text(std::ofstream& f, const std::string& path) {
  f.flush();
  if (!f) throw IoError("write to '" + path + "' failed");
}

std::vector<std::size_t> spaced_timesteps(std::size_t steps, std::size_t count) {
  if (count == 0 || count > steps) throw DomainError("timestep count must lie in 1..T");
  std::vector<std::size_t> ts;
  for (std::size_t k = 1; k <= count; ++k) ts.push_back((k * steps + count / 2) / count);
  return ts;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spectral analysis and spectrum-matching toolkit", "specmatch"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a power-law Gaussian random field");
  double s_alpha = 2.0;
  std::size_t s_size = 128, s_h = 0, s_w = 0, s_channels = 1;
  std::uint64_t s_seed = 0;
  std::string s_out;
  synth->add_option("--alpha", s_alpha, "PSD exponent (>= 0)")->capture_default_str();
  synth->add_option("--size", s_size, "Height and width (power of two >= 16)")->capture_default_str();
  synth->add_option("--height", s_h, "Height, overrides --size");
  synth->add_option("--width", s_w, "Width, overrides --size");
  synth->add_option("--channels", s_channels, "Channel count")->capture_default_str();
  synth->add_option("--seed", s_seed, "Random seed")->required();
  synth->add_option("--out", s_out, "Output SPMT file")->required();

  // psd
  auto* psd = app.add_subcommand("psd", "Radial PSD of a field (SPMT or P5 PGM) as CSV");
  std::string p_in, p_out;
  std::size_t p_bins = 0;
  psd->add_option("input", p_in, "Input field")->required();
  psd->add_option("--bins", p_bins, "Requested radial bins (0 = min(H,W)/4 clamped to [8,128])");
  psd->add_option("--out", p_out, "Output CSV (default: standard output)");

  // fit
  auto* fit = app.add_subcommand("fit", "Fit a power law to a PSD CSV");
  std::string f_in;
  double f_rmin = 0.0, f_rmax = kMaxRadius;
  fit->add_option("psd", f_in, "PSD CSV")->required();
  fit->add_option("--rmin", f_rmin, "Smallest radius used")->capture_default_str();
  fit->add_option("--rmax", f_rmax, "Largest radius used")->capture_default_str();

  // flatten
  auto* flatten = app.add_subcommand("flatten", "Lower the exponent of a PSD CSV by delta");
  std::string fl_in, fl_out;
  double fl_delta = kDefaultFlattenDelta;
  flatten->add_option("psd", fl_in, "PSD CSV")->required();
  flatten->add_option("--delta", fl_delta, "Exponent reduction (>= 0)")->capture_default_str();
  flatten->add_option("--out", fl_out, "Output CSV")->required();

  // esm
  auto* esm = app.add_subcommand("esm", "KL of a latent's radial spectrum against a target PSD");
  std::string e_target, e_latent, e_grad;
  std::size_t e_bins = 0;
  double e_delta = 0.0, e_floor = kDefaultProbabilityFloor;
  esm->add_option("--target", e_target, "Target PSD CSV, resampled onto the latent grid")->required();
  esm->add_option("--latent", e_latent, "Latent field (SPMT)")->required();
  esm->add_option("--bins", e_bins, "Latent radial bins (0 = default)");
  esm->add_option("--delta", e_delta, "Flatten the target by delta first")->capture_default_str();
  esm->add_option("--floor", e_floor, "Probability floor")->capture_default_str();
  esm->add_option("--grad-out", e_grad, "Write the gradient w.r.t. the latent (SPMT)");

  // filter
  auto* filter = app.add_subcommand("filter", "Blockwise 8x8 DCT low-pass with a triangular mask");
  std::string fi_in, fi_out, fi_mask;
  int fi_n = 0;
  filter->add_option("input", fi_in, "Input field")->required();
  filter->add_option("output", fi_out, "Output SPMT")->required();
  auto* fi_n_opt = filter->add_option("--n", fi_n, "Anti-diagonals removed (0..14)");
  filter->add_option("--mask", fi_mask, "64-character 0/1 keep pattern")->excludes(fi_n_opt);

  // dsm
  auto* dsm = app.add_subcommand("dsm", "Masked L1 between filter(x) and a masked reconstruction");
  std::string d_x, d_xhat, d_mask;
  int d_n = 0;
  dsm->add_option("--x", d_x, "Reference field")->required();
  dsm->add_option("--xhat", d_xhat, "Reconstruction of the masked field")->required();
  auto* d_n_opt = dsm->add_option("--n", d_n, "Anti-diagonals removed (0..14)");
  dsm->add_option("--mask", d_mask, "64-character 0/1 keep pattern")->excludes(d_n_opt);

  // gcurve
  auto* gcurve = app.add_subcommand("gcurve", "Learnable signal power per timestep and radius");
  std::string g_in, g_out, g_schedule = "cosine";
  std::size_t g_steps = 1000, g_count = 10;
  std::vector<std::size_t> g_ts;
  gcurve->add_option("psd", g_in, "Signal PSD CSV")->required();
  gcurve->add_option("--schedule", g_schedule, "linear-beta or cosine")->capture_default_str();
  gcurve->add_option("--T", g_steps, "Number of diffusion steps")->capture_default_str();
  auto* g_ts_opt = gcurve->add_option("--timesteps", g_ts, "Explicit 1-based timesteps")->delimiter(',');
  gcurve->add_option("--count", g_count, "Evenly spaced timesteps")->excludes(g_ts_opt)->capture_default_str();
  gcurve->add_option("--out", g_out, "Output CSV (default: standard output)");

  // lmmse
  auto* lmmse = app.add_subcommand("lmmse", "Monte-Carlo check of the scalar LMMSE learnable power");
  double l_s = 1.0, l_ab = 0.5;
  std::size_t l_samples = 1000000;
  std::uint64_t l_seed = 0;
  lmmse->add_option("--signal-power", l_s, "S > 0")->capture_default_str();
  lmmse->add_option("--alpha-bar", l_ab, "alpha_bar in (0, 1)")->capture_default_str();
  lmmse->add_option("--samples", l_samples, "Draws (>= 10000)")->capture_default_str();
  lmmse->add_option("--seed", l_seed, "Random seed")->required();

  // rmsc
  auto* rmsc_cmd = app.add_subcommand("rmsc", "Spatial contrast of a token matrix (SPMT (T,D) or (h,w,D))");
  std::string r_in;
  rmsc_cmd->add_option("input", r_in, "Token SPMT")->required();

  // dog
  auto* dog = app.add_subcommand("dog", "DoG band-pass or spatial normalization of gridded tokens");
  std::string g2_in, g2_out, g2_config, g2_mode = "dog";
  std::optional<double> g2_s1, g2_s2, g2_eps;
  double g2_alpha = 1.0;
  dog->add_option("input", g2_in, "Token SPMT (h,w,D)")->required();
  dog->add_option("output", g2_out, "Output SPMT")->required();
  dog->add_option("--mode", g2_mode, "dog or spatial-norm")->capture_default_str();
  dog->add_option("--sigma1", g2_s1, "Inner Gaussian sigma");
  dog->add_option("--sigma2", g2_s2, "Outer Gaussian sigma");
  dog->add_option("--epsilon", g2_eps, "Denominator offset");
  dog->add_option("--alpha", g2_alpha, "Mean removal weight for spatial-norm")->capture_default_str();
  dog->add_option("--config", g2_config, "key = value config file");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train the linear toy autoencoder");
  std::string t_config, t_trace, t_model, t_objective, t_family, t_target;
  std::optional<double> t_beta, t_delta, t_lr;
  std::optional<std::size_t> t_steps, t_batch;
  std::optional<std::uint64_t> t_seed;
  train_cmd->add_option("--config", t_config, "key = value config file");
  train_cmd->add_option("--objective", t_objective, "plain, esm or dsm");
  train_cmd->add_option("--beta", t_beta, "ESM weight");
  train_cmd->add_option("--delta", t_delta, "Flatten exponent of the ESM target");
  train_cmd->add_option("--mask-family", t_family, "Comma list, e.g. 0,8,10,12");
  train_cmd->add_option("--lr", t_lr, "Learning rate");
  train_cmd->add_option("--steps", t_steps, "Gradient steps");
  train_cmd->add_option("--batch", t_batch, "Training fields");
  train_cmd->add_option("--target", t_target, "per-image or dataset-average");
  train_cmd->add_option("--seed", t_seed, "Random seed (here or in the config)");
  train_cmd->add_option("--trace", t_trace, "Trace CSV output");
  train_cmd->add_option("--model", t_model, "Weights file output");

  // check
  auto* check = app.add_subcommand("check", "Run the built-in consistency checks");
  bool c_all = false;
  std::uint64_t c_seed = 1;
  check->add_flag("--all", c_all, "Run every check")->required();
  check->add_option("--seed", c_seed, "Seed of the check inputs")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (synth->parsed()) {
    const PowerLawSpec spec{s_alpha, s_h ? s_h : s_size, s_w ? s_w : s_size, s_channels};
    Rng rng(s_seed);
    const Field2D f = gen_power_law(spec, rng);
    save_field(s_out, f);
    const auto p = radial_psd(f, default_bin_count(f.height(), f.width()));
    print_line(out, kv("alpha_fit", fit_power_law(p, 0.0, kMaxRadius).alpha));
    return kExitOk;
  }
  if (psd->parsed()) {
    const Field2D f = load_field(p_in);
    const auto p = radial_psd(f, p_bins ? p_bins : default_bin_count(f.height(), f.width()));
    if (p_out.empty()) {
      write_psd_csv(out, p);
    } else {
      save_psd_csv(p_out, p);
      print_line(out, "bins=" + std::to_string(p.bins()));
    }
    return kExitOk;
  }
  if (fit->parsed()) {
    const auto r = fit_power_law(load_psd_csv(f_in), f_rmin, f_rmax);
    print_line(out, kv("alpha", r.alpha) + " " + kv("log_k", r.log_k) + " " + kv("r2", r.r2) +
                        " bins=" + std::to_string(r.bins_used));
    return kExitOk;
  }
  if (flatten->parsed()) {
    const auto p = flatten_psd(load_psd_csv(fl_in), fl_delta);
    save_psd_csv(fl_out, p);
    print_line(out, kv("alpha_after", fit_power_law(p, 0.0, kMaxRadius).alpha));
    return kExitOk;
  }
  if (esm->parsed()) {
    const auto target_psd = load_psd_csv(e_target);
    const Field2D z = load_field(e_latent);
    const std::size_t bins = e_bins ? e_bins : default_bin_count(z.height(), z.width());
    const auto binning = make_radial_binning(z.height(), z.width(), bins);
    const RadialPSD grid{binning.radius, std::vector<double>(binning.bins(), 1.0), binning.count};
    const auto target = esm_target(target_psd, grid, e_delta, e_floor);
    const auto eval = esm_evaluate(z, target, bins, e_floor);
    std::array<char, 64> buf{};
    std::snprintf(buf.data(), buf.size(), "esm_loss=%.9f", eval.loss);
    print_line(out, buf.data());
    if (!e_grad.empty()) save_field(e_grad, eval.grad);
    return kExitOk;
  }
  if (filter->parsed()) {
    const Field2D f = load_field(fi_in);
    save_field(fi_out, spectral_filter(f, mask_from(fi_n, fi_mask)));
    print_line(out, "kept=" + std::to_string(mask_from(fi_n, fi_mask).kept_count()) + "/64");
    return kExitOk;
  }
  if (dsm->parsed()) {
    const double loss = dsm_loss(load_field(d_x), load_field(d_xhat), mask_from(d_n, d_mask));
    print_line(out, kv("dsm_loss", loss));
    return kExitOk;
  }
  if (gcurve->parsed()) {
    const auto signal = load_psd_csv(g_in);
    const auto schedule = make_schedule(parse_schedule_kind(g_schedule), g_steps);
    const auto ts = g_ts.empty() ? spaced_timesteps(g_steps, g_count) : g_ts;
    const auto curve = g_curve(signal, schedule, ts);
    if (g_out.empty()) {
      write_gcurve_csv(out, curve);
    } else {
      auto f = open_text(g_out);
      write_gcurve_csv(f, curve);
      close_text(f, g_out);
      print_line(out, "rows=" + std::to_string(curve.points.size()));
    }
    return kExitOk;
  }
  if (lmmse->parsed()) {
    Rng rng(l_seed);
    const auto r = lmmse_oracle(l_s, l_ab, l_samples, rng);
    print_line(out, kv("measured", r.measured) + " " + kv("closed_form", r.closed_form) + " " +
                        kv("rel_err", std::abs(r.measured - r.closed_form) / r.closed_form) + " " +
                        kv("std_error", r.std_error));
    return kExitOk;
  }
  if (rmsc_cmd->parsed()) {
    const TokenMatrix x = tokens_from_spmt(load_spmt(r_in));
    const auto u = mean_direction(x);
    double u2 = 0.0;
    for (double v : u) u2 += v * v;
    print_line(out, kv("rmsc", rmsc(x)) + " " + kv("directional_energy", directional_energy(x)) +
                        " " + kv("mean_direction_norm", std::sqrt(u2)));
    return kExitOk;
  }
  if (dog->parsed()) {
    CliConfig c;
    if (!g2_config.empty()) c = load_config(g2_config);
    if (g2_s1) c.dog.sigma1 = *g2_s1;
    if (g2_s2) c.dog.sigma2 = *g2_s2;
    if (g2_eps) c.dog.epsilon = *g2_eps;
    const TokenMatrix z = tokens_from_spmt(load_spmt(g2_in));
    TokenMatrix y = z;
    if (g2_mode == "dog") {
      y = dog_filter(z, c.dog);
    } else if (g2_mode == "spatial-norm") {
      y = spatial_normalize(z, g2_alpha, c.dog.epsilon);
    } else {
      throw UsageError("--mode must be dog or spatial-norm");
    }
    save_spmt(g2_out, to_spmt(y));
    print_line(out, kv("rmsc_before", rmsc(z)) + " " + kv("rmsc_after", rmsc(y)));
    return kExitOk;
  }
  if (train_cmd->parsed()) {
    CliConfig c;
    if (!t_config.empty()) c = load_config(t_config);
    TrainConfig& t = c.train;
    if (!t_objective.empty()) t.objective = parse_objective(t_objective);
    if (t_beta) t.beta = *t_beta;
    if (t_delta) t.delta = *t_delta;
    if (!t_family.empty()) t.family = parse_family(t_family);
    if (t_lr) t.learning_rate = *t_lr;
    if (t_steps) t.steps = *t_steps;
    if (t_batch) t.batch_size = *t_batch;
    if (!t_target.empty()) t.target = parse_target_mode(t_target);
    if (t_seed) {
      t.seed = *t_seed;
      c.has_seed = true;
    }
    if (!c.has_seed) throw UsageError("train needs --seed or a seed key in the config");
    const TrainResult r = train(t);
    if (!t_trace.empty()) {
      auto f = open_text(t_trace);
      write_trace_csv(f, r.trace);
      close_text(f, t_trace);
    }
    if (!t_model.empty()) save_model(t_model, r.model);
    if (r.diverged) {
      err << "training diverged at step " << r.failed_step << '\n';
      return kExitCheckFailed;
    }
    const TraceRow& last = r.trace.back();
    const TraceRow& first = r.trace.front();
    print_line(out, "step=" + std::to_string(last.step) + " " + kv("recon_l1", last.recon_l1) + " " +
                        kv("spec_loss", last.spec_loss) + " " + kv("spec_loss_initial", first.spec_loss) +
                        " " + kv("latent_alpha_fit", last.latent_alpha_fit));
    return kExitOk;
  }
  if (check->parsed()) {
    Rng rng(c_seed);
    const std::vector<std::pair<std::string, std::function<CheckResult(Rng&)>>> checks{
        {"jensen", check_jensen},
        {"quadrant-downsample", check_downsample},
        {"directional-energy", check_direction_energy},
        {"esm-gradient", check_esm_grad},
        {"autoencoder-gradient", check_ae_grad},
    };
    bool all = true;
    for (const auto& [name, fn] : checks) {
      const CheckResult r = fn(rng);
      all = all && r.pass;
      print_line(out, std::string(r.pass ? "PASS " : "FAIL ") + name + ": " + r.detail);
    }
    return all ? kExitOk : kExitCheckFailed;
  }
  throw UsageError("no command given");
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(std::vector<std::string>(args.begin(), args.end()), out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const SizeError& e) {
    err << "error: " << e.what() << '\n';
    return kExitPrecondition;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kExitPrecondition;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitPrecondition;
  }
}

}  // namespace specmatch::cli
