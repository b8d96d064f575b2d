#include "specmatch/toy_ae.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "specmatch/errors.hpp"
#include "specmatch/io.hpp"
#include "specmatch/synth.hpp"

namespace specmatch {

namespace {

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

void check_input(const LinearAE& m, const Field2D& x) {
  if (x.channels() != m.channels) {
    throw SizeError("autoencoder expects " + std::to_string(m.channels) + " channels, got " +
                    std::to_string(x.channels()));
  }
  if (x.height() % m.factor != 0 || x.width() % m.factor != 0) {
    throw SizeError("input " + std::to_string(x.height()) + "x" + std::to_string(x.width()) +
                    " is not divisible by the patch factor " + std::to_string(m.factor));
  }
}

void check_batch(const LinearAE& m, std::span<const Field2D> batch) {
  if (batch.empty()) throw SizeError("empty batch");
  for (const auto& x : batch) {
    check_input(m, x);
    if (!x.same_shape(batch.front())) throw SizeError("batch fields differ in shape");
  }
}

AeGradients zero_grad(const LinearAE& m) {
  return {std::vector<double>(m.encoder.size(), 0.0), std::vector<double>(m.decoder.size(), 0.0)};
}

// Gathers patch (u, v) of x into p.
void gather_patch(const LinearAE& m, const Field2D& x, std::size_t u, std::size_t v,
                  std::vector<double>& p) {
  const std::size_t f = m.factor;
  for (std::size_t c = 0; c < m.channels; ++c)
    for (std::size_t a = 0; a < f; ++a)
      for (std::size_t b = 0; b < f; ++b) p[(c * f + a) * f + b] = x(c, u * f + a, v * f + b);
}

// dE += gz (x) patches of x.
void add_encoder_grad(const LinearAE& m, const Field2D& x, const Field2D& gz,
                      std::vector<double>& ge) {
  const std::size_t pd = m.patch_dim();
  std::vector<double> p(pd);
  for (std::size_t u = 0; u < gz.height(); ++u)
    for (std::size_t v = 0; v < gz.width(); ++v) {
      gather_patch(m, x, u, v, p);
      for (std::size_t k = 0; k < m.depth; ++k) {
        const double g = gz(k, u, v);
        if (g == 0.0) continue;
        double* row = &ge[k * pd];
        for (std::size_t j = 0; j < pd; ++j) row[j] += g * p[j];
      }
    }
}

// Decodes z and returns sum |decode(z) - target|. Accumulates the decoder
// gradient of gscale * that sum and writes its gradient w.r.t. z into gz.
double l1_decode_pass(const LinearAE& m, const Field2D& z, const Field2D& target, double gscale,
                      std::vector<double>& gd, Field2D& gz) {
  const Field2D xh = m.decode(z);
  if (!xh.same_shape(target)) throw SizeError("reconstruction and target differ in shape");
  const std::size_t f = m.factor;
  const std::size_t pd = m.patch_dim();
  std::vector<double> gp(pd);
  double sum = 0.0;
  for (std::size_t u = 0; u < z.height(); ++u)
    for (std::size_t v = 0; v < z.width(); ++v) {
      for (std::size_t c = 0; c < m.channels; ++c)
        for (std::size_t a = 0; a < f; ++a)
          for (std::size_t b = 0; b < f; ++b) {
            const double r = xh(c, u * f + a, v * f + b) - target(c, u * f + a, v * f + b);
            sum += std::abs(r);
            gp[(c * f + a) * f + b] = gscale * sign(r);
          }
      for (std::size_t j = 0; j < pd; ++j) {
        double* grow = &gd[j * m.depth];
        for (std::size_t k = 0; k < m.depth; ++k) grow[k] += gp[j] * z(k, u, v);
      }
      for (std::size_t k = 0; k < m.depth; ++k) {
        double acc = 0.0;
        for (std::size_t j = 0; j < pd; ++j) acc += m.decoder[j * m.depth + k] * gp[j];
        gz(k, u, v) = acc;
      }
    }
  return sum;
}

std::size_t latent_bins(const TrainConfig& config, const Field2D& z) {
  return config.bins != 0 ? config.bins : default_bin_count(z.height(), z.width());
}

bool pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

}  // namespace

void LinearAE::validate() const {
  if (channels == 0 || factor == 0 || depth == 0) {
    throw SizeError("autoencoder needs positive channels, factor and depth");
  }
  if (encoder.size() != depth * patch_dim() || decoder.size() != depth * patch_dim()) {
    throw SizeError("autoencoder weight count does not match its shape");
  }
  for (double w : encoder)
    if (!std::isfinite(w)) throw DomainError("non-finite encoder weight");
  for (double w : decoder)
    if (!std::isfinite(w)) throw DomainError("non-finite decoder weight");
}

LinearAE LinearAE::random(std::size_t channels, std::size_t factor, std::size_t depth, Rng& rng,
                          double encoder_gain, double decoder_gain) {
  LinearAE m;
  m.channels = channels;
  m.factor = factor;
  m.depth = depth;
  if (channels == 0 || factor == 0 || depth == 0) {
    throw SizeError("autoencoder needs positive channels, factor and depth");
  }
  const std::size_t pd = m.patch_dim();
  m.encoder.resize(depth * pd);
  m.decoder.resize(depth * pd);
  const double se = encoder_gain / std::sqrt(static_cast<double>(pd));
  const double sd = decoder_gain / std::sqrt(static_cast<double>(depth));
  for (double& w : m.encoder) w = se * rng.normal();
  for (double& w : m.decoder) w = sd * rng.normal();
  return m;
}

LinearAE LinearAE::identity(std::size_t channels) {
  if (channels == 0) throw SizeError("autoencoder needs positive channels");
  LinearAE m;
  m.channels = channels;
  m.factor = 1;
  m.depth = channels;
  m.encoder.assign(channels * channels, 0.0);
  m.decoder.assign(channels * channels, 0.0);
  for (std::size_t i = 0; i < channels; ++i) {
    m.encoder[i * channels + i] = 1.0;
    m.decoder[i * channels + i] = 1.0;
  }
  return m;
}

Field2D LinearAE::encode(const Field2D& x) const {
  check_input(*this, x);
  const std::size_t pd = patch_dim();
  Field2D z(depth, x.height() / factor, x.width() / factor);
  std::vector<double> p(pd);
  for (std::size_t u = 0; u < z.height(); ++u)
    for (std::size_t v = 0; v < z.width(); ++v) {
      gather_patch(*this, x, u, v, p);
      for (std::size_t k = 0; k < depth; ++k) {
        double acc = 0.0;
        for (std::size_t j = 0; j < pd; ++j) acc += encoder[k * pd + j] * p[j];
        z(k, u, v) = acc;
      }
    }
  return z;
}

Field2D LinearAE::decode(const Field2D& z) const {
  if (z.channels() != depth) {
    throw SizeError("decoder expects " + std::to_string(depth) + " latent channels, got " +
                    std::to_string(z.channels()));
  }
  const std::size_t f = factor;
  Field2D x(channels, z.height() * f, z.width() * f);
  for (std::size_t u = 0; u < z.height(); ++u)
    for (std::size_t v = 0; v < z.width(); ++v)
      for (std::size_t c = 0; c < channels; ++c)
        for (std::size_t a = 0; a < f; ++a)
          for (std::size_t b = 0; b < f; ++b) {
            const double* row = &decoder[((c * f + a) * f + b) * depth];
            double acc = 0.0;
            for (std::size_t k = 0; k < depth; ++k) acc += row[k] * z(k, u, v);
            x(c, u * f + a, v * f + b) = acc;
          }
  return x;
}

Objective parse_objective(std::string_view name) {
  if (name == "plain") return Objective::Plain;
  if (name == "esm") return Objective::Esm;
  if (name == "dsm") return Objective::Dsm;
  throw ParseError("unknown objective '" + std::string(name) + "' (expected plain, esm or dsm)");
}

std::string_view to_string(Objective objective) {
  switch (objective) {
    case Objective::Plain: return "plain";
    case Objective::Esm: return "esm";
    case Objective::Dsm: return "dsm";
  }
  return "?";
}

TargetMode parse_target_mode(std::string_view name) {
  if (name == "per-image") return TargetMode::PerImage;
  if (name == "dataset-average") return TargetMode::DatasetAverage;
  throw ParseError("unknown target mode '" + std::string(name) +
                   "' (expected per-image or dataset-average)");
}

std::string_view to_string(TargetMode mode) {
  return mode == TargetMode::PerImage ? "per-image" : "dataset-average";
}

void TrainConfig::validate() const {
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw DomainError("beta must be finite and >= 0");
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw DomainError("delta must be finite and >= 0");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw DomainError("learning rate must be finite and >= 0");
  }
  if (steps < 1) throw DomainError("steps must be >= 1");
  if (batch_size < 1) throw DomainError("batch size must be >= 1");
  if (log_every < 1) throw DomainError("log_every must be >= 1");
  if (channels < 1 || depth < 1 || factor < 1) {
    throw DomainError("channels, depth and factor must be >= 1");
  }
  if (!pow2(image_size) || image_size < 16) {
    throw DomainError("image size must be a power of two >= 16");
  }
  if (image_size % factor != 0 || image_size / factor < 8) {
    throw DomainError("image size / factor must be an integer >= 8");
  }
  if (objective == Objective::Dsm && (image_size / factor) % 8 != 0) {
    throw DomainError("dsm needs a latent size divisible by 8");
  }
  if (!(data_alpha >= 0.0) || !std::isfinite(data_alpha)) {
    throw DomainError("data alpha must be finite and >= 0");
  }
  if (bins != 0 && bins < 4) throw DomainError("bins must be 0 (default) or >= 4");
  if (!(floor > 0.0) || !(floor < 1.0)) throw DomainError("floor must lie in (0, 1)");
  if (!(encoder_gain > 0.0) || !std::isfinite(encoder_gain) || !(decoder_gain > 0.0) ||
      !std::isfinite(decoder_gain)) {
    throw DomainError("init gains must be finite and positive");
  }
}

AeLoss loss_plain_ae(const LinearAE& model, std::span<const Field2D> batch) {
  check_batch(model, batch);
  const double n = static_cast<double>(batch.size() * batch.front().size());
  AeLoss out;
  out.grad = zero_grad(model);
  double sum = 0.0;
  for (const auto& x : batch) {
    const Field2D z = model.encode(x);
    Field2D gz(z.channels(), z.height(), z.width());
    sum += l1_decode_pass(model, z, x, 1.0 / n, out.grad.decoder, gz);
    add_encoder_grad(model, x, gz, out.grad.encoder);
  }
  out.recon_l1 = sum / n;
  out.loss = out.recon_l1;
  return out;
}

std::vector<SpectrumDistribution> esm_targets(const LinearAE& model,
                                              std::span<const Field2D> batch,
                                              const TrainConfig& config) {
  check_batch(model, batch);
  const Field2D& x0 = batch.front();
  const std::size_t zh = x0.height() / model.factor;
  const std::size_t zw = x0.width() / model.factor;
  const auto binning =
      make_radial_binning(zh, zw, config.bins != 0 ? config.bins : default_bin_count(zh, zw));
  RadialPSD grid{binning.radius, std::vector<double>(binning.bins(), 1.0), binning.count};

  const std::size_t image_bins = default_bin_count(x0.height(), x0.width());
  std::vector<RadialPSD> image_psds;
  image_psds.reserve(batch.size());
  for (const auto& x : batch) image_psds.push_back(radial_psd(x, image_bins));

  std::vector<SpectrumDistribution> targets;
  if (config.target == TargetMode::DatasetAverage) {
    const auto shared = esm_target(average_psd(image_psds), grid, config.delta, config.floor);
    targets.assign(batch.size(), shared);
  } else {
    for (const auto& psd : image_psds) {
      targets.push_back(esm_target(psd, grid, config.delta, config.floor));
    }
  }
  return targets;
}

AeLoss loss_esm_ae(const LinearAE& model, std::span<const Field2D> batch,
                   const TrainConfig& config) {
  const auto targets = esm_targets(model, batch, config);
  return loss_esm_ae(model, batch, config, targets);
}

AeLoss loss_esm_ae(const LinearAE& model, std::span<const Field2D> batch, const TrainConfig& config,
                   std::span<const SpectrumDistribution> targets) {
  check_batch(model, batch);
  if (targets.size() != batch.size()) throw SizeError("one ESM target per batch element needed");
  const double b = static_cast<double>(batch.size());
  const double n = b * static_cast<double>(batch.front().size());
  AeLoss out;
  out.grad = zero_grad(model);
  double sum = 0.0;
  double kl = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Field2D& x = batch[i];
    const Field2D z = model.encode(x);
    Field2D gz(z.channels(), z.height(), z.width());
    sum += l1_decode_pass(model, z, x, 1.0 / n, out.grad.decoder, gz);
    const auto esm = esm_evaluate(z, targets[i], latent_bins(config, z), config.floor);
    kl += esm.loss;
    const double w = config.beta / b;
    for (std::size_t j = 0; j < gz.size(); ++j) gz.data()[j] += w * esm.grad.data()[j];
    add_encoder_grad(model, x, gz, out.grad.encoder);
  }
  out.recon_l1 = sum / n;
  out.spec_term = kl / b;
  out.loss = out.recon_l1 + config.beta * out.spec_term;
  return out;
}

AeLoss loss_dsm_ae(const LinearAE& model, std::span<const Field2D> batch, const MaskFamily& family,
                   Rng& rng) {
  check_batch(model, batch);
  const double n = static_cast<double>(batch.size() * batch.front().size());
  AeLoss out;
  out.grad = zero_grad(model);
  double sum = 0.0;
  for (const auto& x : batch) {
    const TriangularMask mask = sample_mask(family, rng);
    const Field2D z = model.encode(x);
    const Field2D zm = spectral_filter(z, mask);
    const Field2D xm = spectral_filter(x, mask);
    Field2D gzm(z.channels(), z.height(), z.width());
    sum += l1_decode_pass(model, zm, xm, 1.0 / n, out.grad.decoder, gzm);
    add_encoder_grad(model, x, spectral_filter(gzm, mask), out.grad.encoder);
  }
  out.recon_l1 = sum / n;
  out.loss = out.recon_l1;
  return out;
}

namespace {

TraceRow measure(const LinearAE& model, std::span<const Field2D> batch, const TrainConfig& config,
                 std::span<const SpectrumDistribution> targets, std::size_t step) {
  TraceRow row;
  row.step = step;
  row.recon_l1 = loss_plain_ae(model, batch).recon_l1;
  std::vector<RadialPSD> psds;
  double kl = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Field2D z = model.encode(batch[i]);
    psds.push_back(radial_psd(z, latent_bins(config, z)));
    kl += esm_loss(targets[i], normalize_spectrum(psds.back(), config.floor));
  }
  row.spec_loss = kl / static_cast<double>(batch.size());
  row.latent_alpha_fit = fit_power_law(average_psd(psds), 0.0, kMaxRadius).alpha;
  return row;
}

bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace

TrainResult train(const TrainConfig& config) {
  config.validate();
  Rng rng(config.seed);
  const PowerLawSpec data_spec{config.data_alpha, config.image_size, config.image_size,
                               config.channels};
  std::vector<Field2D> batch;
  batch.reserve(config.batch_size);
  for (std::size_t i = 0; i < config.batch_size; ++i) batch.push_back(gen_power_law(data_spec, rng));

  TrainResult result;
  result.model = LinearAE::random(config.channels, config.factor, config.depth, rng,
                                  config.encoder_gain, config.decoder_gain);
  LinearAE& model = result.model;
  const auto targets = esm_targets(model, batch, config);

  result.trace.push_back(measure(model, batch, config, targets, 0));
  for (std::size_t step = 1; step <= config.steps; ++step) {
    AeLoss loss;
    switch (config.objective) {
      case Objective::Plain: loss = loss_plain_ae(model, batch); break;
      case Objective::Esm: loss = loss_esm_ae(model, batch, config, targets); break;
      case Objective::Dsm: loss = loss_dsm_ae(model, batch, config.family, rng); break;
    }
    if (!std::isfinite(loss.loss) || !all_finite(loss.grad.encoder) ||
        !all_finite(loss.grad.decoder)) {
      result.diverged = true;
      result.failed_step = step;
      return result;
    }
    for (std::size_t j = 0; j < model.encoder.size(); ++j) {
      model.encoder[j] -= config.learning_rate * loss.grad.encoder[j];
    }
    for (std::size_t j = 0; j < model.decoder.size(); ++j) {
      model.decoder[j] -= config.learning_rate * loss.grad.decoder[j];
    }
    if (!all_finite(model.encoder) || !all_finite(model.decoder)) {
      result.diverged = true;
      result.failed_step = step;
      return result;
    }
    if (step % config.log_every == 0 || step == config.steps) {
      result.trace.push_back(measure(model, batch, config, targets, step));
    }
  }
  return result;
}

void write_trace_csv(std::ostream& out, std::span<const TraceRow> trace) {
  out << "step,recon_l1,spec_loss,latent_alpha_fit\n";
  for (const auto& r : trace) {
    out << r.step << ',' << format_g9(r.recon_l1) << ',' << format_g9(r.spec_loss) << ','
        << format_g9(r.latent_alpha_fit) << '\n';
  }
}

void save_model(const std::filesystem::path& path, const LinearAE& model) {
  model.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << "SPMW 1 channels=" << model.channels << " factor=" << model.factor
      << " depth=" << model.depth << '\n';
  const auto pd = static_cast<std::uint32_t>(model.patch_dim());
  const auto d = static_cast<std::uint32_t>(model.depth);
  SpmtTensor enc{{d, pd}, {}};
  SpmtTensor dec{{pd, d}, {}};
  for (double w : model.encoder) enc.values.push_back(static_cast<float>(w));
  for (double w : model.decoder) dec.values.push_back(static_cast<float>(w));
  write_spmt(out, enc);
  write_spmt(out, dec);
  out.flush();
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

LinearAE load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::string header;
  if (!std::getline(in, header)) throw ParseError("model file: missing header");
  std::istringstream hs(header);
  std::string magic, version, c, f, d;
  hs >> magic >> version >> c >> f >> d;
  LinearAE m;
  try {
    if (magic != "SPMW" || version != "1" || c.rfind("channels=", 0) != 0 ||
        f.rfind("factor=", 0) != 0 || d.rfind("depth=", 0) != 0 || !hs.eof()) {
      throw std::invalid_argument("header");
    }
    m.channels = std::stoul(c.substr(9));
    m.factor = std::stoul(f.substr(7));
    m.depth = std::stoul(d.substr(6));
  } catch (const std::logic_error&) {
    throw ParseError("model file: malformed header '" + header + "'");
  }
  if (m.channels == 0 || m.factor == 0 || m.depth == 0) {
    throw ParseError("model file: zero-sized model");
  }
  const SpmtTensor enc = read_spmt(in);
  const SpmtTensor dec = read_spmt(in);
  if (in.peek() != std::char_traits<char>::eof()) throw ParseError("model file: trailing bytes");
  const auto pd = static_cast<std::uint32_t>(m.patch_dim());
  const auto dd = static_cast<std::uint32_t>(m.depth);
  if (enc.dims != std::vector<std::uint32_t>{dd, pd} ||
      dec.dims != std::vector<std::uint32_t>{pd, dd}) {
    throw ParseError("model file: weight shapes do not match the header");
  }
  m.encoder.assign(enc.values.begin(), enc.values.end());
  m.decoder.assign(dec.values.begin(), dec.values.end());
  return m;
}

JensenReport jensen_check(std::span<const std::vector<double>> spectra, double tolerance) {
  JensenReport report;
  if (spectra.empty()) return report;
  double reference = 0.0;
  for (std::size_t i = 0; i < spectra.size(); ++i) {
    const auto& s = spectra[i];
    if (s.empty()) throw SizeError("jensen check: empty spectrum");
    double total = 0.0;
    double log_sum = 0.0;
    for (double v : s) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw DomainError("jensen check: spectrum " + std::to_string(i) + " has a nonpositive entry");
      }
      total += v;
      log_sum += std::log(v);
    }
    if (i == 0) {
      reference = total;
    } else if (std::abs(total - reference) > 1e-9 * reference) {
      throw DomainError("jensen check: spectrum " + std::to_string(i) +
                        " does not share the total power of spectrum 0");
    }
    const double b = static_cast<double>(s.size());
    const double gap = b * std::log(total / b) - log_sum;
    report.gaps.push_back(gap);
    if (i == 0 || -gap > report.max_violation) report.max_violation = -gap;
    if (-gap > tolerance) ++report.violations;
  }
  report.vectors = spectra.size();
  return report;
}

}  // namespace specmatch
