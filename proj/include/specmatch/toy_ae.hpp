#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "specmatch/dct_mask.hpp"
#include "specmatch/field.hpp"
#include "specmatch/rng.hpp"
#include "specmatch/spectral.hpp"

namespace specmatch {

/// Linear patchify autoencoder.
///
/// The encoder maps each non-overlapping factor x factor patch (flattened as
/// c * f * f + row * f + col) to a depth-vector, giving a latent of shape
/// (depth, H / f, W / f). The decoder maps each latent vector back to a patch.
struct LinearAE {
  std::size_t channels = 1;
  std::size_t factor = 1;
  std::size_t depth = 1;
  std::vector<double> encoder;  // depth x patch_dim, row-major
  std::vector<double> decoder;  // patch_dim x depth, row-major

  std::size_t patch_dim() const noexcept { return channels * factor * factor; }
  std::size_t parameter_count() const noexcept { return encoder.size() + decoder.size(); }
  void validate() const;

  /// Encoder entries ~ N(0, (encoder_gain)^2 / patch_dim), decoder entries
  /// ~ N(0, (decoder_gain)^2 / depth).
  static LinearAE random(std::size_t channels, std::size_t factor, std::size_t depth, Rng& rng,
                         double encoder_gain = 1.0, double decoder_gain = 1.0);
  /// factor 1, depth == channels, identity maps.
  static LinearAE identity(std::size_t channels);

  Field2D encode(const Field2D& x) const;
  Field2D decode(const Field2D& z) const;
};

struct AeGradients {
  std::vector<double> encoder;
  std::vector<double> decoder;
};

struct AeLoss {
  double loss = 0.0;       // the objective
  double recon_l1 = 0.0;   // its L1 reconstruction term (masked for DSM)
  double spec_term = 0.0;  // mean ESM KL (ESM objective only)
  AeGradients grad;
};

enum class Objective { Plain, Esm, Dsm };
enum class TargetMode { PerImage, DatasetAverage };

Objective parse_objective(std::string_view name);
std::string_view to_string(Objective objective);
TargetMode parse_target_mode(std::string_view name);
std::string_view to_string(TargetMode mode);

struct TrainConfig {
  Objective objective = Objective::Esm;
  double beta = kDefaultEsmWeight;
  double delta = kDefaultFlattenDelta;
  MaskFamily family = MaskFamily::standard();
  double learning_rate = 1e-2;
  std::size_t steps = 2000;
  std::size_t batch_size = 8;
  std::uint64_t seed = 0;
  std::size_t image_size = 64;
  std::size_t channels = 1;
  std::size_t factor = 8;
  std::size_t depth = 4;
  double data_alpha = 2.0;
  std::size_t bins = 0;  // latent radial bins; 0 = default_bin_count of the latent grid
  double floor = kDefaultProbabilityFloor;
  TargetMode target = TargetMode::PerImage;
  std::size_t log_every = 10;
  double encoder_gain = 1.0;
  double decoder_gain = 1.0;

  void validate() const;
};

/// Mean L1 between decode(encode(x)) and x over the batch, with gradients.
AeLoss loss_plain_ae(const LinearAE& model, std::span<const Field2D> batch);

/// ESM target distribution for every batch element on the latent's radial
/// grid (one shared target, repeated, for TargetMode::DatasetAverage).
std::vector<SpectrumDistribution> esm_targets(const LinearAE& model,
                                              std::span<const Field2D> batch,
                                              const TrainConfig& config);

/// Mean L1 reconstruction + beta * mean ESM KL of each latent against its target.
AeLoss loss_esm_ae(const LinearAE& model, std::span<const Field2D> batch, const TrainConfig& config);
AeLoss loss_esm_ae(const LinearAE& model, std::span<const Field2D> batch, const TrainConfig& config,
                   std::span<const SpectrumDistribution> targets);

/// Draws one mask per batch element (in order) and returns the mean of
/// |decode(filter(encode(x), M)) - filter(x, M)|.
AeLoss loss_dsm_ae(const LinearAE& model, std::span<const Field2D> batch, const MaskFamily& family,
                   Rng& rng);

struct TraceRow {
  std::size_t step = 0;
  double recon_l1 = 0.0;          // plain reconstruction L1 on the training batch
  double spec_loss = 0.0;         // mean latent-spectrum KL to the ESM target
  double latent_alpha_fit = 0.0;  // exponent of the batch-averaged latent PSD
};

struct TrainResult {
  std::vector<TraceRow> trace;
  LinearAE model;
  bool diverged = false;
  std::size_t failed_step = 0;
};

/// Full-batch gradient descent on `batch_size` seeded power-law fields.
/// Rows are logged at step 0, every `log_every` steps and at the last step;
/// row s describes the model after s updates.
TrainResult train(const TrainConfig& config);

/// Header `step,recon_l1,spec_loss,latent_alpha_fit`.
void write_trace_csv(std::ostream& out, std::span<const TraceRow> trace);

/// Weights file: one ASCII line
///   `SPMW 1 channels=<C> factor=<f> depth=<d>`
/// followed by two SPMT records, encoder (depth, patch_dim) then decoder
/// (patch_dim, depth). Weights are stored as float32.
void save_model(const std::filesystem::path& path, const LinearAE& model);
LinearAE load_model(const std::filesystem::path& path);

struct JensenReport {
  std::size_t vectors = 0;
  std::size_t violations = 0;
  double max_violation = 0.0;  // max over vectors of sum log S - B log(P / B)
  std::vector<double> gaps;    // B log(P / B) - sum log S per vector
};

/// Checks sum_b log S_b <= B log(P / B) for positive spectra sharing the
/// total power P. A violation is an excess above `tolerance`.
JensenReport jensen_check(std::span<const std::vector<double>> spectra, double tolerance = 1e-12);

}  // namespace specmatch
