#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>

#include "specmatch/repa.hpp"
#include "specmatch/toy_ae.hpp"

namespace specmatch::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitIo = 2;
inline constexpr int kExitUsage = 64;
inline constexpr int kExitPrecondition = 65;

/// Settings read from a `key = value` file. Blank lines and lines starting
/// with '#' are skipped. Keys:
///   objective beta delta mask_family learning_rate steps batch_size seed
///   image_size channels factor depth data_alpha bins floor target log_every
///   encoder_gain decoder_gain sigma1 sigma2 epsilon
/// mask_family is a comma list of removed-diagonal counts, e.g. `0,8,10,12`.
struct CliConfig {
  TrainConfig train;
  DoGParams dog;
  bool has_seed = false;
};

/// ParseError on unknown keys, repeated keys or values that do not parse.
CliConfig parse_config(std::istream& in);
CliConfig load_config(const std::filesystem::path& path);

/// Runs one command line (without the program name). Never throws; returns
/// the process exit code.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace specmatch::cli
