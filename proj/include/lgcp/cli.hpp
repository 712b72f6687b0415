#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "lgcp/inference.hpp"
#include "lgcp/model.hpp"
#include "lgcp/synthetic.hpp"

namespace lgcp::cli {

/// Everything a command needs, read from an INI file. Paths are resolved
/// against the config file's directory; every key has a default.
struct RunConfig {
  ModelId model_id = ModelId::M0;
  ModelConfig model;
  std::filesystem::path pixels;
  std::filesystem::path adjacency;
  double pixel_area = 225.0;
  InferenceOptions inference;
  int n_folds = 10;
  int n_samples = 5000;
  bool dump_samples = false;
  std::uint64_t seed = 1;
  int threads = 1;
  std::filesystem::path out_dir = "out";

  GridSpec grid;  ///< [simulate]
  std::vector<double> true_hyperparameters;
  std::vector<double> true_fixed_effects;

  std::string source_text;  ///< raw config bytes, hashed into output headers
};

/// Throws InputError on unreadable files, unknown keys or bad values.
RunConfig load_config(const std::filesystem::path& path);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);

/// Hash of the config text and the overrides that change results.
std::uint64_t config_hash(const RunConfig& config);

void run_fit(const RunConfig& config);
void run_cv(const RunConfig& config);
void run_simulate(const RunConfig& config);
void run_score(const RunConfig& config);

/// Full command line: `lgcp <fit|cv|simulate|score> --config PATH [--out DIR]
/// [--seed N] [--model ID] [--threads N]`. Returns the exit status (0 ok,
/// 2 usage or validation error, 3 numerical failure); errors go to `err`
/// as one `error: ...` line.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lgcp::cli
