#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "seqmod/dataio.hpp"

namespace seqmod {

enum class Metric { kCosine, kNegativeEuclidean };

std::string_view to_string(Metric m);
Metric parse_metric(std::string_view s);

/// Every tunable of the pipeline. Read from a flat `key = value` file; lines
/// starting with '#' are comments. Unknown keys are rejected.
struct PipelineConfig {
  // chunking and splitting
  std::size_t m = 75;
  std::size_t step = 15;
  SplitFractions fractions{};
  std::size_t tolerance_frames = 3;
  std::uint64_t seed = 0;

  // matching
  Metric metric = Metric::kCosine;
  std::vector<std::size_t> lengths{1, 3, 5, 7, 9, 11, 13, 15, 17, 19, 21};
  double target_recall = 0.75;

  // curation; bins == 0 means "one bin per swept length"
  double alpha = 0.125;
  std::size_t bins = 0;

  // regressor
  std::size_t hidden_layers = 3;
  std::size_t hidden_width = 128;
  double beta = 1.0;
  double gamma = 0.01;
  std::size_t batch_size = 16;
  double learning_rate = 1e-3;
  std::size_t max_epochs = 2000;
  std::size_t patience = 100;

  std::size_t effective_bins() const { return bins ? bins : lengths.size(); }

  /// Checks ranges and cross-field constraints; throws ValidationError.
  void validate() const;

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

/// Parses config text; throws ValidationError listing unknown keys.
PipelineConfig parse_config(std::string_view text);
PipelineConfig load_config(const std::filesystem::path& path);

/// Canonical `key = value` rendering. parse_config(to_text(c)) == c.
std::string to_text(const PipelineConfig& c);

/// Applies a single `key`/`value` pair (same grammar as the file).
void set_config_value(PipelineConfig& c, std::string_view key,
                      std::string_view value);

std::vector<std::size_t> parse_lengths(std::string_view s);

const std::vector<std::string>& config_keys();

}  // namespace seqmod
