#pragma once

#include "seqmod/config.hpp"
#include "seqmod/eval.hpp"
#include "seqmod/pipeline.hpp"
#include "seqmod/synth.hpp"

namespace seqmod {

/// The comparison set reported for one dataset: single image, the
/// train-split fixed length, the dynamic model, and the two oracle fixed
/// lengths matched to the dynamic model's median length and consistency.
struct StrategyComparison {
  EvalReport no_sequence;
  EvalReport train_fixed;
  EvalReport dynamic;
  EvalReport match_length;
  EvalReport match_consistency;

  /// sects_pct(dynamic) - sects_pct(fixed at matched median length).
  double delta_sects_pct() const {
    return dynamic.sects_pct - match_length.sects_pct;
  }
  /// median(fixed at matched consistency) - median(dynamic); positive means
  /// the dynamic strategy is shorter.
  double delta_median_length() const {
    return match_consistency.median_length - dynamic.median_length;
  }
};

StrategyComparison compare_strategies(const PreparedDataset& dataset,
                                      const Regressor& model);

struct BenchmarkRun {
  PreparedDataset dataset;
  Regressor model;
  StrategyComparison comparison;
};

/// generate -> prepare -> fit -> compare on a synthetic spec.
BenchmarkRun run_benchmark(const SynthSpec& spec, const PipelineConfig& config,
                           bool curated = true);

/// Pipeline defaults for the bundled benchmark (m = 75, step = 15, odd
/// lengths 1..21, target 0.75, 30/20/50 splits).
PipelineConfig benchmark_config(std::uint64_t seed);

}  // namespace seqmod
