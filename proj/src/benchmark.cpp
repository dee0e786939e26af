#include "seqmod/benchmark.hpp"

namespace seqmod {

StrategyComparison compare_strategies(const PreparedDataset& dataset,
                                      const Regressor& model) {
  const double target = dataset.target;
  const EvalSet test = test_set(dataset);
  const auto train_table = dataset.table.select(dataset.split.train);

  StrategyComparison out;
  out.no_sequence = evaluate_strategy(Strategy::fixed(1), test, target);
  out.no_sequence.strategy_id = "no-sequence";
  out.train_fixed = evaluate_strategy(
      Strategy::fixed(baseline_train_fixed(train_table, target)), test, target);
  out.train_fixed.strategy_id = "train-fixed:" + out.train_fixed.strategy_id.substr(6);
  out.dynamic = evaluate_strategy(Strategy::dynamic(model), test, target);
  out.match_length = oracle_match_length(test, target, out.dynamic);
  out.match_consistency = oracle_match_consistency(test, target, out.dynamic);
  return out;
}

BenchmarkRun run_benchmark(const SynthSpec& spec, const PipelineConfig& config,
                           bool curated) {
  const auto data = generate(spec);
  BenchmarkRun run;
  run.dataset = prepare_dataset(data.refs, data.queries, data.gt, config,
                                "synthetic-" + std::to_string(spec.seed));
  run.model = fit_regressor(run.dataset, config, curated);
  run.comparison = compare_strategies(run.dataset, run.model);
  return run;
}

PipelineConfig benchmark_config(std::uint64_t seed) {
  PipelineConfig c;
  c.seed = seed;
  return c;
}

}  // namespace seqmod
