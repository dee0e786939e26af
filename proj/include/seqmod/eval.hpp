#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "seqmod/pipeline.hpp"
#include "seqmod/regressor.hpp"
#include "seqmod/seqmatch.hpp"

namespace seqmod {

struct ChunkRecord {
  std::size_t chunk_id = 0;
  std::size_t chosen_length = 0;
  double recall = 0.0;
  bool meets_target = false;

  friend bool operator==(const ChunkRecord&, const ChunkRecord&) = default;
};

/// Consistency (share of chunks reaching the target) and latency (median
/// chosen length) of one length-selection strategy.
struct EvalReport {
  std::string strategy_id;
  double target_recall = 0.0;
  bool oracle = false;
  std::vector<ChunkRecord> records;
  double sects_pct = 0.0;
  double median_length = 0.0;
};

/// Builds a report from per-chunk records; sects_pct and median_length are
/// always recomputed from them.
EvalReport make_report(std::string strategy_id, double target,
                       std::vector<ChunkRecord> records, bool oracle = false);

/// Median with the midpoint convention for even counts.
double median_length(std::span<const std::size_t> lengths);

class Strategy {
 public:
  static Strategy fixed(std::size_t length);
  static Strategy dynamic(const Regressor& model, std::string id = "dynamic");

  bool is_fixed() const { return model_ == nullptr; }
  const std::string& id() const { return id_; }
  std::size_t length() const { return length_; }
  const Regressor* model() const { return model_; }

 private:
  std::string id_;
  std::size_t length_ = 0;
  const Regressor* model_ = nullptr;
};

/// Sweep rows and descriptors of the chunks under evaluation.
struct EvalSet {
  std::vector<std::size_t> chunk_ids;
  SweepTable table;
  Matrix<double> descriptors;
};

EvalSet make_eval_set(const PreparedDataset& dataset,
                      std::span<const std::size_t> chunk_ids);
EvalSet test_set(const PreparedDataset& dataset);

/// Scores every chunk of `set` at the length the strategy picks for it.
/// Dynamic strategies predict from the chunk's variation descriptor.
EvalReport evaluate_strategy(const Strategy& strategy, const EvalSet& set,
                             double target);

enum class BaselineRule {
  kMeanRecall,  // mean per-chunk recall reaches the target
  kSectsPct,    // at least target*100 percent of chunks reach the target
};

/// Smallest swept length that on average reaches the target over the given
/// (training) table; otherwise the best-scoring length, ties to the shorter.
std::size_t baseline_train_fixed(const SweepTable& train_table, double target,
                                 BaselineRule rule = BaselineRule::kMeanRecall);

/// Fixed length whose test sects_pct is closest to `ours` (ties to the
/// shorter length). Uses test information; flagged oracle.
EvalReport oracle_match_consistency(const EvalSet& test, double target,
                                    const EvalReport& ours);

/// Fixed length nearest to ours.median_length (ties to the longer length).
/// Uses test information; flagged oracle.
EvalReport oracle_match_length(const EvalSet& test, double target,
                               const EvalReport& ours);

/// Allowed length nearest to `value`, ties going up.
std::size_t nearest_length(double value, std::span<const std::size_t> allowed);

struct NamedModel {
  std::string name;
  Regressor model;
};

/// reports[i][j]: model i evaluated on the test split of dataset j. The
/// final row is a model trained on the pooled calibration splits ("All").
struct CrossEvalGrid {
  std::vector<std::string> train_names;
  std::vector<std::string> test_names;
  std::vector<std::vector<EvalReport>> reports;
};

CrossEvalGrid cross_evaluate(std::span<const NamedModel> models,
                             std::span<const PreparedDataset> datasets,
                             const PipelineConfig& config);

/// One line per record: `chunk_id,chosen_length,recall,meets_target`.
void store_report_csv(const std::filesystem::path& path, const EvalReport& r);
std::string report_json(const EvalReport& r, const std::string& dataset = "");
void store_report_json(const std::filesystem::path& path, const EvalReport& r,
                       const std::string& dataset = "");

struct SummaryRow {
  std::string dataset;
  const EvalReport* report = nullptr;
};

/// `dataset,strategy,sects_pct,median_len,oracle`, sects_pct to 1 decimal.
std::string summary_csv(std::span<const SummaryRow> rows);

/// sects_pct rendered with one decimal.
std::string format_pct(double pct);

}  // namespace seqmod
