#include "seqmod/pipeline.hpp"

#include <spdlog/spdlog.h>

#include "seqmod/errors.hpp"
#include "seqmod/variation.hpp"

namespace seqmod {

PreparedDataset prepare_dataset(const FeatureMatrix& refs,
                                const FeatureMatrix& queries, GroundTruth gt,
                                const PipelineConfig& config, std::string name) {
  config.validate();
  gt.tolerance_frames = config.tolerance_frames;
  validate(gt, queries.rows(), refs.rows());

  PreparedDataset ds;
  ds.name = std::move(name);
  ds.target = config.target_recall;
  ds.chunks = build_chunks(refs, gt, config.m, config.step);
  ds.table = sweep(queries, refs, ds.chunks, gt, config.lengths, config.metric);
  ds.labels = label_required_lengths(ds.table, config.target_recall);
  ds.descriptors = chunk_descriptors(refs, ds.chunks);
  ds.split = split_chunks(ds.chunks.size(), config.fractions, config.seed);
  return ds;
}

RegressorConfig regressor_config(const PipelineConfig& config) {
  RegressorConfig rc;
  rc.hidden_layers = config.hidden_layers;
  rc.hidden_width = config.hidden_width;
  rc.beta = config.beta;
  rc.gamma = config.gamma;
  rc.batch_size = config.batch_size;
  rc.learning_rate = config.learning_rate;
  rc.max_epochs = config.max_epochs;
  rc.patience = config.patience;
  rc.seed = config.seed;
  return rc;
}

namespace {

struct Pooled {
  Matrix<double> descriptors;
  std::vector<std::size_t> lengths;
};

Pooled pool(std::span<const DatasetRows> rows, bool train) {
  std::size_t n = 0, cols = 0;
  for (const auto& r : rows) {
    n += (train ? r.train : r.valid).size();
    if (cols == 0) cols = r.dataset->descriptors.cols();
    if (r.dataset->descriptors.cols() != cols)
      throw ArgumentError("datasets differ in descriptor dimensionality");
  }
  Pooled out{Matrix<double>(n, cols), {}};
  std::size_t i = 0;
  for (const auto& r : rows)
    for (auto c : train ? r.train : r.valid) {
      const auto src = r.dataset->descriptors.row(c);
      std::copy(src.begin(), src.end(), out.descriptors.row(i++).begin());
      out.lengths.push_back(r.dataset->labels.required_length[c]);
    }
  return out;
}

TrainingSet select_columns(const Pooled& p, std::span<const std::size_t> cols) {
  TrainingSet s{Matrix<double>(p.descriptors.rows(), cols.size()), {}};
  for (std::size_t i = 0; i < p.descriptors.rows(); ++i) {
    for (std::size_t k = 0; k < cols.size(); ++k)
      s.inputs(i, k) = p.descriptors(i, cols[k]);
    s.targets.push_back(static_cast<double>(p.lengths[i]));
  }
  return s;
}

void check_compatible(std::span<const DatasetRows> rows) {
  if (rows.empty()) throw ArgumentError("no datasets to fit on");
  const auto& lengths = rows.front().dataset->table.lengths;
  for (const auto& r : rows)
    if (r.dataset->table.lengths != lengths)
      throw ArgumentError("datasets differ in swept lengths");
}

}  // namespace

CuratedFeatureSet curate_rows(std::span<const DatasetRows> rows,
                              const PipelineConfig& config) {
  check_compatible(rows);
  const Pooled train_rows = pool(rows, true);
  return curate(train_rows.descriptors, train_rows.lengths, config.alpha,
                config.effective_bins());
}

Regressor fit_regressor(std::span<const DatasetRows> rows,
                        const PipelineConfig& config,
                        const CuratedFeatureSet& curation,
                        std::vector<EpochRecord>* history) {
  check_compatible(rows);
  const Pooled train_rows = pool(rows, true);
  const Pooled valid_rows = pool(rows, false);
  for (auto j : curation.retained)
    if (j >= train_rows.descriptors.cols())
      throw ArgumentError("curated feature index " + std::to_string(j) +
                          " exceeds descriptor dimension");
  if (curation.retained.empty()) throw CurationError("no features retained");

  TrainOptions opts;
  opts.config = regressor_config(config);
  opts.feature_indices = curation.retained;
  opts.descriptor_dim = train_rows.descriptors.cols();
  opts.allowed_lengths = rows.front().dataset->table.lengths;
  opts.curation = curation;
  return train(select_columns(train_rows, curation.retained),
               select_columns(valid_rows, curation.retained), opts, history);
}

Regressor fit_regressor(std::span<const DatasetRows> rows,
                        const PipelineConfig& config, bool curated,
                        std::vector<EpochRecord>* history) {
  CuratedFeatureSet curation;
  if (curated) {
    curation = curate_rows(rows, config);
  } else {
    check_compatible(rows);
    const Pooled train_rows = pool(rows, true);
    curation.alpha = config.alpha;
    curation.scores = score_features(train_rows.descriptors, train_rows.lengths,
                                     config.effective_bins());
    for (std::size_t j = 0; j < curation.scores.size(); ++j)
      curation.retained.push_back(j);
  }
  spdlog::debug("curation keeps {} of {} features", curation.retained.size(),
                curation.scores.size());
  return fit_regressor(rows, config, curation, history);
}

Regressor fit_regressor(const PreparedDataset& dataset,
                        const PipelineConfig& config, bool curated,
                        std::vector<EpochRecord>* history) {
  const DatasetRows rows[] = {{&dataset, dataset.split.train, dataset.split.valid}};
  return fit_regressor(rows, config, curated, history);
}

}  // namespace seqmod
