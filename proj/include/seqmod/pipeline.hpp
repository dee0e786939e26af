#pragma once

#include <span>
#include <string>
#include <vector>

#include "seqmod/ami.hpp"
#include "seqmod/config.hpp"
#include "seqmod/dataio.hpp"
#include "seqmod/regressor.hpp"
#include "seqmod/seqmatch.hpp"

namespace seqmod {

/// Everything derived from one query/reference traverse pair that training
/// and evaluation need. Rows of table, labels and descriptors follow
/// chunks.chunks.
struct PreparedDataset {
  std::string name;
  ChunkSet chunks;
  SweepTable table;
  ChunkLabels labels;
  Matrix<double> descriptors;
  SplitAssignment split;
  double target = 0.0;
};

/// Chunks, sweeps, labels, describes and splits one dataset.
PreparedDataset prepare_dataset(const FeatureMatrix& refs,
                                const FeatureMatrix& queries, GroundTruth gt,
                                const PipelineConfig& config,
                                std::string name = "dataset");

/// Regressor hyperparameters carried by a pipeline config.
RegressorConfig regressor_config(const PipelineConfig& config);

/// Training rows of several datasets pooled together.
struct DatasetRows {
  const PreparedDataset* dataset = nullptr;
  std::vector<std::size_t> train;
  std::vector<std::size_t> valid;
};

/// AMI curation on the pooled training rows.
CuratedFeatureSet curate_rows(std::span<const DatasetRows> rows,
                              const PipelineConfig& config);

/// Trains on the pooled rows restricted to `curation.retained`.
Regressor fit_regressor(std::span<const DatasetRows> rows,
                        const PipelineConfig& config,
                        const CuratedFeatureSet& curation,
                        std::vector<EpochRecord>* history = nullptr);

/// Curates on the pooled training rows (or keeps every feature when
/// `curated` is false) and trains a regressor on them.
Regressor fit_regressor(std::span<const DatasetRows> rows,
                        const PipelineConfig& config, bool curated = true,
                        std::vector<EpochRecord>* history = nullptr);

/// Single-dataset fit on its own train/valid split.
Regressor fit_regressor(const PreparedDataset& dataset,
                        const PipelineConfig& config, bool curated = true,
                        std::vector<EpochRecord>* history = nullptr);

}  // namespace seqmod
