#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "seqmod/config.hpp"
#include "seqmod/dataio.hpp"
#include "seqmod/matrix.hpp"

namespace seqmod {

/// queries x references similarity scores; higher means more similar.
struct SimilarityMatrix {
  Matrix<double> values;
  Metric metric = Metric::kCosine;

  std::size_t queries() const { return values.rows(); }
  std::size_t references() const { return values.cols(); }
  double operator()(std::size_t q, std::size_t r) const { return values(q, r); }
};

/// Pairwise similarity of every query row against every reference row.
/// Cosine similarity involving a zero vector is 0.
SimilarityMatrix similarity(const FeatureMatrix& queries,
                            const FeatureMatrix& refs,
                            Metric metric = Metric::kCosine);

/// Trailing velocity-1 sequence score ending at (q, r):
///   sum_{k < s'} sim(q-k, r-k),  s' = min(s, q+1, r+1).
/// The reference history may run before any chunk window.
double sequence_score(const SimilarityMatrix& sim, std::size_t q,
                      std::size_t r, std::size_t s);

/// Recall@1 of one chunk at sequence length s. The best reference is searched
/// inside the chunk window only; ties go to the smaller reference index.
double chunk_recall(const SimilarityMatrix& sim, const Chunk& chunk,
                    const GroundTruth& gt, std::size_t s);

struct SweepTable {
  std::vector<std::size_t> lengths;
  Matrix<double> recalls;  // chunks x lengths

  std::size_t chunks() const { return recalls.rows(); }
  /// Column of `length`; throws ArgumentError when it was not swept.
  std::size_t column(std::size_t length) const;
  /// Sub-table with the given chunk rows in the given order.
  SweepTable select(std::span<const std::size_t> rows) const;
};

/// Lengths must be strictly increasing, odd, and start at 1.
void validate_lengths(std::span<const std::size_t> lengths);

/// recalls[c][l] = chunk_recall(chunk c, lengths[l]). Parallel over chunks;
/// the result is independent of the worker count.
SweepTable sweep(const SimilarityMatrix& sim, const ChunkSet& chunks,
                 const GroundTruth& gt, std::span<const std::size_t> lengths);
SweepTable sweep(const FeatureMatrix& queries, const FeatureMatrix& refs,
                 const ChunkSet& chunks, const GroundTruth& gt,
                 std::span<const std::size_t> lengths,
                 Metric metric = Metric::kCosine);

struct ChunkLabels {
  std::vector<std::size_t> required_length;
  std::vector<bool> achieved;

  std::size_t size() const { return required_length.size(); }
  ChunkLabels select(std::span<const std::size_t> rows) const;
};

/// Smallest length whose recall reaches `target`; otherwise the length with
/// the highest recall (ties to the shorter length), flagged not achieved.
ChunkLabels label_required_lengths(const SweepTable& table, double target);

/// CSV `chunk_id,length,recall` (long format, one line per cell).
void store_sweep(const std::filesystem::path& path, const SweepTable& table);
SweepTable load_sweep(const std::filesystem::path& path);

/// CSV `chunk_id,required_length,achieved`.
void store_labels(const std::filesystem::path& path, const ChunkLabels& labels);
ChunkLabels load_labels(const std::filesystem::path& path);

}  // namespace seqmod
