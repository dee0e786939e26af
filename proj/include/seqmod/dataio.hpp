#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "seqmod/matrix.hpp"

namespace seqmod {

/// Per-image descriptors of one traverse, one row per image in capture order.
/// Construction rejects empty shapes and non-finite values.
class FeatureMatrix : public Matrix<float> {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<float> values);
  explicit FeatureMatrix(Matrix<float> m);
};

/// Throws DataError naming the first non-finite cell.
void check_finite(const Matrix<float>& m);

/// Binary "VPRF" v1 format: magic, u16 version, u64 rows, u64 cols, then
/// rows*cols little-endian f32 values.
FeatureMatrix load_features(const std::filesystem::path& path);
void store_features(const std::filesystem::path& path, const Matrix<float>& m);

struct GroundTruth {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (query, ref)
  std::size_t tolerance_frames = 3;

  /// Reference index of `query`, or npos when the query has no pair.
  std::size_t reference_of(std::size_t query) const;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

/// Strictly increasing query indices, all indices in range.
void validate(const GroundTruth& gt, std::size_t num_queries,
              std::size_t num_refs);

/// CSV with header `query_idx,ref_idx`.
GroundTruth load_ground_truth(const std::filesystem::path& path,
                              std::size_t tolerance_frames = 3);
void store_ground_truth(const std::filesystem::path& path,
                        const GroundTruth& gt);

struct Chunk {
  std::size_t window = 0;  // index k of the window [k*step, k*step+m)
  std::size_t ref_start = 0;
  std::size_t ref_end = 0;  // exclusive
  std::vector<std::size_t> queries;
};

/// Sliding windows over the reference traverse standing in for coarse
/// position priors. Windows with no ground-truth query are dropped.
struct ChunkSet {
  std::size_t m = 0;
  std::size_t step = 0;
  std::size_t windows = 0;  // before empty-window filtering
  std::vector<Chunk> chunks;

  std::size_t size() const { return chunks.size(); }
  std::size_t dropped() const { return windows - chunks.size(); }
};

/// Number of windows [k*step, k*step+m) that fit inside `num_refs` frames.
std::size_t window_count(std::size_t num_refs, std::size_t m, std::size_t step);

ChunkSet build_chunks(std::size_t num_refs, const GroundTruth& gt,
                      std::size_t m, std::size_t step);
ChunkSet build_chunks(const FeatureMatrix& refs, const GroundTruth& gt,
                      std::size_t m, std::size_t step);

/// CSV `chunk_id,window,ref_start,ref_end,num_queries`.
void store_chunks(const std::filesystem::path& path, const ChunkSet& chunks);
/// Reads chunks written by store_chunks. Query lists are rebuilt from `gt`;
/// rows that disagree with the (m, step) window grid or with the ground
/// truth raise DataError.
ChunkSet load_chunks(const std::filesystem::path& path, const GroundTruth& gt,
                     std::size_t num_refs, std::size_t m, std::size_t step);

struct SplitFractions {
  double train = 0.30;
  double valid = 0.20;
  double test = 0.50;

  friend bool operator==(const SplitFractions&, const SplitFractions&) = default;
};

/// Disjoint, contiguous blocks of chunk indices.
struct SplitAssignment {
  std::vector<std::size_t> train;
  std::vector<std::size_t> valid;
  std::vector<std::size_t> test;

  friend bool operator==(const SplitAssignment&,
                         const SplitAssignment&) = default;
};

/// Contiguous train/valid/test blocks sized by largest-remainder rounding of
/// fraction * count (ties to the later block), so 765 chunks give 229/153/383.
/// `seed % 3` rotates the order in which the blocks are laid along the
/// traverse.
SplitAssignment split_chunks(std::size_t num_chunks,
                             const SplitFractions& fractions,
                             std::uint64_t seed);

/// CSV `chunk_id,split`.
void store_splits(const std::filesystem::path& path,
                  const SplitAssignment& split);
SplitAssignment load_splits(const std::filesystem::path& path);

}  // namespace seqmod
