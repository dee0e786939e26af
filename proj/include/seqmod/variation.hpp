#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "seqmod/dataio.hpp"
#include "seqmod/matrix.hpp"

namespace seqmod {

/// Per-feature appearance variation of the reference frames under one
/// position prior.
struct VariationDescriptor {
  std::vector<double> v;
  std::size_t chunk_id = 0;
};

/// For rows [row_begin, row_end) of `refs` (m = row_end - row_begin):
///   d_ij = (1/m) * sum_k (R_ij - R_kj)
///   v_j  = sample standard deviation (divisor m-1) of column j of d.
/// d_ij reduces to R_ij - mean_j, which keeps the cost at O(m n).
VariationDescriptor appearance_variation(const Matrix<float>& refs,
                                         std::size_t row_begin,
                                         std::size_t row_end);
VariationDescriptor appearance_variation(const Matrix<float>& chunk_features);

/// One descriptor row per chunk, computed from the chunk's reference window.
Matrix<double> chunk_descriptors(const FeatureMatrix& refs,
                                 const ChunkSet& chunks);

/// Descriptor matrices travel in the feature-file format (rows = chunks).
void store_descriptors(const std::filesystem::path& path,
                       const Matrix<double>& descriptors);
Matrix<double> load_descriptors(const std::filesystem::path& path);

}  // namespace seqmod
