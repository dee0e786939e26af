#include "seqmod/variation.hpp"

#include <cmath>

#include "seqmod/errors.hpp"
#include "seqmod/parallel.hpp"

namespace seqmod {

VariationDescriptor appearance_variation(const Matrix<float>& refs,
                                         std::size_t row_begin,
                                         std::size_t row_end) {
  if (row_end > refs.rows() || row_begin > row_end)
    throw ArgumentError("variation window outside the matrix");
  const std::size_t m = row_end - row_begin;
  if (m < 2)
    throw ArgumentError("appearance variation needs at least 2 images, got " +
                        std::to_string(m));
  const std::size_t n = refs.cols();
  const double inv_m = 1.0 / static_cast<double>(m);

  std::vector<double> mean(n, 0.0);
  for (std::size_t i = row_begin; i < row_end; ++i)
    for (std::size_t j = 0; j < n; ++j) mean[j] += refs(i, j);
  for (auto& x : mean) x *= inv_m;

  // d_ij = R_ij - mean_j; the column mean of d is zero up to rounding, and is
  // still subtracted so the result is the textbook sample deviation of d.
  std::vector<double> dmean(n, 0.0);
  for (std::size_t i = row_begin; i < row_end; ++i)
    for (std::size_t j = 0; j < n; ++j) dmean[j] += refs(i, j) - mean[j];
  for (auto& x : dmean) x *= inv_m;

  std::vector<double> ss(n, 0.0);
  for (std::size_t i = row_begin; i < row_end; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double d = (refs(i, j) - mean[j]) - dmean[j];
      ss[j] += d * d;
    }

  VariationDescriptor out;
  out.v.resize(n);
  for (std::size_t j = 0; j < n; ++j)
    out.v[j] = std::sqrt(ss[j] / static_cast<double>(m - 1));
  return out;
}

VariationDescriptor appearance_variation(const Matrix<float>& chunk_features) {
  return appearance_variation(chunk_features, 0, chunk_features.rows());
}

Matrix<double> chunk_descriptors(const FeatureMatrix& refs,
                                 const ChunkSet& chunks) {
  Matrix<double> out(chunks.size(), refs.cols());
  parallel_for(chunks.size(), [&](std::size_t c) {
    const auto& ch = chunks.chunks[c];
    auto d = appearance_variation(refs, ch.ref_start, ch.ref_end);
    std::copy(d.v.begin(), d.v.end(), out.row(c).begin());
  });
  return out;
}

void store_descriptors(const std::filesystem::path& path,
                       const Matrix<double>& descriptors) {
  Matrix<float> f(descriptors.rows(), descriptors.cols());
  for (std::size_t i = 0; i < f.data().size(); ++i)
    f.data()[i] = static_cast<float>(descriptors.data()[i]);
  store_features(path, f);
}

Matrix<double> load_descriptors(const std::filesystem::path& path) {
  const auto f = load_features(path);
  Matrix<double> out(f.rows(), f.cols());
  for (std::size_t i = 0; i < out.data().size(); ++i) {
    out.data()[i] = f.data()[i];
    if (out.data()[i] < 0)
      throw DataError(path.string() + ": negative variation value");
  }
  return out;
}

}  // namespace seqmod
