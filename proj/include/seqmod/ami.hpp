#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "seqmod/matrix.hpp"

namespace seqmod {

/// Class id per sample.
using Labeling = std::vector<std::size_t>;

/// Class sizes of a labeling after remapping ids to 0..K-1.
std::vector<std::size_t> class_counts(std::span<const std::size_t> labels);

/// Natural-log entropy of a labeling with the given class sizes.
double entropy(std::span<const std::size_t> counts);

/// Contingency table of two equal-length labelings (dense row/col ids).
Matrix<std::size_t> contingency(std::span<const std::size_t> u,
                                std::span<const std::size_t> v);

double mutual_information(const Matrix<std::size_t>& table);

/// Expected mutual information of two labelings with the given class sizes
/// under random permutation (hypergeometric model).
double expected_mutual_information(std::span<const std::size_t> a,
                                   std::span<const std::size_t> b);

/// Adjusted mutual information with the arithmetic-mean normalizer:
///   (MI - E[MI]) / (mean(H(u), H(v)) - E[MI]).
/// Returns exactly 1 for labelings identical up to relabeling (including two
/// single-class labelings), 0 when exactly one side has a single class or the
/// denominator vanishes. The result is exactly symmetric in (u, v) and
/// invariant to relabeling either side.
double ami_score(std::span<const std::size_t> u, std::span<const std::size_t> v);

/// Equal-frequency binning: sorted position i goes to bin floor(i*bins/c);
/// tied values all take the lowest bin any of them reached. Ids are dense.
/// With at most `bins` distinct values each value gets its own bin.
Labeling discretize(std::span<const double> values, std::size_t bins);

/// Dense class ids for sequence lengths, ordered by length.
Labeling encode_lengths(std::span<const std::size_t> lengths);

struct CuratedFeatureSet {
  std::vector<double> scores;
  double alpha = 0.0;
  std::vector<std::size_t> retained;  // ascending; scores[j] > alpha
  friend bool operator==(const CuratedFeatureSet&, const CuratedFeatureSet&) = default;
};

/// AMI of every discretized descriptor column against the dense length
/// labels of the same rows.
std::vector<double> score_features(const Matrix<double>& descriptors,
                                   std::span<const std::size_t> required_lengths,
                                   std::size_t bins);

/// Scores every descriptor column against the required-length labels of the
/// same rows (training chunks) and keeps the columns scoring above alpha.
/// Throws CurationError when nothing survives.
CuratedFeatureSet curate(const Matrix<double>& descriptors,
                         std::span<const std::size_t> required_lengths,
                         double alpha, std::size_t bins);

/// CSV `feature_idx,score,retained`.
void store_curated(const std::filesystem::path& path,
                   const CuratedFeatureSet& set);
CuratedFeatureSet load_curated(const std::filesystem::path& path, double alpha);

}  // namespace seqmod
