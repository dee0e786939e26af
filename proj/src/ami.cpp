#include "seqmod/ami.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include "csv.hpp"
#include "seqmod/errors.hpp"
#include "seqmod/parallel.hpp"

namespace seqmod {

namespace {

// Sums in ascending order so the total does not depend on how the caller
// enumerated the terms; this is what makes the score exactly symmetric and
// relabeling invariant.
double ordered_sum(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end());
  double acc = 0.0;
  for (double t : terms) acc += t;
  return acc;
}

Labeling densify(std::span<const std::size_t> labels) {
  std::map<std::size_t, std::size_t> ids;
  for (auto l : labels) ids.emplace(l, 0);
  std::size_t next = 0;
  for (auto& [_, id] : ids) id = next++;
  Labeling out;
  out.reserve(labels.size());
  for (auto l : labels) out.push_back(ids[l]);
  return out;
}

}  // namespace

std::vector<std::size_t> class_counts(std::span<const std::size_t> labels) {
  const auto dense = densify(labels);
  std::size_t k = 0;
  for (auto l : dense) k = std::max(k, l + 1);
  std::vector<std::size_t> counts(k, 0);
  for (auto l : dense) ++counts[l];
  return counts;
}

double entropy(std::span<const std::size_t> counts) {
  const double n = static_cast<double>(
      std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
  std::vector<double> terms;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    terms.push_back(-p * std::log(p));
  }
  return ordered_sum(terms);
}

Matrix<std::size_t> contingency(std::span<const std::size_t> u,
                                std::span<const std::size_t> v) {
  if (u.size() != v.size())
    throw ArgumentError("labelings differ in length: " +
                        std::to_string(u.size()) + " vs " +
                        std::to_string(v.size()));
  const auto du = densify(u);
  const auto dv = densify(v);
  const std::size_t ku = du.empty() ? 0 : *std::max_element(du.begin(), du.end()) + 1;
  const std::size_t kv = dv.empty() ? 0 : *std::max_element(dv.begin(), dv.end()) + 1;
  Matrix<std::size_t> t(ku, kv, 0);
  for (std::size_t i = 0; i < du.size(); ++i) ++t(du[i], dv[i]);
  return t;
}

double mutual_information(const Matrix<std::size_t>& table) {
  std::vector<std::size_t> a(table.rows(), 0), b(table.cols(), 0);
  std::size_t n = 0;
  for (std::size_t i = 0; i < table.rows(); ++i)
    for (std::size_t j = 0; j < table.cols(); ++j) {
      a[i] += table(i, j);
      b[j] += table(i, j);
      n += table(i, j);
    }
  const double N = static_cast<double>(n);
  std::vector<double> terms;
  for (std::size_t i = 0; i < table.rows(); ++i)
    for (std::size_t j = 0; j < table.cols(); ++j) {
      const auto nij = table(i, j);
      if (nij == 0) continue;
      const double x = static_cast<double>(nij);
      // a_i * b_j is symmetric, so the term is too.
      const double ab = static_cast<double>(a[i]) * static_cast<double>(b[j]);
      terms.push_back(x / N * std::log(N * x / ab));
    }
  return ordered_sum(terms);
}

double expected_mutual_information(std::span<const std::size_t> a,
                                   std::span<const std::size_t> b) {
  const std::size_t n = std::accumulate(a.begin(), a.end(), std::size_t{0});
  if (std::accumulate(b.begin(), b.end(), std::size_t{0}) != n)
    throw ArgumentError("margins must sum to the same total");
  const double N = static_cast<double>(n);
  const double lg_n1 = std::lgamma(N + 1.0);
  std::vector<double> terms;
  for (auto ai : a)
    for (auto bj : b) {
      // Order the pair so (a, b) and (b, a) evaluate identically.
      const std::size_t lo = std::min(ai, bj);
      const std::size_t hi = std::max(ai, bj);
      if (lo == 0) continue;
      const double x = static_cast<double>(lo);
      const double y = static_cast<double>(hi);
      const double fixed = std::lgamma(x + 1.0) + std::lgamma(y + 1.0) +
                           std::lgamma(N - x + 1.0) + std::lgamma(N - y + 1.0) -
                           lg_n1;
      const std::size_t start = lo + hi > n ? lo + hi - n : 1;
      for (std::size_t nij = std::max<std::size_t>(start, 1); nij <= lo; ++nij) {
        const double k = static_cast<double>(nij);
        const double log_p = fixed - std::lgamma(k + 1.0) -
                             std::lgamma(x - k + 1.0) - std::lgamma(y - k + 1.0) -
                             std::lgamma(N - x - y + k + 1.0);
        terms.push_back(k / N * std::log(N * k / (x * y)) * std::exp(log_p));
      }
    }
  return ordered_sum(terms);
}

double ami_score(std::span<const std::size_t> u, std::span<const std::size_t> v) {
  if (u.size() != v.size())
    throw ArgumentError("labelings differ in length: " +
                        std::to_string(u.size()) + " vs " +
                        std::to_string(v.size()));
  if (u.size() < 2) throw ArgumentError("labelings need at least 2 samples");

  const auto table = contingency(u, v);
  const std::size_t ku = table.rows(), kv = table.cols();
  if (ku == 1 && kv == 1) return 1.0;
  if (ku == 1 || kv == 1) return 0.0;

  // Identical up to relabeling iff the table is a permutation pattern.
  if (ku == kv) {
    bool perm = true;
    for (std::size_t i = 0; i < ku && perm; ++i) {
      std::size_t nonzero = 0;
      for (std::size_t j = 0; j < kv; ++j) nonzero += table(i, j) != 0;
      perm = nonzero == 1;
    }
    if (perm) return 1.0;
  }

  std::vector<std::size_t> a(ku, 0), b(kv, 0);
  for (std::size_t i = 0; i < ku; ++i)
    for (std::size_t j = 0; j < kv; ++j) {
      a[i] += table(i, j);
      b[j] += table(i, j);
    }
  const double mi = mutual_information(table);
  const double emi = expected_mutual_information(a, b);
  const double normalizer = 0.5 * (entropy(a) + entropy(b));
  const double denom = normalizer - emi;
  if (std::abs(denom) < 1e-12) return 0.0;
  return std::min((mi - emi) / denom, 1.0);
}

Labeling discretize(std::span<const double> values, std::size_t bins) {
  const std::size_t c = values.size();
  if (bins < 2) throw ArgumentError("discretize needs at least 2 bins");
  if (c < bins)
    throw ArgumentError("discretize needs at least as many values as bins");
  std::vector<std::size_t> order(c);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return values[x] < values[y];
  });
  Labeling raw(c);
  std::size_t distinct = c ? 1 : 0;
  for (std::size_t pos = 1; pos < c; ++pos)
    distinct += values[order[pos]] != values[order[pos - 1]];
  if (distinct <= bins) {
    // Few distinct values: one bin each, so a column that is itself a
    // labeling is kept lossless.
    std::size_t id = 0;
    for (std::size_t pos = 0; pos < c; ++pos) {
      if (pos > 0 && values[order[pos]] != values[order[pos - 1]]) ++id;
      raw[order[pos]] = id;
    }
    return raw;
  }
  std::size_t run_bin = 0;
  for (std::size_t pos = 0; pos < c; ++pos) {
    const std::size_t bin = pos * bins / c;
    if (pos == 0 || values[order[pos]] != values[order[pos - 1]]) run_bin = bin;
    raw[order[pos]] = run_bin;
  }
  return densify(raw);
}

Labeling encode_lengths(std::span<const std::size_t> lengths) {
  return densify(lengths);
}

std::vector<double> score_features(const Matrix<double>& descriptors,
                                   std::span<const std::size_t> required_lengths,
                                   std::size_t bins) {
  if (descriptors.rows() != required_lengths.size())
    throw ArgumentError("descriptor rows and labels differ in count");
  if (descriptors.rows() < bins)
    throw ArgumentError("curation needs at least " + std::to_string(bins) +
                        " training chunks, got " +
                        std::to_string(descriptors.rows()));
  const auto target = encode_lengths(required_lengths);
  std::vector<double> scores(descriptors.cols());
  parallel_for(descriptors.cols(), [&](std::size_t j) {
    std::vector<double> column(descriptors.rows());
    for (std::size_t i = 0; i < column.size(); ++i) column[i] = descriptors(i, j);
    scores[j] = ami_score(discretize(column, bins), target);
  });
  return scores;
}

CuratedFeatureSet curate(const Matrix<double>& descriptors,
                         std::span<const std::size_t> required_lengths,
                         double alpha, std::size_t bins) {
  if (!(alpha > 0.0)) throw ArgumentError("alpha must be > 0");
  CuratedFeatureSet out;
  out.alpha = alpha;
  out.scores = score_features(descriptors, required_lengths, bins);
  for (std::size_t j = 0; j < out.scores.size(); ++j)
    if (out.scores[j] > alpha) out.retained.push_back(j);
  if (out.retained.empty())
    throw CurationError("no feature scores above alpha = " +
                        detail::format_double(alpha) +
                        "; lower the threshold");
  return out;
}

void store_curated(const std::filesystem::path& path,
                   const CuratedFeatureSet& set) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "feature_idx,score,retained\n";
  std::size_t k = 0;
  for (std::size_t j = 0; j < set.scores.size(); ++j) {
    const bool kept = k < set.retained.size() && set.retained[k] == j;
    if (kept) ++k;
    out << j << ',' << detail::format_double(set.scores[j]) << ','
        << (kept ? 1 : 0) << '\n';
  }
}

CuratedFeatureSet load_curated(const std::filesystem::path& path, double alpha) {
  CuratedFeatureSet set;
  set.alpha = alpha;
  std::size_t expect = 0;
  for (const auto& f : detail::read_csv(path, "feature_idx,score,retained")) {
    if (f.size() != 3) throw FormatError(path.string() + ": expected 3 fields");
    if (detail::parse_index(f[0], "feature_idx") != expect)
      throw DataError(path.string() + ": feature ids must be 0..n-1 in order");
    set.scores.push_back(detail::parse_double(f[1], "score"));
    if (detail::parse_index(f[2], "retained") == 1) set.retained.push_back(expect);
    ++expect;
  }
  if (set.retained.empty())
    throw CurationError(path.string() + ": no retained features");
  return set;
}

}  // namespace seqmod
