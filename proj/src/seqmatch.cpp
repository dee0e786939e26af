#include "seqmod/seqmatch.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "csv.hpp"
#include "seqmod/errors.hpp"
#include "seqmod/parallel.hpp"

namespace seqmod {

SimilarityMatrix similarity(const FeatureMatrix& queries,
                            const FeatureMatrix& refs, Metric metric) {
  if (queries.cols() != refs.cols())
    throw ArgumentError("feature dimensionality mismatch: queries have " +
                        std::to_string(queries.cols()) + ", references " +
                        std::to_string(refs.cols()));
  const std::size_t n = refs.cols();
  std::vector<double> ref_norm(refs.rows());
  for (std::size_t r = 0; r < refs.rows(); ++r) {
    double acc = 0;
    for (float v : refs.row(r)) acc += double(v) * double(v);
    ref_norm[r] = std::sqrt(acc);
  }

  SimilarityMatrix sim{Matrix<double>(queries.rows(), refs.rows()), metric};
  parallel_for(queries.rows(), [&](std::size_t q) {
    const auto qrow = queries.row(q);
    double qn = 0;
    for (float v : qrow) qn += double(v) * double(v);
    qn = std::sqrt(qn);
    for (std::size_t r = 0; r < refs.rows(); ++r) {
      const auto rrow = refs.row(r);
      if (metric == Metric::kCosine) {
        double dot = 0;
        for (std::size_t j = 0; j < n; ++j) dot += double(qrow[j]) * double(rrow[j]);
        const double denom = qn * ref_norm[r];
        sim.values(q, r) = denom > 0 ? std::clamp(dot / denom, -1.0, 1.0) : 0.0;
      } else {
        double d2 = 0;
        for (std::size_t j = 0; j < n; ++j) {
          const double d = double(qrow[j]) - double(rrow[j]);
          d2 += d * d;
        }
        sim.values(q, r) = -std::sqrt(d2);
      }
    }
  });
  return sim;
}

double sequence_score(const SimilarityMatrix& sim, std::size_t q,
                      std::size_t r, std::size_t s) {
  if (s == 0 || s % 2 == 0)
    throw ArgumentError("sequence length must be odd and >= 1");
  if (q >= sim.queries() || r >= sim.references())
    throw ArgumentError("sequence_score index out of range");
  const std::size_t len = std::min({s, q + 1, r + 1});
  double acc = 0;
  for (std::size_t k = 0; k < len; ++k) acc += sim(q - k, r - k);
  return acc;
}

namespace {

void check_chunk(const SimilarityMatrix& sim, const Chunk& chunk) {
  if (chunk.queries.empty())
    throw ArgumentError("chunk has no queries");
  if (chunk.ref_end > sim.references() || chunk.ref_start >= chunk.ref_end)
    throw ArgumentError("chunk window outside the reference traverse");
}

bool is_correct(std::size_t best, std::size_t truth, std::size_t tol) {
  const std::size_t diff = best > truth ? best - truth : truth - best;
  return diff <= tol;
}

// Recall of one chunk for every length at once. Each (q, r) score is built
// as a running diagonal sum in the same order sequence_score uses, so the
// result for a length is bit-identical to calling chunk_recall with it.
std::vector<double> chunk_recalls(const SimilarityMatrix& sim,
                                  const Chunk& chunk, const GroundTruth& gt,
                                  std::span<const std::size_t> lengths) {
  check_chunk(sim, chunk);
  const std::size_t max_len = lengths.back();
  const std::size_t nl = lengths.size();
  std::vector<std::size_t> correct(nl, 0);
  std::vector<double> best_score(nl);
  std::vector<std::size_t> best_ref(nl);
  std::vector<double> prefix(max_len + 1);
  for (std::size_t q : chunk.queries) {
    if (q >= sim.queries()) throw ArgumentError("chunk query out of range");
    const std::size_t truth = gt.reference_of(q);
    if (truth == GroundTruth::npos)
      throw ArgumentError("chunk query " + std::to_string(q) +
                          " has no ground truth");
    for (std::size_t r = chunk.ref_start; r < chunk.ref_end; ++r) {
      const std::size_t limit = std::min({max_len, q + 1, r + 1});
      prefix[0] = 0;
      double acc = 0;
      for (std::size_t k = 0; k < limit; ++k) {
        acc += sim(q - k, r - k);
        prefix[k + 1] = acc;
      }
      for (std::size_t l = 0; l < nl; ++l) {
        const double score = prefix[std::min(lengths[l], limit)];
        if (r == chunk.ref_start || score > best_score[l]) {
          best_score[l] = score;
          best_ref[l] = r;
        }
      }
    }
    for (std::size_t l = 0; l < nl; ++l)
      if (is_correct(best_ref[l], truth, gt.tolerance_frames)) ++correct[l];
  }
  std::vector<double> out(nl);
  for (std::size_t l = 0; l < nl; ++l)
    out[l] = static_cast<double>(correct[l]) /
             static_cast<double>(chunk.queries.size());
  return out;
}

}  // namespace

double chunk_recall(const SimilarityMatrix& sim, const Chunk& chunk,
                    const GroundTruth& gt, std::size_t s) {
  if (s == 0 || s % 2 == 0)
    throw ArgumentError("sequence length must be odd and >= 1");
  const std::size_t len[] = {s};
  return chunk_recalls(sim, chunk, gt, len).front();
}

void validate_lengths(std::span<const std::size_t> lengths) {
  if (lengths.empty() || lengths.front() != 1)
    throw ArgumentError("swept lengths must start at 1");
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    if (lengths[i] % 2 == 0)
      throw ArgumentError("swept lengths must be odd, got " +
                          std::to_string(lengths[i]));
    if (i > 0 && lengths[i] <= lengths[i - 1])
      throw ArgumentError("swept lengths must be strictly increasing");
  }
}

std::size_t SweepTable::column(std::size_t length) const {
  auto it = std::find(lengths.begin(), lengths.end(), length);
  if (it == lengths.end())
    throw ArgumentError("length " + std::to_string(length) +
                        " is not part of the sweep");
  return static_cast<std::size_t>(it - lengths.begin());
}

SweepTable SweepTable::select(std::span<const std::size_t> rows) const {
  SweepTable out{lengths, Matrix<double>(rows.size(), lengths.size())};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= chunks()) throw ArgumentError("sweep row out of range");
    std::copy_n(recalls.row(rows[i]).begin(), lengths.size(),
                out.recalls.row(i).begin());
  }
  return out;
}

SweepTable sweep(const SimilarityMatrix& sim, const ChunkSet& chunks,
                 const GroundTruth& gt, std::span<const std::size_t> lengths) {
  validate_lengths(lengths);
  SweepTable table{{lengths.begin(), lengths.end()},
                   Matrix<double>(chunks.size(), lengths.size())};
  parallel_for(chunks.size(), [&](std::size_t c) {
    const auto row = chunk_recalls(sim, chunks.chunks[c], gt, lengths);
    std::copy(row.begin(), row.end(), table.recalls.row(c).begin());
  });
  return table;
}

SweepTable sweep(const FeatureMatrix& queries, const FeatureMatrix& refs,
                 const ChunkSet& chunks, const GroundTruth& gt,
                 std::span<const std::size_t> lengths, Metric metric) {
  return sweep(similarity(queries, refs, metric), chunks, gt, lengths);
}

ChunkLabels ChunkLabels::select(std::span<const std::size_t> rows) const {
  ChunkLabels out;
  for (auto r : rows) {
    if (r >= size()) throw ArgumentError("label row out of range");
    out.required_length.push_back(required_length[r]);
    out.achieved.push_back(achieved[r]);
  }
  return out;
}

ChunkLabels label_required_lengths(const SweepTable& table, double target) {
  if (!(target > 0.0 && target <= 1.0))
    throw ArgumentError("target recall must lie in (0, 1]");
  if (table.chunks() == 0 || table.lengths.empty())
    throw ArgumentError("sweep table is empty");
  ChunkLabels labels;
  for (std::size_t c = 0; c < table.chunks(); ++c) {
    const auto row = table.recalls.row(c);
    std::size_t pick = row.size();
    for (std::size_t l = 0; l < row.size(); ++l)
      if (row[l] >= target) {
        pick = l;
        break;
      }
    const bool achieved = pick < row.size();
    if (!achieved) {
      pick = 0;
      for (std::size_t l = 1; l < row.size(); ++l)
        if (row[l] > row[pick]) pick = l;
    }
    labels.required_length.push_back(table.lengths[pick]);
    labels.achieved.push_back(achieved);
  }
  return labels;
}

void store_sweep(const std::filesystem::path& path, const SweepTable& table) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "chunk_id,length,recall\n";
  for (std::size_t c = 0; c < table.chunks(); ++c)
    for (std::size_t l = 0; l < table.lengths.size(); ++l)
      out << c << ',' << table.lengths[l] << ','
          << detail::format_double(table.recalls(c, l)) << '\n';
}

SweepTable load_sweep(const std::filesystem::path& path) {
  std::map<std::size_t, std::map<std::size_t, double>> cells;
  for (const auto& f : detail::read_csv(path, "chunk_id,length,recall")) {
    if (f.size() != 3) throw FormatError(path.string() + ": expected 3 fields");
    const double recall = detail::parse_double(f[2], "recall");
    if (!(recall >= 0.0 && recall <= 1.0))
      throw DataError(path.string() + ": recall outside [0,1]");
    cells[detail::parse_index(f[0], "chunk_id")]
         [detail::parse_index(f[1], "length")] = recall;
  }
  if (cells.empty()) throw DataError(path.string() + ": no rows");
  SweepTable table;
  for (const auto& [len, _] : cells.begin()->second) table.lengths.push_back(len);
  validate_lengths(table.lengths);
  table.recalls = Matrix<double>(cells.size(), table.lengths.size());
  std::size_t expect = 0;
  for (const auto& [c, row] : cells) {
    if (c != expect++ || row.size() != table.lengths.size())
      throw DataError(path.string() + ": sweep table is not rectangular");
    std::size_t l = 0;
    for (const auto& [len, v] : row) {
      if (len != table.lengths[l])
        throw DataError(path.string() + ": inconsistent lengths across chunks");
      table.recalls(c, l++) = v;
    }
  }
  return table;
}

void store_labels(const std::filesystem::path& path, const ChunkLabels& labels) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "chunk_id,required_length,achieved\n";
  for (std::size_t c = 0; c < labels.size(); ++c)
    out << c << ',' << labels.required_length[c] << ','
        << (labels.achieved[c] ? 1 : 0) << '\n';
}

ChunkLabels load_labels(const std::filesystem::path& path) {
  ChunkLabels labels;
  std::size_t expect = 0;
  for (const auto& f :
       detail::read_csv(path, "chunk_id,required_length,achieved")) {
    if (f.size() != 3) throw FormatError(path.string() + ": expected 3 fields");
    if (detail::parse_index(f[0], "chunk_id") != expect++)
      throw DataError(path.string() + ": chunk ids must be 0..n-1 in order");
    labels.required_length.push_back(detail::parse_index(f[1], "required_length"));
    const auto a = detail::parse_index(f[2], "achieved");
    if (a > 1) throw FormatError(path.string() + ": achieved must be 0 or 1");
    labels.achieved.push_back(a == 1);
  }
  return labels;
}

}  // namespace seqmod
