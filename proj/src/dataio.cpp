#include "seqmod/dataio.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "csv.hpp"
#include "seqmod/errors.hpp"

namespace seqmod {

namespace detail {

std::size_t parse_index(const std::string& s, const std::string& what) {
  std::size_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw FormatError("invalid " + what + ": '" + s + "'");
  return v;
}

double parse_double(const std::string& s, const std::string& what) {
  // from_chars for double is available in libstdc++ 11.
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw FormatError("invalid " + what + ": '" + s + "'");
  return v;
}

}  // namespace detail

namespace {

constexpr char kMagic[4] = {'V', 'P', 'R', 'F'};
constexpr std::uint16_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 4 + 2 + 8 + 8;

template <typename U>
void put_le(std::string& buf, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i)
    buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

template <typename U>
U get_le(const unsigned char* p) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i)
    v |= static_cast<U>(p[i]) << (8 * i);
  return v;
}

}  // namespace

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t cols,
                             std::vector<float> values)
    : FeatureMatrix(Matrix<float>(rows, cols, std::move(values))) {}

FeatureMatrix::FeatureMatrix(Matrix<float> m) : Matrix<float>(std::move(m)) {
  if (rows() == 0 || cols() == 0)
    throw ArgumentError("feature matrix must have at least one row and column");
  if (data().size() != rows() * cols())
    throw ArgumentError("feature matrix value count does not match its shape");
  check_finite(*this);
}

void check_finite(const Matrix<float>& m) {
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c)
      if (!std::isfinite(m(r, c)))
        throw DataError("non-finite value at (" + std::to_string(r) + "," +
                        std::to_string(c) + ")");
}

FeatureMatrix load_features(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  if (bytes.size() < kHeaderBytes || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw FormatError(path.string() + ": missing VPRF magic");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  auto version = get_le<std::uint16_t>(p + 4);
  if (version != kVersion)
    throw FormatError(path.string() + ": unsupported version " +
                      std::to_string(version));
  auto rows = get_le<std::uint64_t>(p + 6);
  auto cols = get_le<std::uint64_t>(p + 14);
  if (rows == 0 || cols == 0)
    throw FormatError(path.string() + ": empty shape");
  if (rows > bytes.size() / 4 / cols + 1)
    throw SizeError(path.string() + ": payload shorter than declared shape");
  const std::size_t payload = bytes.size() - kHeaderBytes;
  if (payload != rows * cols * 4)
    throw SizeError(path.string() + ": payload has " + std::to_string(payload) +
                    " bytes, header declares " + std::to_string(rows * cols * 4));
  std::vector<float> values(rows * cols);
  const unsigned char* src = p + kHeaderBytes;
  for (std::size_t i = 0; i < values.size(); ++i)
    values[i] = std::bit_cast<float>(get_le<std::uint32_t>(src + 4 * i));
  Matrix<float> m(rows, cols, std::move(values));
  check_finite(m);
  return FeatureMatrix(std::move(m));
}

void store_features(const std::filesystem::path& path, const Matrix<float>& m) {
  std::string buf;
  buf.reserve(kHeaderBytes + m.data().size() * 4);
  buf.append(kMagic, 4);
  put_le<std::uint16_t>(buf, kVersion);
  put_le<std::uint64_t>(buf, m.rows());
  put_le<std::uint64_t>(buf, m.cols());
  for (float v : m.data()) put_le<std::uint32_t>(buf, std::bit_cast<std::uint32_t>(v));
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

std::size_t GroundTruth::reference_of(std::size_t query) const {
  auto it = std::lower_bound(
      pairs.begin(), pairs.end(), query,
      [](const auto& p, std::size_t q) { return p.first < q; });
  if (it == pairs.end() || it->first != query) return npos;
  return it->second;
}

void validate(const GroundTruth& gt, std::size_t num_queries,
              std::size_t num_refs) {
  for (std::size_t i = 0; i < gt.pairs.size(); ++i) {
    const auto [q, r] = gt.pairs[i];
    if (i > 0 && q <= gt.pairs[i - 1].first)
      throw DataError("ground truth query indices must be strictly increasing"
                      " (line " + std::to_string(i + 2) + ")");
    if (q >= num_queries || r >= num_refs)
      throw DataError("ground truth pair (" + std::to_string(q) + "," +
                      std::to_string(r) + ") out of range");
  }
}

GroundTruth load_ground_truth(const std::filesystem::path& path,
                              std::size_t tolerance_frames) {
  GroundTruth gt;
  gt.tolerance_frames = tolerance_frames;
  for (const auto& f : detail::read_csv(path, "query_idx,ref_idx")) {
    if (f.size() != 2)
      throw FormatError(path.string() + ": expected 2 fields per line");
    gt.pairs.emplace_back(detail::parse_index(f[0], "query_idx"),
                          detail::parse_index(f[1], "ref_idx"));
  }
  for (std::size_t i = 1; i < gt.pairs.size(); ++i)
    if (gt.pairs[i].first <= gt.pairs[i - 1].first)
      throw DataError(path.string() +
                      ": query indices must be strictly increasing");
  return gt;
}

void store_ground_truth(const std::filesystem::path& path,
                        const GroundTruth& gt) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "query_idx,ref_idx\n";
  for (const auto& [q, r] : gt.pairs) out << q << ',' << r << '\n';
}

std::size_t window_count(std::size_t num_refs, std::size_t m, std::size_t step) {
  if (step == 0) throw ArgumentError("chunk step must be >= 1");
  if (m == 0 || m > num_refs)
    throw ArgumentError("chunk size " + std::to_string(m) +
                        " must be in [1, " + std::to_string(num_refs) + "]");
  return (num_refs - m) / step + 1;
}

ChunkSet build_chunks(std::size_t num_refs, const GroundTruth& gt,
                      std::size_t m, std::size_t step) {
  ChunkSet set;
  set.m = m;
  set.step = step;
  set.windows = window_count(num_refs, m, step);
  for (std::size_t k = 0; k < set.windows; ++k) {
    Chunk c;
    c.window = k;
    c.ref_start = k * step;
    c.ref_end = c.ref_start + m;
    for (const auto& [q, r] : gt.pairs)
      if (r >= c.ref_start && r < c.ref_end) c.queries.push_back(q);
    if (!c.queries.empty()) set.chunks.push_back(std::move(c));
  }
  if (set.dropped() > 0)
    spdlog::info("dropped {} of {} chunk windows with no ground-truth query",
                 set.dropped(), set.windows);
  return set;
}

ChunkSet build_chunks(const FeatureMatrix& refs, const GroundTruth& gt,
                      std::size_t m, std::size_t step) {
  return build_chunks(refs.rows(), gt, m, step);
}

void store_chunks(const std::filesystem::path& path, const ChunkSet& chunks) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "chunk_id,window,ref_start,ref_end,num_queries\n";
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    const auto& c = chunks.chunks[i];
    out << i << ',' << c.window << ',' << c.ref_start << ',' << c.ref_end << ','
        << c.queries.size() << '\n';
  }
}

ChunkSet load_chunks(const std::filesystem::path& path, const GroundTruth& gt,
                     std::size_t num_refs, std::size_t m, std::size_t step) {
  const ChunkSet expected = build_chunks(num_refs, gt, m, step);
  const auto rows =
      detail::read_csv(path, "chunk_id,window,ref_start,ref_end,num_queries");
  if (rows.size() != expected.size())
    throw DataError(path.string() + ": " + std::to_string(rows.size()) +
                    " chunks, ground truth and config give " +
                    std::to_string(expected.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& f = rows[i];
    if (f.size() != 5) throw FormatError(path.string() + ": expected 5 fields");
    const auto& c = expected.chunks[i];
    using detail::parse_index;
    if (parse_index(f[0], "chunk_id") != i ||
        parse_index(f[1], "window") != c.window ||
        parse_index(f[2], "ref_start") != c.ref_start ||
        parse_index(f[3], "ref_end") != c.ref_end ||
        parse_index(f[4], "num_queries") != c.queries.size())
      throw DataError(path.string() + ": chunk " + std::to_string(i) +
                      " does not match the window grid and ground truth");
  }
  return expected;
}

SplitAssignment split_chunks(std::size_t num_chunks,
                             const SplitFractions& fractions,
                             std::uint64_t seed) {
  if (num_chunks < 10)
    throw ArgumentError("need at least 10 chunks to split, got " +
                        std::to_string(num_chunks));
  const double total = fractions.train + fractions.valid + fractions.test;
  if (fractions.train <= 0 || fractions.valid <= 0 || fractions.test <= 0 ||
      std::abs(total - 1.0) > 1e-9)
    throw ArgumentError("split fractions must be positive and sum to 1");
  // Largest-remainder rounding: floor every block, then hand the leftover
  // chunks to the largest fractional parts, ties to the later block. Keeps
  // each block within one chunk of its share.
  const std::array<double, 3> share{fractions.train * static_cast<double>(num_chunks),
                                    fractions.valid * static_cast<double>(num_chunks),
                                    fractions.test * static_cast<double>(num_chunks)};
  std::array<std::size_t, 3> sizes{};
  std::array<double, 3> rem{};
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    // the epsilon keeps products such as 0.3 * 10 = 2.9999... from flooring low
    sizes[i] = static_cast<std::size_t>(std::floor(share[i] + 1e-9));
    rem[i] = share[i] - static_cast<double>(sizes[i]);
    assigned += sizes[i];
  }
  for (std::size_t left = num_chunks - assigned; left > 0; --left) {
    int best = 2;
    for (int i = 1; i >= 0; --i)
      if (rem[i] > rem[best] + 1e-9) best = i;
    ++sizes[best];
    rem[best] = -1.0;
  }

  enum Role { kTrain, kValid, kTest };
  std::array<Role, 3> order{kTrain, kValid, kTest};
  std::rotate(order.begin(), order.begin() + static_cast<long>(seed % 3),
              order.end());

  SplitAssignment out;
  std::size_t next = 0;
  for (Role role : order) {
    auto& dst = role == kTrain ? out.train : role == kValid ? out.valid : out.test;
    for (std::size_t i = 0; i < sizes[role]; ++i) dst.push_back(next++);
  }
  return out;
}

void store_splits(const std::filesystem::path& path,
                  const SplitAssignment& split) {
  std::vector<const char*> role;
  const std::size_t n = split.train.size() + split.valid.size() + split.test.size();
  role.resize(n, "");
  for (auto i : split.train) role[i] = "train";
  for (auto i : split.valid) role[i] = "valid";
  for (auto i : split.test) role[i] = "test";
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "chunk_id,split\n";
  for (std::size_t i = 0; i < n; ++i) out << i << ',' << role[i] << '\n';
}

SplitAssignment load_splits(const std::filesystem::path& path) {
  SplitAssignment s;
  for (const auto& f : detail::read_csv(path, "chunk_id,split")) {
    if (f.size() != 2) throw FormatError(path.string() + ": expected 2 fields");
    auto id = detail::parse_index(f[0], "chunk_id");
    if (f[1] == "train") s.train.push_back(id);
    else if (f[1] == "valid") s.valid.push_back(id);
    else if (f[1] == "test") s.test.push_back(id);
    else throw FormatError(path.string() + ": unknown split '" + f[1] + "'");
  }
  return s;
}

}  // namespace seqmod
