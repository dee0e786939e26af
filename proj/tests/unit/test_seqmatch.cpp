#include <doctest.h>

#include <cmath>
#include <cstdlib>

#include "seqmod/errors.hpp"
#include "seqmod/seqmatch.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace seqmod;

namespace {

SimilarityMatrix random_sim(std::size_t q, std::size_t r, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return {testing::random_matrix(q, r, rng), Metric::kCosine};
}

struct Scenario {
  FeatureMatrix queries, refs;
  GroundTruth gt;
  ChunkSet chunks;
};

// Noisy copies of a smooth walk, query i true at reference i + offset.
Scenario scenario(std::uint64_t seed, std::size_t n = 160, std::size_t dim = 8) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> nd(0.0f, 1.0f);
  std::vector<float> ref(n * dim), qry(n * dim);
  std::vector<float> w(dim, 0.0f);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < dim; ++j) {
      w[j] = 0.8f * w[j] + nd(rng);
      ref[i * dim + j] = w[j];
      qry[i * dim + j] = w[j] + 1.2f * nd(rng);
    }
  Scenario s{FeatureMatrix(n, dim, qry), FeatureMatrix(n, dim, ref), {}, {}};
  for (std::size_t i = 0; i < n; ++i) s.gt.pairs.emplace_back(i, i);
  s.chunks = build_chunks(s.refs, s.gt, 40, 10);
  return s;
}

}  // namespace

TEST_SUITE("seqmatch") {

TEST_CASE("similarity examples") {
  const FeatureMatrix q(1, 2, {1, 0});
  const FeatureMatrix r(2, 2, {1, 0, 0, 1});
  const auto s = similarity(q, r, Metric::kCosine);
  CHECK(s(0, 0) == 1.0);
  CHECK(s(0, 1) == 0.0);
  CHECK(similarity(FeatureMatrix(1, 2, {2, 0}), FeatureMatrix(1, 2, {1, 0}))(0, 0) == 1.0);
  const auto e = similarity(FeatureMatrix(1, 2, {1, 2}), FeatureMatrix(1, 2, {3, 4}),
                            Metric::kNegativeEuclidean);
  CHECK(e(0, 0) == doctest::Approx(-std::sqrt(8.0)).epsilon(1e-15));
  const auto z = similarity(FeatureMatrix(1, 2, {0, 0}), FeatureMatrix(1, 2, {0, 0}));
  CHECK(z(0, 0) == 0.0);
  CHECK_THROWS_AS(similarity(FeatureMatrix(1, 2, {1, 0}), FeatureMatrix(1, 3, {1, 0, 0})),
                  ArgumentError);
}

TEST_CASE("cosine similarities stay within [-1, 1] and match a direct formula") {
  std::mt19937_64 rng(2);
  const auto q = testing::random_features(20, 17, rng);
  const auto r = testing::random_features(25, 17, rng);
  const auto s = similarity(q, r);
  for (std::size_t i = 0; i < 20; ++i)
    for (std::size_t j = 0; j < 25; ++j) {
      double dot = 0, nq = 0, nr = 0;
      for (std::size_t k = 0; k < 17; ++k) {
        dot += double(q(i, k)) * r(j, k);
        nq += double(q(i, k)) * q(i, k);
        nr += double(r(j, k)) * r(j, k);
      }
      CHECK(s(i, j) == doctest::Approx(dot / std::sqrt(nq * nr)).epsilon(1e-12));
      CHECK(std::abs(s(i, j)) <= 1.0);
    }
}

TEST_CASE("sequence score examples") {
  const auto sim = random_sim(8, 8, 7);
  for (std::size_t q = 0; q < 8; ++q)
    for (std::size_t r = 0; r < 8; ++r) CHECK(sequence_score(sim, q, r, 1) == sim(q, r));
  const SimilarityMatrix ones{Matrix<double>(3, 3, 1.0)};
  CHECK(sequence_score(ones, 2, 2, 3) == 3.0);
  const double brute = sim(5, 6) + sim(4, 5) + sim(3, 4) + sim(2, 3) + sim(1, 2);
  CHECK(sequence_score(sim, 5, 6, 5) == doctest::Approx(brute).epsilon(1e-12));
  // truncation at the stream start
  CHECK(sequence_score(sim, 1, 6, 5) == doctest::Approx(sim(1, 6) + sim(0, 5)).epsilon(1e-12));
}

TEST_CASE("sequence score equals the diagonal oracle everywhere on 30x30") {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto sim = random_sim(30, 30, seed);
    for (std::size_t s : {1, 3, 5, 7, 9})
      for (std::size_t q = 0; q < 30; ++q)
        for (std::size_t r = 0; r < 30; ++r)
          REQUIRE(std::abs(sequence_score(sim, q, r, s) - oracle::diagonal_score(sim.values, q, r, s)) <= 1e-6);
  }
}

TEST_CASE("chunk recall examples") {
  // identity similarity: every query's own reference wins
  Matrix<double> eye(10, 10, 0.0);
  for (std::size_t i = 0; i < 10; ++i) eye(i, i) = 1.0;
  GroundTruth gt;
  for (std::size_t i = 0; i < 10; ++i) gt.pairs.emplace_back(i, i);
  gt.tolerance_frames = 0;
  Chunk chunk{0, 0, 10, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}};
  CHECK(chunk_recall({eye}, chunk, gt, 1) == 1.0);

  // anti-diagonal: the best match is always far away
  Matrix<double> anti(10, 10, 0.0);
  for (std::size_t i = 0; i < 10; ++i) anti(i, 9 - i) = 1.0;
  Chunk inner{0, 0, 10, {0, 1, 2, 8, 9}};
  CHECK(chunk_recall({anti}, inner, gt, 1) == 0.0);

  // ties go to the smaller index: flat row, GT at the far end
  Matrix<double> flat(1, 10, 0.5);
  GroundTruth g1;
  g1.pairs = {{0, 9}};
  g1.tolerance_frames = 3;
  CHECK(chunk_recall({flat}, Chunk{0, 0, 10, {0}}, g1, 1) == 0.0);
  g1.pairs = {{0, 3}};
  CHECK(chunk_recall({flat}, Chunk{0, 0, 10, {0}}, g1, 1) == 1.0);

  CHECK_THROWS_AS(chunk_recall({eye}, Chunk{0, 0, 10, {}}, gt, 1), ArgumentError);
}

TEST_CASE("chunk recall equals exhaustive enumeration on seeded chunks") {
  for (std::uint64_t seed : {11, 12, 13}) {
    std::mt19937_64 rng(seed);
    const auto sim = random_sim(60, 80, seed + 100);
    // 20 queries, GT references scattered near the chunk window [30, 55)
    GroundTruth gt;
    gt.tolerance_frames = 2;
    std::vector<std::pair<std::size_t, std::size_t>> qs;
    Chunk chunk{0, 30, 55, {}};
    for (std::size_t q = 20; q < 40; ++q) {
      const std::size_t g = 30 + rng() % 25;
      gt.pairs.emplace_back(q, g);
      qs.emplace_back(q, g);
      chunk.queries.push_back(q);
    }
    for (std::size_t s : {1, 3, 5, 7, 9, 21})
      CHECK(chunk_recall(sim, chunk, gt, s) ==
            oracle::chunk_recall(sim.values, 30, 55, qs, 2, s));
  }
}

TEST_CASE("chunk recall is invariant to monotone transforms") {
  const auto sc = scenario(4);
  const auto sim = similarity(sc.queries, sc.refs);
  SimilarityMatrix cubed = sim, expd = sim, scaled = sim;
  for (auto& x : cubed.values.data()) x = x * x * x;
  for (auto& x : expd.values.data()) x = std::exp(3.0 * x);
  for (auto& x : scaled.values.data()) x *= 4.0;  // exact in binary
  for (const auto& c : sc.chunks.chunks) {
    const double base = chunk_recall(sim, c, sc.gt, 1);
    CHECK(chunk_recall(cubed, c, sc.gt, 1) == base);
    CHECK(chunk_recall(expd, c, sc.gt, 1) == base);
    for (std::size_t s : {1, 5, 11})
      CHECK(chunk_recall(scaled, c, sc.gt, s) == chunk_recall(sim, c, sc.gt, s));
  }
}

TEST_CASE("sweep cells equal per-cell recomputation and the s=1 column is single-image recall") {
  const auto sc = scenario(3);
  const std::vector<std::size_t> lengths{1, 3, 5};
  const auto table = sweep(sc.queries, sc.refs, sc.chunks, sc.gt, lengths);
  const auto sim = similarity(sc.queries, sc.refs);
  REQUIRE(table.chunks() == sc.chunks.size());
  for (std::size_t c = 0; c < sc.chunks.size(); ++c) {
    std::vector<std::pair<std::size_t, std::size_t>> qs;
    for (auto q : sc.chunks.chunks[c].queries) qs.emplace_back(q, sc.gt.reference_of(q));
    for (std::size_t l = 0; l < lengths.size(); ++l)
      CHECK(table.recalls(c, l) ==
            oracle::chunk_recall(sim.values, sc.chunks.chunks[c].ref_start,
                          sc.chunks.chunks[c].ref_end, qs, sc.gt.tolerance_frames, lengths[l]));
    CHECK(table.recalls(c, 0) == chunk_recall(sim, sc.chunks.chunks[c], sc.gt, 1));
  }
  const std::vector<std::size_t> only1{1};
  const auto t1 = sweep(sc.queries, sc.refs, sc.chunks, sc.gt, only1);
  for (std::size_t c = 0; c < sc.chunks.size(); ++c) CHECK(t1.recalls(c, 0) == table.recalls(c, 0));
}

TEST_CASE("sweep is bitwise independent of the worker count") {
  const auto sc = scenario(8, 400, 12);
  const std::vector<std::size_t> lengths{1, 3, 5, 7, 9, 11, 13, 15, 17, 19, 21};
  ::setenv("SEQMOD_WORKERS", "1", 1);
  const auto a = sweep(sc.queries, sc.refs, sc.chunks, sc.gt, lengths);
  ::setenv("SEQMOD_WORKERS", "4", 1);
  const auto b = sweep(sc.queries, sc.refs, sc.chunks, sc.gt, lengths);
  ::unsetenv("SEQMOD_WORKERS");
  CHECK(a.recalls == b.recalls);
}

TEST_CASE("lengths must be odd, increasing and start at 1") {
  CHECK_NOTHROW(validate_lengths(std::vector<std::size_t>{1, 3, 7}));
  CHECK_THROWS_AS(validate_lengths(std::vector<std::size_t>{}), ArgumentError);
  CHECK_THROWS_AS(validate_lengths(std::vector<std::size_t>{3, 5}), ArgumentError);
  CHECK_THROWS_AS(validate_lengths(std::vector<std::size_t>{1, 4}), ArgumentError);
  CHECK_THROWS_AS(validate_lengths(std::vector<std::size_t>{1, 5, 3}), ArgumentError);
  CHECK_THROWS_AS(validate_lengths(std::vector<std::size_t>{1, 3, 3}), ArgumentError);
}

namespace {
SweepTable one_row(std::vector<std::size_t> lengths, std::vector<double> recalls) {
  SweepTable t;
  const std::size_t n = lengths.size();
  t.lengths = std::move(lengths);
  t.recalls = Matrix<double>(1, n, std::move(recalls));
  return t;
}
}  // namespace

TEST_CASE("labeling examples") {
  auto l = label_required_lengths(one_row({1, 3, 5}, {0.4, 0.6, 0.8}), 0.75);
  CHECK(l.required_length[0] == 5);
  CHECK(l.achieved[0]);
  l = label_required_lengths(one_row({1, 3, 5}, {0.9, 0.95, 1.0}), 0.5);
  CHECK(l.required_length[0] == 1);
  CHECK(l.achieved[0]);
  l = label_required_lengths(one_row({1, 3, 5}, {0.4, 0.5, 0.45}), 0.8);
  CHECK(l.required_length[0] == 3);
  CHECK_FALSE(l.achieved[0]);
  // exactly reaching the target counts
  l = label_required_lengths(one_row({1, 3}, {0.75, 1.0}), 0.75);
  CHECK(l.required_length[0] == 1);
  // non-monotone recall: the first feasible length wins even if a longer one dips
  l = label_required_lengths(one_row({1, 3, 5, 7}, {0.2, 0.8, 0.6, 0.9}), 0.75);
  CHECK(l.required_length[0] == 3);
  // fallback ties go to the shorter length
  l = label_required_lengths(one_row({1, 3, 5}, {0.3, 0.5, 0.5}), 0.9);
  CHECK(l.required_length[0] == 3);
  CHECK_THROWS_AS(label_required_lengths(one_row({1}, {0.5}), 0.0), ArgumentError);
  CHECK_THROWS_AS(label_required_lengths(one_row({1}, {0.5}), 1.01), ArgumentError);
}

TEST_CASE("labeling agrees with a linear scan on random rows") {
  std::mt19937_64 rng(21);
  const std::vector<std::size_t> lengths{1, 3, 5, 7, 9, 11, 13, 15, 17, 19, 21};
  SweepTable t;
  t.lengths = lengths;
  t.recalls = Matrix<double>(1000, lengths.size());
  // recalls on a 1/20 grid so ties and exact hits occur
  for (auto& x : t.recalls.data()) x = static_cast<double>(rng() % 21) / 20.0;
  const double target = 0.8;
  const auto labels = label_required_lengths(t, target);
  std::size_t infeasible = 0;
  for (std::size_t c = 0; c < 1000; ++c) {
    const auto [expect, found] = oracle::required_length(t.recalls.row(c), lengths, target);
    infeasible += !found;
    CHECK(labels.required_length[c] == expect);
    CHECK(labels.achieved[c] == found);
  }
  CHECK(infeasible > 0);
}

TEST_CASE("sweep and label CSV round trips") {
  testing::TempDir dir("sweep");
  const auto sc = scenario(5);
  const std::vector<std::size_t> lengths{1, 3, 5, 7};
  const auto table = sweep(sc.queries, sc.refs, sc.chunks, sc.gt, lengths);
  store_sweep(dir / "s.csv", table);
  const auto back = load_sweep(dir / "s.csv");
  CHECK(back.lengths == table.lengths);
  CHECK(back.recalls == table.recalls);
  const auto labels = label_required_lengths(table, 0.6);
  store_labels(dir / "l.csv", labels);
  const auto lb = load_labels(dir / "l.csv");
  CHECK(lb.required_length == labels.required_length);
  CHECK(lb.achieved == labels.achieved);
  CHECK(table.column(5) == 2);
  CHECK_THROWS_AS(table.column(9), ArgumentError);
}

}  // TEST_SUITE
