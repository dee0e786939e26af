#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "seqmod/ami.hpp"
#include "seqmod/errors.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace seqmod;

namespace {

long double emi_checked(const std::vector<long>& a, const std::vector<long>& b) {
  long double mass = 0;
  const auto e = oracle::emi_exhaustive(a, b, &mass);
  REQUIRE(std::abs((double)mass - 1.0) < 1e-12);
  return e;
}

std::vector<std::size_t> as_size(const std::vector<long>& v) {
  return std::vector<std::size_t>(v.begin(), v.end());
}

Labeling random_labels(std::size_t n, std::size_t k, std::mt19937_64& rng) {
  Labeling l(n);
  for (auto& x : l) x = rng() % k;
  return l;
}

double mi_of(const Labeling& u, const Labeling& v) {
  return mutual_information(contingency(u, v));
}

}  // namespace

TEST_SUITE("ami") {

TEST_CASE("identical and relabeled labelings score exactly 1") {
  const Labeling u{0, 0, 1, 1};
  CHECK(ami_score(u, u) == 1.0);
  CHECK(ami_score(u, Labeling{1, 1, 0, 0}) == 1.0);
  CHECK(ami_score(Labeling{0, 0, 0}, Labeling{4, 4, 4}) == 1.0);
  CHECK(ami_score(Labeling{0, 0, 0, 0}, Labeling{0, 1, 0, 1}) == 0.0);
  CHECK_THROWS_AS(ami_score(Labeling{0, 1}, Labeling{0, 1, 1}), ArgumentError);
  CHECK_THROWS_AS(ami_score(Labeling{0}, Labeling{0}), ArgumentError);

  std::mt19937_64 rng(1);
  for (int t = 0; t < 50; ++t) {
    const auto a = random_labels(5 + rng() % 60, 1 + rng() % 6, rng);
    std::vector<std::size_t> relabel{7, 3, 9, 0, 12, 5};
    Labeling b(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) b[i] = relabel[a[i]];
    CHECK(ami_score(a, b) == 1.0);
  }
}

TEST_CASE("[0,0,1,1] vs [0,1,0,1] equals the exhaustive oracle and the 24-permutation average") {
  const Labeling u{0, 0, 1, 1}, v{0, 1, 0, 1};
  const double emi = (double)emi_checked({2, 2}, {2, 2});
  // average MI over every ordering of v
  std::vector<std::size_t> v2 = v;
  std::vector<int> idx{0, 1, 2, 3};
  double sum = 0;
  int count = 0;
  do {
    Labeling p(4);
    for (int i = 0; i < 4; ++i) p[i] = v2[idx[i]];
    sum += mi_of(u, p);
    ++count;
  } while (std::next_permutation(idx.begin(), idx.end()));
  CHECK(count == 24);
  CHECK(std::abs(sum / count - emi) < 1e-12);
  const std::vector<std::size_t> m{2, 2};
  CHECK(std::abs(expected_mutual_information(m, m) - emi) < 1e-12);

  const double h = std::log(2.0);
  const double expect = (0.0 - emi) / (h - emi);
  CHECK(expect < 0.0);
  CHECK(std::abs(ami_score(u, v) - expect) < 1e-12);
}

TEST_CASE("E[MI] matches exhaustive summation on all small 2x2 and fixed 3x3 margins") {
  for (long n = 2; n <= 14; ++n)
    for (long a1 = 1; a1 < n; ++a1)
      for (long b1 = 1; b1 < n; ++b1) {
        const std::vector<long> a{a1, n - a1}, b{b1, n - b1};
        const double lib = expected_mutual_information(as_size(a), as_size(b));
        REQUIRE(std::abs(lib - (double)emi_checked(a, b)) < 1e-10);
      }
  const std::vector<std::pair<std::vector<long>, std::vector<long>>> margins{
      {{3, 3, 3}, {3, 3, 3}}, {{1, 2, 6}, {4, 4, 1}}, {{5, 1, 1}, {2, 2, 3}},
      {{4, 4, 4}, {2, 5, 5}}, {{6, 3, 2}, {1, 1, 9}}, {{2, 7, 3}, {4, 4, 4}}};
  for (const auto& [a, b] : margins) {
    const double lib = expected_mutual_information(as_size(a), as_size(b));
    CHECK(std::abs(lib - (double)emi_checked(a, b)) < 1e-10);
    CHECK(std::abs(lib - expected_mutual_information(as_size(b), as_size(a))) < 1e-15);
  }
}

TEST_CASE("E[MI] agrees with a permutation Monte Carlo estimate") {
  std::mt19937_64 rng(17);
  const std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> margins{
      {{10, 20, 30}, {15, 15, 30}}, {{5, 5, 40}, {20, 20, 10}}, {{12, 12, 12}, {6, 12, 18}}};
  for (const auto& [a, b] : margins) {
    Labeling u, v;
    for (std::size_t k = 0; k < a.size(); ++k) u.insert(u.end(), a[k], k);
    for (std::size_t k = 0; k < b.size(); ++k) v.insert(v.end(), b[k], k);
    constexpr int kDraws = 10000;
    double sum = 0, sum2 = 0;
    for (int d = 0; d < kDraws; ++d) {
      std::shuffle(v.begin(), v.end(), rng);
      const double mi = mi_of(u, v);
      sum += mi;
      sum2 += mi * mi;
    }
    const double mean = sum / kDraws;
    const double se = std::sqrt((sum2 / kDraws - mean * mean) / (kDraws - 1));
    CHECK(std::abs(expected_mutual_information(a, b) - mean) < 3.0 * se);
  }
}

TEST_CASE("score is exactly symmetric and relabeling invariant") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + rng() % 80;
    const auto u = random_labels(n, 1 + rng() % 7, rng);
    const auto v = random_labels(n, 1 + rng() % 7, rng);
    const double s = ami_score(u, v);
    CHECK(s == ami_score(v, u));
    CHECK(s <= 1.0);
    std::vector<std::size_t> perm{4, 0, 6, 2, 5, 1, 3};
    Labeling ru(n);
    for (std::size_t i = 0; i < n; ++i) ru[i] = perm[u[i]] + 10;
    CHECK(ami_score(ru, v) == s);
    CHECK(ami_score(v, ru) == s);
  }
}

TEST_CASE("independent random labelings average near zero") {
  std::mt19937_64 rng(2024);
  double sum = 0;
  for (int t = 0; t < 100; ++t) sum += ami_score(random_labels(200, 4, rng), random_labels(200, 4, rng));
  CHECK(std::abs(sum / 100) <= 0.02);
}

TEST_CASE("entropy and contingency basics") {
  const std::vector<std::size_t> counts{2, 2};
  CHECK(entropy(counts) == doctest::Approx(std::log(2.0)));
  const auto t = contingency(Labeling{0, 0, 1, 1}, Labeling{5, 7, 7, 7});
  REQUIRE(t.rows() == 2);
  REQUIRE(t.cols() == 2);
  CHECK(t(0, 0) == 1);
  CHECK(t(0, 1) == 1);
  CHECK(t(1, 1) == 2);
  CHECK(class_counts(Labeling{3, 3, 9}) == std::vector<std::size_t>{2, 1});
}

TEST_CASE("discretize examples") {
  CHECK(discretize(std::vector<double>{1, 2, 3, 4}, 2) == Labeling{0, 0, 1, 1});
  CHECK(discretize(std::vector<double>{4, 3, 2, 1}, 2) == Labeling{1, 1, 0, 0});
  CHECK(discretize(std::vector<double>{7, 7, 7, 7}, 2) == Labeling{0, 0, 0, 0});
  // ties straddling a boundary all take the lower bin
  CHECK(discretize(std::vector<double>{1, 2, 2, 3}, 2) == Labeling{0, 0, 0, 1});
  CHECK_THROWS_AS(discretize(std::vector<double>{1, 2}, 3), ArgumentError);
  CHECK_THROWS_AS(discretize(std::vector<double>{1, 2}, 1), ArgumentError);
}

TEST_CASE("1000 uniform values fill 10 bins evenly") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> v(1000);
  for (auto& x : v) x = u(rng);
  const auto l = discretize(v, 10);
  std::vector<int> counts(10, 0);
  for (auto x : l) ++counts.at(x);
  for (int c : counts) CHECK(std::abs(c - 100) <= 1);
  // bins are ordered by value
  std::vector<double> lo(10, 2.0), hi(10, -1.0);
  for (std::size_t i = 0; i < v.size(); ++i) {
    lo[l[i]] = std::min(lo[l[i]], v[i]);
    hi[l[i]] = std::max(hi[l[i]], v[i]);
  }
  for (int b = 1; b < 10; ++b) CHECK(hi[b - 1] < lo[b]);
}

TEST_CASE("curation keeps exactly the features scoring above alpha") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> nd(0, 1);
  const std::size_t c = 120, n = 16;
  std::vector<std::size_t> lengths(c);
  const std::size_t choices[] = {1, 3, 5, 7, 9};
  for (auto& l : lengths) l = choices[rng() % 5];
  Matrix<double> desc(c, n);
  for (std::size_t i = 0; i < c; ++i) {
    desc(i, 0) = double(lengths[i]) + 0.3 * nd(rng);
    for (std::size_t j = 1; j < n; ++j) desc(i, j) = nd(rng);
  }
  const auto set = curate(desc, lengths, 0.125, 5);
  REQUIRE(set.scores.size() == n);
  for (std::size_t j = 1; j < n; ++j) CHECK(set.scores[0] > set.scores[j]);
  std::vector<std::size_t> expect;
  for (std::size_t j = 0; j < n; ++j)
    if (set.scores[j] > 0.125) expect.push_back(j);
  CHECK(set.retained == expect);
  CHECK(set.retained.front() == 0);
  for (double s : set.scores) CHECK(s <= 1.0 + 1e-9);

  // a column equal to the labels scores 1
  Matrix<double> self(c, 1);
  for (std::size_t i = 0; i < c; ++i) self(i, 0) = double(lengths[i]);
  const auto s1 = curate(self, lengths, 0.99, 5);
  CHECK(s1.scores[0] == 1.0);
  CHECK(s1.retained == std::vector<std::size_t>{0});

  Matrix<double> noise(c, 3);
  for (auto& x : noise.data()) x = nd(rng);
  CHECK_THROWS_AS(curate(noise, lengths, 0.9, 5), CurationError);
}

TEST_CASE("curated CSV round trip") {
  testing::TempDir dir("cur");
  CuratedFeatureSet s{{0.2, 0.05, 0.13}, 0.125, {0, 2}};
  store_curated(dir / "c.csv", s);
  const auto back = load_curated(dir / "c.csv", 0.125);
  CHECK(back.scores == s.scores);
  CHECK(back.retained == s.retained);
  CHECK(back.alpha == 0.125);
}

}  // TEST_SUITE
