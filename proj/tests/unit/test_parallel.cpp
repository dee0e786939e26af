#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <vector>

#include "seqmod/parallel.hpp"

using namespace seqmod;

namespace {

struct WorkersEnv {
  explicit WorkersEnv(const char* v) { ::setenv("SEQMOD_WORKERS", v, 1); }
  ~WorkersEnv() { ::unsetenv("SEQMOD_WORKERS"); }
};

}  // namespace

TEST_SUITE("parallel") {

TEST_CASE("worker count comes from the environment") {
  {
    WorkersEnv env("3");
    CHECK(worker_count() == 3);
  }
  for (const char* bad : {"0", "-2", "many", ""}) {
    WorkersEnv env(bad);
    CHECK(worker_count() >= 1);
  }
  CHECK(worker_count() >= 1);
}

TEST_CASE("every index is visited exactly once") {
  for (const char* w : {"1", "2", "7"}) {
    WorkersEnv env(w);
    for (std::size_t n : {0u, 1u, 5u, 1000u}) {
      std::vector<std::atomic<int>> hits(n);
      parallel_for(n, [&](std::size_t i) { hits[i]++; });
      for (std::size_t i = 0; i < n; ++i) CHECK(hits[i] == 1);
    }
  }
}

TEST_CASE("exceptions from the body reach the caller after all workers stop") {
  for (const char* w : {"1", "4"}) {
    WorkersEnv env(w);
    std::atomic<int> done{0};
    CHECK_THROWS_WITH_AS(parallel_for(200,
                                      [&](std::size_t i) {
                                        if (i == 17) throw std::runtime_error("boom");
                                        done++;
                                      }),
                         "boom", std::runtime_error);
    CHECK(done <= 199);
  }
}

}  // TEST_SUITE
