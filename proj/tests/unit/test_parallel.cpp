#include <gtest/gtest.h>

#include <atomic>
#include <stdexcept>
#include <thread>
#include <vector>

#include "qrck/parallel.hpp"

using namespace qrck;

TEST(ParallelFor, VisitsEveryIndexOnce) {
  for (unsigned threads : {1u, 2u, 7u}) {
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), [&](std::size_t i) { ++hits[i]; }, threads);
    for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  }
}

TEST(ParallelFor, ZeroLengthIsANoOp) {
  bool called = false;
  parallel_for(0, [&](std::size_t) { called = true; }, 4);
  EXPECT_FALSE(called);
}

TEST(ParallelFor, RethrowsWorkerException) {
  EXPECT_THROW(parallel_for(
                   100, [](std::size_t i) {
                     if (i == 37) throw std::runtime_error("boom");
                   },
                   4),
               std::runtime_error);
}

TEST(ParallelFor, NestedCallsRunOnTheCallingWorker) {
  std::vector<int> inner_ok(8, 0);
  parallel_for(
      8,
      [&](std::size_t i) {
        const auto outer = std::this_thread::get_id();
        bool same = true;
        parallel_for(
            5, [&](std::size_t) { same = same && std::this_thread::get_id() == outer; }, 4);
        inner_ok[i] = same;
      },
      3);
  for (int ok : inner_ok) EXPECT_EQ(ok, 1);
}

TEST(ParallelFor, DefaultThreadSetting) {
  const unsigned saved = default_threads();
  set_default_threads(0);
  EXPECT_EQ(default_threads(), 1u);
  set_default_threads(3);
  EXPECT_EQ(default_threads(), 3u);
  set_default_threads(saved);
}
