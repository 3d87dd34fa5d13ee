#pragma once

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace rumdlab {

// Worker count for the parallel reductions. RUMDLAB_THREADS overrides the
// hardware default; results never depend on it (see chunked_sum).
inline int thread_count() {
  if (const char* s = std::getenv("RUMDLAB_THREADS")) {
    int t = std::atoi(s);
    if (t >= 1) return t;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc ? static_cast<int>(hc) : 1;
}

// Deterministic reduction: terms are accumulated sequentially inside
// fixed-width chunks and chunk sums are combined in index order, so the
// result is byte-identical for any thread count.
template <class Term>
double chunked_sum(long total, Term&& term, long chunk_width = 8192) {
  if (total <= 0) return 0.0;
  long chunks = (total + chunk_width - 1) / chunk_width;
  std::vector<double> partial(chunks, 0.0);
  int workers = thread_count();
  if (workers > chunks) workers = static_cast<int>(chunks);

  auto run_chunk = [&](long c) {
    long lo = c * chunk_width;
    long hi = lo + chunk_width < total ? lo + chunk_width : total;
    double acc = 0.0;
    for (long i = lo; i < hi; ++i) acc += term(i);
    partial[c] = acc;
  };

  if (workers <= 1) {
    for (long c = 0; c < chunks; ++c) run_chunk(c);
  } else {
    std::atomic<long> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (long c = next.fetch_add(1); c < chunks; c = next.fetch_add(1)) run_chunk(c);
      });
    for (auto& t : pool) t.join();
  }

  double acc = 0.0;
  for (long c = 0; c < chunks; ++c) acc += partial[c];
  return acc;
}

// Run fn(i) for i in [0, total) with the same chunking discipline; fn must
// only write to slots owned by i.
template <class Fn>
void parallel_for(long total, Fn&& fn, long chunk_width = 64) {
  if (total <= 0) return;
  long chunks = (total + chunk_width - 1) / chunk_width;
  int workers = thread_count();
  if (workers > chunks) workers = static_cast<int>(chunks);
  if (workers <= 1) {
    for (long i = 0; i < total; ++i) fn(i);
    return;
  }
  std::atomic<long> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (long c = next.fetch_add(1); c < chunks; c = next.fetch_add(1)) {
        long lo = c * chunk_width;
        long hi = lo + chunk_width < total ? lo + chunk_width : total;
        for (long i = lo; i < hi; ++i) fn(i);
      }
    });
  for (auto& t : pool) t.join();
}

}  // namespace rumdlab
