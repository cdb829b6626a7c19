#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cstk {

// Every data-parallel kernel in the toolkit ships in two forms: an OpenMP
// version and a straightforward serial reference used for testing and
// benchmarking. Execution::parallel falls back to serial when the build has
// no OpenMP.
enum class Execution {
  serial,
  parallel,
};

namespace par {

struct ChunkRange {
  std::size_t index;
  std::size_t begin;
  std::size_t end;
};

inline std::size_t chunk_count(std::size_t n, std::size_t chunk_size) {
  return chunk_size ? (n + chunk_size - 1) / chunk_size : 0;
}

// Runs fn over fixed [begin, end) chunks. The chunking depends only on n and
// chunk_size, never on the thread count; callers merge per-chunk results in
// chunk order, which keeps floating-point reductions bit-identical no matter
// how many workers ran.
template <typename Fn>
void for_chunks(std::size_t n, std::size_t chunk_size, Execution exec, Fn&& fn) {
  if (n == 0 || chunk_size == 0) return;
  const std::size_t chunks = chunk_count(n, chunk_size);
  auto run = [&](std::size_t c) {
    const std::size_t begin = c * chunk_size;
    const std::size_t end = begin + chunk_size < n ? begin + chunk_size : n;
    fn(ChunkRange{c, begin, end});
  };
#ifdef _OPENMP
  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (long long c = 0; c < static_cast<long long>(chunks); ++c) {
      run(static_cast<std::size_t>(c));
    }
    return;
  }
#else
  (void)exec;
#endif
  for (std::size_t c = 0; c < chunks; ++c) run(c);
}

// Independent per-item loop (each item writes its own slot).
template <typename Fn>
void for_each_index(std::size_t n, Execution exec, Fn&& fn) {
#ifdef _OPENMP
  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
      fn(static_cast<std::size_t>(i));
    }
    return;
  }
#else
  (void)exec;
#endif
  for (std::size_t i = 0; i < n; ++i) fn(i);
}

}  // namespace par
}  // namespace cstk
