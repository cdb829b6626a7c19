// Times the OpenMP kernels against their serial reference implementations
// on synthetic workloads: EM table training, batch edit distance, and the
// paired permutation test.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "cstk/alignment.hpp"
#include "cstk/edit_distance.hpp"
#include "cstk/eval.hpp"
#include "cstk/rng.hpp"

using cstk::Execution;

namespace {

double seconds_of(void (*fn)(Execution), Execution exec, int repeats) {
  // One warmup, then best of `repeats`.
  fn(exec);
  double best = 1e100;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn(exec);
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
  }
  return best;
}

std::vector<cstk::ParallelPair> em_corpus;
std::vector<std::string> lev_query;
std::vector<std::vector<std::string>> lev_candidates;
std::vector<std::uint8_t> perm_a, perm_b;

void setup() {
  cstk::Rng rng(7);
  const int vocab = 300;
  for (int p = 0; p < 1500; ++p) {
    cstk::ParallelPair pair;
    pair.pair_id = "p" + std::to_string(p);
    const int n = 4 + static_cast<int>(rng.below(9));
    for (int i = 0; i < n; ++i) {
      const int w = static_cast<int>(rng.below(vocab));
      pair.source_tokens.push_back("s" + std::to_string(w));
      pair.target_tokens.push_back("t" + std::to_string((w + static_cast<int>(rng.below(3))) % vocab));
    }
    em_corpus.push_back(std::move(pair));
  }
  for (int i = 0; i < 12; ++i) lev_query.push_back("q" + std::to_string(rng.below(50)));
  for (int c = 0; c < 20000; ++c) {
    std::vector<std::string> cand;
    const int n = 4 + static_cast<int>(rng.below(10));
    for (int i = 0; i < n; ++i) cand.push_back("q" + std::to_string(rng.below(50)));
    lev_candidates.push_back(std::move(cand));
  }
  for (int i = 0; i < 2000; ++i) {
    perm_a.push_back(rng.below(2));
    perm_b.push_back(rng.below(2));
  }
}

void run_em(Execution exec) {
  cstk::AlignmentConfig config;
  config.em_iterations = 3;
  cstk::train_translation_table(em_corpus, config, nullptr, exec);
}

void run_lev(Execution exec) { cstk::levenshtein_batch(lev_query, lev_candidates, exec); }

void run_perm(Execution exec) { cstk::paired_permutation_test(perm_a, perm_b, 20000, 1, exec); }

void report(const char* name, void (*fn)(Execution), int repeats) {
  const double serial = seconds_of(fn, Execution::serial, repeats);
  const double parallel = seconds_of(fn, Execution::parallel, repeats);
  std::printf("%-24s serial %8.3f ms   parallel %8.3f ms   speedup %5.2fx\n", name,
              serial * 1e3, parallel * 1e3, serial / parallel);
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("openmp threads: %d\n", omp_get_max_threads());
#else
  std::printf("built without OpenMP; parallel falls back to serial\n");
#endif
  setup();
  report("em_translation_table", run_em, 3);
  report("levenshtein_batch", run_lev, 3);
  report("permutation_test", run_perm, 3);
  return 0;
}
