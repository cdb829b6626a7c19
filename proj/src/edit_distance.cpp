#include "cstk/edit_distance.hpp"

#include <algorithm>
#include <numeric>

namespace cstk {

namespace {

// Two-row DP over any indexable sequences.
template <typename SeqA, typename SeqB>
int levenshtein_impl(const SeqA& a, const SeqB& b) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  if (n == 0) return static_cast<int>(m);
  if (m == 0) return static_cast<int>(n);
  std::vector<int> prev(m + 1), cur(m + 1);
  std::iota(prev.begin(), prev.end(), 0);
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= m; ++j) {
      const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

}  // namespace

int levenshtein(std::string_view a, std::string_view b) { return levenshtein_impl(a, b); }

int levenshtein(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  return levenshtein_impl(a, b);
}

std::vector<int> levenshtein_batch(const std::vector<std::string>& query,
                                   const std::vector<std::vector<std::string>>& candidates,
                                   Execution exec) {
  std::vector<int> out(candidates.size());
  par::for_each_index(candidates.size(), exec,
                      [&](std::size_t i) { out[i] = levenshtein(query, candidates[i]); });
  return out;
}

std::vector<int> levenshtein_batch(std::string_view query, const std::vector<std::string>& candidates,
                                   Execution exec) {
  std::vector<int> out(candidates.size());
  par::for_each_index(candidates.size(), exec,
                      [&](std::size_t i) { out[i] = levenshtein(query, candidates[i]); });
  return out;
}

}  // namespace cstk
