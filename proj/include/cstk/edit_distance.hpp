#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "cstk/parallel.hpp"

namespace cstk {

// Classic Levenshtein (unit-cost insert/delete/substitute).
int levenshtein(std::string_view a, std::string_view b);
int levenshtein(const std::vector<std::string>& a, const std::vector<std::string>& b);

// Distance from one query to many candidates; rows are independent, so the
// OpenMP version writes each result slot directly. The serial path is the
// reference used by tests and the benchmark.
std::vector<int> levenshtein_batch(const std::vector<std::string>& query,
                                   const std::vector<std::vector<std::string>>& candidates,
                                   Execution exec = Execution::parallel);
std::vector<int> levenshtein_batch(std::string_view query,
                                   const std::vector<std::string>& candidates,
                                   Execution exec = Execution::parallel);

}  // namespace cstk
