#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "cstk/error.hpp"
#include "cstk/parallel.hpp"

namespace cstk {

struct ParallelPair {
  std::vector<std::string> source_tokens;
  std::vector<std::string> target_tokens;
  std::string pair_id;
};

struct AlignmentConfig {
  int em_iterations = 5;
  double null_prob = 0.08;        // p0: mass reserved for the NULL source word
  double diagonal_tension = 4.0;  // lambda; 0 disables the diagonal prior
  double epsilon = 1e-9;          // probability floor for unseen pairs
};

// Lexical translation probabilities t(f|e) over an integerized vocabulary,
// with a distinguished NULL source word. Rows are normalized after every EM
// iteration (sum 1 within 1e-6). Lookups for pairs outside the trained
// support return the smoothing epsilon.
class TranslationTable {
public:
  static constexpr const char* kNullWord = "<NULL>";

  double prob(const std::string& source_word, const std::string& target_word) const;
  double null_prob_of(const std::string& target_word) const;
  double epsilon() const { return epsilon_; }

  // Row sums keyed by source word, NULL included; for invariant checks.
  std::map<std::string, double> row_sums() const;

  // "source<TAB>target<TAB>prob" lines, sorted; parseable back with load.
  std::string dump() const;
  void save(const std::string& path) const;
  static TranslationTable load(const std::string& path, double epsilon = 1e-9);

private:
  friend TranslationTable train_translation_table(const std::vector<ParallelPair>&,
                                                  const AlignmentConfig&, std::vector<double>*,
                                                  Execution);
  std::unordered_map<std::string, int> source_ids_;  // kNullWord included
  std::unordered_map<std::string, int> target_ids_;
  std::vector<std::string> source_words_;
  std::vector<std::string> target_words_;
  std::vector<std::unordered_map<int, double>> rows_;  // [source_id] -> target_id -> prob
  double epsilon_ = 1e-9;
};

struct AlignmentLink {
  int source = 0;
  int target = 0;

  auto operator<=>(const AlignmentLink&) const = default;
};

struct AlignmentSet {
  std::vector<AlignmentLink> links;  // sorted, unique
  int source_len = 0;
  int target_len = 0;

  bool contains(int source, int target) const;
  void insert(int source, int target);

  bool operator==(const AlignmentSet&) const = default;
};

struct AttentionMatrix {
  std::string pair_id;
  int source_len = 0;
  int target_len = 0;
  std::vector<double> scores;  // row-major [source_len][target_len]

  double at(int i, int j) const { return scores[static_cast<std::size_t>(i) * target_len + j]; }
};

// IBM Model 1 EM with a NULL source word at fixed probability p0 and an
// optional diagonal prior p(i|j) proportional to exp(-lambda*|i/n - j/m|)
// over real source positions. Sentence pairs are processed in fixed chunks
// and the expected counts merged in chunk order, so the result is
// bit-identical for any worker count. When iteration_log_likelihood is
// given it receives one corpus log-likelihood per iteration, evaluated
// under the table that iteration started from.
TranslationTable train_translation_table(const std::vector<ParallelPair>& corpus,
                                         const AlignmentConfig& config,
                                         std::vector<double>* iteration_log_likelihood = nullptr,
                                         Execution exec = Execution::parallel);

// Links every target token to its argmax source position (or to NULL, which
// yields no link) under prior(i|j) * t(f_j|e_i). Ties keep the lowest source
// index; a NULL tie wins over any real position.
AlignmentSet align_asymmetric(const ParallelPair& pair, const TranslationTable& table,
                              const AlignmentConfig& config);

// Grow-diag-final-and. Starts from the intersection; grow passes add union
// links adjacent (8-neighborhood) to the current set while either endpoint
// is unaligned, evaluated against the state at the start of each pass and
// iterated to a fixpoint; the final-and sweep then adds union links whose
// endpoints are both still unaligned, scanning in (source, target) order.
// `reverse` uses the same source->target index convention as `forward`.
AlignmentSet symmetrize_gdfa(const AlignmentSet& forward, const AlignmentSet& reverse);

// One link per requested source index: its argmax-score target column (ties
// keep the lowest target index).
AlignmentSet attention_align(const AttentionMatrix& matrix, const std::vector<int>& slot_source_indices);

// --- file formats ---

// Parallel corpus: JSONL {"id": str, "src": str, "tgt": str}, whitespace-tokenized.
std::vector<ParallelPair> load_parallel_corpus(const std::string& path);
std::vector<ParallelPair> parse_parallel_corpus(const std::string& content, const std::string& origin);

// Alignments: one line per pair, "id<TAB>i-j i-j ...".
std::string format_alignment_line(const std::string& pair_id, const AlignmentSet& links);
void save_alignments(const std::vector<std::pair<std::string, AlignmentSet>>& alignments,
                     const std::string& path);
std::vector<std::pair<std::string, std::vector<AlignmentLink>>> load_alignment_links(
    const std::string& path);

// Attention matrices: JSONL {"id": str, "scores": [[row], ...]}.
std::vector<AttentionMatrix> load_attention_file(const std::string& path);

}  // namespace cstk
