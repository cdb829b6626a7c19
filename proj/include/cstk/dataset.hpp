#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "cstk/seqlogical.hpp"

namespace cstk {

struct Example {
  std::string id;
  std::string domain;
  Utterance utterance;
  SemanticParse parse;
  std::optional<std::string> language_tag;

  std::string seqlogical() const { return serialize_seqlogical(utterance, parse); }
};

enum class Split { train, valid, test, unsplit };

struct Dataset {
  std::vector<Example> examples;
  Split split = Split::unsplit;

  std::size_t size() const { return examples.size(); }
  bool empty() const { return examples.empty(); }
};

enum class DatasetFormat { jsonl, tsv };

// JSONL record: {"id": str, "domain": str, "seqlogical": str, "language": str?}
// (extra fields ignored). TSV: id<TAB>domain<TAB>seqlogical. Seqlogical
// fields are validated at depth 2. Throws ParseError with a line number, or
// DuplicateId.
Dataset load_dataset(const std::string& path, DatasetFormat format);
Dataset parse_dataset(const std::string& content, DatasetFormat format, const std::string& origin);
void save_dataset(const Dataset& ds, const std::string& path, DatasetFormat format);
std::string format_dataset(const Dataset& ds, DatasetFormat format);

struct DomainStats {
  int intents = 0;       // distinct intent labels
  int slot_labels = 0;   // distinct slot labels
  std::int64_t utterances = 0;
  std::int64_t total_slots = 0;
  double mean_slots_per_utterance = 0.0;
};

std::map<std::string, DomainStats> dataset_stats(const Dataset& ds);

// Vocabulary file: one token per line, rank = line number (0 = most
// frequent). A repeated token keeps its first rank; ranks stay dense.
class VocabRankTable {
public:
  static VocabRankTable load(const std::string& path);
  static VocabRankTable from_tokens(const std::vector<std::string>& tokens);

  std::optional<int> rank(const std::string& token) const;
  std::size_t size() const { return rank_.size(); }

private:
  std::unordered_map<std::string, int> rank_;
};

enum class LanguageAssignment { a, b, tie, unknown };

struct LanguageRatioReport {
  // a_count / b_count; empty when no token was assigned to b.
  std::optional<double> ratio;
  std::int64_t a_count = 0;
  std::int64_t b_count = 0;
  std::int64_t tie_count = 0;
  std::int64_t unknown_count = 0;
  std::vector<std::pair<std::string, LanguageAssignment>> assignments;  // one per token occurrence
};

// Assigns each token occurrence to the vocabulary where it has the lower
// rank. Ties and out-of-vocabulary tokens are counted but excluded from the
// ratio.
LanguageRatioReport language_ratio(const Dataset& ds, const VocabRankTable& vocab_a,
                                   const VocabRankTable& vocab_b);

// Coverage-first sample of exactly n examples: one example per uncovered
// label greedily (rarest label first), remainder uniform without
// replacement. Deterministic for a fixed seed.
Dataset sample_fewshot(const Dataset& ds, int n, std::uint64_t seed);

}  // namespace cstk
