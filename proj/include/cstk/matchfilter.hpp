#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cstk/dataset.hpp"
#include "cstk/parallel.hpp"

namespace cstk {

enum class DistanceUnit { token, character };

struct MatchConfig {
  int k = 10;
  DistanceUnit distance_unit = DistanceUnit::token;
};

enum class GeneratorKind { builtin_slot_substitution, external };

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::builtin_slot_substitution;
  // Required iff kind == external. Placeholders {train_src} {train_tgt}
  // {infer_src} {out} {beam} are substituted before the command runs.
  std::string external_command;
  std::string work_dir = ".";
};

struct GenerationConfig {
  int beam_size = 5;
  GeneratorSpec generator;
};

enum class DropReason { duplicate, invalid_tree, skeleton_mismatch };

const char* to_string(DropReason reason);

enum class Verdict { unset, kept, dropped };

struct GenCandidate {
  std::string source_id;  // id of the source EN example the candidate was decoded from
  std::string text;       // seqlogical string
  Verdict verdict = Verdict::unset;
  std::optional<DropReason> drop_reason;
};

// Pool examples whose skeleton equals the query's, ranked by ascending
// Levenshtein distance between utterances (token-level by default), ties by
// (distance, utterance text, id). At most k results.
std::vector<Example> find_neighbors(const Example& cs_example, const Dataset& en_pool,
                                    const MatchConfig& config,
                                    Execution exec = Execution::parallel);

struct SeqlogicalPair {
  std::string source;  // EN neighbor, seqlogical
  std::string target;  // CS seed, seqlogical
  std::string source_id;
  std::string target_id;

  bool operator==(const SeqlogicalPair&) const = default;
};

// One (neighbor, seed) pair per retrieved neighbor, deduplicated on the
// string pair; at most |seeds| * k pairs.
std::vector<SeqlogicalPair> build_parallel_corpus(const Dataset& seeds, const Dataset& en_pool,
                                                  const MatchConfig& config,
                                                  Execution exec = Execution::parallel);

struct GenSource {
  std::string id;
  std::string seqlogical;
};

// Up to beam_size candidates per source. The builtin generator substitutes
// slot text into same-skeleton carrier templates drawn from the parallel
// corpus targets; an external generator is invoked once for all sources via
// the file protocol (train_src.txt / train_tgt.txt / infer_src.txt written
// line-aligned into work_dir, candidates read back from JSONL
// {"line": int, "candidates": [str, ...]}). Verdicts are left unset.
std::vector<GenCandidate> generate_candidates(const std::vector<GenSource>& sources,
                                              const std::vector<SeqlogicalPair>& parallel,
                                              const GenerationConfig& config);

// Slot-substitution stand-in for a learned generator: each same-skeleton
// seed utterance acts as a carrier template whose slot spans are replaced by
// the source's slot text (labels matched as a multiset, same-label
// collisions resolved in span order). Returns up to `beam` distinct
// seqlogical strings ranked by ascending template-to-source distance.
std::vector<std::string> builtin_generate(const std::string& source_seqlogical, const Dataset& seeds,
                                          int beam);

struct FilterReport {
  std::int64_t kept = 0;
  std::int64_t duplicate = 0;
  std::int64_t invalid_tree = 0;
  std::int64_t skeleton_mismatch = 0;
};

struct SourceInfo {
  ParseSkeleton skeleton;
  std::string domain;
};

struct FilterResult {
  Dataset kept;                         // ids "aug-<n>", language "cs"
  FilterReport report;
  std::vector<GenCandidate> candidates;  // inputs with verdicts filled in
  std::vector<std::string> kept_source_ids;  // aligned with kept.examples
};

// The three-rule filter: drop candidates that duplicate a seed (canonical
// seqlogical equality), are not valid depth-2 trees, or whose skeleton
// differs from their source's. Kept candidates are also deduplicated among
// themselves (later copies dropped as duplicates).
FilterResult filter_candidates(std::vector<GenCandidate> candidates, const Dataset& seeds,
                               const std::map<std::string, SourceInfo>& source_index);

}  // namespace cstk
