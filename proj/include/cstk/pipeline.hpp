#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cstk/alignment.hpp"
#include "cstk/dataset.hpp"
#include "cstk/joint_model.hpp"
#include "cstk/matchfilter.hpp"
#include "cstk/projection.hpp"

namespace cstk {

enum class PipelineMode { translate_align, match_filter, both };

// One declarative config drives every subcommand; flags override fields.
struct PipelineConfig {
  std::uint64_t seed = 1;
  std::string seeds_path;      // CS seed dataset (JSONL)
  std::string en_pool_path;    // EN dataset: match-filter pool and translate-align source
  std::string parallel_path;   // translation pairs (JSONL id/src/tgt)
  std::string attention_path;  // optional; switches alignment to attention argmax
  std::string output_dir;
  PipelineMode mode = PipelineMode::both;
  MatchConfig match;
  GenerationConfig generation;
  AlignmentConfig alignment;
  TrainConfig train;
  FeatureConfig features;
};

PipelineConfig load_pipeline_config(const std::string& path);
std::string config_to_json(const PipelineConfig& config);  // canonical form, hashed into the manifest

// Statistical route: train forward/reverse tables, align both directions,
// grow-diag-final-and. Attention route: argmax rows of supplied matrices
// restricted to slot token indices. Both produce per-pair link sets in the
// pair's source->target convention.
struct AlignmentArtifacts {
  std::vector<std::pair<std::string, AlignmentSet>> forward;
  std::vector<std::pair<std::string, AlignmentSet>> reverse;    // transposed into forward convention
  std::vector<std::pair<std::string, AlignmentSet>> symmetric;  // or attention links
  TranslationTable forward_table;
  TranslationTable reverse_table;
  bool used_attention = false;
};

AlignmentArtifacts align_corpus(const std::vector<ParallelPair>& corpus,
                                const AlignmentConfig& config,
                                const std::vector<AttentionMatrix>* attention,
                                const Dataset* slot_source,
                                Execution exec = Execution::parallel);

struct ProjectionRun {
  Dataset projected;  // language tag "es"
  std::vector<std::pair<std::string, std::string>> rejections;  // (id, reason)
  int fragments_created = 0;
};

// Projects every source example through its pair's links. Driver-level
// rejections ("MissingTranslation", "MissingAlignment",
// "SourceTokensMismatch") join the per-example projection rejections.
ProjectionRun project_dataset(const Dataset& source, const std::vector<ParallelPair>& pairs,
                              const std::vector<std::pair<std::string, AlignmentSet>>& alignments);

struct MatchFilterRun {
  std::vector<SeqlogicalPair> pairs;
  std::vector<GenCandidate> candidates;
  FilterResult filtered;
};

MatchFilterRun run_match_filter(const Dataset& seeds, const Dataset& en_pool,
                                const MatchConfig& match, const GenerationConfig& generation,
                                Execution exec = Execution::parallel);

struct PipelineResult {
  std::map<std::string, std::int64_t> counts;
  std::vector<std::string> artifacts;  // file names under output_dir
};

// Runs the configured pipelines, persists every intermediate artifact under
// output_dir, and writes manifest.json with the config hash and per-file
// checksums and line counts. Byte-identical on rerun with an unchanged
// config and inputs.
PipelineResult run_augment_pipeline(const PipelineConfig& config);

// FNV-1a over a file's bytes, hex; used for manifest checksums.
std::string file_checksum(const std::string& path);

}  // namespace cstk
