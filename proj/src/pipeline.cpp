#include "cstk/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cstk/rng.hpp"

namespace cstk {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path);
  out << content;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

PipelineMode mode_from_string(const std::string& s) {
  if (s == "translate_align") return PipelineMode::translate_align;
  if (s == "match_filter") return PipelineMode::match_filter;
  if (s == "both") return PipelineMode::both;
  fail(ErrorKind::ConfigError, "unknown mode '" + s + "'");
}

const char* mode_to_string(PipelineMode mode) {
  switch (mode) {
    case PipelineMode::translate_align: return "translate_align";
    case PipelineMode::match_filter: return "match_filter";
    case PipelineMode::both: return "both";
  }
  return "both";
}

}  // namespace

PipelineConfig load_pipeline_config(const std::string& path) {
  json doc = json::parse(read_file(path), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    fail(ErrorKind::ConfigError, path + ": invalid JSON config");
  }
  PipelineConfig config;
  try {
    config.seed = doc.value("seed", std::uint64_t{1});
    if (doc.contains("mode")) config.mode = mode_from_string(doc["mode"].get<std::string>());
    if (doc.contains("paths")) {
      const json& p = doc["paths"];
      config.seeds_path = p.value("seeds", "");
      config.en_pool_path = p.value("en_pool", "");
      config.parallel_path = p.value("parallel", "");
      config.attention_path = p.value("attention", "");
      config.output_dir = p.value("output_dir", "");
    }
    if (doc.contains("match")) {
      const json& m = doc["match"];
      config.match.k = m.value("k", 10);
      const std::string unit = m.value("distance_unit", "token");
      if (unit == "token") {
        config.match.distance_unit = DistanceUnit::token;
      } else if (unit == "character") {
        config.match.distance_unit = DistanceUnit::character;
      } else {
        fail(ErrorKind::ConfigError, "unknown distance_unit '" + unit + "'");
      }
    }
    if (doc.contains("generation")) {
      const json& g = doc["generation"];
      config.generation.beam_size = g.value("beam_size", 5);
      if (g.contains("generator")) {
        const json& spec = g["generator"];
        const std::string kind = spec.value("kind", "builtin_slot_substitution");
        if (kind == "builtin_slot_substitution") {
          config.generation.generator.kind = GeneratorKind::builtin_slot_substitution;
        } else if (kind == "external") {
          config.generation.generator.kind = GeneratorKind::external;
        } else {
          fail(ErrorKind::ConfigError, "unknown generator kind '" + kind + "'");
        }
        config.generation.generator.external_command = spec.value("external_command", "");
        config.generation.generator.work_dir = spec.value("work_dir", ".");
        if (config.generation.generator.kind == GeneratorKind::external &&
            config.generation.generator.external_command.empty()) {
          fail(ErrorKind::ConfigError, "external generator requires external_command");
        }
      }
    }
    if (doc.contains("alignment")) {
      const json& a = doc["alignment"];
      config.alignment.em_iterations = a.value("em_iterations", 5);
      config.alignment.null_prob = a.value("null_prob", 0.08);
      config.alignment.diagonal_tension = a.value("diagonal_tension", 4.0);
      config.alignment.epsilon = a.value("epsilon", 1e-9);
    }
    if (doc.contains("train")) {
      const json& t = doc["train"];
      config.train.epochs = t.value("epochs", 20);
      config.train.learning_rate = t.value("learning_rate", 0.2);
      config.train.l2 = t.value("l2", 1e-6);
      config.train.seed = t.value("seed", std::uint64_t{1});
      config.train.early_stop_patience = t.value("early_stop_patience", 5);
    }
    if (doc.contains("features")) {
      const json& f = doc["features"];
      config.features.use_word_identity = f.value("use_word_identity", true);
      if (f.contains("char_ngram_range") && !f["char_ngram_range"].is_null()) {
        config.features.char_ngram_range = {f["char_ngram_range"][0].get<int>(),
                                            f["char_ngram_range"][1].get<int>()};
      }
      if (f.contains("embedding_file") && !f["embedding_file"].is_null()) {
        config.features.embedding_file = f["embedding_file"].get<std::string>();
      }
      config.features.freeze_embeddings = f.value("freeze_embeddings", true);
      config.features.context_window = f.value("context_window", 1);
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::ConfigError, path + ": " + e.what());
  }
  return config;
}

std::string config_to_json(const PipelineConfig& config) {
  json doc;
  doc["seed"] = config.seed;
  doc["mode"] = mode_to_string(config.mode);
  doc["paths"] = {{"seeds", config.seeds_path},
                  {"en_pool", config.en_pool_path},
                  {"parallel", config.parallel_path},
                  {"attention", config.attention_path},
                  {"output_dir", config.output_dir}};
  doc["match"] = {{"k", config.match.k},
                  {"distance_unit",
                   config.match.distance_unit == DistanceUnit::token ? "token" : "character"}};
  doc["generation"] = {
      {"beam_size", config.generation.beam_size},
      {"generator",
       {{"kind", config.generation.generator.kind == GeneratorKind::external
                     ? "external"
                     : "builtin_slot_substitution"},
        {"external_command", config.generation.generator.external_command},
        {"work_dir", config.generation.generator.work_dir}}}};
  doc["alignment"] = {{"em_iterations", config.alignment.em_iterations},
                      {"null_prob", config.alignment.null_prob},
                      {"diagonal_tension", config.alignment.diagonal_tension},
                      {"epsilon", config.alignment.epsilon}};
  doc["train"] = {{"epochs", config.train.epochs},
                  {"learning_rate", config.train.learning_rate},
                  {"l2", config.train.l2},
                  {"seed", config.train.seed},
                  {"early_stop_patience", config.train.early_stop_patience}};
  json features;
  features["use_word_identity"] = config.features.use_word_identity;
  if (config.features.char_ngram_range) {
    features["char_ngram_range"] = {config.features.char_ngram_range->first,
                                    config.features.char_ngram_range->second};
  } else {
    features["char_ngram_range"] = nullptr;
  }
  if (config.features.embedding_file) {
    features["embedding_file"] = *config.features.embedding_file;
  } else {
    features["embedding_file"] = nullptr;
  }
  features["freeze_embeddings"] = config.features.freeze_embeddings;
  features["context_window"] = config.features.context_window;
  doc["features"] = features;
  return doc.dump(2);
}

AlignmentArtifacts align_corpus(const std::vector<ParallelPair>& corpus,
                                const AlignmentConfig& config,
                                const std::vector<AttentionMatrix>* attention,
                                const Dataset* slot_source, Execution exec) {
  AlignmentArtifacts artifacts;
  if (attention) {
    artifacts.used_attention = true;
    std::map<std::string, const ParallelPair*> by_id;
    for (const ParallelPair& pair : corpus) by_id.emplace(pair.pair_id, &pair);
    std::map<std::string, const Example*> source_by_id;
    if (slot_source) {
      for (const Example& ex : slot_source->examples) source_by_id.emplace(ex.id, &ex);
    }
    for (const AttentionMatrix& matrix : *attention) {
      auto pair_it = by_id.find(matrix.pair_id);
      if (pair_it == by_id.end()) continue;
      const ParallelPair& pair = *pair_it->second;
      if (matrix.source_len != static_cast<int>(pair.source_tokens.size()) ||
          matrix.target_len != static_cast<int>(pair.target_tokens.size())) {
        fail(ErrorKind::DimensionMismatch,
             "attention matrix '" + matrix.pair_id + "' does not match its pair's token counts");
      }
      // Slot tokens only; non-slot tokens are left unaligned.
      std::vector<int> slot_indices;
      if (auto it = source_by_id.find(matrix.pair_id); it != source_by_id.end()) {
        for (const SlotAnnotation& slot : it->second->parse.slots) {
          for (int i = slot.start; i < slot.end; ++i) slot_indices.push_back(i);
        }
      } else {
        for (int i = 0; i < matrix.source_len; ++i) slot_indices.push_back(i);
      }
      artifacts.symmetric.emplace_back(matrix.pair_id, attention_align(matrix, slot_indices));
    }
    return artifacts;
  }

  artifacts.forward_table = train_translation_table(corpus, config, nullptr, exec);
  std::vector<ParallelPair> swapped(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    swapped[i].pair_id = corpus[i].pair_id;
    swapped[i].source_tokens = corpus[i].target_tokens;
    swapped[i].target_tokens = corpus[i].source_tokens;
  }
  artifacts.reverse_table = train_translation_table(swapped, config, nullptr, exec);

  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const AlignmentSet forward = align_asymmetric(corpus[i], artifacts.forward_table, config);
    const AlignmentSet reverse_raw = align_asymmetric(swapped[i], artifacts.reverse_table, config);
    AlignmentSet reverse;
    reverse.source_len = forward.source_len;
    reverse.target_len = forward.target_len;
    for (const AlignmentLink& link : reverse_raw.links) reverse.insert(link.target, link.source);
    artifacts.forward.emplace_back(corpus[i].pair_id, forward);
    artifacts.reverse.emplace_back(corpus[i].pair_id, reverse);
    artifacts.symmetric.emplace_back(corpus[i].pair_id, symmetrize_gdfa(forward, reverse));
  }
  return artifacts;
}

ProjectionRun project_dataset(const Dataset& source, const std::vector<ParallelPair>& pairs,
                              const std::vector<std::pair<std::string, AlignmentSet>>& alignments) {
  std::map<std::string, const ParallelPair*> pair_by_id;
  for (const ParallelPair& pair : pairs) pair_by_id.emplace(pair.pair_id, &pair);
  std::map<std::string, const AlignmentSet*> links_by_id;
  for (const auto& [id, links] : alignments) links_by_id.emplace(id, &links);

  ProjectionRun run;
  run.projected.split = source.split;
  for (const Example& ex : source.examples) {
    auto pair_it = pair_by_id.find(ex.id);
    if (pair_it == pair_by_id.end()) {
      run.rejections.emplace_back(ex.id, "MissingTranslation");
      continue;
    }
    const ParallelPair& pair = *pair_it->second;
    if (pair.source_tokens != ex.utterance.tokens) {
      run.rejections.emplace_back(ex.id, "SourceTokensMismatch");
      continue;
    }
    auto links_it = links_by_id.find(ex.id);
    if (links_it == links_by_id.end()) {
      run.rejections.emplace_back(ex.id, "MissingAlignment");
      continue;
    }
    ProjectionOutcome outcome = project_annotations(ex, pair.target_tokens, *links_it->second);
    if (!outcome.projected) {
      run.rejections.emplace_back(ex.id, to_string(*outcome.reason));
      continue;
    }
    outcome.example->language_tag = "es";
    run.fragments_created += outcome.fragments_created;
    run.projected.examples.push_back(std::move(*outcome.example));
  }
  return run;
}

MatchFilterRun run_match_filter(const Dataset& seeds, const Dataset& en_pool,
                                const MatchConfig& match, const GenerationConfig& generation,
                                Execution exec) {
  MatchFilterRun run;
  run.pairs = build_parallel_corpus(seeds, en_pool, match, exec);

  std::map<std::string, SourceInfo> source_index;
  std::map<std::string, const Example*> pool_by_id;
  for (const Example& ex : en_pool.examples) pool_by_id.emplace(ex.id, &ex);
  std::vector<GenSource> sources;
  std::set<std::string> seen_sources;
  for (const SeqlogicalPair& pair : run.pairs) {
    if (!seen_sources.insert(pair.source_id).second) continue;
    sources.push_back({pair.source_id, pair.source});
    const Example& ex = *pool_by_id.at(pair.source_id);
    source_index.emplace(pair.source_id, SourceInfo{compute_skeleton(ex.parse), ex.domain});
  }

  run.candidates = generate_candidates(sources, run.pairs, generation);
  run.filtered = filter_candidates(run.candidates, seeds, source_index);
  return run;
}

std::string file_checksum(const std::string& path) { return hex64(fnv1a64(read_file(path))); }

namespace {

std::int64_t line_count(const std::string& content) {
  return std::count(content.begin(), content.end(), '\n');
}

// Dataset JSONL with extra provenance fields on each record.
std::string format_augmented(const Dataset& ds, const std::vector<std::string>& source_ids,
                             const std::string& generator_name) {
  std::string out;
  for (std::size_t i = 0; i < ds.examples.size(); ++i) {
    const Example& ex = ds.examples[i];
    json record;
    record["id"] = ex.id;
    record["domain"] = ex.domain;
    record["seqlogical"] = ex.seqlogical();
    if (ex.language_tag) record["language"] = *ex.language_tag;
    record["source_id"] = source_ids[i];
    record["generator"] = generator_name;
    out += record.dump();
    out += '\n';
  }
  return out;
}

}  // namespace

PipelineResult run_augment_pipeline(const PipelineConfig& config) {
  if (config.output_dir.empty()) fail(ErrorKind::ConfigError, "output_dir is required");
  fs::create_directories(config.output_dir);
  const fs::path out_dir(config.output_dir);
  PipelineResult result;
  auto emit = [&](const std::string& name, const std::string& content) {
    write_file((out_dir / name).string(), content);
    result.artifacts.push_back(name);
  };

  const bool do_translate =
      config.mode == PipelineMode::translate_align || config.mode == PipelineMode::both;
  const bool do_match =
      config.mode == PipelineMode::match_filter || config.mode == PipelineMode::both;

  if (do_translate) {
    if (config.en_pool_path.empty() || config.parallel_path.empty()) {
      fail(ErrorKind::ConfigError, "translate_align needs en_pool and parallel paths");
    }
    const Dataset source = load_dataset(config.en_pool_path, DatasetFormat::jsonl);
    const std::vector<ParallelPair> corpus = load_parallel_corpus(config.parallel_path);

    std::vector<AttentionMatrix> attention;
    const bool use_attention = !config.attention_path.empty();
    if (use_attention) attention = load_attention_file(config.attention_path);
    const AlignmentArtifacts artifacts = align_corpus(
        corpus, config.alignment, use_attention ? &attention : nullptr, &source);

    auto alignment_lines = [](const std::vector<std::pair<std::string, AlignmentSet>>& alignments) {
      std::string text;
      for (const auto& [id, links] : alignments) text += format_alignment_line(id, links) + "\n";
      return text;
    };
    if (!artifacts.used_attention) {
      emit("ttable.fwd.tsv", artifacts.forward_table.dump());
      emit("ttable.rev.tsv", artifacts.reverse_table.dump());
      emit("align.fwd.txt", alignment_lines(artifacts.forward));
      emit("align.rev.txt", alignment_lines(artifacts.reverse));
    }
    emit(artifacts.used_attention ? "align.attn.txt" : "align.sym.txt",
         alignment_lines(artifacts.symmetric));

    const ProjectionRun projection = project_dataset(source, corpus, artifacts.symmetric);
    emit("projected.jsonl", format_dataset(projection.projected, DatasetFormat::jsonl));
    std::string rejections;
    for (const auto& [id, reason] : projection.rejections) {
      json record;
      record["id"] = id;
      record["reason"] = reason;
      rejections += record.dump() + "\n";
    }
    emit("projection_rejections.jsonl", rejections);
    result.counts["projected"] = static_cast<std::int64_t>(projection.projected.size());
    result.counts["projection_rejections"] = static_cast<std::int64_t>(projection.rejections.size());
    result.counts["projection_fragments"] = projection.fragments_created;
  }

  if (do_match) {
    if (config.seeds_path.empty() || config.en_pool_path.empty()) {
      fail(ErrorKind::ConfigError, "match_filter needs seeds and en_pool paths");
    }
    const Dataset seeds = load_dataset(config.seeds_path, DatasetFormat::jsonl);
    const Dataset pool = load_dataset(config.en_pool_path, DatasetFormat::jsonl);
    const MatchFilterRun run = run_match_filter(seeds, pool, config.match, config.generation);

    std::string pairs_text;
    for (const SeqlogicalPair& pair : run.pairs) {
      json record;
      record["source"] = pair.source;
      record["target"] = pair.target;
      record["source_id"] = pair.source_id;
      record["target_id"] = pair.target_id;
      pairs_text += record.dump() + "\n";
    }
    emit("pairs.jsonl", pairs_text);

    std::string candidates_text;
    std::string drops_text;
    for (const GenCandidate& candidate : run.filtered.candidates) {
      json record;
      record["source_id"] = candidate.source_id;
      record["text"] = candidate.text;
      candidates_text += record.dump() + "\n";
      if (candidate.verdict == Verdict::dropped) {
        record["verdict_reason"] = to_string(*candidate.drop_reason);
        drops_text += record.dump() + "\n";
      }
    }
    emit("candidates.jsonl", candidates_text);
    emit("drops.jsonl", drops_text);

    const std::string generator_name =
        config.generation.generator.kind == GeneratorKind::external ? "external"
                                                                    : "builtin_slot_substitution";
    emit("augmented.jsonl",
         format_augmented(run.filtered.kept, run.filtered.kept_source_ids, generator_name));

    // Seeds plus kept candidates, ready to train on.
    Dataset merged = seeds;
    for (const Example& ex : run.filtered.kept.examples) merged.examples.push_back(ex);
    emit("augmented_train.jsonl", format_dataset(merged, DatasetFormat::jsonl));

    result.counts["pairs"] = static_cast<std::int64_t>(run.pairs.size());
    result.counts["candidates"] = static_cast<std::int64_t>(run.candidates.size());
    result.counts["kept"] = run.filtered.report.kept;
    result.counts["dropped_duplicate"] = run.filtered.report.duplicate;
    result.counts["dropped_invalid_tree"] = run.filtered.report.invalid_tree;
    result.counts["dropped_skeleton_mismatch"] = run.filtered.report.skeleton_mismatch;
  }

  json manifest;
  manifest["config_hash"] = hex64(fnv1a64(config_to_json(config)));
  manifest["counts"] = result.counts;
  json files = json::object();
  for (const std::string& name : result.artifacts) {
    const std::string content = read_file((out_dir / name).string());
    files[name] = {{"fnv1a64", hex64(fnv1a64(content))}, {"lines", line_count(content)}};
  }
  manifest["artifacts"] = files;
  write_file((out_dir / "manifest.json").string(), manifest.dump(2) + "\n");
  result.artifacts.push_back("manifest.json");
  return result;
}

}  // namespace cstk
