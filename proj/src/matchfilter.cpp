#include "cstk/matchfilter.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "cstk/edit_distance.hpp"

namespace cstk {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<int> distances_to(const Example& query, const std::vector<const Example*>& pool,
                              DistanceUnit unit, Execution exec) {
  if (unit == DistanceUnit::token) {
    std::vector<std::vector<std::string>> candidates;
    candidates.reserve(pool.size());
    for (const Example* ex : pool) candidates.push_back(ex->utterance.tokens);
    return levenshtein_batch(query.utterance.tokens, candidates, exec);
  }
  std::vector<std::string> candidates;
  candidates.reserve(pool.size());
  for (const Example* ex : pool) candidates.push_back(ex->utterance.raw_text);
  return levenshtein_batch(query.utterance.raw_text, candidates, exec);
}

}  // namespace

const char* to_string(DropReason reason) {
  switch (reason) {
    case DropReason::duplicate: return "duplicate";
    case DropReason::invalid_tree: return "invalid_tree";
    case DropReason::skeleton_mismatch: return "skeleton_mismatch";
  }
  return "unknown";
}

std::vector<Example> find_neighbors(const Example& cs_example, const Dataset& en_pool,
                                    const MatchConfig& config, Execution exec) {
  const ParseSkeleton query_skeleton = compute_skeleton(cs_example.parse);
  std::vector<const Example*> matching;
  for (const Example& ex : en_pool.examples) {
    if (compute_skeleton(ex.parse) == query_skeleton) matching.push_back(&ex);
  }
  const std::vector<int> dist = distances_to(cs_example, matching, config.distance_unit, exec);

  std::vector<std::size_t> order(matching.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(dist[a], matching[a]->utterance.raw_text, matching[a]->id) <
           std::tie(dist[b], matching[b]->utterance.raw_text, matching[b]->id);
  });

  std::vector<Example> out;
  const std::size_t limit = std::min<std::size_t>(order.size(), static_cast<std::size_t>(config.k));
  out.reserve(limit);
  for (std::size_t i = 0; i < limit; ++i) out.push_back(*matching[order[i]]);
  return out;
}

std::vector<SeqlogicalPair> build_parallel_corpus(const Dataset& seeds, const Dataset& en_pool,
                                                  const MatchConfig& config, Execution exec) {
  std::vector<SeqlogicalPair> pairs;
  std::set<std::pair<std::string, std::string>> seen;
  for (const Example& seed : seeds.examples) {
    const std::string target = seed.seqlogical();
    for (const Example& neighbor : find_neighbors(seed, en_pool, config, exec)) {
      SeqlogicalPair pair{neighbor.seqlogical(), target, neighbor.id, seed.id};
      if (seen.emplace(pair.source, pair.target).second) pairs.push_back(std::move(pair));
    }
  }
  return pairs;
}

std::vector<std::string> builtin_generate(const std::string& source_seqlogical, const Dataset& seeds,
                                          int beam) {
  const ParsedSeqlogical source = parse_seqlogical(source_seqlogical);
  const ParseSkeleton skeleton = compute_skeleton(source.parse);

  struct Ranked {
    int distance;
    std::string sort_text;
    std::string id;
    std::string candidate;
  };
  std::vector<Ranked> ranked;
  for (const Example& seed : seeds.examples) {
    if (compute_skeleton(seed.parse) != skeleton) continue;

    // Pair template slots with source slots of the same label, in span order.
    std::map<std::string, std::vector<const SlotAnnotation*>> source_slots;
    for (const SlotAnnotation& slot : source.parse.slots) {
      source_slots[slot.label].push_back(&slot);
    }
    std::map<std::string, std::size_t> used;
    Utterance out_utt;
    SemanticParse out_parse;
    out_parse.intent = seed.parse.intent;
    int cursor = 0;
    for (const SlotAnnotation& slot : seed.parse.slots) {
      for (int i = cursor; i < slot.start; ++i) {
        out_utt.tokens.push_back(seed.utterance.tokens[static_cast<std::size_t>(i)]);
      }
      const SlotAnnotation* donor = source_slots[slot.label][used[slot.label]++];
      const int new_start = static_cast<int>(out_utt.tokens.size());
      for (int i = donor->start; i < donor->end; ++i) {
        out_utt.tokens.push_back(source.utterance.tokens[static_cast<std::size_t>(i)]);
      }
      out_parse.slots.push_back({slot.label, new_start, static_cast<int>(out_utt.tokens.size())});
      cursor = slot.end;
    }
    for (int i = cursor; i < static_cast<int>(seed.utterance.tokens.size()); ++i) {
      out_utt.tokens.push_back(seed.utterance.tokens[static_cast<std::size_t>(i)]);
    }
    out_utt = Utterance::from_tokens(std::move(out_utt.tokens));

    ranked.push_back({levenshtein(seed.utterance.tokens, source.utterance.tokens),
                      seed.utterance.raw_text, seed.id,
                      serialize_seqlogical(out_utt, out_parse)});
  }
  if (ranked.empty()) {
    fail(ErrorKind::NoTemplate, "no seed shares the skeleton of: " + source_seqlogical);
  }

  std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    return std::tie(a.distance, a.sort_text, a.id) < std::tie(b.distance, b.sort_text, b.id);
  });
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const Ranked& r : ranked) {
    if (static_cast<int>(out.size()) >= beam) break;
    if (seen.insert(r.candidate).second) out.push_back(r.candidate);
  }
  return out;
}

namespace {

std::vector<GenCandidate> run_external_generator(const std::vector<GenSource>& sources,
                                                 const std::vector<SeqlogicalPair>& parallel,
                                                 const GenerationConfig& config) {
  const GeneratorSpec& spec = config.generator;
  if (spec.external_command.empty()) {
    fail(ErrorKind::GeneratorFailure, "external generator has no command");
  }
  fs::create_directories(spec.work_dir);
  const fs::path dir(spec.work_dir);
  const std::string train_src = (dir / "train_src.txt").string();
  const std::string train_tgt = (dir / "train_tgt.txt").string();
  const std::string infer_src = (dir / "infer_src.txt").string();
  const std::string out_path = (dir / "candidates.jsonl").string();
  {
    std::ofstream src_out(train_src, std::ios::binary), tgt_out(train_tgt, std::ios::binary);
    if (!src_out || !tgt_out) fail(ErrorKind::IoError, "cannot write generator inputs in " + spec.work_dir);
    for (const SeqlogicalPair& pair : parallel) {
      src_out << pair.source << '\n';
      tgt_out << pair.target << '\n';
    }
  }
  {
    std::ofstream infer_out(infer_src, std::ios::binary);
    if (!infer_out) fail(ErrorKind::IoError, "cannot write " + infer_src);
    for (const GenSource& source : sources) infer_out << source.seqlogical << '\n';
  }
  std::error_code ec;
  fs::remove(out_path, ec);

  std::string command = spec.external_command;
  const std::vector<std::pair<std::string, std::string>> substitutions = {
      {"{train_src}", train_src}, {"{train_tgt}", train_tgt},   {"{infer_src}", infer_src},
      {"{out}", out_path},        {"{beam}", std::to_string(config.beam_size)},
  };
  for (const auto& [placeholder, value] : substitutions) {
    std::size_t pos = 0;
    while ((pos = command.find(placeholder, pos)) != std::string::npos) {
      command.replace(pos, placeholder.size(), value);
      pos += value.size();
    }
  }
  const int status = std::system(command.c_str());
  if (status != 0) {
    fail(ErrorKind::GeneratorFailure,
         "command exited with status " + std::to_string(status) + ": " + command);
  }

  std::ifstream in(out_path, std::ios::binary);
  if (!in) fail(ErrorKind::GeneratorFailure, "generator produced no output file " + out_path);
  std::vector<std::vector<std::string>> per_line(sources.size());
  std::vector<char> seen_line(sources.size(), 0);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    json record = json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.is_object() || !record.contains("line") ||
        !record.contains("candidates") || !record["candidates"].is_array()) {
      fail(ErrorKind::GeneratorFailure,
           out_path + ":" + std::to_string(line_no) + ": expected {\"line\",\"candidates\"}");
    }
    const long long idx = record["line"].get<long long>();
    if (idx < 0 || idx >= static_cast<long long>(sources.size())) {
      fail(ErrorKind::GeneratorFailure,
           out_path + ":" + std::to_string(line_no) + ": line index " + std::to_string(idx) +
               " out of range");
    }
    if (seen_line[static_cast<std::size_t>(idx)]) {
      fail(ErrorKind::GeneratorFailure,
           out_path + ":" + std::to_string(line_no) + ": duplicate record for line " +
               std::to_string(idx));
    }
    seen_line[static_cast<std::size_t>(idx)] = 1;
    if (static_cast<int>(record["candidates"].size()) > config.beam_size) {
      fail(ErrorKind::GeneratorFailure,
           out_path + ":" + std::to_string(line_no) + ": more than beam=" +
               std::to_string(config.beam_size) + " candidates");
    }
    for (const auto& c : record["candidates"]) {
      per_line[static_cast<std::size_t>(idx)].push_back(c.get<std::string>());
    }
  }

  std::vector<GenCandidate> out;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    for (std::string& text : per_line[i]) {
      out.push_back({sources[i].id, std::move(text), Verdict::unset, std::nullopt});
    }
  }
  return out;
}

}  // namespace

std::vector<GenCandidate> generate_candidates(const std::vector<GenSource>& sources,
                                              const std::vector<SeqlogicalPair>& parallel,
                                              const GenerationConfig& config) {
  if (config.generator.kind == GeneratorKind::external) {
    return run_external_generator(sources, parallel, config);
  }
  if (parallel.empty()) {
    fail(ErrorKind::GeneratorFailure, "builtin generator needs a non-empty parallel corpus");
  }
  // Carrier templates are the (deduplicated) CS targets of the parallel corpus.
  Dataset templates;
  std::unordered_set<std::string> seen;
  for (const SeqlogicalPair& pair : parallel) {
    if (!seen.insert(pair.target).second) continue;
    ParsedSeqlogical parsed = parse_seqlogical(pair.target);
    Example ex;
    ex.id = pair.target_id;
    ex.utterance = std::move(parsed.utterance);
    ex.parse = std::move(parsed.parse);
    templates.examples.push_back(std::move(ex));
  }
  std::vector<GenCandidate> out;
  for (const GenSource& source : sources) {
    for (std::string& text : builtin_generate(source.seqlogical, templates, config.beam_size)) {
      out.push_back({source.id, std::move(text), Verdict::unset, std::nullopt});
    }
  }
  return out;
}

FilterResult filter_candidates(std::vector<GenCandidate> candidates, const Dataset& seeds,
                               const std::map<std::string, SourceInfo>& source_index) {
  FilterResult result;
  std::unordered_set<std::string> seed_forms;
  for (const Example& seed : seeds.examples) seed_forms.insert(seed.seqlogical());

  std::unordered_set<std::string> kept_forms;
  std::size_t n_kept = 0;
  for (GenCandidate& candidate : candidates) {
    auto source = source_index.find(candidate.source_id);
    if (source == source_index.end()) {
      fail(ErrorKind::UnknownSource, "candidate source id '" + candidate.source_id + "'");
    }
    const TreeVerdict tree = validate_tree(candidate.text, 2);
    if (!tree.ok) {
      candidate.verdict = Verdict::dropped;
      candidate.drop_reason = DropReason::invalid_tree;
      ++result.report.invalid_tree;
      continue;
    }
    const ParsedSeqlogical parsed = parse_seqlogical(candidate.text);
    const std::string canonical = serialize_seqlogical(parsed.utterance, parsed.parse);
    if (seed_forms.count(canonical) || kept_forms.count(canonical)) {
      candidate.verdict = Verdict::dropped;
      candidate.drop_reason = DropReason::duplicate;
      ++result.report.duplicate;
      continue;
    }
    if (compute_skeleton(parsed.parse) != source->second.skeleton) {
      candidate.verdict = Verdict::dropped;
      candidate.drop_reason = DropReason::skeleton_mismatch;
      ++result.report.skeleton_mismatch;
      continue;
    }
    candidate.verdict = Verdict::kept;
    ++result.report.kept;
    kept_forms.insert(canonical);

    Example ex;
    char id[32];
    std::snprintf(id, sizeof(id), "aug-%06zu", n_kept++);
    ex.id = id;
    ex.domain = source->second.domain;
    ex.language_tag = "cs";
    ex.utterance = parsed.utterance;
    ex.parse = parsed.parse;
    result.kept.examples.push_back(std::move(ex));
    result.kept_source_ids.push_back(candidate.source_id);
  }
  result.candidates = std::move(candidates);
  return result;
}

}  // namespace cstk
