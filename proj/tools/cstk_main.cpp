// cstk — code-switched semantic parsing toolkit CLI.
//
// Exit codes: 0 success, 1 data error, 2 config/usage error, 3 external
// generator failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "cstk/eval.hpp"
#include "cstk/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

cstk::DatasetFormat format_from_string(const std::string& s) {
  if (s == "jsonl") return cstk::DatasetFormat::jsonl;
  if (s == "tsv") return cstk::DatasetFormat::tsv;
  cstk::fail(cstk::ErrorKind::ConfigError, "unknown format '" + s + "'");
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) cstk::fail(cstk::ErrorKind::IoError, "cannot write " + path);
  out << content;
}

std::string stats_to_json(const std::map<std::string, cstk::DomainStats>& stats) {
  json doc = json::object();
  for (const auto& [domain, s] : stats) {
    doc[domain] = {{"intents", s.intents},
                   {"slot_labels", s.slot_labels},
                   {"utterances", s.utterances},
                   {"total_slots", s.total_slots},
                   {"mean_slots_per_utterance", s.mean_slots_per_utterance}};
  }
  return doc.dump(2);
}

std::vector<std::uint8_t> load_correctness(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) cstk::fail(cstk::ErrorKind::IoError, "cannot open " + path);
  std::vector<std::uint8_t> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    json record = json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.contains("correct")) {
      cstk::fail(cstk::ErrorKind::ParseError,
                 path + ":" + std::to_string(line_no) + ": expected {\"correct\": 0|1}");
    }
    out.push_back(record["correct"].get<int>() ? 1 : 0);
  }
  return out;
}

struct FeatureFlags {
  bool no_word_identity = false;
  std::string char_ngrams;  // "MIN,MAX"
  std::string embedding_file;
  int context_window = 1;

  cstk::FeatureConfig to_config() const {
    cstk::FeatureConfig fc;
    fc.use_word_identity = !no_word_identity;
    fc.context_window = context_window;
    if (!char_ngrams.empty()) {
      const auto comma = char_ngrams.find(',');
      if (comma == std::string::npos) {
        cstk::fail(cstk::ErrorKind::ConfigError, "--char-ngrams expects MIN,MAX");
      }
      fc.char_ngram_range = {std::stoi(char_ngrams.substr(0, comma)),
                             std::stoi(char_ngrams.substr(comma + 1))};
    }
    if (!embedding_file.empty()) fc.embedding_file = embedding_file;
    return fc;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"code-switched task-oriented semantic parsing data toolkit"};
  app.require_subcommand(1);

  // stats
  auto* stats_cmd = app.add_subcommand("stats", "per-domain dataset statistics");
  std::string stats_input, stats_format = "jsonl", stats_output;
  stats_cmd->add_option("--input", stats_input, "dataset file")->required();
  stats_cmd->add_option("--format", stats_format, "jsonl|tsv");
  stats_cmd->add_option("--output", stats_output, "write report here instead of stdout");

  // sample
  auto* sample_cmd = app.add_subcommand("sample", "coverage-first few-shot sample");
  std::string sample_input, sample_output;
  int sample_n = 100;
  std::uint64_t sample_seed = 1;
  sample_cmd->add_option("--input", sample_input, "dataset file (jsonl)")->required();
  sample_cmd->add_option("--n", sample_n, "sample size")->required();
  sample_cmd->add_option("--seed", sample_seed, "random seed");
  sample_cmd->add_option("--output", sample_output, "output dataset (jsonl)")->required();

  // align
  auto* align_cmd = app.add_subcommand("align", "train tables and align a parallel corpus");
  std::string align_parallel, align_outdir, align_attention, align_source;
  cstk::AlignmentConfig align_config;
  align_cmd->add_option("--parallel", align_parallel, "parallel corpus (jsonl)")->required();
  align_cmd->add_option("--output-dir", align_outdir, "artifact directory")->required();
  align_cmd->add_option("--attention", align_attention, "attention matrices (jsonl); argmax mode");
  align_cmd->add_option("--source", align_source, "source dataset for slot indices (attention mode)");
  align_cmd->add_option("--em-iterations", align_config.em_iterations, "EM iterations");
  align_cmd->add_option("--null-prob", align_config.null_prob, "NULL word probability");
  align_cmd->add_option("--diagonal-tension", align_config.diagonal_tension, "diagonal prior tension");
  align_cmd->add_option("--epsilon", align_config.epsilon, "smoothing floor");

  // project
  auto* project_cmd = app.add_subcommand("project", "project annotations through alignments");
  std::string project_source, project_parallel, project_alignments, project_outdir;
  project_cmd->add_option("--source", project_source, "annotated source dataset (jsonl)")->required();
  project_cmd->add_option("--parallel", project_parallel, "parallel corpus (jsonl)")->required();
  project_cmd->add_option("--alignments", project_alignments, "alignment file (id<TAB>i-j ...)")
      ->required();
  project_cmd->add_option("--output-dir", project_outdir, "artifact directory")->required();

  // match
  auto* match_cmd = app.add_subcommand("match", "skeleton-constrained neighbor pairs");
  std::string match_seeds, match_pool, match_output, match_unit = "token";
  int match_k = 10;
  match_cmd->add_option("--seeds", match_seeds, "CS seed dataset (jsonl)")->required();
  match_cmd->add_option("--pool", match_pool, "EN pool dataset (jsonl)")->required();
  match_cmd->add_option("--k", match_k, "neighbors per seed");
  match_cmd->add_option("--distance-unit", match_unit, "token|character");
  match_cmd->add_option("--output", match_output, "pairs output (jsonl)")->required();

  // generate
  auto* generate_cmd = app.add_subcommand("generate", "decode candidates from pair sources");
  std::string gen_pairs, gen_output, gen_kind = "builtin", gen_command, gen_workdir = ".";
  int gen_beam = 5;
  generate_cmd->add_option("--pairs", gen_pairs, "pairs file from match (jsonl)")->required();
  generate_cmd->add_option("--beam", gen_beam, "beam size");
  generate_cmd->add_option("--generator", gen_kind, "builtin|external");
  generate_cmd->add_option("--command", gen_command, "external command template");
  generate_cmd->add_option("--work-dir", gen_workdir, "external generator work dir");
  generate_cmd->add_option("--output", gen_output, "candidates output (jsonl)")->required();

  // filter
  auto* filter_cmd = app.add_subcommand("filter", "three-rule candidate filter");
  std::string filter_candidates, filter_seeds, filter_pool, filter_outdir;
  filter_cmd->add_option("--candidates", filter_candidates, "candidates file (jsonl)")->required();
  filter_cmd->add_option("--seeds", filter_seeds, "CS seed dataset (jsonl)")->required();
  filter_cmd->add_option("--pool", filter_pool, "EN pool dataset (jsonl)")->required();
  filter_cmd->add_option("--output-dir", filter_outdir, "artifact directory")->required();

  // augment
  auto* augment_cmd = app.add_subcommand("augment", "run the configured augmentation pipelines");
  std::string augment_config_path, augment_outdir, augment_mode;
  std::optional<std::uint64_t> augment_seed;
  augment_cmd->add_option("--config", augment_config_path, "pipeline config (json)")->required();
  augment_cmd->add_option("--output-dir", augment_outdir, "override paths.output_dir");
  augment_cmd->add_option("--mode", augment_mode, "override mode");
  augment_cmd->add_option("--seed", augment_seed, "override seed");

  // train
  auto* train_cmd = app.add_subcommand("train", "train the joint intent+slot model");
  std::string train_train, train_dev, train_model;
  cstk::TrainConfig train_config;
  FeatureFlags train_features;
  train_cmd->add_option("--train", train_train, "training dataset (jsonl)")->required();
  train_cmd->add_option("--dev", train_dev, "dev dataset for early stopping (jsonl)");
  train_cmd->add_option("--model", train_model, "model output path")->required();
  train_cmd->add_option("--epochs", train_config.epochs, "epochs");
  train_cmd->add_option("--learning-rate", train_config.learning_rate, "SGD step size");
  train_cmd->add_option("--l2", train_config.l2, "L2 strength");
  train_cmd->add_option("--seed", train_config.seed, "shuffle seed");
  train_cmd->add_option("--patience", train_config.early_stop_patience, "early stop patience");
  train_cmd->add_flag("--no-word-identity", train_features.no_word_identity,
                      "disable word identity features");
  train_cmd->add_option("--char-ngrams", train_features.char_ngrams, "MIN,MAX n-gram lengths");
  train_cmd->add_option("--embeddings", train_features.embedding_file, "pretrained vector file");
  train_cmd->add_option("--context-window", train_features.context_window, "window radius");

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "parse a dataset with a trained model");
  std::string predict_model, predict_input, predict_output;
  predict_cmd->add_option("--model", predict_model, "model path")->required();
  predict_cmd->add_option("--input", predict_input, "dataset (jsonl)")->required();
  predict_cmd->add_option("--output", predict_output, "predictions (jsonl)")->required();

  // evaluate
  auto* evaluate_cmd = app.add_subcommand("evaluate", "exact-match scoring");
  std::string eval_gold, eval_pred, eval_report, eval_errors;
  evaluate_cmd->add_option("--gold", eval_gold, "gold dataset (jsonl)")->required();
  evaluate_cmd->add_option("--pred", eval_pred, "predictions (jsonl)")->required();
  evaluate_cmd->add_option("--report", eval_report, "report output (json)");
  evaluate_cmd->add_option("--errors", eval_errors, "per-utterance listing output (jsonl)");

  // significance
  auto* sig_cmd = app.add_subcommand("significance", "paired permutation test");
  std::string sig_a, sig_b;
  int sig_permutations = 10000;
  std::uint64_t sig_seed = 1;
  sig_cmd->add_option("--a", sig_a, "per-utterance listing for system A (jsonl)")->required();
  sig_cmd->add_option("--b", sig_b, "per-utterance listing for system B (jsonl)")->required();
  sig_cmd->add_option("--permutations", sig_permutations, "permutation count");
  sig_cmd->add_option("--seed", sig_seed, "random seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*stats_cmd) {
      const cstk::Dataset ds = cstk::load_dataset(stats_input, format_from_string(stats_format));
      const std::string report = stats_to_json(cstk::dataset_stats(ds));
      if (stats_output.empty()) {
        std::cout << report << '\n';
      } else {
        write_text(stats_output, report + "\n");
      }
    } else if (*sample_cmd) {
      const cstk::Dataset ds = cstk::load_dataset(sample_input, cstk::DatasetFormat::jsonl);
      cstk::save_dataset(cstk::sample_fewshot(ds, sample_n, sample_seed), sample_output,
                         cstk::DatasetFormat::jsonl);
    } else if (*align_cmd) {
      const auto corpus = cstk::load_parallel_corpus(align_parallel);
      std::vector<cstk::AttentionMatrix> attention;
      std::optional<cstk::Dataset> source;
      if (!align_attention.empty()) {
        attention = cstk::load_attention_file(align_attention);
        if (!align_source.empty()) {
          source = cstk::load_dataset(align_source, cstk::DatasetFormat::jsonl);
        }
      }
      const cstk::AlignmentArtifacts artifacts =
          cstk::align_corpus(corpus, align_config, align_attention.empty() ? nullptr : &attention,
                             source ? &*source : nullptr);
      fs::create_directories(align_outdir);
      const fs::path dir(align_outdir);
      if (!artifacts.used_attention) {
        artifacts.forward_table.save((dir / "ttable.fwd.tsv").string());
        artifacts.reverse_table.save((dir / "ttable.rev.tsv").string());
        cstk::save_alignments(artifacts.forward, (dir / "align.fwd.txt").string());
        cstk::save_alignments(artifacts.reverse, (dir / "align.rev.txt").string());
        cstk::save_alignments(artifacts.symmetric, (dir / "align.sym.txt").string());
      } else {
        cstk::save_alignments(artifacts.symmetric, (dir / "align.attn.txt").string());
      }
    } else if (*project_cmd) {
      const cstk::Dataset source = cstk::load_dataset(project_source, cstk::DatasetFormat::jsonl);
      const auto corpus = cstk::load_parallel_corpus(project_parallel);
      std::map<std::string, const cstk::ParallelPair*> pair_by_id;
      for (const auto& pair : corpus) pair_by_id.emplace(pair.pair_id, &pair);
      std::vector<std::pair<std::string, cstk::AlignmentSet>> alignments;
      for (const auto& [id, links] : cstk::load_alignment_links(project_alignments)) {
        auto it = pair_by_id.find(id);
        if (it == pair_by_id.end()) continue;
        cstk::AlignmentSet set;
        set.source_len = static_cast<int>(it->second->source_tokens.size());
        set.target_len = static_cast<int>(it->second->target_tokens.size());
        for (const cstk::AlignmentLink& link : links) set.insert(link.source, link.target);
        alignments.emplace_back(id, std::move(set));
      }
      const cstk::ProjectionRun run = cstk::project_dataset(source, corpus, alignments);
      fs::create_directories(project_outdir);
      const fs::path dir(project_outdir);
      cstk::save_dataset(run.projected, (dir / "projected.jsonl").string(),
                         cstk::DatasetFormat::jsonl);
      std::string rejections;
      for (const auto& [id, reason] : run.rejections) {
        json record;
        record["id"] = id;
        record["reason"] = reason;
        rejections += record.dump() + "\n";
      }
      write_text((dir / "projection_rejections.jsonl").string(), rejections);
      std::cerr << "projected " << run.projected.size() << ", rejected " << run.rejections.size()
                << "\n";
    } else if (*match_cmd) {
      const cstk::Dataset seeds = cstk::load_dataset(match_seeds, cstk::DatasetFormat::jsonl);
      const cstk::Dataset pool = cstk::load_dataset(match_pool, cstk::DatasetFormat::jsonl);
      cstk::MatchConfig mc;
      mc.k = match_k;
      if (match_unit == "token") {
        mc.distance_unit = cstk::DistanceUnit::token;
      } else if (match_unit == "character") {
        mc.distance_unit = cstk::DistanceUnit::character;
      } else {
        cstk::fail(cstk::ErrorKind::ConfigError, "unknown distance unit '" + match_unit + "'");
      }
      std::string out;
      for (const cstk::SeqlogicalPair& pair : cstk::build_parallel_corpus(seeds, pool, mc)) {
        json record;
        record["source"] = pair.source;
        record["target"] = pair.target;
        record["source_id"] = pair.source_id;
        record["target_id"] = pair.target_id;
        out += record.dump() + "\n";
      }
      write_text(match_output, out);
    } else if (*generate_cmd) {
      std::ifstream in(gen_pairs, std::ios::binary);
      if (!in) cstk::fail(cstk::ErrorKind::IoError, "cannot open " + gen_pairs);
      std::vector<cstk::SeqlogicalPair> pairs;
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        json record = json::parse(line, nullptr, false);
        if (record.is_discarded()) {
          cstk::fail(cstk::ErrorKind::ParseError, gen_pairs + ": invalid JSON line");
        }
        pairs.push_back({record["source"].get<std::string>(), record["target"].get<std::string>(),
                         record.value("source_id", ""), record.value("target_id", "")});
      }
      cstk::GenerationConfig gc;
      gc.beam_size = gen_beam;
      if (gen_kind == "external") {
        gc.generator.kind = cstk::GeneratorKind::external;
        gc.generator.external_command = gen_command;
        gc.generator.work_dir = gen_workdir;
      } else if (gen_kind != "builtin") {
        cstk::fail(cstk::ErrorKind::ConfigError, "unknown generator '" + gen_kind + "'");
      }
      std::vector<cstk::GenSource> sources;
      std::set<std::string> seen;
      for (const cstk::SeqlogicalPair& pair : pairs) {
        if (seen.insert(pair.source_id.empty() ? pair.source : pair.source_id).second) {
          sources.push_back({pair.source_id.empty() ? pair.source : pair.source_id, pair.source});
        }
      }
      std::string out;
      for (const cstk::GenCandidate& candidate : cstk::generate_candidates(sources, pairs, gc)) {
        json record;
        record["source_id"] = candidate.source_id;
        record["text"] = candidate.text;
        out += record.dump() + "\n";
      }
      write_text(gen_output, out);
    } else if (*filter_cmd) {
      std::ifstream in(filter_candidates, std::ios::binary);
      if (!in) cstk::fail(cstk::ErrorKind::IoError, "cannot open " + filter_candidates);
      std::vector<cstk::GenCandidate> candidates;
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        json record = json::parse(line, nullptr, false);
        if (record.is_discarded()) {
          cstk::fail(cstk::ErrorKind::ParseError, filter_candidates + ": invalid JSON line");
        }
        candidates.push_back({record["source_id"].get<std::string>(),
                              record["text"].get<std::string>(), cstk::Verdict::unset,
                              std::nullopt});
      }
      const cstk::Dataset seeds = cstk::load_dataset(filter_seeds, cstk::DatasetFormat::jsonl);
      const cstk::Dataset pool = cstk::load_dataset(filter_pool, cstk::DatasetFormat::jsonl);
      std::map<std::string, cstk::SourceInfo> index;
      for (const cstk::Example& ex : pool.examples) {
        index.emplace(ex.id, cstk::SourceInfo{cstk::compute_skeleton(ex.parse), ex.domain});
      }
      const cstk::FilterResult result = cstk::filter_candidates(candidates, seeds, index);
      fs::create_directories(filter_outdir);
      const fs::path dir(filter_outdir);
      std::string augmented, drops;
      for (std::size_t i = 0; i < result.kept.examples.size(); ++i) {
        const cstk::Example& ex = result.kept.examples[i];
        json record;
        record["id"] = ex.id;
        record["domain"] = ex.domain;
        record["seqlogical"] = ex.seqlogical();
        if (ex.language_tag) record["language"] = *ex.language_tag;
        record["source_id"] = result.kept_source_ids[i];
        augmented += record.dump() + "\n";
      }
      for (const cstk::GenCandidate& candidate : result.candidates) {
        if (candidate.verdict != cstk::Verdict::dropped) continue;
        json record;
        record["source_id"] = candidate.source_id;
        record["text"] = candidate.text;
        record["verdict_reason"] = cstk::to_string(*candidate.drop_reason);
        drops += record.dump() + "\n";
      }
      write_text((dir / "augmented.jsonl").string(), augmented);
      write_text((dir / "drops.jsonl").string(), drops);
      json report = {{"kept", result.report.kept},
                     {"duplicate", result.report.duplicate},
                     {"invalid_tree", result.report.invalid_tree},
                     {"skeleton_mismatch", result.report.skeleton_mismatch}};
      std::cout << report.dump(2) << '\n';
    } else if (*augment_cmd) {
      cstk::PipelineConfig config = cstk::load_pipeline_config(augment_config_path);
      if (!augment_outdir.empty()) config.output_dir = augment_outdir;
      if (!augment_mode.empty()) {
        if (augment_mode == "translate_align") {
          config.mode = cstk::PipelineMode::translate_align;
        } else if (augment_mode == "match_filter") {
          config.mode = cstk::PipelineMode::match_filter;
        } else if (augment_mode == "both") {
          config.mode = cstk::PipelineMode::both;
        } else {
          cstk::fail(cstk::ErrorKind::ConfigError, "unknown mode '" + augment_mode + "'");
        }
      }
      if (augment_seed) config.seed = *augment_seed;
      const cstk::PipelineResult result = cstk::run_augment_pipeline(config);
      json counts = json::object();
      for (const auto& [key, value] : result.counts) counts[key] = value;
      std::cout << counts.dump(2) << '\n';
    } else if (*train_cmd) {
      const cstk::Dataset train = cstk::load_dataset(train_train, cstk::DatasetFormat::jsonl);
      cstk::Dataset dev;
      if (!train_dev.empty()) dev = cstk::load_dataset(train_dev, cstk::DatasetFormat::jsonl);
      cstk::TrainLog log;
      const cstk::JointModel model =
          cstk::JointModel::train(train, dev, train_features.to_config(), train_config, &log);
      model.save(train_model);
      for (std::size_t e = 0; e < log.epoch_loss.size(); ++e) {
        std::cerr << "epoch " << e << " loss " << log.epoch_loss[e];
        if (e < log.dev_exact_match.size()) std::cerr << " dev_em " << log.dev_exact_match[e];
        std::cerr << "\n";
      }
    } else if (*predict_cmd) {
      const cstk::JointModel model = cstk::JointModel::load(predict_model);
      const cstk::Dataset input = cstk::load_dataset(predict_input, cstk::DatasetFormat::jsonl);
      std::string out;
      for (const cstk::Example& ex : input.examples) {
        const cstk::SemanticParse parse = model.predict(ex.utterance);
        json record;
        record["id"] = ex.id;
        record["seqlogical"] = cstk::serialize_seqlogical(ex.utterance, parse);
        out += record.dump() + "\n";
      }
      write_text(predict_output, out);
    } else if (*evaluate_cmd) {
      const cstk::EvalReport report =
          cstk::evaluate_run(eval_gold, eval_pred, eval_report, eval_errors);
      std::cout << cstk::report_to_json(report) << '\n';
    } else if (*sig_cmd) {
      const auto a = load_correctness(sig_a);
      const auto b = load_correctness(sig_b);
      const double p = cstk::paired_permutation_test(a, b, sig_permutations, sig_seed);
      json out = {{"p_value", p}, {"n", a.size()}, {"permutations", sig_permutations}};
      std::cout << out.dump(2) << '\n';
    }
  } catch (const cstk::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    switch (e.kind()) {
      case cstk::ErrorKind::ConfigError: return 2;
      case cstk::ErrorKind::GeneratorFailure: return 3;
      default: return 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
