#include "cstk/eval.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cstk/rng.hpp"

namespace cstk {

namespace {

using nlohmann::json;

}  // namespace

EvalReport exact_match_accuracy(const Dataset& gold, const std::vector<SemanticParse>& pred) {
  if (gold.size() != pred.size()) {
    fail(ErrorKind::LengthMismatch, std::to_string(gold.size()) + " gold vs " +
                                        std::to_string(pred.size()) + " predicted parses");
  }
  EvalReport report;
  report.n = static_cast<std::int64_t>(gold.size());
  std::int64_t correct = 0, intent_correct = 0;
  std::int64_t tp = 0, n_pred_slots = 0, n_gold_slots = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const SemanticParse& g = gold.examples[i].parse;
    const SemanticParse& p = pred[i];
    const bool ok = g == p;
    report.per_utterance_correct.push_back(ok ? 1 : 0);
    if (ok) ++correct;
    if (g.intent == p.intent) ++intent_correct;
    IntentBreakdown& bucket = report.per_intent[g.intent];
    ++bucket.n;
    bucket.exact_match += ok ? 1.0 : 0.0;

    n_gold_slots += static_cast<std::int64_t>(g.slots.size());
    n_pred_slots += static_cast<std::int64_t>(p.slots.size());
    for (const SlotAnnotation& slot : p.slots) {
      // Spans within a parse are disjoint, so (label, span) identifies a slot.
      for (const SlotAnnotation& gs : g.slots) {
        if (gs == slot) {
          ++tp;
          break;
        }
      }
    }
  }
  report.exact_match = report.n ? static_cast<double>(correct) / report.n : 0.0;
  report.intent_accuracy = report.n ? static_cast<double>(intent_correct) / report.n : 0.0;
  report.slot_precision =
      n_pred_slots ? static_cast<double>(tp) / n_pred_slots : (n_gold_slots == 0 ? 1.0 : 0.0);
  report.slot_recall =
      n_gold_slots ? static_cast<double>(tp) / n_gold_slots : (n_pred_slots == 0 ? 1.0 : 0.0);
  report.slot_f1 = report.slot_precision + report.slot_recall > 0.0
                       ? 2.0 * report.slot_precision * report.slot_recall /
                             (report.slot_precision + report.slot_recall)
                       : 0.0;
  for (auto& [intent, bucket] : report.per_intent) {
    bucket.exact_match = bucket.n ? bucket.exact_match / bucket.n : 0.0;
  }
  return report;
}

double paired_permutation_test(const std::vector<std::uint8_t>& correct_a,
                               const std::vector<std::uint8_t>& correct_b, int n_permutations,
                               std::uint64_t seed, Execution exec) {
  if (correct_a.size() != correct_b.size()) {
    fail(ErrorKind::LengthMismatch, std::to_string(correct_a.size()) + " vs " +
                                        std::to_string(correct_b.size()) + " correctness entries");
  }
  const std::size_t n = correct_a.size();
  std::vector<int> diff;
  diff.reserve(n);
  long long observed = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const int d = static_cast<int>(correct_a[i]) - static_cast<int>(correct_b[i]);
    if (d != 0) diff.push_back(d);  // zero pairs are sign-flip invariant
    observed += d;
  }
  const long long threshold = observed < 0 ? -observed : observed;

  const std::uint64_t stream = derive_seed(seed, "paired_permutation_test");
  const std::size_t chunk = 1024;
  const std::size_t n_chunks = par::chunk_count(static_cast<std::size_t>(n_permutations), chunk);
  std::vector<long long> chunk_hits(n_chunks, 0);
  par::for_chunks(static_cast<std::size_t>(n_permutations), chunk, exec, [&](par::ChunkRange range) {
    long long hits = 0;
    for (std::size_t p = range.begin; p < range.end; ++p) {
      long long sum = 0;
      for (std::size_t i = 0; i < diff.size(); ++i) {
        const bool flip = hash_at(stream, p, i) & 1u;
        sum += flip ? -diff[i] : diff[i];
      }
      if ((sum < 0 ? -sum : sum) >= threshold) ++hits;
    }
    chunk_hits[range.index] = hits;
  });
  long long hits = 0;
  for (long long h : chunk_hits) hits += h;
  return static_cast<double>(hits + 1) / static_cast<double>(n_permutations + 1);
}

EvalReport evaluate_run(const std::string& gold_path, const std::string& pred_path,
                        const std::string& report_path, const std::string& errors_path) {
  const Dataset gold = load_dataset(gold_path, DatasetFormat::jsonl);

  std::ifstream in(pred_path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open " + pred_path);
  std::vector<SemanticParse> pred;
  std::vector<std::string> pred_forms;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    json record = json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.is_object() || !record.contains("seqlogical")) {
      fail(ErrorKind::ParseError,
           pred_path + ":" + std::to_string(line_no) + ": expected {\"seqlogical\"}");
    }
    const std::string form = record["seqlogical"].get<std::string>();
    try {
      pred.push_back(parse_seqlogical(form).parse);
    } catch (const Error& e) {
      fail(ErrorKind::ParseError,
           pred_path + ":" + std::to_string(line_no) + ": bad seqlogical (" + e.what() + ")");
    }
    pred_forms.push_back(form);
  }

  const EvalReport report = exact_match_accuracy(gold, pred);
  if (!report_path.empty()) {
    std::ofstream out(report_path, std::ios::binary);
    if (!out) fail(ErrorKind::IoError, "cannot write " + report_path);
    out << report_to_json(report) << '\n';
  }
  if (!errors_path.empty()) {
    std::ofstream out(errors_path, std::ios::binary);
    if (!out) fail(ErrorKind::IoError, "cannot write " + errors_path);
    for (std::size_t i = 0; i < gold.size(); ++i) {
      json record;
      record["id"] = gold.examples[i].id;
      record["correct"] = static_cast<int>(report.per_utterance_correct[i]);
      if (!report.per_utterance_correct[i]) {
        record["gold"] = gold.examples[i].seqlogical();
        record["pred"] = pred_forms[i];
      }
      out << record.dump() << '\n';
    }
  }
  return report;
}

std::string report_to_json(const EvalReport& report) {
  json doc;
  doc["exact_match"] = report.exact_match;
  doc["intent_accuracy"] = report.intent_accuracy;
  doc["slot_f1"] = report.slot_f1;
  doc["slot_precision"] = report.slot_precision;
  doc["slot_recall"] = report.slot_recall;
  doc["n"] = report.n;
  json per_intent = json::object();
  for (const auto& [intent, bucket] : report.per_intent) {
    per_intent[intent] = {{"n", bucket.n}, {"exact_match", bucket.exact_match}};
  }
  doc["per_intent"] = per_intent;
  return doc.dump(2);
}

}  // namespace cstk
