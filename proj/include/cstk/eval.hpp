#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cstk/dataset.hpp"
#include "cstk/parallel.hpp"

namespace cstk {

struct IntentBreakdown {
  std::int64_t n = 0;
  double exact_match = 0.0;
};

struct EvalReport {
  double exact_match = 0.0;
  double intent_accuracy = 0.0;
  double slot_precision = 0.0;
  double slot_recall = 0.0;
  double slot_f1 = 0.0;
  std::int64_t n = 0;
  std::map<std::string, IntentBreakdown> per_intent;  // keyed by gold intent
  std::vector<std::uint8_t> per_utterance_correct;    // 1 = full parse correct
};

// An utterance scores correct iff the intent matches and the predicted slot
// set equals the gold slot set exactly (label and token span). Slot P/R/F1
// are micro-averaged over exact (label, span) matches.
EvalReport exact_match_accuracy(const Dataset& gold, const std::vector<SemanticParse>& pred);

// Two-sided paired sign-flip permutation test on the accuracy difference.
// Works in integer units of the per-utterance differences, so the >=
// comparison is exact; add-one smoothing keeps p in (0, 1]. Deterministic
// for a fixed seed (counter-based randomness, any worker count).
double paired_permutation_test(const std::vector<std::uint8_t>& correct_a,
                               const std::vector<std::uint8_t>& correct_b, int n_permutations,
                               std::uint64_t seed, Execution exec = Execution::parallel);

// Gold vs. predictions from files; pred is JSONL whose records carry at
// least {"seqlogical"}, aligned with gold by position. Writes the report
// JSON to report_path and a per-utterance listing (id, correct, gold/pred
// forms when wrong) to errors_path when non-empty.
EvalReport evaluate_run(const std::string& gold_path, const std::string& pred_path,
                        const std::string& report_path = "", const std::string& errors_path = "");

std::string report_to_json(const EvalReport& report);

}  // namespace cstk
