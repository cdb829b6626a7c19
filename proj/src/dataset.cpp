#include "cstk/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "cstk/rng.hpp"

namespace cstk {

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Example example_from_parts(std::string id, std::string domain, const std::string& seqlogical,
                           std::optional<std::string> language, const std::string& origin,
                           std::size_t line_no) {
  Example ex;
  ex.id = std::move(id);
  ex.domain = std::move(domain);
  ex.language_tag = std::move(language);
  try {
    ParsedSeqlogical parsed = parse_seqlogical(seqlogical);
    ex.utterance = std::move(parsed.utterance);
    ex.parse = std::move(parsed.parse);
  } catch (const Error& e) {
    fail(ErrorKind::ParseError,
         origin + ":" + std::to_string(line_no) + ": bad seqlogical (" + e.what() + ")");
  }
  return ex;
}

}  // namespace

Dataset parse_dataset(const std::string& content, DatasetFormat format, const std::string& origin) {
  Dataset ds;
  std::unordered_set<std::string> seen_ids;
  std::istringstream in(content);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    Example ex;
    if (format == DatasetFormat::jsonl) {
      json record = json::parse(line, nullptr, false);
      if (record.is_discarded() || !record.is_object()) {
        fail(ErrorKind::ParseError, origin + ":" + std::to_string(line_no) + ": invalid JSON");
      }
      if (!record.contains("id") || !record.contains("domain") || !record.contains("seqlogical")) {
        fail(ErrorKind::ParseError,
             origin + ":" + std::to_string(line_no) + ": missing id/domain/seqlogical");
      }
      std::optional<std::string> language;
      if (record.contains("language") && !record["language"].is_null()) {
        language = record["language"].get<std::string>();
      }
      ex = example_from_parts(record["id"].get<std::string>(), record["domain"].get<std::string>(),
                              record["seqlogical"].get<std::string>(), std::move(language), origin,
                              line_no);
    } else {
      const auto tab1 = line.find('\t');
      const auto tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
      if (tab1 == std::string::npos || tab2 == std::string::npos ||
          line.find('\t', tab2 + 1) != std::string::npos) {
        fail(ErrorKind::ParseError,
             origin + ":" + std::to_string(line_no) + ": expected id<TAB>domain<TAB>seqlogical");
      }
      ex = example_from_parts(line.substr(0, tab1), line.substr(tab1 + 1, tab2 - tab1 - 1),
                              line.substr(tab2 + 1), std::nullopt, origin, line_no);
    }
    if (!seen_ids.insert(ex.id).second) {
      fail(ErrorKind::DuplicateId, origin + ":" + std::to_string(line_no) + ": id '" + ex.id + "'");
    }
    ds.examples.push_back(std::move(ex));
  }
  return ds;
}

Dataset load_dataset(const std::string& path, DatasetFormat format) {
  return parse_dataset(read_file(path), format, path);
}

std::string format_dataset(const Dataset& ds, DatasetFormat format) {
  std::string out;
  for (const Example& ex : ds.examples) {
    if (format == DatasetFormat::jsonl) {
      json record;
      record["id"] = ex.id;
      record["domain"] = ex.domain;
      record["seqlogical"] = ex.seqlogical();
      if (ex.language_tag) record["language"] = *ex.language_tag;
      out += record.dump();
    } else {
      out += ex.id + "\t" + ex.domain + "\t" + ex.seqlogical();
    }
    out += '\n';
  }
  return out;
}

void save_dataset(const Dataset& ds, const std::string& path, DatasetFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path);
  out << format_dataset(ds, format);
}

std::map<std::string, DomainStats> dataset_stats(const Dataset& ds) {
  std::map<std::string, DomainStats> stats;
  std::map<std::string, std::set<std::string>> intents, labels;
  for (const Example& ex : ds.examples) {
    DomainStats& s = stats[ex.domain];
    ++s.utterances;
    s.total_slots += static_cast<std::int64_t>(ex.parse.slots.size());
    intents[ex.domain].insert(ex.parse.intent);
    for (const SlotAnnotation& slot : ex.parse.slots) labels[ex.domain].insert(slot.label);
  }
  for (auto& [domain, s] : stats) {
    s.intents = static_cast<int>(intents[domain].size());
    s.slot_labels = static_cast<int>(labels[domain].size());
    s.mean_slots_per_utterance =
        s.utterances ? static_cast<double>(s.total_slots) / static_cast<double>(s.utterances) : 0.0;
  }
  return stats;
}

VocabRankTable VocabRankTable::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open vocabulary " + path);
  VocabRankTable table;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    table.rank_.emplace(line, static_cast<int>(table.rank_.size()));
  }
  return table;
}

VocabRankTable VocabRankTable::from_tokens(const std::vector<std::string>& tokens) {
  VocabRankTable table;
  for (const std::string& tok : tokens) {
    table.rank_.emplace(tok, static_cast<int>(table.rank_.size()));
  }
  return table;
}

std::optional<int> VocabRankTable::rank(const std::string& token) const {
  auto it = rank_.find(token);
  if (it == rank_.end()) return std::nullopt;
  return it->second;
}

LanguageRatioReport language_ratio(const Dataset& ds, const VocabRankTable& vocab_a,
                                   const VocabRankTable& vocab_b) {
  LanguageRatioReport report;
  for (const Example& ex : ds.examples) {
    for (const std::string& tok : ex.utterance.tokens) {
      const std::optional<int> ra = vocab_a.rank(tok);
      const std::optional<int> rb = vocab_b.rank(tok);
      LanguageAssignment assignment;
      if (!ra && !rb) {
        assignment = LanguageAssignment::unknown;
        ++report.unknown_count;
      } else if (ra && (!rb || *ra < *rb)) {
        assignment = LanguageAssignment::a;
        ++report.a_count;
      } else if (rb && (!ra || *rb < *ra)) {
        assignment = LanguageAssignment::b;
        ++report.b_count;
      } else {
        assignment = LanguageAssignment::tie;
        ++report.tie_count;
      }
      report.assignments.emplace_back(tok, assignment);
    }
  }
  if (report.b_count > 0) {
    report.ratio = static_cast<double>(report.a_count) / static_cast<double>(report.b_count);
  }
  return report;
}

Dataset sample_fewshot(const Dataset& ds, int n, std::uint64_t seed) {
  if (n < 0 || static_cast<std::size_t>(n) > ds.size()) {
    fail(ErrorKind::InfeasibleCoverage,
         "requested " + std::to_string(n) + " of " + std::to_string(ds.size()) + " examples");
  }

  // Label universe: intents and slot labels, tracked separately.
  std::map<std::string, std::vector<std::size_t>> by_label;  // "I:x" / "S:y" -> example indices
  for (std::size_t i = 0; i < ds.examples.size(); ++i) {
    const Example& ex = ds.examples[i];
    by_label["I:" + ex.parse.intent].push_back(i);
    std::set<std::string> slot_labels;
    for (const SlotAnnotation& slot : ex.parse.slots) slot_labels.insert(slot.label);
    for (const std::string& label : slot_labels) by_label["S:" + label].push_back(i);
  }

  Rng rng(derive_seed(seed, "sample_fewshot"));

  // Rarest label first; ties broken by label name so the pass order is fixed.
  std::vector<std::pair<std::size_t, std::string>> order;
  order.reserve(by_label.size());
  for (const auto& [label, indices] : by_label) order.emplace_back(indices.size(), label);
  std::sort(order.begin(), order.end());

  std::vector<char> selected(ds.size(), 0);
  std::size_t n_selected = 0;
  auto covers = [&](const std::string& label) {
    for (std::size_t i : by_label[label]) {
      if (selected[i]) return true;
    }
    return false;
  };
  for (const auto& [count, label] : order) {
    if (n_selected >= static_cast<std::size_t>(n)) break;
    if (covers(label)) continue;
    const std::vector<std::size_t>& pool = by_label[label];
    const std::size_t pick = pool[static_cast<std::size_t>(rng.below(pool.size()))];
    selected[pick] = 1;
    ++n_selected;
  }
  for (const auto& [count, label] : order) {
    if (!covers(label)) {
      fail(ErrorKind::InfeasibleCoverage,
           "cannot cover label " + label + " within " + std::to_string(n) + " examples");
    }
  }

  // Fill the remainder uniformly without replacement.
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (!selected[i]) rest.push_back(i);
  }
  shuffle(rest, rng);
  for (std::size_t i = 0; n_selected < static_cast<std::size_t>(n); ++i, ++n_selected) {
    selected[rest[i]] = 1;
  }

  Dataset out;
  out.split = ds.split;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (selected[i]) out.examples.push_back(ds.examples[i]);
  }
  return out;
}

}  // namespace cstk
