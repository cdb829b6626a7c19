#include "cstk/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace cstk {

namespace {

using nlohmann::json;

std::vector<std::string> split_whitespace(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) out.push_back(std::move(tok));
  return out;
}

// Vocabulary interning for the EM loop. NULL is source id 0.
struct Vocab {
  std::unordered_map<std::string, int> ids;
  std::vector<std::string> words;

  int intern(const std::string& word) {
    auto [it, inserted] = ids.emplace(word, static_cast<int>(words.size()));
    if (inserted) words.push_back(word);
    return it->second;
  }
};

struct IntPair {
  std::vector<int> src;
  std::vector<int> tgt;
};

constexpr int kNullId = 0;

// Prior over source positions (1-based ratio convention, as in the usual
// reparameterized diagonal model) for target position j. NULL always takes
// p0; real positions share 1-p0, tilted toward the diagonal when lambda > 0.
std::vector<double> position_prior(int source_len, int target_j, int target_len,
                                   const AlignmentConfig& cfg) {
  std::vector<double> prior(static_cast<std::size_t>(source_len) + 1);
  prior[0] = cfg.null_prob;
  const double real_mass = 1.0 - cfg.null_prob;
  if (cfg.diagonal_tension <= 0.0) {
    for (int i = 0; i < source_len; ++i) prior[static_cast<std::size_t>(i) + 1] = real_mass / source_len;
    return prior;
  }
  double z = 0.0;
  for (int i = 0; i < source_len; ++i) {
    const double delta = std::abs(static_cast<double>(i + 1) / source_len -
                                  static_cast<double>(target_j + 1) / target_len);
    const double w = std::exp(-cfg.diagonal_tension * delta);
    prior[static_cast<std::size_t>(i) + 1] = w;
    z += w;
  }
  for (int i = 0; i < source_len; ++i) prior[static_cast<std::size_t>(i) + 1] *= real_mass / z;
  return prior;
}

using CountRow = std::unordered_map<int, double>;

struct EStepResult {
  std::vector<CountRow> counts;  // [source_id] -> target_id -> expected count
  double log_likelihood = 0.0;
};

// Expected counts and log-likelihood for pairs [begin, end) under the
// current table. Accumulation runs in pair order within the range.
EStepResult e_step_range(const std::vector<IntPair>& pairs, std::size_t begin, std::size_t end,
                         const std::vector<CountRow>& table, std::size_t n_source,
                         const AlignmentConfig& cfg) {
  EStepResult r;
  r.counts.resize(n_source);
  std::vector<double> posterior;
  for (std::size_t p = begin; p < end; ++p) {
    const IntPair& pair = pairs[p];
    const int n = static_cast<int>(pair.src.size());
    const int m = static_cast<int>(pair.tgt.size());
    for (int j = 0; j < m; ++j) {
      const std::vector<double> prior = position_prior(n, j, m, cfg);
      const int f = pair.tgt[static_cast<std::size_t>(j)];
      posterior.assign(static_cast<std::size_t>(n) + 1, 0.0);
      double denom = 0.0;
      {
        auto it = table[kNullId].find(f);
        const double t = it == table[kNullId].end() ? 0.0 : it->second;
        posterior[0] = prior[0] * t;
        denom += posterior[0];
      }
      for (int i = 0; i < n; ++i) {
        const int e = pair.src[static_cast<std::size_t>(i)];
        auto it = table[static_cast<std::size_t>(e)].find(f);
        const double t = it == table[static_cast<std::size_t>(e)].end() ? 0.0 : it->second;
        posterior[static_cast<std::size_t>(i) + 1] = prior[static_cast<std::size_t>(i) + 1] * t;
        denom += posterior[static_cast<std::size_t>(i) + 1];
      }
      if (denom <= 0.0) continue;  // p0 = 0 with an all-null row; no evidence
      r.log_likelihood += std::log(denom);
      if (posterior[0] > 0.0) r.counts[kNullId][f] += posterior[0] / denom;
      for (int i = 0; i < n; ++i) {
        const double c = posterior[static_cast<std::size_t>(i) + 1];
        if (c > 0.0) r.counts[static_cast<std::size_t>(pair.src[static_cast<std::size_t>(i)])][f] += c / denom;
      }
    }
  }
  return r;
}

constexpr std::size_t kEmChunk = 64;

}  // namespace

double TranslationTable::prob(const std::string& source_word, const std::string& target_word) const {
  auto se = source_ids_.find(source_word);
  if (se == source_ids_.end()) return epsilon_;
  auto te = target_ids_.find(target_word);
  if (te == target_ids_.end()) return epsilon_;
  const CountRow& row = rows_[static_cast<std::size_t>(se->second)];
  auto it = row.find(te->second);
  return it == row.end() ? epsilon_ : it->second;
}

double TranslationTable::null_prob_of(const std::string& target_word) const {
  return prob(kNullWord, target_word);
}

std::map<std::string, double> TranslationTable::row_sums() const {
  std::map<std::string, double> sums;
  for (std::size_t e = 0; e < rows_.size(); ++e) {
    double s = 0.0;
    for (const auto& [f, p] : rows_[e]) s += p;
    if (!rows_[e].empty()) sums[source_words_[e]] = s;
  }
  return sums;
}

std::string TranslationTable::dump() const {
  std::vector<std::string> lines;
  for (std::size_t e = 0; e < rows_.size(); ++e) {
    for (const auto& [f, p] : rows_[e]) {
      std::ostringstream line;
      line.precision(17);
      line << source_words_[e] << '\t' << target_words_[static_cast<std::size_t>(f)] << '\t' << p;
      lines.push_back(line.str());
    }
  }
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const std::string& line : lines) {
    out += line;
    out += '\n';
  }
  return out;
}

void TranslationTable::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path);
  out << dump();
}

TranslationTable TranslationTable::load(const std::string& path, double epsilon) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open " + path);
  TranslationTable table;
  table.epsilon_ = epsilon;
  Vocab src, tgt;
  src.intern(kNullWord);
  std::vector<CountRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab1 = line.find('\t');
    const auto tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
    if (tab1 == std::string::npos || tab2 == std::string::npos) {
      fail(ErrorKind::ParseError, path + ":" + std::to_string(line_no) + ": expected e<TAB>f<TAB>p");
    }
    const int e = src.intern(line.substr(0, tab1));
    const int f = tgt.intern(line.substr(tab1 + 1, tab2 - tab1 - 1));
    const double p = std::stod(line.substr(tab2 + 1));
    if (static_cast<std::size_t>(e) >= rows.size()) rows.resize(static_cast<std::size_t>(e) + 1);
    rows[static_cast<std::size_t>(e)][f] = p;
  }
  rows.resize(src.words.size());
  table.source_ids_ = std::move(src.ids);
  table.source_words_ = std::move(src.words);
  table.target_ids_ = std::move(tgt.ids);
  table.target_words_ = std::move(tgt.words);
  table.rows_ = std::move(rows);
  return table;
}

bool AlignmentSet::contains(int source, int target) const {
  return std::binary_search(links.begin(), links.end(), AlignmentLink{source, target});
}

void AlignmentSet::insert(int source, int target) {
  AlignmentLink link{source, target};
  auto it = std::lower_bound(links.begin(), links.end(), link);
  if (it == links.end() || !(*it == link)) links.insert(it, link);
}

TranslationTable train_translation_table(const std::vector<ParallelPair>& corpus,
                                         const AlignmentConfig& config,
                                         std::vector<double>* iteration_log_likelihood,
                                         Execution exec) {
  if (corpus.empty()) fail(ErrorKind::EmptyCorpus, "no parallel pairs to train on");
  for (const ParallelPair& pair : corpus) {
    if (pair.source_tokens.empty() || pair.target_tokens.empty()) {
      fail(ErrorKind::EmptyCorpus, "pair '" + pair.pair_id + "' has an empty side");
    }
  }

  Vocab src, tgt;
  src.intern(TranslationTable::kNullWord);
  std::vector<IntPair> pairs(corpus.size());
  for (std::size_t p = 0; p < corpus.size(); ++p) {
    for (const std::string& w : corpus[p].source_tokens) pairs[p].src.push_back(src.intern(w));
    for (const std::string& w : corpus[p].target_tokens) pairs[p].tgt.push_back(tgt.intern(w));
  }
  const std::size_t n_source = src.words.size();

  // Support: co-occurring pairs, plus NULL x every target word. Initial
  // rows are uniform over each row's support so row sums start at 1.
  std::vector<std::set<int>> support(n_source);
  for (const IntPair& pair : pairs) {
    for (int f : pair.tgt) {
      support[kNullId].insert(f);
      for (int e : pair.src) support[static_cast<std::size_t>(e)].insert(f);
    }
  }
  std::vector<CountRow> table(n_source);
  for (std::size_t e = 0; e < n_source; ++e) {
    if (support[e].empty()) continue;
    const double uniform = 1.0 / static_cast<double>(support[e].size());
    for (int f : support[e]) table[e][f] = uniform;
  }

  const std::size_t n_chunks = par::chunk_count(pairs.size(), kEmChunk);
  for (int iter = 0; iter < config.em_iterations; ++iter) {
    std::vector<EStepResult> chunk_results(n_chunks);
    par::for_chunks(pairs.size(), kEmChunk, exec, [&](par::ChunkRange chunk) {
      chunk_results[chunk.index] =
          e_step_range(pairs, chunk.begin, chunk.end, table, n_source, config);
    });
    // Merge in chunk order: per (e, f) key the additions always happen in
    // the same sequence, independent of thread count.
    std::vector<CountRow> counts(n_source);
    double log_likelihood = 0.0;
    for (const EStepResult& r : chunk_results) {
      log_likelihood += r.log_likelihood;
      for (std::size_t e = 0; e < n_source; ++e) {
        for (const auto& [f, c] : r.counts[e]) counts[e][f] += c;
      }
    }
    if (iteration_log_likelihood) iteration_log_likelihood->push_back(log_likelihood);
    // M-step: normalize rows that gathered any mass.
    for (std::size_t e = 0; e < n_source; ++e) {
      double total = 0.0;
      for (const auto& [f, c] : counts[e]) total += c;
      if (total <= 0.0) continue;
      CountRow& row = table[e];
      for (auto& [f, p] : row) p = 0.0;
      for (const auto& [f, c] : counts[e]) row[f] = c / total;
    }
  }

  TranslationTable result;
  result.epsilon_ = config.epsilon;
  result.source_ids_ = std::move(src.ids);
  result.source_words_ = std::move(src.words);
  result.target_ids_ = std::move(tgt.ids);
  result.target_words_ = std::move(tgt.words);
  result.rows_ = std::move(table);
  return result;
}

AlignmentSet align_asymmetric(const ParallelPair& pair, const TranslationTable& table,
                              const AlignmentConfig& config) {
  AlignmentSet out;
  out.source_len = static_cast<int>(pair.source_tokens.size());
  out.target_len = static_cast<int>(pair.target_tokens.size());
  for (int j = 0; j < out.target_len; ++j) {
    const std::vector<double> prior = position_prior(out.source_len, j, out.target_len, config);
    const std::string& f = pair.target_tokens[static_cast<std::size_t>(j)];
    // NULL scanned first, real positions in order; strict > keeps the
    // earliest candidate on ties, so NULL wins a NULL/real tie and the
    // lowest source index wins among real positions.
    double best = prior[0] * table.null_prob_of(f);
    int best_i = -1;
    for (int i = 0; i < out.source_len; ++i) {
      const double score =
          prior[static_cast<std::size_t>(i) + 1] * table.prob(pair.source_tokens[static_cast<std::size_t>(i)], f);
      if (score > best) {
        best = score;
        best_i = i;
      }
    }
    if (best_i >= 0) out.insert(best_i, j);
  }
  return out;
}

namespace {

struct CoverageState {
  std::vector<int> source_cover;
  std::vector<int> target_cover;

  explicit CoverageState(const AlignmentSet& a)
      : source_cover(static_cast<std::size_t>(a.source_len), 0),
        target_cover(static_cast<std::size_t>(a.target_len), 0) {
    for (const AlignmentLink& link : a.links) add(link);
  }
  void add(const AlignmentLink& link) {
    ++source_cover[static_cast<std::size_t>(link.source)];
    ++target_cover[static_cast<std::size_t>(link.target)];
  }
  bool source_aligned(int i) const { return source_cover[static_cast<std::size_t>(i)] > 0; }
  bool target_aligned(int j) const { return target_cover[static_cast<std::size_t>(j)] > 0; }
};

bool adjacent(const AlignmentSet& set, const AlignmentLink& link) {
  for (int di = -1; di <= 1; ++di) {
    for (int dj = -1; dj <= 1; ++dj) {
      if (di == 0 && dj == 0) continue;
      if (set.contains(link.source + di, link.target + dj)) return true;
    }
  }
  return false;
}

}  // namespace

AlignmentSet symmetrize_gdfa(const AlignmentSet& forward, const AlignmentSet& reverse) {
  if (forward.source_len != reverse.source_len || forward.target_len != reverse.target_len) {
    fail(ErrorKind::DimensionMismatch,
         "forward is " + std::to_string(forward.source_len) + "x" + std::to_string(forward.target_len) +
             ", reverse is " + std::to_string(reverse.source_len) + "x" +
             std::to_string(reverse.target_len));
  }

  AlignmentSet result;
  result.source_len = forward.source_len;
  result.target_len = forward.target_len;

  AlignmentSet uni;
  uni.source_len = forward.source_len;
  uni.target_len = forward.target_len;
  for (const AlignmentLink& link : forward.links) {
    if (reverse.contains(link.source, link.target)) result.insert(link.source, link.target);
    uni.insert(link.source, link.target);
  }
  for (const AlignmentLink& link : reverse.links) uni.insert(link.source, link.target);

  // Grow: synchronous passes. Each pass evaluates every missing union link
  // against the state the pass started from; iterating to a fixpoint makes
  // the result independent of scan order (and hence symmetric in the two
  // directions).
  CoverageState cover(result);
  bool grew = true;
  while (grew) {
    grew = false;
    const AlignmentSet snapshot = result;
    const CoverageState snapshot_cover = cover;
    for (const AlignmentLink& link : uni.links) {
      if (snapshot.contains(link.source, link.target) || result.contains(link.source, link.target)) {
        continue;
      }
      if (!adjacent(snapshot, link)) continue;
      if (snapshot_cover.source_aligned(link.source) && snapshot_cover.target_aligned(link.target)) {
        continue;
      }
      result.insert(link.source, link.target);
      cover.add(link);
      grew = true;
    }
  }

  // Final-and: sequential sweep in (source, target) order; both endpoints
  // must still be unaligned at the moment the link is considered.
  for (const AlignmentLink& link : uni.links) {
    if (cover.source_aligned(link.source) || cover.target_aligned(link.target)) continue;
    result.insert(link.source, link.target);
    cover.add(link);
  }
  return result;
}

AlignmentSet attention_align(const AttentionMatrix& matrix, const std::vector<int>& slot_source_indices) {
  AlignmentSet out;
  out.source_len = matrix.source_len;
  out.target_len = matrix.target_len;
  for (int i : slot_source_indices) {
    if (i < 0 || i >= matrix.source_len) {
      fail(ErrorKind::IndexOutOfRange, "source index " + std::to_string(i) + " not in [0," +
                                           std::to_string(matrix.source_len) + ")");
    }
    int best_j = 0;
    double best = matrix.at(i, 0);
    for (int j = 1; j < matrix.target_len; ++j) {
      if (matrix.at(i, j) > best) {
        best = matrix.at(i, j);
        best_j = j;
      }
    }
    out.insert(i, best_j);
  }
  return out;
}

std::vector<ParallelPair> parse_parallel_corpus(const std::string& content, const std::string& origin) {
  std::vector<ParallelPair> pairs;
  std::istringstream in(content);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    json record = json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.is_object() || !record.contains("id") ||
        !record.contains("src") || !record.contains("tgt")) {
      fail(ErrorKind::ParseError,
           origin + ":" + std::to_string(line_no) + ": expected {\"id\",\"src\",\"tgt\"}");
    }
    ParallelPair pair;
    pair.pair_id = record["id"].get<std::string>();
    pair.source_tokens = split_whitespace(record["src"].get<std::string>());
    pair.target_tokens = split_whitespace(record["tgt"].get<std::string>());
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

std::vector<ParallelPair> load_parallel_corpus(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_parallel_corpus(buf.str(), path);
}

std::string format_alignment_line(const std::string& pair_id, const AlignmentSet& links) {
  std::string out = pair_id + "\t";
  bool first = true;
  for (const AlignmentLink& link : links.links) {
    if (!first) out += ' ';
    first = false;
    out += std::to_string(link.source) + "-" + std::to_string(link.target);
  }
  return out;
}

void save_alignments(const std::vector<std::pair<std::string, AlignmentSet>>& alignments,
                     const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path);
  for (const auto& [id, links] : alignments) out << format_alignment_line(id, links) << '\n';
}

std::vector<std::pair<std::string, std::vector<AlignmentLink>>> load_alignment_links(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open " + path);
  std::vector<std::pair<std::string, std::vector<AlignmentLink>>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      fail(ErrorKind::ParseError, path + ":" + std::to_string(line_no) + ": expected id<TAB>links");
    }
    std::vector<AlignmentLink> links;
    std::istringstream rest(line.substr(tab + 1));
    std::string item;
    while (rest >> item) {
      const auto dash = item.find('-');
      if (dash == std::string::npos) {
        fail(ErrorKind::ParseError,
             path + ":" + std::to_string(line_no) + ": bad link '" + item + "'");
      }
      links.push_back({std::stoi(item.substr(0, dash)), std::stoi(item.substr(dash + 1))});
    }
    out.emplace_back(line.substr(0, tab), std::move(links));
  }
  return out;
}

std::vector<AttentionMatrix> load_attention_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open " + path);
  std::vector<AttentionMatrix> matrices;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    json record = json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.is_object() || !record.contains("id") ||
        !record.contains("scores") || !record["scores"].is_array()) {
      fail(ErrorKind::ParseError,
           path + ":" + std::to_string(line_no) + ": expected {\"id\",\"scores\"}");
    }
    AttentionMatrix m;
    m.pair_id = record["id"].get<std::string>();
    m.source_len = static_cast<int>(record["scores"].size());
    for (const auto& row : record["scores"]) {
      if (!row.is_array() || (m.target_len != 0 && static_cast<int>(row.size()) != m.target_len)) {
        fail(ErrorKind::ParseError, path + ":" + std::to_string(line_no) + ": ragged score rows");
      }
      m.target_len = static_cast<int>(row.size());
      for (const auto& v : row) m.scores.push_back(v.get<double>());
    }
    matrices.push_back(std::move(m));
  }
  return matrices;
}

}  // namespace cstk
