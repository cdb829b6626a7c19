#include "cstk/features.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

namespace cstk {

int FeatureSpace::intern(const std::string& name) {
  auto [it, inserted] = ids_.emplace(name, static_cast<int>(names_.size()));
  if (inserted) names_.push_back(name);
  return it->second;
}

int FeatureSpace::lookup(const std::string& name) const {
  auto it = ids_.find(name);
  return it == ids_.end() ? -1 : it->second;
}

void FeatureSpace::add_known(const std::string& name) { intern(name); }

EmbeddingTable EmbeddingTable::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::EmbeddingFileMissing, path);
  EmbeddingTable table;
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::MalformedEmbeddingLine, path + ": empty file");
  std::istringstream header(line);
  long long count = 0;
  if (!(header >> count >> table.dim_) || table.dim_ <= 0) {
    fail(ErrorKind::MalformedEmbeddingLine, path + ":1: expected '<count> <dim>'");
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string word;
    row >> word;
    std::vector<double> v(table.dim_);
    for (int d = 0; d < table.dim_; ++d) {
      if (!(row >> v[d])) {
        fail(ErrorKind::MalformedEmbeddingLine,
             path + ":" + std::to_string(line_no) + ": expected " + std::to_string(table.dim_) +
                 " floats for '" + word + "'");
      }
    }
    double extra;
    if (row >> extra) {
      fail(ErrorKind::MalformedEmbeddingLine,
           path + ":" + std::to_string(line_no) + ": too many columns for '" + word + "'");
    }
    table.vectors_[word] = std::move(v);
  }
  return table;
}

const std::vector<double>* EmbeddingTable::vector_of(const std::string& word) const {
  auto it = vectors_.find(word);
  return it == vectors_.end() ? nullptr : &it->second;
}

std::vector<std::string> char_ngrams(const std::string& token, int n_min, int n_max) {
  const std::string marked = "^" + token + "$";
  std::vector<std::string> grams;
  for (int n = n_min; n <= n_max; ++n) {
    if (n <= 0) continue;
    for (std::size_t i = 0; i + n <= marked.size(); ++i) {
      grams.push_back(marked.substr(i, n));
    }
  }
  return grams;
}

namespace {

const std::string kBos = "<s>";
const std::string kEos = "</s>";

void add_value(std::map<int, double>& acc, int id, double value) {
  if (id >= 0) acc[id] += value;
}

}  // namespace

namespace {

template <typename IdOf>
FeaturizedUtterance featurize_impl(const std::vector<std::string>& tokens,
                                   const FeatureConfig& config, IdOf&& id_of,
                                   const EmbeddingTable* embeddings) {
  if (!config.any_enabled()) {
    fail(ErrorKind::ConfigError, "no token representation enabled");
  }
  if (config.embedding_file && !embeddings) {
    fail(ErrorKind::EmbeddingFileMissing, *config.embedding_file + " (not loaded)");
  }

  FeaturizedUtterance out;
  const int n = static_cast<int>(tokens.size());
  std::map<int, double> utterance_acc;
  for (int t = 0; t < n; ++t) {
    std::map<int, double> acc;  // ordered so feature ids come out sorted
    for (int off = -config.context_window; off <= config.context_window; ++off) {
      const int pos = t + off;
      const std::string& tok = pos < 0 ? kBos : pos >= n ? kEos : tokens[pos];
      const std::string at = "@" + std::to_string(off);
      if (config.use_word_identity) {
        add_value(acc, id_of("w" + at + "=" + tok), 1.0);
      }
      if (config.char_ngram_range && pos >= 0 && pos < n) {
        const auto [lo, hi] = *config.char_ngram_range;
        for (const std::string& gram : char_ngrams(tok, lo, hi)) {
          add_value(acc, id_of("ng" + at + "=" + gram), 1.0);
        }
      }
      if (embeddings && pos >= 0 && pos < n) {
        if (const std::vector<double>* v = embeddings->vector_of(tok)) {
          for (int d = 0; d < embeddings->dim(); ++d) {
            add_value(acc, id_of("emb" + at + ":" + std::to_string(d)), (*v)[d]);
          }
        }
        // OOV tokens contribute the zero vector, i.e. nothing.
      }
    }
    crf::TokenFeatures features(acc.begin(), acc.end());
    for (const auto& [id, value] : features) utterance_acc[id] += value;
    out.token_features.push_back(std::move(features));
  }
  if (n > 0) {
    for (auto& [id, value] : utterance_acc) {
      out.utterance_features.emplace_back(id, value / n);
    }
  }
  return out;
}

}  // namespace

FeaturizedUtterance featurize(const std::vector<std::string>& tokens, const FeatureConfig& config,
                              FeatureSpace& space, const EmbeddingTable* embeddings) {
  return featurize_impl(tokens, config, [&](const std::string& name) { return space.intern(name); },
                        embeddings);
}

FeaturizedUtterance featurize(const std::vector<std::string>& tokens, const FeatureConfig& config,
                              const FeatureSpace& space, const EmbeddingTable* embeddings) {
  return featurize_impl(tokens, config, [&](const std::string& name) { return space.lookup(name); },
                        embeddings);
}

}  // namespace cstk
