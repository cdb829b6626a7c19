#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cstk/crf.hpp"
#include "cstk/error.hpp"

namespace cstk {

struct FeatureConfig {
  bool use_word_identity = true;
  std::optional<std::pair<int, int>> char_ngram_range;  // inclusive [min, max] lengths
  std::optional<std::string> embedding_file;
  bool freeze_embeddings = true;  // vectors are inputs, never updated
  int context_window = 1;

  bool any_enabled() const {
    return use_word_identity || char_ngram_range.has_value() || embedding_file.has_value();
  }
};

// Feature name <-> dense id registry. Grown during training, frozen for
// prediction (unknown names are skipped).
class FeatureSpace {
public:
  int intern(const std::string& name);
  int lookup(const std::string& name) const;  // -1 when absent
  const std::string& name(int id) const { return names_[id]; }
  int size() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& names() const { return names_; }
  void add_known(const std::string& name);  // for deserialization

private:
  std::unordered_map<std::string, int> ids_;
  std::vector<std::string> names_;
};

// Text vector file: first line "<count> <dim>", then "<word> <v1> ... <vdim>".
class EmbeddingTable {
public:
  static EmbeddingTable load(const std::string& path);

  int dim() const { return dim_; }
  // nullptr for out-of-vocabulary words (treated as a zero vector).
  const std::vector<double>* vector_of(const std::string& word) const;

private:
  int dim_ = 0;
  std::unordered_map<std::string, std::vector<double>> vectors_;
};

struct FeaturizedUtterance {
  crf::Sequence token_features;       // sparse, ids sorted within each token
  crf::TokenFeatures utterance_features;  // mean of token features
};

// Per-token features are the union of the enabled representations over a
// +-context_window of positions (word identity, boundary-marked character
// n-grams, embedding components); out-of-range positions contribute <s> /
// </s> markers. The utterance vector is the token average. The growing
// overload interns new names (training); the const overload skips unknown
// names and is safe for concurrent callers (prediction).
FeaturizedUtterance featurize(const std::vector<std::string>& tokens, const FeatureConfig& config,
                              FeatureSpace& space, const EmbeddingTable* embeddings);
FeaturizedUtterance featurize(const std::vector<std::string>& tokens, const FeatureConfig& config,
                              const FeatureSpace& space, const EmbeddingTable* embeddings);

// Character n-grams of a boundary-marked token, e.g. "sol" with n=3 ->
// {^so, sol, ol$}. Exposed for tests.
std::vector<std::string> char_ngrams(const std::string& token, int n_min, int n_max);

}  // namespace cstk
