#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cstk/crf.hpp"
#include "cstk/dataset.hpp"
#include "cstk/features.hpp"

namespace cstk {

struct TrainConfig {
  int epochs = 20;
  double learning_rate = 0.2;
  double l2 = 1e-6;
  std::uint64_t seed = 1;
  int early_stop_patience = 5;  // on dev exact match; dev empty disables
};

struct TrainLog {
  std::vector<double> epoch_loss;       // mean per-example loss (intent + slots)
  std::vector<double> dev_exact_match;  // empty when dev is empty
  int best_epoch = -1;
};

// Joint intent classifier + linear-chain CRF slot tagger over a shared
// sparse feature representation. Training is plain SGD; weight decay is
// applied lazily to the coordinates each update touches. Deterministic for
// a fixed (data, configs, seed).
class JointModel {
public:
  static JointModel train(const Dataset& train, const Dataset& dev, const FeatureConfig& fc,
                          const TrainConfig& tc, TrainLog* log = nullptr);

  SemanticParse predict(const Utterance& utterance) const;

  const std::vector<std::string>& intent_labels() const { return intents_; }
  const std::vector<std::string>& tags() const { return tags_; }
  const FeatureConfig& feature_config() const { return feature_config_; }

  // Versioned JSON container embedding the feature space, label
  // inventories, and weights.
  void save(const std::string& path) const;
  static JointModel load(const std::string& path);

private:
  std::vector<double> intent_scores(const crf::TokenFeatures& utterance_features) const;
  void build_mask();

  FeatureConfig feature_config_;
  FeatureSpace feature_space_;
  std::shared_ptr<const EmbeddingTable> embeddings_;  // loaded when configured
  std::vector<std::string> intents_;  // sorted; argmax ties resolve to the smallest
  std::vector<std::string> tags_;     // sorted BIO tags, "O" included
  crf::Params crf_params_;
  crf::Mask mask_;
  std::vector<double> intent_weights_;  // [intent * n_features + feature]
};

}  // namespace cstk
