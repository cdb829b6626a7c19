#include "cstk/joint_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cstk/rng.hpp"

namespace cstk {

namespace {

using nlohmann::json;

std::vector<std::string> sorted_bio_tags(const std::set<std::string>& slot_labels) {
  std::set<std::string> tags{"O"};
  for (const std::string& label : slot_labels) {
    tags.insert("B-" + label);
    tags.insert("I-" + label);
  }
  return {tags.begin(), tags.end()};
}

int index_of(const std::vector<std::string>& items, const std::string& value) {
  auto it = std::lower_bound(items.begin(), items.end(), value);
  if (it == items.end() || *it != value) return -1;
  return static_cast<int>(it - items.begin());
}

double dot_sparse(const std::vector<double>& weights, std::size_t row_offset,
                  const crf::TokenFeatures& features) {
  double s = 0.0;
  for (const auto& [id, value] : features) s += weights[row_offset + id] * value;
  return s;
}

}  // namespace

void JointModel::build_mask() {
  const int T = static_cast<int>(tags_.size());
  mask_.start_allowed.assign(T, 1);
  mask_.trans_allowed.assign(std::size_t(T) * T, 1);
  for (int y = 0; y < T; ++y) {
    const std::string& tag = tags_[y];
    if (tag.rfind("I-", 0) != 0) continue;
    const std::string label = tag.substr(2);
    // I-X may only start mid-run: never at position 0, and only after B-X/I-X.
    mask_.start_allowed[y] = 0;
    for (int p = 0; p < T; ++p) {
      const std::string& prev = tags_[p];
      const bool continues = (prev == "B-" + label) || (prev == "I-" + label);
      if (!continues) mask_.trans_allowed[std::size_t(p) * T + y] = 0;
    }
  }
}

std::vector<double> JointModel::intent_scores(const crf::TokenFeatures& utterance_features) const {
  const std::size_t F = static_cast<std::size_t>(feature_space_.size());
  std::vector<double> scores(intents_.size(), 0.0);
  for (std::size_t k = 0; k < intents_.size(); ++k) {
    scores[k] = dot_sparse(intent_weights_, k * F, utterance_features);
  }
  return scores;
}

JointModel JointModel::train(const Dataset& train, const Dataset& dev, const FeatureConfig& fc,
                             const TrainConfig& tc, TrainLog* log) {
  if (train.empty()) fail(ErrorKind::EmptyCorpus, "training set is empty");
  if (tc.epochs < 1) fail(ErrorKind::ConfigError, "epochs must be >= 1");
  if (!fc.any_enabled()) fail(ErrorKind::ConfigError, "no token representation enabled");

  JointModel model;
  model.feature_config_ = fc;
  if (fc.embedding_file) {
    model.embeddings_ = std::make_shared<EmbeddingTable>(EmbeddingTable::load(*fc.embedding_file));
  }

  std::set<std::string> intent_set, slot_set;
  for (const Example& ex : train.examples) {
    intent_set.insert(ex.parse.intent);
    for (const SlotAnnotation& slot : ex.parse.slots) slot_set.insert(slot.label);
  }
  model.intents_.assign(intent_set.begin(), intent_set.end());
  model.tags_ = sorted_bio_tags(slot_set);
  model.build_mask();

  for (const Example& ex : dev.examples) {
    if (!intent_set.count(ex.parse.intent)) {
      std::cerr << "warning: dev intent '" << ex.parse.intent << "' unseen in training\n";
    }
    for (const SlotAnnotation& slot : ex.parse.slots) {
      if (!slot_set.count(slot.label)) {
        std::cerr << "warning: dev slot label '" << slot.label << "' unseen in training\n";
      }
    }
  }

  // Featurize the training set once, growing the feature space.
  std::vector<FeaturizedUtterance> features;
  std::vector<std::vector<int>> gold_tags;
  std::vector<int> gold_intents;
  features.reserve(train.size());
  for (const Example& ex : train.examples) {
    features.push_back(
        featurize(ex.utterance.tokens, fc, model.feature_space_, model.embeddings_.get()));
    const std::vector<std::string> bio =
        to_bio(ex.parse, static_cast<int>(ex.utterance.tokens.size()));
    std::vector<int> tag_ids(bio.size());
    for (std::size_t t = 0; t < bio.size(); ++t) tag_ids[t] = index_of(model.tags_, bio[t]);
    gold_tags.push_back(std::move(tag_ids));
    gold_intents.push_back(index_of(model.intents_, ex.parse.intent));
  }

  const int T = static_cast<int>(model.tags_.size());
  const int K = static_cast<int>(model.intents_.size());
  const std::size_t F = static_cast<std::size_t>(model.feature_space_.size());
  model.crf_params_ = crf::Params::zeros(T, static_cast<int>(F));
  model.intent_weights_.assign(std::size_t(K) * F, 0.0);

  crf::Params best_crf = model.crf_params_;
  std::vector<double> best_intent = model.intent_weights_;
  double best_dev = -1.0;
  int best_epoch = -1;
  int since_best = 0;

  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed(tc.seed, "train_joint_model"));

  std::vector<double> probs;
  std::map<int, std::vector<double>> emit_grad;  // feature id -> per-tag gradient
  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    shuffle(order, rng);
    double loss_sum = 0.0;
    for (std::size_t i : order) {
      const FeaturizedUtterance& feat = features[i];

      // Intent head: multinomial log-loss.
      probs = model.intent_scores(feat.utterance_features);
      double mx = *std::max_element(probs.begin(), probs.end());
      double z = 0.0;
      for (double& s : probs) {
        s = std::exp(s - mx);
        z += s;
      }
      for (double& s : probs) s /= z;
      loss_sum += -std::log(std::max(probs[gold_intents[i]], 1e-300));
      for (int k = 0; k < K; ++k) {
        const double delta = probs[k] - (k == gold_intents[i] ? 1.0 : 0.0);
        const std::size_t row = std::size_t(k) * F;
        for (const auto& [id, value] : feat.utterance_features) {
          double& w = model.intent_weights_[row + id];
          w -= tc.learning_rate * (delta * value + tc.l2 * w);
        }
      }

      // Slot head: expected-minus-gold counts from the CRF marginals; only
      // the features this example touches get an update.
      const crf::Marginals m =
          crf::marginals(model.crf_params_, model.mask_, feat.token_features, gold_tags[i]);
      loss_sum += m.nll;
      emit_grad.clear();
      for (std::size_t t = 0; t < feat.token_features.size(); ++t) {
        for (const auto& [id, value] : feat.token_features[t]) {
          auto [it, inserted] = emit_grad.try_emplace(id);
          if (inserted) it->second.assign(T, 0.0);
          for (int y = 0; y < T; ++y) {
            it->second[y] += (m.unary[t][y] - (gold_tags[i][t] == y ? 1.0 : 0.0)) * value;
          }
        }
      }
      for (const auto& [id, per_tag] : emit_grad) {
        for (int y = 0; y < T; ++y) {
          double& w = model.crf_params_.emit_at(y, id);
          w -= tc.learning_rate * (per_tag[y] + tc.l2 * w);
        }
      }
      for (int y = 0; y < T; ++y) {
        double& ws = model.crf_params_.start[y];
        ws -= tc.learning_rate *
              ((m.unary[0][y] - (gold_tags[i][0] == y ? 1.0 : 0.0)) + tc.l2 * ws);
      }
      for (int p = 0; p < T; ++p) {
        for (int y = 0; y < T; ++y) {
          double& w = model.crf_params_.trans_at(p, y);
          w -= tc.learning_rate * (m.pairwise[std::size_t(p) * T + y] + tc.l2 * w);
        }
      }
      for (std::size_t t = 1; t < gold_tags[i].size(); ++t) {
        model.crf_params_.trans_at(gold_tags[i][t - 1], gold_tags[i][t]) += tc.learning_rate;
      }
    }
    if (log) log->epoch_loss.push_back(loss_sum / static_cast<double>(train.size()));

    if (!dev.empty()) {
      std::size_t correct = 0;
      for (const Example& ex : dev.examples) {
        if (model.predict(ex.utterance) == ex.parse) ++correct;
      }
      const double acc = static_cast<double>(correct) / static_cast<double>(dev.size());
      if (log) log->dev_exact_match.push_back(acc);
      if (acc > best_dev) {
        best_dev = acc;
        best_epoch = epoch;
        best_crf = model.crf_params_;
        best_intent = model.intent_weights_;
        since_best = 0;
      } else if (++since_best >= tc.early_stop_patience && tc.early_stop_patience > 0) {
        break;
      }
    }
  }

  if (!dev.empty() && best_epoch >= 0) {
    model.crf_params_ = std::move(best_crf);
    model.intent_weights_ = std::move(best_intent);
  }
  if (log) log->best_epoch = best_epoch;
  return model;
}

SemanticParse JointModel::predict(const Utterance& utterance) const {
  SemanticParse parse;
  if (utterance.tokens.empty()) return parse;
  const FeatureSpace& space = feature_space_;
  const FeaturizedUtterance feat =
      featurize(utterance.tokens, feature_config_, space, embeddings_.get());

  const std::vector<double> scores = intent_scores(feat.utterance_features);
  int best = 0;
  for (int k = 1; k < static_cast<int>(scores.size()); ++k) {
    if (scores[k] > scores[best]) best = k;  // ties keep the smallest label
  }
  parse.intent = intents_.empty() ? "" : intents_[best];

  const std::vector<int> path = crf::viterbi(crf_params_, mask_, feat.token_features);
  std::vector<std::string> bio(path.size());
  for (std::size_t t = 0; t < path.size(); ++t) bio[t] = tags_[path[t]];
  SemanticParse slots = from_bio(bio);
  parse.slots = std::move(slots.slots);
  return parse;
}

void JointModel::save(const std::string& path) const {
  json doc;
  doc["format"] = "cstk-joint-model";
  doc["version"] = 1;
  json fc;
  fc["use_word_identity"] = feature_config_.use_word_identity;
  if (feature_config_.char_ngram_range) {
    fc["char_ngram_range"] = {feature_config_.char_ngram_range->first,
                              feature_config_.char_ngram_range->second};
  }
  if (feature_config_.embedding_file) fc["embedding_file"] = *feature_config_.embedding_file;
  fc["freeze_embeddings"] = feature_config_.freeze_embeddings;
  fc["context_window"] = feature_config_.context_window;
  doc["feature_config"] = fc;
  doc["intents"] = intents_;
  doc["tags"] = tags_;
  doc["features"] = feature_space_.names();
  doc["intent_weights"] = intent_weights_;
  doc["crf"] = {{"emit", crf_params_.emit}, {"trans", crf_params_.trans}, {"start", crf_params_.start}};
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path);
  out << doc.dump() << '\n';
}

JointModel JointModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open " + path);
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded() || doc.value("format", "") != "cstk-joint-model") {
    fail(ErrorKind::ParseError, path + ": not a model file");
  }
  JointModel model;
  const json& fc = doc["feature_config"];
  model.feature_config_.use_word_identity = fc["use_word_identity"].get<bool>();
  if (fc.contains("char_ngram_range")) {
    model.feature_config_.char_ngram_range = {fc["char_ngram_range"][0].get<int>(),
                                              fc["char_ngram_range"][1].get<int>()};
  }
  if (fc.contains("embedding_file")) {
    model.feature_config_.embedding_file = fc["embedding_file"].get<std::string>();
    model.embeddings_ = std::make_shared<EmbeddingTable>(
        EmbeddingTable::load(*model.feature_config_.embedding_file));
  }
  model.feature_config_.freeze_embeddings = fc["freeze_embeddings"].get<bool>();
  model.feature_config_.context_window = fc["context_window"].get<int>();
  model.intents_ = doc["intents"].get<std::vector<std::string>>();
  model.tags_ = doc["tags"].get<std::vector<std::string>>();
  for (const auto& name : doc["features"]) model.feature_space_.add_known(name.get<std::string>());
  model.intent_weights_ = doc["intent_weights"].get<std::vector<double>>();
  model.crf_params_.n_tags = static_cast<int>(model.tags_.size());
  model.crf_params_.n_features = model.feature_space_.size();
  model.crf_params_.emit = doc["crf"]["emit"].get<std::vector<double>>();
  model.crf_params_.trans = doc["crf"]["trans"].get<std::vector<double>>();
  model.crf_params_.start = doc["crf"]["start"].get<std::vector<double>>();
  model.build_mask();
  return model;
}

}  // namespace cstk
