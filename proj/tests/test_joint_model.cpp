#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "cstk/joint_model.hpp"
#include "cstk/rng.hpp"

using namespace cstk;

namespace {

Example example_of(const std::string& id, const std::string& seqlogical) {
  const ParsedSeqlogical parsed = parse_seqlogical(seqlogical);
  Example ex;
  ex.id = id;
  ex.domain = "d";
  ex.utterance = parsed.utterance;
  ex.parse = parsed.parse;
  return ex;
}

Dataset dataset_of(std::vector<Example> examples) {
  Dataset ds;
  ds.examples = std::move(examples);
  return ds;
}

}  // namespace

TEST_CASE("char n-gram enumeration with boundary markers") {
  const auto grams = char_ngrams("clima", 3, 3);
  CHECK(grams == std::vector<std::string>{"^cl", "cli", "lim", "ima", "ma$"});
  CHECK(char_ngrams("ab", 3, 4) == std::vector<std::string>{"^ab", "ab$", "^ab$"});
}

TEST_CASE("featurize with word identity and window") {
  FeatureConfig fc;
  fc.context_window = 1;
  FeatureSpace space;
  const FeaturizedUtterance feat = featurize({"a", "b"}, fc, space, nullptr);
  REQUIRE(feat.token_features.size() == 2);
  std::set<std::string> names0;
  for (const auto& [id, value] : feat.token_features[0]) names0.insert(space.name(id));
  CHECK(names0 == std::set<std::string>{"w@-1=<s>", "w@0=a", "w@1=b"});
  std::set<std::string> names1;
  for (const auto& [id, value] : feat.token_features[1]) names1.insert(space.name(id));
  CHECK(names1 == std::set<std::string>{"w@-1=a", "w@0=b", "w@1=</s>"});
  // Utterance features average token features.
  double total = 0.0;
  for (const auto& [id, value] : feat.utterance_features) total += value;
  CHECK(total == doctest::Approx(3.0));  // 6 unit features / 2 tokens
}

TEST_CASE("featurize honors the n-gram representation") {
  FeatureConfig fc;
  fc.use_word_identity = false;
  fc.char_ngram_range = {{3, 3}};
  fc.context_window = 0;
  FeatureSpace space;
  const FeaturizedUtterance feat = featurize({"clima"}, fc, space, nullptr);
  std::set<std::string> names;
  for (const auto& [id, value] : feat.token_features[0]) names.insert(space.name(id));
  CHECK(names == std::set<std::string>{"ng@0=^cl", "ng@0=cli", "ng@0=lim", "ng@0=ima", "ng@0=ma$"});
}

TEST_CASE("embedding file loading, lookup, and errors") {
  namespace fs = std::filesystem;
  const std::string path = (fs::temp_directory_path() / "cstk_emb_test.vec").string();
  {
    std::ofstream out(path);
    out << "2 3\n";
    out << "clima 0.5 -1.0 2.0\n";
    out << "weather 1.0 1.0 1.0\n";
  }
  const EmbeddingTable table = EmbeddingTable::load(path);
  CHECK(table.dim() == 3);
  REQUIRE(table.vector_of("clima") != nullptr);
  CHECK((*table.vector_of("clima"))[1] == doctest::Approx(-1.0));
  CHECK(table.vector_of("nope") == nullptr);

  FeatureConfig fc;
  fc.use_word_identity = false;
  fc.embedding_file = path;
  fc.context_window = 0;
  FeatureSpace space;
  const FeaturizedUtterance feat = featurize({"clima", "oov"}, fc, space, &table);
  CHECK(feat.token_features[0].size() == 3);
  CHECK(feat.token_features[1].empty());  // OOV contributes the zero vector

  {
    std::ofstream out(path);
    out << "1 3\nclima 0.5 -1.0\n";
  }
  CHECK_THROWS_AS(EmbeddingTable::load(path), Error);
  CHECK_THROWS_AS(EmbeddingTable::load(path + ".missing"), Error);
  std::remove(path.c_str());
}

TEST_CASE("memorizes a single example") {
  const Dataset train = dataset_of(
      {example_of("1", "[IN:GET_WEATHER Dime el clima [SL:DATE_TIME para next Friday ] ]")});
  TrainConfig tc;
  tc.epochs = 8;
  const JointModel model = JointModel::train(train, {}, FeatureConfig{}, tc);
  const SemanticParse parse = model.predict(train.examples[0].utterance);
  CHECK(parse == train.examples[0].parse);
}

TEST_CASE("separable intents reach full training accuracy within 10 epochs") {
  // Intent decided by the marker token; slots decided by position markers.
  std::vector<Example> examples;
  int id = 0;
  for (int k = 0; k < 4; ++k) {
    for (int r = 0; r < 5; ++r) {
      const std::string marker = "m" + std::to_string(k);
      const std::string filler = "f" + std::to_string(r);
      examples.push_back(example_of(std::to_string(id++), "[IN:I" + std::to_string(k) + " " +
                                                              marker + " " + filler + " ]"));
    }
  }
  const Dataset train = dataset_of(std::move(examples));
  TrainConfig tc;
  tc.epochs = 10;
  const JointModel model = JointModel::train(train, {}, FeatureConfig{}, tc);
  int correct = 0;
  for (const Example& ex : train.examples) {
    if (model.predict(ex.utterance).intent == ex.parse.intent) ++correct;
  }
  CHECK(correct == static_cast<int>(train.size()));
}

TEST_CASE("training is deterministic for a fixed seed") {
  std::vector<Example> examples;
  for (int i = 0; i < 20; ++i) {
    examples.push_back(example_of(std::to_string(i),
                                  "[IN:I" + std::to_string(i % 3) + " tok" + std::to_string(i) +
                                      " [SL:S v" + std::to_string(i % 5) + " ] ]"));
  }
  const Dataset train = dataset_of(std::move(examples));
  TrainConfig tc;
  tc.epochs = 5;
  tc.seed = 7;

  namespace fs = std::filesystem;
  const std::string path_a = (fs::temp_directory_path() / "cstk_model_a.json").string();
  const std::string path_b = (fs::temp_directory_path() / "cstk_model_b.json").string();
  JointModel::train(train, {}, FeatureConfig{}, tc).save(path_a);
  JointModel::train(train, {}, FeatureConfig{}, tc).save(path_b);
  std::ifstream a(path_a), b(path_b);
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  CHECK(sa.str() == sb.str());
  CHECK(!sa.str().empty());
  std::remove(path_a.c_str());
  std::remove(path_b.c_str());
}

TEST_CASE("model save/load round trip preserves predictions") {
  std::vector<Example> examples;
  for (int i = 0; i < 12; ++i) {
    examples.push_back(example_of(std::to_string(i), "[IN:I" + std::to_string(i % 2) + " w" +
                                                         std::to_string(i) + " [SL:S val ] ]"));
  }
  const Dataset train = dataset_of(std::move(examples));
  TrainConfig tc;
  tc.epochs = 4;
  const JointModel model = JointModel::train(train, {}, FeatureConfig{}, tc);

  namespace fs = std::filesystem;
  const std::string path = (fs::temp_directory_path() / "cstk_model_rt.json").string();
  model.save(path);
  const JointModel loaded = JointModel::load(path);
  for (const Example& ex : train.examples) {
    REQUIRE(loaded.predict(ex.utterance) == model.predict(ex.utterance));
  }
  std::remove(path.c_str());
}

TEST_CASE("slotless model predicts no slots") {
  const Dataset train = dataset_of({example_of("1", "[IN:SLEEP prende el modo sleep ]"),
                                    example_of("2", "[IN:WAKE quita el sleep mode ]")});
  TrainConfig tc;
  tc.epochs = 5;
  const JointModel model = JointModel::train(train, {}, FeatureConfig{}, tc);
  CHECK(model.tags() == std::vector<std::string>{"O"});
  const SemanticParse parse = model.predict(Utterance::from_tokens({"prende", "algo"}));
  CHECK(parse.slots.empty());
}

TEST_CASE("predictions always satisfy the parse invariants") {
  std::vector<Example> examples;
  Rng rng(derive_seed(41, "predict-invariants"));
  for (int i = 0; i < 30; ++i) {
    const int label = static_cast<int>(rng.below(3));
    examples.push_back(example_of(std::to_string(i),
                                  "[IN:I" + std::to_string(i % 4) + " a" + std::to_string(rng.below(6)) +
                                      " [SL:S" + std::to_string(label) + " v" +
                                      std::to_string(rng.below(4)) + " ] b" +
                                      std::to_string(rng.below(6)) + " ]"));
  }
  const Dataset train = dataset_of(std::move(examples));
  TrainConfig tc;
  tc.epochs = 3;
  const JointModel model = JointModel::train(train, {}, FeatureConfig{}, tc);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::string> tokens;
    const int n = 1 + static_cast<int>(rng.below(6));
    for (int t = 0; t < n; ++t) tokens.push_back("a" + std::to_string(rng.below(10)));
    const SemanticParse parse = model.predict(Utterance::from_tokens(tokens));
    int prev_end = 0;
    for (const SlotAnnotation& slot : parse.slots) {
      REQUIRE(slot.start >= prev_end);
      REQUIRE(slot.start < slot.end);
      REQUIRE(slot.end <= n);
      prev_end = slot.end;
    }
    REQUIRE(!parse.intent.empty());
  }
}

TEST_CASE("dev-based early stopping keeps the best checkpoint") {
  std::vector<Example> examples;
  for (int i = 0; i < 30; ++i) {
    examples.push_back(example_of(std::to_string(i), "[IN:I" + std::to_string(i % 2) + " tok" +
                                                         std::to_string(i % 7) + " x ]"));
  }
  Dataset train = dataset_of(std::move(examples));
  Dataset dev;
  dev.examples.assign(train.examples.begin(), train.examples.begin() + 6);
  TrainConfig tc;
  tc.epochs = 12;
  tc.early_stop_patience = 2;
  TrainLog log;
  JointModel::train(train, dev, FeatureConfig{}, tc, &log);
  REQUIRE(!log.dev_exact_match.empty());
  CHECK(log.best_epoch >= 0);
  double best = -1.0;
  for (double acc : log.dev_exact_match) best = std::max(best, acc);
  CHECK(log.dev_exact_match[log.best_epoch] == doctest::Approx(best));
}

TEST_CASE("unseen dev labels warn but do not crash") {
  const Dataset train = dataset_of({example_of("1", "[IN:A x y ]")});
  const Dataset dev = dataset_of({example_of("2", "[IN:B z [SL:NEW w ] ]")});
  TrainConfig tc;
  tc.epochs = 2;
  const JointModel model = JointModel::train(train, dev, FeatureConfig{}, tc);
  CHECK(model.predict(dev.examples[0].utterance).intent == "A");  // scored wrong, not fatal
}
