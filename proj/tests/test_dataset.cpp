#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "cstk/dataset.hpp"
#include "cstk/rng.hpp"

using namespace cstk;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  const std::string path = (std::filesystem::temp_directory_path() / name).string();
  std::ofstream out(path, std::ios::binary);
  out << content;
  return path;
}

const char* kTwoLineJsonl =
    R"({"id": "w1", "domain": "weather", "seqlogical": "[IN:GET_WEATHER Dime el clima [SL:DATE_TIME para next Friday ] ]"})"
    "\n"
    R"({"id": "d1", "domain": "device", "seqlogical": "[IN:CLOSE_RESOURCE Cierra [SL:RESOURCE maps ] ]", "language": "cs"})"
    "\n";

Dataset tiny() { return parse_dataset(kTwoLineJsonl, DatasetFormat::jsonl, "<tiny>"); }

}  // namespace

TEST_CASE("loads a two-record jsonl file") {
  const Dataset ds = tiny();
  REQUIRE(ds.size() == 2);
  CHECK(ds.examples[0].id == "w1");
  CHECK(ds.examples[0].parse.intent == "GET_WEATHER");
  CHECK(ds.examples[0].utterance.tokens.size() == 6);
  CHECK(!ds.examples[0].language_tag.has_value());
  CHECK(ds.examples[1].language_tag == std::optional<std::string>("cs"));
}

TEST_CASE("empty file loads as an empty dataset") {
  CHECK(parse_dataset("", DatasetFormat::jsonl, "<empty>").empty());
  CHECK(parse_dataset("", DatasetFormat::tsv, "<empty>").empty());
}

TEST_CASE("malformed records fail with a line number") {
  const std::string bad =
      R"({"id": "a", "domain": "d", "seqlogical": "[IN:X ok ]"})" "\n"
      R"({"id": "b", "domain": "d", "seqlogical": "[IN:A"})" "\n";
  try {
    parse_dataset(bad, DatasetFormat::jsonl, "<bad>");
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ParseError);
    CHECK(std::string(e.what()).find("<bad>:2") != std::string::npos);
  }

  try {
    parse_dataset(R"({"id": "a", "domain": "d"})" "\n", DatasetFormat::jsonl, "<missing>");
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ParseError);
  }
}

TEST_CASE("duplicate ids are rejected") {
  const std::string dup =
      R"({"id": "a", "domain": "d", "seqlogical": "[IN:X uno ]"})" "\n"
      R"({"id": "a", "domain": "d", "seqlogical": "[IN:X dos ]"})" "\n";
  CHECK_THROWS_AS(parse_dataset(dup, DatasetFormat::jsonl, "<dup>"), Error);
}

TEST_CASE("tsv round trip") {
  const std::string tsv = "a\tweather\t[IN:X hola ]\n";
  const Dataset ds = parse_dataset(tsv, DatasetFormat::tsv, "<tsv>");
  REQUIRE(ds.size() == 1);
  CHECK(ds.examples[0].domain == "weather");
  CHECK(format_dataset(ds, DatasetFormat::tsv) == tsv);
}

TEST_CASE("jsonl reserialization is canonical and stable") {
  const Dataset ds = tiny();
  const std::string once = format_dataset(ds, DatasetFormat::jsonl);
  const Dataset again = parse_dataset(once, DatasetFormat::jsonl, "<again>");
  CHECK(format_dataset(again, DatasetFormat::jsonl) == once);

  // Same records with shuffled key order normalize to the same bytes.
  const std::string shuffled =
      R"({"seqlogical": "[IN:GET_WEATHER Dime el clima [SL:DATE_TIME para next Friday ] ]", "domain": "weather", "id": "w1"})"
      "\n"
      R"({"language": "cs", "seqlogical": "[IN:CLOSE_RESOURCE Cierra [SL:RESOURCE maps ] ]", "id": "d1", "domain": "device"})"
      "\n";
  CHECK(format_dataset(parse_dataset(shuffled, DatasetFormat::jsonl, "<shuffled>"),
                       DatasetFormat::jsonl) == once);
}

TEST_CASE("per-domain statistics") {
  std::string corpus;
  corpus += R"({"id": "1", "domain": "weather", "seqlogical": "[IN:GET_WEATHER clima [SL:DATE_TIME hoy ] ]"})" "\n";
  corpus += R"({"id": "2", "domain": "weather", "seqlogical": "[IN:GET_WEATHER clima en [SL:LOCATION miami ] [SL:DATE_TIME hoy ] ]"})" "\n";
  corpus += R"({"id": "3", "domain": "weather", "seqlogical": "[IN:IS_SUNNY hay sol ]"})" "\n";
  corpus += R"({"id": "4", "domain": "device", "seqlogical": "[IN:SLEEP prende el modo sleep ]"})" "\n";
  const auto stats = dataset_stats(parse_dataset(corpus, DatasetFormat::jsonl, "<stats>"));
  REQUIRE(stats.count("weather"));
  REQUIRE(stats.count("device"));
  CHECK(stats.at("weather").intents == 2);
  CHECK(stats.at("weather").slot_labels == 2);
  CHECK(stats.at("weather").utterances == 3);
  CHECK(stats.at("weather").mean_slots_per_utterance == doctest::Approx(1.0));
  CHECK(stats.at("device").intents == 1);
  CHECK(stats.at("device").slot_labels == 0);
  CHECK(stats.at("device").mean_slots_per_utterance == doctest::Approx(0.0));
}

TEST_CASE("vocabulary files assign dense first-occurrence ranks") {
  const std::string path = write_temp("cstk_vocab_test.txt", "el\nla\nel\nweather\n");
  const VocabRankTable table = VocabRankTable::load(path);
  CHECK(table.size() == 3);
  CHECK(table.rank("el") == std::optional<int>(0));
  CHECK(table.rank("la") == std::optional<int>(1));
  CHECK(table.rank("weather") == std::optional<int>(2));
  CHECK(!table.rank("nope").has_value());
  std::remove(path.c_str());
}

TEST_CASE("language ratio on the one-token-each fixture") {
  const std::string corpus = R"({"id": "1", "domain": "d", "seqlogical": "[IN:X el weather ]"})" "\n";
  const Dataset ds = parse_dataset(corpus, DatasetFormat::jsonl, "<ratio>");
  const VocabRankTable es = VocabRankTable::from_tokens({"el"});
  const VocabRankTable en = VocabRankTable::from_tokens({"a", "b", "c", "weather"});
  const LanguageRatioReport report = language_ratio(ds, es, en);
  CHECK(report.a_count == 1);
  CHECK(report.b_count == 1);
  CHECK(report.ratio == std::optional<double>(1.0));
}

TEST_CASE("language ratio on the six-token fixture is 2.0") {
  // dime, el, clima, para -> ES only; next -> EN only; friday -> EN rank 1
  // beats ES rank 5. Hand count: 4 ES, 2 EN.
  const std::string corpus =
      R"({"id": "1", "domain": "d", "seqlogical": "[IN:X dime el clima para next friday ]"})" "\n";
  const Dataset ds = parse_dataset(corpus, DatasetFormat::jsonl, "<ratio6>");
  const VocabRankTable es =
      VocabRankTable::from_tokens({"dime", "el", "clima", "para", "que", "friday"});
  const VocabRankTable en = VocabRankTable::from_tokens({"weather", "friday", "next"});
  const LanguageRatioReport report = language_ratio(ds, es, en);
  CHECK(report.a_count == 4);
  CHECK(report.b_count == 2);
  CHECK(report.tie_count == 0);
  CHECK(report.unknown_count == 0);
  REQUIRE(report.ratio.has_value());
  CHECK(*report.ratio == 2.0);
}

TEST_CASE("language ratio excludes ties and unknowns") {
  // Exactly 4 a-tokens and 2 b-tokens, 1 tie, 1 unknown over 8 occurrences.
  const std::string corpus =
      R"({"id": "1", "domain": "d", "seqlogical": "[IN:X uno dos tres cuatro five six tie zzz ]"})" "\n";
  const Dataset ds = parse_dataset(corpus, DatasetFormat::jsonl, "<ratio8>");
  const VocabRankTable a =
      VocabRankTable::from_tokens({"uno", "dos", "tres", "cuatro", "tie", "five"});
  //   ranks: uno 0, dos 1, tres 2, cuatro 3, tie 4, five 5
  const VocabRankTable b = VocabRankTable::from_tokens({"five", "six", "x1", "x2", "tie"});
  //   ranks: five 0, six 1, tie 4 via x-fillers
  const LanguageRatioReport report = language_ratio(ds, a, b);
  CHECK(report.a_count == 4);
  CHECK(report.b_count == 2);
  CHECK(report.tie_count == 1);
  CHECK(report.unknown_count == 1);
  REQUIRE(report.ratio.has_value());
  CHECK(*report.ratio == doctest::Approx(2.0));

  // Swapping the vocabularies inverts the ratio.
  const LanguageRatioReport swapped = language_ratio(ds, b, a);
  REQUIRE(swapped.ratio.has_value());
  CHECK(*swapped.ratio == doctest::Approx(0.5));
  CHECK(swapped.tie_count == report.tie_count);
  CHECK(swapped.unknown_count == report.unknown_count);
}

TEST_CASE("undefined ratio when no token lands in vocab b") {
  const std::string corpus = R"({"id": "1", "domain": "d", "seqlogical": "[IN:X uno ]"})" "\n";
  const Dataset ds = parse_dataset(corpus, DatasetFormat::jsonl, "<undef>");
  const LanguageRatioReport report =
      language_ratio(ds, VocabRankTable::from_tokens({"uno"}), VocabRankTable::from_tokens({"other"}));
  CHECK(!report.ratio.has_value());
  CHECK(report.a_count == 1);
}

namespace {

Dataset synthetic_pool() {
  std::string corpus;
  const std::vector<std::string> intents = {"A", "B", "C", "D"};
  const std::vector<std::string> labels = {"S1", "S2", "S3"};
  int id = 0;
  for (int i = 0; i < 40; ++i) {
    const std::string intent = intents[i % intents.size()];
    const std::string label = labels[i % labels.size()];
    corpus += R"({"id": "ex)" + std::to_string(id++) + R"(", "domain": "d", "seqlogical": "[IN:)" +
              intent + " tok" + std::to_string(i) + " [SL:" + label + " val" + std::to_string(i) +
              R"( ] ]"})" "\n";
  }
  // One rare label that only ever appears once.
  corpus += R"({"id": "rare", "domain": "d", "seqlogical": "[IN:RARE tok [SL:RARE_SLOT v ] ]"})" "\n";
  return parse_dataset(corpus, DatasetFormat::jsonl, "<pool>");
}

}  // namespace

TEST_CASE("fewshot sample covers every label and is deterministic") {
  const Dataset pool = synthetic_pool();
  const Dataset sample = sample_fewshot(pool, 12, 7);
  CHECK(sample.size() == 12);
  const Dataset sample_again = sample_fewshot(pool, 12, 7);
  CHECK(format_dataset(sample, DatasetFormat::jsonl) ==
        format_dataset(sample_again, DatasetFormat::jsonl));
  CHECK(format_dataset(sample, DatasetFormat::jsonl) !=
        format_dataset(sample_fewshot(pool, 12, 8), DatasetFormat::jsonl));

  // Whole-dataset sample returns everything.
  CHECK(sample_fewshot(pool, static_cast<int>(pool.size()), 1).size() == pool.size());
}

TEST_CASE("fewshot coverage holds across 50 seeds") {
  const Dataset pool = synthetic_pool();
  std::set<std::string> all_intents, all_labels;
  for (const Example& ex : pool.examples) {
    all_intents.insert(ex.parse.intent);
    for (const SlotAnnotation& slot : ex.parse.slots) all_labels.insert(slot.label);
  }
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Dataset sample = sample_fewshot(pool, 15, seed);
    REQUIRE(sample.size() == 15);
    std::set<std::string> intents, labels;
    std::set<std::string> ids;
    for (const Example& ex : sample.examples) {
      intents.insert(ex.parse.intent);
      for (const SlotAnnotation& slot : ex.parse.slots) labels.insert(slot.label);
      REQUIRE(ids.insert(ex.id).second);  // subset without replacement
    }
    REQUIRE(intents == all_intents);
    REQUIRE(labels == all_labels);
  }
}

TEST_CASE("fewshot fails when coverage cannot fit") {
  const Dataset pool = synthetic_pool();
  CHECK_THROWS_AS(sample_fewshot(pool, 2, 1), Error);
  CHECK_THROWS_AS(sample_fewshot(pool, static_cast<int>(pool.size()) + 1, 1), Error);
}
