#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cstk/projection.hpp"
#include "cstk/rng.hpp"

using namespace cstk;

namespace {

Example example_of(const std::string& seqlogical) {
  const ParsedSeqlogical parsed = parse_seqlogical(seqlogical);
  Example ex;
  ex.id = "src";
  ex.domain = "d";
  ex.utterance = parsed.utterance;
  ex.parse = parsed.parse;
  return ex;
}

AlignmentSet identity_links(int n) {
  AlignmentSet set;
  set.source_len = n;
  set.target_len = n;
  for (int i = 0; i < n; ++i) set.insert(i, i);
  return set;
}

}  // namespace

TEST_CASE("identity alignment reproduces the source parse") {
  const Example src =
      example_of("[IN:GET_WEATHER show me the weather [SL:DATE_TIME for next Monday ] ]");
  const std::vector<std::string> target = {"muestrame", "x", "el", "clima", "para", "el", "lunes"};
  // same length, monotone identity
  const ProjectionOutcome outcome =
      project_annotations(src, src.utterance.tokens, identity_links(7));
  REQUIRE(outcome.projected);
  CHECK(outcome.fragments_created == 0);
  CHECK(outcome.example->parse == src.parse);
  CHECK(outcome.example->utterance.tokens == src.utterance.tokens);
  CHECK(outcome.example->parse.intent == "GET_WEATHER");
  (void)target;
}

TEST_CASE("worked translate-and-align instance") {
  const Example src =
      example_of("[IN:GET_WEATHER show me the weather [SL:DATE_TIME for next Monday ] ]");
  const std::vector<std::string> target = {"muestrame", "el", "clima", "para", "el", "próximo", "lunes"};
  AlignmentSet links;
  links.source_len = 7;
  links.target_len = 7;
  links.insert(0, 0);  // show -> muestrame
  links.insert(1, 0);  // me -> muestrame
  links.insert(2, 1);  // the -> el
  links.insert(3, 2);  // weather -> clima
  links.insert(4, 3);  // for -> para
  links.insert(5, 5);  // next -> próximo
  links.insert(6, 6);  // Monday -> lunes
  const ProjectionOutcome outcome = project_annotations(src, target, links);
  REQUIRE(outcome.projected);
  CHECK(outcome.example->parse.intent == "GET_WEATHER");
  REQUIRE(outcome.example->parse.slots.size() == 2);  // "para" and "próximo lunes" split by "el"
  CHECK(outcome.example->parse.slots[0].label == "DATE_TIME");
  CHECK(outcome.example->parse.slots[1].label == "DATE_TIME");
}

TEST_CASE("discontinuous projections split into same-label fragments") {
  Example src = example_of("[IN:X a b c [SL:S d e ] ]");
  REQUIRE(src.parse.slots[0].start == 3);
  REQUIRE(src.parse.slots[0].end == 5);
  AlignmentSet links;
  links.source_len = 5;
  links.target_len = 7;
  links.insert(3, 5);
  links.insert(4, 2);
  const std::vector<std::string> target = {"t0", "t1", "t2", "t3", "t4", "t5", "t6"};
  const ProjectionOutcome outcome = project_annotations(src, target, links);
  REQUIRE(outcome.projected);
  CHECK(outcome.fragments_created == 2);
  REQUIRE(outcome.example->parse.slots.size() == 2);
  CHECK(outcome.example->parse.slots[0] == SlotAnnotation{"S", 2, 3});
  CHECK(outcome.example->parse.slots[1] == SlotAnnotation{"S", 5, 6});
}

TEST_CASE("slots that project nowhere reject the example") {
  Example src = example_of("[IN:X a [SL:S b ] ]");
  AlignmentSet links;
  links.source_len = 2;
  links.target_len = 2;
  links.insert(0, 0);  // only the non-slot token is aligned
  const ProjectionOutcome outcome = project_annotations(src, {"t0", "t1"}, links);
  REQUIRE(!outcome.projected);
  CHECK(outcome.reason == ProjectionReject::EmptySlotProjection);
  CHECK(!outcome.example.has_value());
}

TEST_CASE("overlapping projections reject the example") {
  Example src = example_of("[IN:X [SL:A a ] [SL:B b ] ]");
  AlignmentSet links;
  links.source_len = 2;
  links.target_len = 1;
  links.insert(0, 0);
  links.insert(1, 0);  // both slots land on the same target token
  const ProjectionOutcome outcome = project_annotations(src, {"t0"}, links);
  REQUIRE(!outcome.projected);
  CHECK(outcome.reason == ProjectionReject::OverlappingProjection);
}

TEST_CASE("dimension mismatches are errors, not rejections") {
  Example src = example_of("[IN:X a ]");
  AlignmentSet links;
  links.source_len = 3;
  links.target_len = 1;
  CHECK_THROWS_AS(project_annotations(src, {"t0"}, links), Error);
}

TEST_CASE("projected label multiset covers the source labels") {
  Rng rng(derive_seed(21, "projection-random"));
  int projected_count = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(5));
    Example src;
    src.id = "r";
    src.domain = "d";
    std::vector<std::string> tokens;
    for (int i = 0; i < n; ++i) tokens.push_back("s" + std::to_string(i));
    src.utterance = Utterance::from_tokens(tokens);
    src.parse.intent = "X";
    int cursor = 0;
    while (cursor < n) {
      if (rng.below(2) == 0) {
        const int end = std::min<int>(n, cursor + 1 + static_cast<int>(rng.below(2)));
        src.parse.slots.push_back({std::string("L") + char('A' + rng.below(2)), cursor, end});
        cursor = end;
      } else {
        ++cursor;
      }
    }
    const int m = 2 + static_cast<int>(rng.below(5));
    AlignmentSet links;
    links.source_len = n;
    links.target_len = m;
    const int n_links = static_cast<int>(rng.below(7));
    for (int k = 0; k < n_links; ++k) {
      links.insert(static_cast<int>(rng.below(n)), static_cast<int>(rng.below(m)));
    }
    std::vector<std::string> target;
    for (int j = 0; j < m; ++j) target.push_back("t" + std::to_string(j));

    const ProjectionOutcome outcome = project_annotations(src, target, links);
    if (!outcome.projected) continue;
    ++projected_count;
    const ParseSkeleton src_skel = compute_skeleton(src.parse);
    const ParseSkeleton out_skel = compute_skeleton(outcome.example->parse);
    int extra = 0;
    for (const auto& [label, count] : out_skel.slot_labels) {
      const auto it = src_skel.slot_labels.find(label);
      REQUIRE(it != src_skel.slot_labels.end());
      REQUIRE(count >= it->second);  // superset by multiplicity
      extra += count - it->second;
    }
    REQUIRE(extra <= outcome.fragments_created);
    // The projected parse satisfies the SemanticParse invariants.
    int prev_end = 0;
    for (const SlotAnnotation& slot : outcome.example->parse.slots) {
      REQUIRE(slot.start >= prev_end);
      REQUIRE(slot.start < slot.end);
      REQUIRE(slot.end <= m);
      prev_end = slot.end;
    }
    // Round-trips through the seqlogical form.
    const std::string form = serialize_seqlogical(outcome.example->utterance, outcome.example->parse);
    REQUIRE(parse_seqlogical(form).parse == outcome.example->parse);
  }
  CHECK(projected_count > 20);
}
