#pragma once

#include <compare>
#include <map>
#include <string>
#include <vector>

#include "cstk/error.hpp"

namespace cstk {

// Tokenized utterance. Tokens are the dataset's own whitespace tokens,
// preserved verbatim (including attached punctuation); raw_text keeps the
// original surface string and defaults to the space-joined tokens.
struct Utterance {
  std::vector<std::string> tokens;
  std::string raw_text;

  static Utterance from_tokens(std::vector<std::string> tokens);

  bool operator==(const Utterance& other) const { return tokens == other.tokens; }
};

// Labeled half-open token span [start, end). Labels carry no "SL:" prefix;
// prefixes belong to the seqlogical serialization only.
struct SlotAnnotation {
  std::string label;
  int start = 0;
  int end = 0;

  auto operator<=>(const SlotAnnotation&) const = default;
};

struct SemanticParse {
  std::string intent;  // no "IN:" prefix
  std::vector<SlotAnnotation> slots;  // sorted by start, pairwise disjoint

  bool operator==(const SemanticParse&) const = default;
};

// Equality key for neighbor matching: intent plus the multiset of slot
// labels, order-insensitive.
struct ParseSkeleton {
  std::string intent;
  std::map<std::string, int> slot_labels;  // label -> multiplicity

  bool operator==(const ParseSkeleton&) const = default;
  auto operator<=>(const ParseSkeleton&) const = default;
};

struct ParsedSeqlogical {
  Utterance utterance;
  SemanticParse parse;
};

// Parses the bracketed seqlogical form, e.g.
//   [IN:GET_WEATHER Dime el clima [SL:DATE_TIME para next Friday ] ]
// The string is whitespace-tokenized; "[IN:X" opens the root, "[SL:Y" opens
// a slot, a standalone "]" closes the innermost bracket. Exactly one root;
// slots do not nest. Throws Error on malformed input (UnbalancedBrackets,
// MultipleRoots, NestedSlot, EmptySlot, EmptyUtterance, MissingRoot).
ParsedSeqlogical parse_seqlogical(const std::string& text);

// Canonical single-space serialization; inverse of parse_seqlogical.
std::string serialize_seqlogical(const Utterance& utterance, const SemanticParse& parse);

struct TreeViolation {
  ErrorKind kind;
  std::string message;
};

struct TreeVerdict {
  bool ok = false;
  std::vector<TreeViolation> violations;
};

// Non-throwing structural check; ok iff parse_seqlogical would accept the
// string and bracket depth stays within max_depth (root = depth 1).
TreeVerdict validate_tree(const std::string& text, int max_depth = 2);

ParseSkeleton compute_skeleton(const SemanticParse& parse);

// BIO bridge for the sequence tagger. from_bio repairs an I-X that opens a
// run (after O, start, or a different label) by reading it as B-X; its
// output always satisfies the SemanticParse invariants. from_bio leaves the
// intent empty.
std::vector<std::string> to_bio(const SemanticParse& parse, int n_tokens);
SemanticParse from_bio(const std::vector<std::string>& tags);

}  // namespace cstk
