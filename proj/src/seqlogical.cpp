#include "cstk/seqlogical.hpp"

#include <algorithm>
#include <sstream>

namespace cstk {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::UnbalancedBrackets: return "UnbalancedBrackets";
    case ErrorKind::MultipleRoots: return "MultipleRoots";
    case ErrorKind::NestedSlot: return "NestedSlot";
    case ErrorKind::EmptySlot: return "EmptySlot";
    case ErrorKind::EmptyUtterance: return "EmptyUtterance";
    case ErrorKind::MissingRoot: return "MissingRoot";
    case ErrorKind::InvalidSpan: return "InvalidSpan";
    case ErrorKind::InvalidToken: return "InvalidToken";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::DuplicateId: return "DuplicateId";
    case ErrorKind::InfeasibleCoverage: return "InfeasibleCoverage";
    case ErrorKind::EmptyCorpus: return "EmptyCorpus";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::GeneratorFailure: return "GeneratorFailure";
    case ErrorKind::NoTemplate: return "NoTemplate";
    case ErrorKind::UnknownSource: return "UnknownSource";
    case ErrorKind::EmbeddingFileMissing: return "EmbeddingFileMissing";
    case ErrorKind::MalformedEmbeddingLine: return "MalformedEmbeddingLine";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "UnknownError";
}

Utterance Utterance::from_tokens(std::vector<std::string> tokens) {
  Utterance u;
  u.tokens = std::move(tokens);
  std::string joined;
  for (std::size_t i = 0; i < u.tokens.size(); ++i) {
    if (i) joined += ' ';
    joined += u.tokens[i];
  }
  u.raw_text = std::move(joined);
  return u;
}

namespace {

std::vector<std::string> split_whitespace(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) out.push_back(std::move(tok));
  return out;
}

enum class TokKind { root_open, slot_open, close, plain, malformed };

struct ClassifiedToken {
  TokKind kind;
  std::string label;  // for openers
};

bool valid_label(const std::string& label) {
  if (label.empty()) return false;
  return label.find('[') == std::string::npos && label.find(']') == std::string::npos;
}

ClassifiedToken classify(const std::string& tok) {
  if (tok == "]") return {TokKind::close, {}};
  if (tok.rfind("[IN:", 0) == 0) {
    std::string label = tok.substr(4);
    return valid_label(label) ? ClassifiedToken{TokKind::root_open, label}
                              : ClassifiedToken{TokKind::malformed, {}};
  }
  if (tok.rfind("[SL:", 0) == 0) {
    std::string label = tok.substr(4);
    return valid_label(label) ? ClassifiedToken{TokKind::slot_open, label}
                              : ClassifiedToken{TokKind::malformed, {}};
  }
  if (tok.find('[') != std::string::npos || tok.find(']') != std::string::npos) {
    return {TokKind::malformed, {}};
  }
  return {TokKind::plain, {}};
}

// One scanner serves both parse_seqlogical (throw on first violation) and
// validate_tree (collect all, keep scanning past recoverable problems).
struct ScanResult {
  std::vector<TreeViolation> violations;
  ParsedSeqlogical parsed;
};

ScanResult scan(const std::string& text, int max_depth) {
  ScanResult result;
  auto violate = [&](ErrorKind kind, std::string msg) {
    result.violations.push_back({kind, std::move(msg)});
  };

  const std::vector<std::string> raw = split_whitespace(text);
  if (raw.empty()) {
    violate(ErrorKind::MissingRoot, "empty input");
    return result;
  }

  Utterance& utt = result.parsed.utterance;
  SemanticParse& parse = result.parsed.parse;

  bool root_seen = false;
  bool root_open = false;
  int depth = 0;            // 0 outside, 1 in root, 2 in slot, ...
  int open_slot_start = -1; // token index where the open slot began
  std::string open_slot_label;
  int root_token_count = 0;

  for (std::size_t pos = 0; pos < raw.size(); ++pos) {
    const ClassifiedToken tok = classify(raw[pos]);
    switch (tok.kind) {
      case TokKind::root_open:
        if (root_seen) {
          violate(ErrorKind::MultipleRoots, "second [IN: at token " + std::to_string(pos));
        } else if (pos != 0) {
          violate(ErrorKind::MissingRoot, "[IN: not at the start");
        } else {
          parse.intent = tok.label;
          root_seen = true;
          root_open = true;
        }
        ++depth;
        break;
      case TokKind::slot_open:
        if (depth == 0) {
          if (!root_seen) {
            violate(ErrorKind::MissingRoot, "[SL: before any root");
            root_seen = true;  // report once
          } else {
            violate(ErrorKind::UnbalancedBrackets, "[SL: after the root closed");
          }
        } else if (depth + 1 > max_depth) {
          violate(ErrorKind::NestedSlot,
                  open_slot_start >= 0
                      ? "slot " + tok.label + " opened inside slot " + open_slot_label
                      : "depth " + std::to_string(depth + 1) + " exceeds bound " +
                            std::to_string(max_depth));
        } else if (depth == 1) {
          open_slot_start = static_cast<int>(utt.tokens.size());
          open_slot_label = tok.label;
        }
        ++depth;
        break;
      case TokKind::close:
        if (depth == 0) {
          violate(ErrorKind::UnbalancedBrackets, "stray ] at token " + std::to_string(pos));
          break;
        }
        if (depth == 2 && open_slot_start >= 0) {
          const int end = static_cast<int>(utt.tokens.size());
          if (end == open_slot_start) {
            violate(ErrorKind::EmptySlot, "slot " + open_slot_label + " encloses no tokens");
          } else {
            parse.slots.push_back({open_slot_label, open_slot_start, end});
          }
          open_slot_start = -1;
          open_slot_label.clear();
        } else if (depth == 1) {
          if (root_token_count == 0) {
            violate(ErrorKind::EmptyUtterance, "root encloses no tokens");
          }
          root_open = false;
        }
        --depth;
        break;
      case TokKind::plain:
        if (depth == 0) {
          if (!root_seen) {
            violate(ErrorKind::MissingRoot, "token before the root opener");
            root_seen = true;
          } else {
            violate(ErrorKind::UnbalancedBrackets, "token after the root closed");
          }
        } else {
          utt.tokens.push_back(raw[pos]);
          ++root_token_count;
        }
        break;
      case TokKind::malformed:
        violate(ErrorKind::UnbalancedBrackets, "malformed bracket token '" + raw[pos] + "'");
        break;
    }
  }

  if (depth > 0 || (root_seen && root_open)) {
    violate(ErrorKind::UnbalancedBrackets,
            std::to_string(depth) + " bracket(s) left open at end of input");
  }
  if (!root_seen) {
    violate(ErrorKind::MissingRoot, "no [IN: root");
  }

  utt.raw_text.clear();
  for (std::size_t i = 0; i < utt.tokens.size(); ++i) {
    if (i) utt.raw_text += ' ';
    utt.raw_text += utt.tokens[i];
  }
  return result;
}

void check_parse_against(const Utterance& utterance, const SemanticParse& parse) {
  const int n = static_cast<int>(utterance.tokens.size());
  if (n == 0) fail(ErrorKind::EmptyUtterance, "cannot serialize an utterance with no tokens");
  for (const std::string& tok : utterance.tokens) {
    if (tok.empty() || tok.find_first_of(" \t\n\r") != std::string::npos ||
        tok.find('[') != std::string::npos || tok.find(']') != std::string::npos) {
      fail(ErrorKind::InvalidToken, "token '" + tok + "' has whitespace or brackets");
    }
  }
  if (!valid_label(parse.intent)) {
    fail(ErrorKind::InvalidToken, "bad intent label '" + parse.intent + "'");
  }
  int prev_end = 0;
  for (const SlotAnnotation& slot : parse.slots) {
    if (!valid_label(slot.label)) {
      fail(ErrorKind::InvalidToken, "bad slot label '" + slot.label + "'");
    }
    if (slot.start < 0 || slot.end > n || slot.start >= slot.end) {
      fail(ErrorKind::InvalidSpan, "slot " + slot.label + " span [" + std::to_string(slot.start) +
                                       "," + std::to_string(slot.end) + ") out of bounds for " +
                                       std::to_string(n) + " tokens");
    }
    if (slot.start < prev_end) {
      fail(ErrorKind::InvalidSpan, "slot " + slot.label + " overlaps the previous slot or is unsorted");
    }
    prev_end = slot.end;
  }
}

}  // namespace

ParsedSeqlogical parse_seqlogical(const std::string& text) {
  ScanResult result = scan(text, 2);
  if (!result.violations.empty()) {
    const TreeViolation& first = result.violations.front();
    fail(first.kind, first.message);
  }
  return std::move(result.parsed);
}

std::string serialize_seqlogical(const Utterance& utterance, const SemanticParse& parse) {
  check_parse_against(utterance, parse);
  std::string out = "[IN:" + parse.intent;
  std::size_t slot = 0;
  const int n = static_cast<int>(utterance.tokens.size());
  for (int i = 0; i <= n; ++i) {
    if (slot < parse.slots.size() && parse.slots[slot].end == i) {
      out += " ]";
      ++slot;
    }
    if (i == n) break;
    if (slot < parse.slots.size() && parse.slots[slot].start == i) {
      out += " [SL:" + parse.slots[slot].label;
    }
    out += ' ';
    out += utterance.tokens[i];
  }
  out += " ]";
  return out;
}

TreeVerdict validate_tree(const std::string& text, int max_depth) {
  ScanResult result = scan(text, max_depth);
  return {result.violations.empty(), std::move(result.violations)};
}

ParseSkeleton compute_skeleton(const SemanticParse& parse) {
  ParseSkeleton skeleton;
  skeleton.intent = parse.intent;
  for (const SlotAnnotation& slot : parse.slots) {
    ++skeleton.slot_labels[slot.label];
  }
  return skeleton;
}

std::vector<std::string> to_bio(const SemanticParse& parse, int n_tokens) {
  std::vector<std::string> tags(static_cast<std::size_t>(n_tokens), "O");
  for (const SlotAnnotation& slot : parse.slots) {
    if (slot.start < 0 || slot.end > n_tokens || slot.start >= slot.end) {
      fail(ErrorKind::LengthMismatch, "slot " + slot.label + " span exceeds " +
                                          std::to_string(n_tokens) + " tokens");
    }
    tags[static_cast<std::size_t>(slot.start)] = "B-" + slot.label;
    for (int i = slot.start + 1; i < slot.end; ++i) {
      tags[static_cast<std::size_t>(i)] = "I-" + slot.label;
    }
  }
  return tags;
}

SemanticParse from_bio(const std::vector<std::string>& tags) {
  SemanticParse parse;
  std::string open_label;
  int open_start = -1;
  auto close_run = [&](int end) {
    if (open_start >= 0) {
      parse.slots.push_back({open_label, open_start, end});
      open_start = -1;
      open_label.clear();
    }
  };
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const std::string& tag = tags[i];
    if (tag == "O") {
      close_run(static_cast<int>(i));
      continue;
    }
    const bool begins = tag.rfind("B-", 0) == 0;
    const bool inside = tag.rfind("I-", 0) == 0;
    if ((!begins && !inside) || tag.size() <= 2) {
      fail(ErrorKind::ParseError, "bad BIO tag '" + tag + "' at position " + std::to_string(i));
    }
    const std::string label = tag.substr(2);
    if (begins || open_start < 0 || label != open_label) {
      // An I-X opening a run (or switching labels) reads as B-X.
      close_run(static_cast<int>(i));
      open_start = static_cast<int>(i);
      open_label = label;
    }
  }
  close_run(static_cast<int>(tags.size()));
  return parse;
}

}  // namespace cstk
