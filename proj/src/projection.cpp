#include "cstk/projection.hpp"

#include <algorithm>

namespace cstk {

const char* to_string(ProjectionReject reason) {
  switch (reason) {
    case ProjectionReject::EmptySlotProjection: return "EmptySlotProjection";
    case ProjectionReject::OverlappingProjection: return "OverlappingProjection";
  }
  return "UnknownReject";
}

ProjectionOutcome project_annotations(const Example& source,
                                      const std::vector<std::string>& target_tokens,
                                      const AlignmentSet& links) {
  const int source_len = static_cast<int>(source.utterance.tokens.size());
  const int target_len = static_cast<int>(target_tokens.size());
  if (links.source_len != source_len || links.target_len != target_len) {
    fail(ErrorKind::DimensionMismatch,
         "alignment is " + std::to_string(links.source_len) + "x" + std::to_string(links.target_len) +
             " but tokens are " + std::to_string(source_len) + "x" + std::to_string(target_len));
  }

  ProjectionOutcome outcome;
  std::vector<SlotAnnotation> projected;
  for (const SlotAnnotation& slot : source.parse.slots) {
    std::vector<char> hit(static_cast<std::size_t>(target_len), 0);
    bool any = false;
    for (const AlignmentLink& link : links.links) {
      if (link.source >= slot.start && link.source < slot.end) {
        hit[static_cast<std::size_t>(link.target)] = 1;
        any = true;
      }
    }
    if (!any) {
      outcome.reason = ProjectionReject::EmptySlotProjection;
      return outcome;
    }
    // Maximal contiguous runs of hit target indices.
    int runs = 0;
    int j = 0;
    while (j < target_len) {
      if (!hit[static_cast<std::size_t>(j)]) {
        ++j;
        continue;
      }
      int end = j;
      while (end < target_len && hit[static_cast<std::size_t>(end)]) ++end;
      projected.push_back({slot.label, j, end});
      ++runs;
      j = end;
    }
    if (runs > 1) outcome.fragments_created += runs;
  }

  std::sort(projected.begin(), projected.end(),
            [](const SlotAnnotation& a, const SlotAnnotation& b) {
              return std::tie(a.start, a.end, a.label) < std::tie(b.start, b.end, b.label);
            });
  for (std::size_t i = 1; i < projected.size(); ++i) {
    if (projected[i].start < projected[i - 1].end) {
      outcome.reason = ProjectionReject::OverlappingProjection;
      outcome.fragments_created = 0;
      return outcome;
    }
  }

  Example ex;
  ex.id = source.id;
  ex.domain = source.domain;
  ex.language_tag = source.language_tag;
  ex.utterance = Utterance::from_tokens(target_tokens);
  ex.parse.intent = source.parse.intent;
  ex.parse.slots = std::move(projected);
  outcome.projected = true;
  outcome.example = std::move(ex);
  return outcome;
}

}  // namespace cstk
