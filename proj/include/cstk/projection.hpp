#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cstk/alignment.hpp"
#include "cstk/dataset.hpp"

namespace cstk {

enum class ProjectionReject { EmptySlotProjection, OverlappingProjection };

const char* to_string(ProjectionReject reason);

struct ProjectionOutcome {
  bool projected = false;
  std::optional<ProjectionReject> reason;  // set iff !projected
  std::optional<Example> example;          // set iff projected
  // Number of target slots produced by splitting discontinuous projections;
  // a slot that lands in one contiguous run contributes 0, one split into r
  // runs contributes r.
  int fragments_created = 0;
};

// Copies the intent and maps each gold slot through the alignment: the
// projected token set of a slot is every target index linked to any source
// index inside its span, partitioned into maximal contiguous runs, one
// target slot per run (same label). Rejects when a slot projects to nothing
// or two projected slots overlap; nothing is silently dropped.
ProjectionOutcome project_annotations(const Example& source,
                                      const std::vector<std::string>& target_tokens,
                                      const AlignmentSet& links);

}  // namespace cstk
