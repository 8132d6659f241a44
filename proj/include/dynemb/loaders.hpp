#pragma once

#include "dynemb/dataset.hpp"

#include <string>

namespace dynemb {

enum class DedupPolicy { kDiscard, kMerge };

// Joins problem and step names in Cognitive Tutor question IDs. U+241F
// (symbol for unit separator) cannot collide with names containing spaces
// or commas.
inline constexpr const char* kUnitSeparator = "\xE2\x90\x9F";

// Composite skill tags (merge policy) join the sorted raw skill IDs with '+'.
inline constexpr char kSkillJoiner = '+';

// ASSISTments skill-builder export (comma-separated). Cleaning rules:
//   1. every order_id appearing on more than one row is a multi-skill
//      duplicate: kDiscard drops all of its rows, kMerge collapses them to
//      one row with a composite skill tag;
//   2. rows flagged original == 0 are removed (a merged row survives unless
//      every constituent row was flagged);
//   3. output ordered by (user_id, order_id).
Dataset load_assistments(const std::string& path, DedupPolicy policy);

// Per-rule row counts from the most recent load_assistments call chain,
// reported by the ingest command.
struct AssistmentsCleaningCounts {
  std::size_t raw_rows = 0;
  std::size_t duplicate_rows = 0;   // rows in multi-row order_id groups
  std::size_t merged_groups = 0;    // groups collapsed under kMerge
  std::size_t not_original_rows = 0;
  std::size_t kept = 0;
};
Dataset load_assistments(const std::string& path, DedupPolicy policy,
                         AssistmentsCleaningCounts& counts);

// KDD Cup Cognitive Tutor "Development" export (tab-separated). Question
// raw ID = Problem Name + unit separator + Step Name; response = Correct
// First Attempt; within-student ordering preserved from the file. The first
// column whose header starts with "KC(" supplies the skill tag.
Dataset load_cognitive_tutor(const std::string& path);

}  // namespace dynemb
