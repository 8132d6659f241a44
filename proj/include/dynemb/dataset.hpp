#pragma once

#include "dynemb/rng.hpp"
#include "dynemb/types.hpp"

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace dynemb {

// One student-question-response event; the atomic unit of training and
// evaluation. `position` is the ordinal index within the student's log.
struct Interaction {
  int student = 0;
  int question = 0;
  int response = 0;
  int skill = kNoSkill;
  std::int64_t timestamp = kNoTimestamp;  // parsed and stored, never consumed
  int position = 0;
};

// Bidirectional raw-ID <-> dense-index table.
class IdMap {
 public:
  int intern(const std::string& raw) {
    auto it = index_.find(raw);
    if (it != index_.end()) return it->second;
    const int id = static_cast<int>(names_.size());
    names_.push_back(raw);
    index_.emplace(raw, id);
    return id;
  }

  // kUnknownId for raw IDs never interned.
  int lookup(const std::string& raw) const {
    auto it = index_.find(raw);
    return it == index_.end() ? kUnknownId : it->second;
  }

  const std::string& name(int id) const { return names_.at(static_cast<std::size_t>(id)); }
  int size() const { return static_cast<int>(names_.size()); }

  bool operator==(const IdMap& o) const { return names_ == o.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> index_;
};

// Ordered interaction log with ID vocabularies and optional skill tags.
// Interactions are grouped by student, each student's block in temporal
// order with positions consecutive from 0. Immutable after construction;
// safe to share read-only across threads.
struct Dataset {
  std::vector<Interaction> interactions;
  int num_students = 0;
  int num_questions = 0;
  int num_skills = 0;  // 0 when the source carries no tags
  IdMap students;
  IdMap questions;
  IdMap skills;
  std::vector<int> skill_of_question;  // size num_questions, kNoSkill allowed

  bool has_skills() const { return num_skills > 0; }

  // Half-open index range [first, last) of one student's block.
  std::pair<std::size_t, std::size_t> student_range(int student) const;

  // Groups rows by (student, position), assigns positions from source order,
  // fills skill_of_question, and checks index invariants.
  void finalize();

  bool operator==(const Dataset& o) const;
};

// Writes the canonical interaction file: header
// `student,question,response,skill,timestamp`, one row per interaction,
// raw IDs, rows grouped by student in temporal order.
void save_canonical(const Dataset& ds, const std::string& path);

// Loads the canonical format. Dense indices are assigned by first
// appearance, so load(save(ds)) == ds for any dataset whose vocabularies
// are already in first-appearance order (all loader/generator outputs).
Dataset load_canonical(const std::string& path);

// Whole-student split: the test side receives round(test_fraction * N)
// students chosen uniformly; both sides keep the parent vocabularies.
std::pair<Dataset, Dataset> split_students(const Dataset& ds, double test_fraction,
                                           SeededRng& rng);

}  // namespace dynemb
