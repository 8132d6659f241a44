#include "dynemb/dataset.hpp"

#include "csv.hpp"
#include "dynemb/errors.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>

namespace dynemb {

std::pair<std::size_t, std::size_t> Dataset::student_range(int student) const {
  const Interaction probe{student, 0, 0, kNoSkill, kNoTimestamp, 0};
  auto lo = std::lower_bound(interactions.begin(), interactions.end(), probe,
                             [](const Interaction& a, const Interaction& b) {
                               return a.student < b.student;
                             });
  auto hi = std::upper_bound(interactions.begin(), interactions.end(), probe,
                             [](const Interaction& a, const Interaction& b) {
                               return a.student < b.student;
                             });
  return {static_cast<std::size_t>(lo - interactions.begin()),
          static_cast<std::size_t>(hi - interactions.begin())};
}

void Dataset::finalize() {
  num_students = students.size();
  num_questions = questions.size();
  num_skills = skills.size();

  std::vector<int> next_position(static_cast<std::size_t>(num_students), 0);
  for (auto& it : interactions) {
    if (it.student < 0 || it.student >= num_students)
      throw DimensionError("interaction references student index out of range");
    if (it.question < 0 || it.question >= num_questions)
      throw DimensionError("interaction references question index out of range");
    if (it.skill != kNoSkill && (it.skill < 0 || it.skill >= num_skills))
      throw DimensionError("interaction references skill index out of range");
    if (it.response != 0 && it.response != 1)
      throw InvalidArgument("response must be 0 or 1");
    it.position = next_position[static_cast<std::size_t>(it.student)]++;
  }

  std::stable_sort(interactions.begin(), interactions.end(),
                   [](const Interaction& a, const Interaction& b) {
                     if (a.student != b.student) return a.student < b.student;
                     return a.position < b.position;
                   });

  skill_of_question.assign(static_cast<std::size_t>(num_questions), kNoSkill);
  for (const auto& it : interactions) {
    auto& tag = skill_of_question[static_cast<std::size_t>(it.question)];
    if (tag == kNoSkill) tag = it.skill;
  }
}

bool Dataset::operator==(const Dataset& o) const {
  if (num_students != o.num_students || num_questions != o.num_questions ||
      num_skills != o.num_skills)
    return false;
  if (!(students == o.students) || !(questions == o.questions) || !(skills == o.skills))
    return false;
  if (skill_of_question != o.skill_of_question) return false;
  if (interactions.size() != o.interactions.size()) return false;
  for (std::size_t i = 0; i < interactions.size(); ++i) {
    const auto& a = interactions[i];
    const auto& b = o.interactions[i];
    if (a.student != b.student || a.question != b.question || a.response != b.response ||
        a.skill != b.skill || a.timestamp != b.timestamp || a.position != b.position)
      return false;
  }
  return true;
}

void save_canonical(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write file: " + path);
  out << "student,question,response,skill,timestamp\n";
  for (const auto& it : ds.interactions) {
    out << detail::escape_field(ds.students.name(it.student), ',') << ','
        << detail::escape_field(ds.questions.name(it.question), ',') << ','
        << it.response << ',';
    if (it.skill != kNoSkill) out << detail::escape_field(ds.skills.name(it.skill), ',');
    out << ',';
    if (it.timestamp != kNoTimestamp) out << it.timestamp;
    out << '\n';
  }
}

Dataset load_canonical(const std::string& path) {
  detail::DelimReader reader(path, ',');
  std::vector<std::string> row;
  if (!reader.next_row(row))
    throw SchemaError("empty canonical file: " + path);
  const std::vector<std::string> expected = {"student", "question", "response", "skill",
                                             "timestamp"};
  if (row != expected)
    throw SchemaError("canonical header mismatch in " + path);

  Dataset ds;
  while (reader.next_row(row)) {
    if (row.size() != 5) throw SchemaError("canonical row must have 5 fields");
    Interaction it;
    it.student = ds.students.intern(row[0]);
    it.question = ds.questions.intern(row[1]);
    if (row[2] == "0") it.response = 0;
    else if (row[2] == "1") it.response = 1;
    else throw SchemaError("response must be 0 or 1, got '" + row[2] + "'");
    it.skill = row[3].empty() ? kNoSkill : ds.skills.intern(row[3]);
    if (!row[4].empty()) {
      std::int64_t ts = 0;
      auto [p, ec] = std::from_chars(row[4].data(), row[4].data() + row[4].size(), ts);
      if (ec != std::errc() || p != row[4].data() + row[4].size())
        throw SchemaError("bad timestamp '" + row[4] + "'");
      it.timestamp = ts;
    }
    ds.interactions.push_back(it);
  }
  if (ds.interactions.empty()) throw InvalidArgument("empty dataset: " + path);
  ds.finalize();
  return ds;
}

std::pair<Dataset, Dataset> split_students(const Dataset& ds, double test_fraction,
                                           SeededRng& rng) {
  if (ds.interactions.empty()) throw InvalidArgument("split_students: empty dataset");
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw InvalidArgument("split_students: test_fraction must lie in (0, 1)");
  const int n = ds.num_students;
  const int num_test = static_cast<int>(std::lround(test_fraction * n));
  if (num_test == 0 || num_test == n)
    throw InvalidArgument("split_students: fraction yields an empty side");

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  std::vector<char> in_test(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < num_test; ++i) in_test[static_cast<std::size_t>(order[i])] = 1;

  // Both sides keep the parent vocabularies so dense indices stay aligned
  // with models trained on either side.
  Dataset train = ds;
  Dataset test = ds;
  train.interactions.clear();
  test.interactions.clear();
  for (const auto& it : ds.interactions) {
    (in_test[static_cast<std::size_t>(it.student)] ? test : train).interactions.push_back(it);
  }
  return {std::move(train), std::move(test)};
}

}  // namespace dynemb
