#include "dynemb/loaders.hpp"

#include "csv.hpp"
#include "dynemb/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace dynemb {

namespace {

bool parse_i64(const std::string& s, std::int64_t& out) {
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

// Numeric order when both sides parse as integers, lexicographic otherwise.
bool id_less(const std::string& a, const std::string& b) {
  std::int64_t ia = 0, ib = 0;
  if (parse_i64(a, ia) && parse_i64(b, ib)) return ia < ib;
  return a < b;
}

int find_column(const std::vector<std::string>& header, const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

int require_column(const std::vector<std::string>& header, const std::string& name,
                   const std::string& path) {
  const int idx = find_column(header, name);
  if (idx < 0) throw SchemaError("missing column '" + name + "' in " + path);
  return idx;
}

int parse_binary(const std::string& s, const std::string& what) {
  if (s == "0") return 0;
  if (s == "1") return 1;
  throw SchemaError(what + " must be 0 or 1, got '" + s + "'");
}

struct RawAssistRow {
  std::int64_t order_id = 0;
  std::string user;
  std::string problem;
  int correct = 0;
  std::string skill;  // may be empty
  bool original = true;
};

}  // namespace

Dataset load_assistments(const std::string& path, DedupPolicy policy) {
  AssistmentsCleaningCounts counts;
  return load_assistments(path, policy, counts);
}

Dataset load_assistments(const std::string& path, DedupPolicy policy,
                         AssistmentsCleaningCounts& counts) {
  detail::DelimReader reader(path, ',');
  std::vector<std::string> row;
  if (!reader.next_row(row)) throw SchemaError("empty file: " + path);
  const int c_order = require_column(row, "order_id", path);
  const int c_user = require_column(row, "user_id", path);
  const int c_problem = require_column(row, "problem_id", path);
  const int c_correct = require_column(row, "correct", path);
  const int c_skill = require_column(row, "skill_id", path);
  const int c_original = require_column(row, "original", path);
  const std::size_t width = row.size();

  std::vector<RawAssistRow> rows;
  std::map<std::int64_t, std::vector<std::size_t>> by_order;
  while (reader.next_row(row)) {
    if (row.size() != width) throw SchemaError("ragged row in " + path);
    RawAssistRow r;
    if (!parse_i64(row[static_cast<std::size_t>(c_order)], r.order_id))
      throw SchemaError("bad order_id '" + row[static_cast<std::size_t>(c_order)] + "'");
    r.user = row[static_cast<std::size_t>(c_user)];
    r.problem = row[static_cast<std::size_t>(c_problem)];
    r.correct = parse_binary(row[static_cast<std::size_t>(c_correct)], "correct");
    r.skill = row[static_cast<std::size_t>(c_skill)];
    r.original = parse_binary(row[static_cast<std::size_t>(c_original)], "original") == 1;
    by_order[r.order_id].push_back(rows.size());
    rows.push_back(std::move(r));
  }
  counts.raw_rows = rows.size();

  // Collapse multi-row order_id groups. Duplication is judged on the raw
  // file, before the not-original filter.
  std::vector<RawAssistRow> cleaned;
  for (const auto& [order_id, members] : by_order) {
    if (members.size() == 1) {
      const RawAssistRow& r = rows[members.front()];
      if (!r.original) {
        ++counts.not_original_rows;
        continue;
      }
      cleaned.push_back(r);
      continue;
    }
    counts.duplicate_rows += members.size();
    if (policy == DedupPolicy::kDiscard) continue;

    ++counts.merged_groups;
    RawAssistRow merged = rows[members.front()];
    std::set<std::string, decltype(&id_less)> skill_set(&id_less);
    bool any_original = false;
    for (std::size_t idx : members) {
      const RawAssistRow& r = rows[idx];
      if (!r.skill.empty()) skill_set.insert(r.skill);
      any_original = any_original || r.original;
    }
    if (!any_original) {
      ++counts.not_original_rows;
      continue;
    }
    std::string composite;
    for (const auto& s : skill_set) {
      if (!composite.empty()) composite.push_back(kSkillJoiner);
      composite += s;
    }
    merged.skill = composite;
    cleaned.push_back(std::move(merged));
  }
  counts.kept = cleaned.size();
  if (cleaned.empty()) throw InvalidArgument("no interactions left after cleaning: " + path);

  std::sort(cleaned.begin(), cleaned.end(), [](const RawAssistRow& a, const RawAssistRow& b) {
    if (a.user != b.user) return id_less(a.user, b.user);
    return a.order_id < b.order_id;
  });

  Dataset ds;
  for (const auto& r : cleaned) {
    Interaction it;
    it.student = ds.students.intern(r.user);
    it.question = ds.questions.intern(r.problem);
    it.response = r.correct;
    it.skill = r.skill.empty() ? kNoSkill : ds.skills.intern(r.skill);
    it.timestamp = r.order_id;  // order_id is the temporal key
    ds.interactions.push_back(it);
  }
  ds.finalize();
  return ds;
}

Dataset load_cognitive_tutor(const std::string& path) {
  detail::DelimReader reader(path, '\t');
  std::vector<std::string> row;
  if (!reader.next_row(row)) throw SchemaError("empty file: " + path);
  const int c_student = require_column(row, "Anon Student Id", path);
  const int c_problem = require_column(row, "Problem Name", path);
  const int c_step = require_column(row, "Step Name", path);
  const int c_correct = require_column(row, "Correct First Attempt", path);
  int c_kc = -1;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (row[i].rfind("KC(", 0) == 0) {
      c_kc = static_cast<int>(i);
      break;
    }
  }
  if (c_kc < 0) throw SchemaError("missing KC column in " + path);
  const std::size_t width = row.size();

  Dataset ds;
  while (reader.next_row(row)) {
    if (row.size() != width) throw SchemaError("ragged row in " + path);
    Interaction it;
    it.student = ds.students.intern(row[static_cast<std::size_t>(c_student)]);
    const std::string question_raw = row[static_cast<std::size_t>(c_problem)] +
                                     kUnitSeparator + row[static_cast<std::size_t>(c_step)];
    it.question = ds.questions.intern(question_raw);
    it.response = parse_binary(row[static_cast<std::size_t>(c_correct)], "Correct First Attempt");
    const std::string& kc = row[static_cast<std::size_t>(c_kc)];
    it.skill = kc.empty() ? kNoSkill : ds.skills.intern(kc);
    ds.interactions.push_back(it);
  }
  if (ds.interactions.empty()) throw InvalidArgument("no interactions in " + path);
  ds.finalize();
  return ds;
}

}  // namespace dynemb
