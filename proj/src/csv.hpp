#pragma once

// Minimal delimited-text reader/writer shared by the loaders. Handles
// RFC-style quoting (embedded delimiters, doubled quotes, embedded
// newlines inside quoted fields).

#include "dynemb/errors.hpp"

#include <fstream>
#include <string>
#include <vector>

namespace dynemb::detail {

class DelimReader {
 public:
  DelimReader(const std::string& path, char delim) : in_(path), delim_(delim) {
    if (!in_) throw IoError("cannot open file: " + path);
  }

  // Returns false at end of input. Skips blank lines.
  bool next_row(std::vector<std::string>& fields) {
    fields.clear();
    int c = in_.get();
    while (c == '\n' || c == '\r') c = in_.get();
    if (c == EOF) return false;

    std::string field;
    bool quoted = false;
    while (true) {
      if (quoted) {
        if (c == EOF) throw SchemaError("unterminated quoted field");
        if (c == '"') {
          const int peek = in_.peek();
          if (peek == '"') {
            field.push_back('"');
            in_.get();
          } else {
            quoted = false;
          }
        } else {
          field.push_back(static_cast<char>(c));
        }
      } else {
        if (c == EOF || c == '\n' || c == '\r') {
          fields.push_back(std::move(field));
          if (c == '\r' && in_.peek() == '\n') in_.get();
          return true;
        }
        if (c == '"' && field.empty()) {
          quoted = true;
        } else if (c == delim_) {
          fields.push_back(std::move(field));
          field.clear();
        } else {
          field.push_back(static_cast<char>(c));
        }
      }
      c = in_.get();
    }
  }

 private:
  std::ifstream in_;
  char delim_;
};

inline std::string escape_field(const std::string& s, char delim) {
  bool needs_quote = false;
  for (char c : s) {
    if (c == delim || c == '"' || c == '\n' || c == '\r') {
      needs_quote = true;
      break;
    }
  }
  if (!needs_quote) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace dynemb::detail
