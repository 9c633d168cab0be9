#include "poleval/csv.hpp"

#include <fstream>
#include <sstream>

#include "poleval/errors.hpp"

namespace poleval::csv {

namespace {

// Splits one raw record; `pos` sits at the start of a record and is advanced
// past its terminator.
std::vector<std::string> parse_record(const std::string& text,
                                      std::size_t& pos) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  while (pos < text.size()) {
    const char c = text[pos];
    if (quoted) {
      if (c == '"') {
        if (pos + 1 < text.size() && text[pos + 1] == '"') {
          field.push_back('"');
          pos += 2;
        } else {
          quoted = false;
          ++pos;
        }
      } else {
        field.push_back(c);
        ++pos;
      }
    } else if (c == '"' && field.empty()) {
      quoted = true;
      ++pos;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      ++pos;
    } else if (c == '\n' || c == '\r') {
      ++pos;
      if (c == '\r' && pos < text.size() && text[pos] == '\n') ++pos;
      fields.push_back(std::move(field));
      return fields;
    } else {
      field.push_back(c);
      ++pos;
    }
  }
  if (quoted) throw IoError("csv: unterminated quoted field");
  fields.push_back(std::move(field));
  return fields;
}

}  // namespace

Table parse(const std::string& text) {
  Table out;
  std::size_t pos = 0;
  bool saw_header = false;
  while (pos < text.size()) {
    if (!saw_header && text[pos] == '#') {
      std::size_t eol = text.find('\n', pos);
      if (eol == std::string::npos) eol = text.size();
      std::string line = text.substr(pos + 1, eol - pos - 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty() && line.front() == ' ') line.erase(0, 1);
      out.comments.push_back(line);
      pos = (eol == text.size()) ? eol : eol + 1;
      continue;
    }
    auto record = parse_record(text, pos);
    // A lone trailing newline yields a single empty field; drop it.
    if (record.size() == 1 && record[0].empty() && pos >= text.size()) break;
    if (!saw_header) {
      out.header = std::move(record);
      saw_header = true;
    } else {
      if (record.size() != out.header.size()) {
        throw IoError("csv: row " + std::to_string(out.rows.size() + 1) +
                      " has " + std::to_string(record.size()) +
                      " fields, header has " +
                      std::to_string(out.header.size()));
      }
      out.rows.push_back(std::move(record));
    }
  }
  if (!saw_header) throw IoError("csv: empty input (no header)");
  return out;
}

Table read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse(buf.str());
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

std::string escape(const std::string& field) {
  const bool needs_quote =
      field.find_first_of(",\"\r\n") != std::string::npos;
  if (!needs_quote) return field;
  std::string out = "\"";
  for (const char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string format(const Table& table) {
  std::string out;
  for (const auto& c : table.comments) {
    out += "# ";
    out += c;
    out += '\n';
  }
  auto append_record = [&out](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out.push_back(',');
      out += escape(fields[i]);
    }
    out.push_back('\n');
  };
  append_record(table.header);
  for (const auto& row : table.rows) append_record(row);
  return out;
}

void write_file(const std::filesystem::path& path, const Table& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write file: " + path.string());
  out << format(table);
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace poleval::csv
