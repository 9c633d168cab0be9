#include "poleval/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "poleval/csv.hpp"
#include "poleval/errors.hpp"

namespace poleval {

namespace {

const std::vector<std::string>& verbatim_patterns() {
  static const std::vector<std::string> kPatterns = {
      "[Ee]duca",    "[Uu]niversit[y]ies", "[Ss]chool",  "[Pp]edagog",
      "[Tt]eacher",  "[Pp]roffesor",       "[Ll]ectur",  "[Ss]tudent",
      "[Pp]upil",    "[Cc]lassroom",       "[Cc]urricul", "[Ll]earn",
      "[Ac]adem"};
  return kPatterns;
}

std::vector<std::string> compile_pattern(const std::string& pattern) {
  std::vector<std::string> charsets;
  std::size_t i = 0;
  while (i < pattern.size()) {
    const char c = pattern[i];
    if (c == '[') {
      const auto close = pattern.find(']', i + 1);
      if (close == std::string::npos) {
        throw DataError("lexicon pattern '" + pattern +
                        "': unterminated '['");
      }
      if (close == i + 1) {
        throw DataError("lexicon pattern '" + pattern +
                        "': empty character class");
      }
      charsets.push_back(pattern.substr(i + 1, close - i - 1));
      i = close + 1;
    } else if (c == ']') {
      throw DataError("lexicon pattern '" + pattern + "': stray ']'");
    } else {
      charsets.push_back(std::string(1, c));
      ++i;
    }
  }
  if (charsets.empty()) {
    throw DataError("lexicon pattern is empty");
  }
  return charsets;
}

bool matches_at(const std::vector<std::string>& charsets,
                const std::string& text, std::size_t start) {
  for (std::size_t k = 0; k < charsets.size(); ++k) {
    if (charsets[k].find(text[start + k]) == std::string::npos) return false;
  }
  return true;
}

bool contains_match(const std::vector<std::string>& charsets,
                    const std::string& text) {
  if (charsets.size() > text.size()) return false;
  const std::size_t last = text.size() - charsets.size();
  for (std::size_t i = 0; i <= last; ++i) {
    if (matches_at(charsets, text, i)) return true;
  }
  return false;
}

}  // namespace

EducationLexicon::EducationLexicon(std::vector<std::string> patterns,
                                   LexiconMode mode)
    : patterns_(std::move(patterns)), mode_(mode) {
  if (patterns_.empty()) throw DataError("lexicon has no patterns");
  compiled_.reserve(patterns_.size());
  for (const auto& p : patterns_) compiled_.push_back(compile_pattern(p));
}

EducationLexicon EducationLexicon::verbatim() {
  return EducationLexicon(verbatim_patterns(), LexiconMode::verbatim);
}

EducationLexicon EducationLexicon::corrected() {
  std::vector<std::string> patterns = verbatim_patterns();
  for (auto& p : patterns) {
    if (p == "[Uu]niversit[y]ies") p = "[Uu]niversit";
    if (p == "[Ac]adem") p = "[Aa]cadem";
  }
  return EducationLexicon(std::move(patterns), LexiconMode::corrected);
}

EducationLexicon EducationLexicon::from_patterns(
    std::vector<std::string> patterns, LexiconMode mode) {
  return EducationLexicon(std::move(patterns), mode);
}

EducationLexicon EducationLexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open lexicon file: " + path.string());
  std::vector<std::string> patterns;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    patterns.push_back(line);
  }
  if (patterns.empty()) {
    throw DataError("lexicon file has no patterns: " + path.string());
  }
  return EducationLexicon(std::move(patterns), LexiconMode::custom);
}

std::string EducationLexicon::serialized() const {
  std::string out;
  for (std::size_t i = 0; i < patterns_.size(); ++i) {
    if (i) out.push_back('|');
    out += patterns_[i];
  }
  return out;
}

std::optional<std::size_t> EducationLexicon::first_match(
    const std::string& text) const {
  for (std::size_t i = 0; i < compiled_.size(); ++i) {
    if (contains_match(compiled_[i], text)) return i;
  }
  return std::nullopt;
}

std::string clean_text(const std::string& raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (const char c : raw) {
    const bool is_letter = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z');
    const bool is_space = c == ' ' || c == '\t' || c == '\n' || c == '\r' ||
                          c == '\f' || c == '\v';
    if (is_space) {
      pending_space = true;
    } else if (is_letter || c == '\'' || c == '-') {
      if (pending_space && !out.empty()) out.push_back(' ');
      pending_space = false;
      out.push_back(c);
    }
    // digits and everything else: dropped
  }
  return out;
}

TagResult tag_condition(const PolicyCondition& cond,
                        const EducationLexicon& lexicon) {
  const std::string cleaned = clean_text(cond.text);
  TagResult result;
  if (const auto idx = lexicon.first_match(cleaned)) {
    result.flag = 1;
    result.matched_term = lexicon.patterns()[*idx];
  }
  return result;
}

TaggedCorpus tag_corpus(const std::vector<PolicyCondition>& corpus,
                        const EducationLexicon& lexicon) {
  std::set<std::string> seen;
  std::vector<std::string> dups;
  for (const auto& cond : corpus) {
    if (!seen.insert(cond.id).second) dups.push_back(cond.id);
  }
  if (!dups.empty()) {
    std::string msg = "duplicate condition ids:";
    for (const auto& id : dups) msg += " " + id;
    throw DataError(msg);
  }
  TaggedCorpus tagged;
  tagged.entries.reserve(corpus.size());
  for (const auto& cond : corpus) {
    const TagResult r = tag_condition(cond, lexicon);
    tagged.entries.push_back({cond.id, r.flag, r.matched_term});
  }
  return tagged;
}

CountryYearCounts country_year_counts(
    const TaggedCorpus& tagged, const std::vector<PolicyCondition>& corpus) {
  if (tagged.entries.size() != corpus.size()) {
    throw DataError("tagged corpus does not match corpus size");
  }
  std::map<std::pair<std::string, int>, CountryYearRow> cells;
  CountryYearCounts out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& cond = corpus[i];
    if (tagged.entries[i].id != cond.id) {
      throw DataError("tagged corpus row order does not match corpus");
    }
    auto& row = cells[{cond.country, cond.year}];
    row.country = cond.country;
    row.year = cond.year;
    row.n_conditions += 1;
    row.n_education += static_cast<std::size_t>(tagged.entries[i].flag);
    out.total_conditions += 1;
    out.total_education += static_cast<std::size_t>(tagged.entries[i].flag);
  }
  out.rows.reserve(cells.size());
  for (auto& [key, row] : cells) out.rows.push_back(std::move(row));
  return out;
}

std::vector<PolicyCondition> load_corpus_csv(const std::filesystem::path& path,
                                             const CorpusBounds& bounds) {
  const csv::Table table = csv::read_file(path);
  const std::vector<std::string> expected = {"id", "country", "year",
                                             "program_id", "text"};
  if (table.header != expected) {
    throw SchemaError(path.string() +
                      ": expected header id,country,year,program_id,text");
  }
  std::vector<PolicyCondition> corpus;
  corpus.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    PolicyCondition cond;
    cond.id = r[0];
    cond.country = r[1];
    try {
      cond.year = std::stoi(r[2]);
    } catch (const std::exception&) {
      throw DataError(path.string() + " row " + std::to_string(i + 1) +
                      ": year is not an integer: '" + r[2] + "'");
    }
    if (cond.year < bounds.min_year || cond.year > bounds.max_year) {
      throw DataError(path.string() + " row " + std::to_string(i + 1) +
                      ": year " + std::to_string(cond.year) +
                      " outside bounds [" + std::to_string(bounds.min_year) +
                      ", " + std::to_string(bounds.max_year) + "]");
    }
    cond.program_id = r[3];
    cond.text = r[4];
    const auto first = cond.text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) {
      throw DataError(path.string() + " row " + std::to_string(i + 1) +
                      ": condition text is empty");
    }
    corpus.push_back(std::move(cond));
  }
  return corpus;
}

void write_tagged_csv(const std::filesystem::path& path,
                      const std::vector<PolicyCondition>& corpus,
                      const TaggedCorpus& tagged,
                      const std::vector<std::string>& comments) {
  if (corpus.size() != tagged.entries.size()) {
    throw DataError("tagged corpus does not match corpus size");
  }
  csv::Table out;
  out.comments = comments;
  out.header = {"id",   "country",  "year",        "program_id",
                "text", "edu_flag", "matched_term"};
  out.rows.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& c = corpus[i];
    const auto& e = tagged.entries[i];
    out.rows.push_back({c.id, c.country, std::to_string(c.year), c.program_id,
                        c.text, std::to_string(e.flag),
                        e.matched_term.value_or("")});
  }
  csv::write_file(path, out);
}

void write_counts_csv(const std::filesystem::path& path,
                      const CountryYearCounts& counts,
                      const std::vector<std::string>& comments) {
  csv::Table out;
  out.comments = comments;
  out.header = {"country", "year", "n_conditions", "n_education"};
  for (const auto& r : counts.rows) {
    out.rows.push_back({r.country, std::to_string(r.year),
                        std::to_string(r.n_conditions),
                        std::to_string(r.n_education)});
  }
  out.rows.push_back({"TOTAL", "", std::to_string(counts.total_conditions),
                      std::to_string(counts.total_education)});
  csv::write_file(path, out);
}

}  // namespace poleval
