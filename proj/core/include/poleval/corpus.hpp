#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace poleval {

// One unit of conditionality text.
struct PolicyCondition {
  std::string id;
  std::string country;  // ISO-3
  int year = 0;
  std::string program_id;
  std::string text;
};

struct CorpusBounds {
  int min_year = 1985;
  int max_year = 2014;
};

enum class LexiconMode { verbatim, corrected, custom };

// Term list the conditions are matched against. Each pattern is a stem in a
// tiny regex subset: literal characters plus [..] single-character
// alternation, matched as a substring of the cleaned text.
//
// `verbatim` reproduces the published 13-term list byte for byte, including
// "[Uu]niversit[y]ies" (which only matches the literal "niversityies" tail)
// and "[Ac]adem". `corrected` replaces those with the stems "[Uu]niversit"
// and "[Aa]cadem" so that e.g. "university students" matches; it is the
// default everywhere. `custom` marks a list loaded from a file.
class EducationLexicon {
 public:
  static EducationLexicon verbatim();
  static EducationLexicon corrected();
  static EducationLexicon from_patterns(std::vector<std::string> patterns,
                                        LexiconMode mode = LexiconMode::custom);
  // One pattern per line; blank lines skipped.
  static EducationLexicon load(const std::filesystem::path& path);

  const std::vector<std::string>& patterns() const { return patterns_; }
  LexiconMode mode() const { return mode_; }

  // Patterns joined with '|'; for the verbatim lexicon this round-trips the
  // published string byte-identically.
  std::string serialized() const;

  // Index of the first pattern (in list order) matching anywhere in `text`,
  // or nullopt. Matching is on the text as given; callers clean first.
  std::optional<std::size_t> first_match(const std::string& text) const;

 private:
  EducationLexicon(std::vector<std::string> patterns, LexiconMode mode);

  std::vector<std::string> patterns_;
  // patterns_ compiled to per-position character sets.
  std::vector<std::vector<std::string>> compiled_;
  LexiconMode mode_;
};

// Removes digits and every character outside {letters, spaces, apostrophes,
// hyphens}, collapses whitespace runs to one space and trims. Case is
// preserved. Idempotent.
std::string clean_text(const std::string& raw);

struct TagResult {
  int flag = 0;  // 1 iff some lexicon term matches the cleaned text
  std::optional<std::string> matched_term;
};

struct TaggedEntry {
  std::string id;
  int flag = 0;
  std::optional<std::string> matched_term;
};

struct TaggedCorpus {
  std::vector<TaggedEntry> entries;  // one per condition, input order
};

TagResult tag_condition(const PolicyCondition& cond,
                        const EducationLexicon& lexicon);

// clean_text + tag_condition over every row, input order preserved.
// Throws DataError listing the offending ids if ids are not unique.
TaggedCorpus tag_corpus(const std::vector<PolicyCondition>& corpus,
                        const EducationLexicon& lexicon);

struct CountryYearRow {
  std::string country;
  int year = 0;
  std::size_t n_conditions = 0;
  std::size_t n_education = 0;
};

struct CountryYearCounts {
  std::vector<CountryYearRow> rows;  // sorted by (country, year)
  std::size_t total_conditions = 0;
  std::size_t total_education = 0;
};

CountryYearCounts country_year_counts(const TaggedCorpus& tagged,
                                      const std::vector<PolicyCondition>& corpus);

// CSV with header id,country,year,program_id,text. Validates year bounds and
// non-empty text (after trimming); errors name the offending row.
std::vector<PolicyCondition> load_corpus_csv(const std::filesystem::path& path,
                                             const CorpusBounds& bounds = {});

// Input columns plus appended edu_flag,matched_term.
void write_tagged_csv(const std::filesystem::path& path,
                      const std::vector<PolicyCondition>& corpus,
                      const TaggedCorpus& tagged,
                      const std::vector<std::string>& comments = {});

// country,year,n_conditions,n_education rows plus a TOTAL row.
void write_counts_csv(const std::filesystem::path& path,
                      const CountryYearCounts& counts,
                      const std::vector<std::string>& comments = {});

}  // namespace poleval
