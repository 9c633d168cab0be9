#pragma once

#include <Eigen/Core>
#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "poleval/config.hpp"
#include "poleval/csv.hpp"

namespace poleval {

enum class ColumnRole { outcome, treatment, covariate, cluster, ignore };
enum class ColumnKind { binary, numeric, ordinal, categorical };

ColumnRole parse_role(const std::string& s);
ColumnKind parse_kind(const std::string& s);
std::string to_string(ColumnRole role);
std::string to_string(ColumnKind kind);

struct ColumnSpec {
  std::string name;
  ColumnRole role = ColumnRole::covariate;
  ColumnKind kind = ColumnKind::numeric;
};

// Declared column roles/kinds. Valid schemas have exactly one outcome, one
// treatment and one cluster column; outcome and treatment must be binary.
class CovariateSchema {
 public:
  explicit CovariateSchema(std::vector<ColumnSpec> columns);

  // Reads column.<name>.role / column.<name>.kind keys.
  static CovariateSchema from_config(const Config& cfg);

  const std::vector<ColumnSpec>& columns() const { return columns_; }
  const ColumnSpec& outcome() const { return columns_[outcome_]; }
  const ColumnSpec& treatment() const { return columns_[treatment_]; }
  const ColumnSpec& cluster() const { return columns_[cluster_]; }
  const ColumnSpec* find(const std::string& name) const;

 private:
  std::vector<ColumnSpec> columns_;
  std::size_t outcome_ = 0, treatment_ = 0, cluster_ = 0;
};

enum class MissingPolicy { drop_row, error };

// One covariate column. Numeric-ish kinds live in `values`; categorical
// columns keep their string labels until encoding.
struct Covariate {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  std::vector<double> values;
  std::vector<std::string> labels;

  std::size_t size() const {
    return kind == ColumnKind::categorical ? labels.size() : values.size();
  }
};

// Child-level observations: outcome y, exposure w, covariates, dense cluster
// index and a carried (default 1) weight. Immutable after ingestion.
struct ObservationTable {
  std::vector<int> y;
  std::vector<int> w;
  std::vector<int> cluster;                 // dense 0..K-1
  std::vector<std::string> cluster_labels;  // original label per dense index
  std::vector<double> weight;
  std::vector<Covariate> covariates;
  std::size_t dropped_rows = 0;  // removed under MissingPolicy::drop_row
  std::vector<std::size_t> source_rows;  // 0-based data-row index per row

  std::size_t n_rows() const { return y.size(); }
  std::size_t n_clusters() const { return cluster_labels.size(); }
  const Covariate& covariate(const std::string& name) const;
  bool has_covariate(const std::string& name) const;
};

ObservationTable ingest(const csv::Table& data, const CovariateSchema& schema,
                        MissingPolicy policy = MissingPolicy::drop_row);
ObservationTable ingest_file(const std::filesystem::path& path,
                             const CovariateSchema& schema,
                             MissingPolicy policy = MissingPolicy::drop_row);

struct EncodedMatrix {
  Eigen::MatrixXd X;                       // n x p design matrix
  std::vector<std::string> feature_names;  // p names
};

// Stable covariate -> numeric-column mapping. Ordinal and binary columns pass
// through as their codes; categorical columns one-hot encode with the
// lexicographically first level dropped. A map built on one table can be
// applied to another; unseen categorical levels are an error.
class EncodingMap {
 public:
  static EncodingMap build(const ObservationTable& table);
  EncodedMatrix apply(const ObservationTable& table) const;
  const std::vector<std::string>& feature_names() const { return names_; }

 private:
  struct ColumnEncoding {
    std::string name;
    ColumnKind kind;
    std::vector<std::string> levels;  // categorical: sorted, [0] dropped
  };
  std::vector<ColumnEncoding> columns_;
  std::vector<std::string> names_;
};

EncodedMatrix encode(const ObservationTable& table);

struct BalanceEntry {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  // numeric/ordinal/binary: per-arm mean and sample SD (arm 0 = w=0)
  std::array<double, 2> mean{{0.0, 0.0}};
  std::array<double, 2> sd{{0.0, 0.0}};
  struct Level {
    std::string label;
    std::array<std::size_t, 2> count{{0, 0}};
    std::array<double, 2> percent{{0.0, 0.0}};
  };
  std::vector<Level> levels;  // categorical only
};

struct BalanceTable {
  std::array<std::size_t, 2> arm_n{{0, 0}};
  std::vector<BalanceEntry> entries;  // covariate order
};

// Per-arm covariate summaries stratified by the treatment column.
// Throws if either arm is empty.
BalanceTable balance_table(const ObservationTable& table);

void write_balance_csv(const std::filesystem::path& path,
                       const BalanceTable& balance,
                       const std::vector<std::string>& comments = {});
// Aligned plain-text rendering, 2 decimals.
std::string format_balance_text(const BalanceTable& balance);

struct SubTable {
  std::string value;  // requested stratum value, as text
  bool empty = false;
  ObservationTable table;
};

// Partitions rows by exact match of `column` against each requested value.
// Values absent from the data yield empty flagged sub-tables.
std::vector<SubTable> stratify(const ObservationTable& table,
                               const std::string& column,
                               const std::vector<std::string>& values);

// Row subset (indices into `table`), cluster indices re-densified.
ObservationTable subset(const ObservationTable& table,
                        const std::vector<std::size_t>& rows);

// Distinct values of a covariate, sorted (numerically for numeric kinds,
// lexicographically for categorical), rendered as text.
std::vector<std::string> distinct_values(const ObservationTable& table,
                                         const std::string& column);

// Within-cluster lag: for each row, the value of `values` at the most recent
// earlier `time` in the same cluster; NaN where no predecessor exists.
// (Panel-style helper for building t-1 selection regressors.)
std::vector<double> lag_within_cluster(const std::vector<int>& clusters,
                                       const std::vector<double>& time,
                                       const std::vector<double>& values);

}  // namespace poleval
