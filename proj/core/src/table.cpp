#include "poleval/table.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "poleval/errors.hpp"

namespace poleval {

namespace {

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

bool is_missing(const std::string& field) {
  return field.empty() || field == "NA" || field == "na";
}

double parse_double(const std::string& field, std::size_t row,
                    const std::string& column) {
  try {
    std::size_t consumed = 0;
    const double v = std::stod(field, &consumed);
    if (consumed != field.size()) throw std::invalid_argument(field);
    return v;
  } catch (const std::exception&) {
    throw DataError("row " + std::to_string(row) + ", column '" + column +
                    "': not a number: '" + field + "'");
  }
}

int parse_binary(const std::string& field, std::size_t row,
                 const std::string& column) {
  if (field == "0") return 0;
  if (field == "1") return 1;
  throw DataError("row " + std::to_string(row) + ", column '" + column +
                  "': expected 0 or 1, got '" + field + "'");
}

double parse_ordinal(const std::string& field, std::size_t row,
                     const std::string& column) {
  long long v = 0;
  const auto [p, ec] =
      std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || p != field.data() + field.size()) {
    throw DataError("row " + std::to_string(row) + ", column '" + column +
                    "': ordinal code must be an integer, got '" + field +
                    "'");
  }
  return static_cast<double>(v);
}

}  // namespace

ColumnRole parse_role(const std::string& s) {
  if (s == "outcome") return ColumnRole::outcome;
  if (s == "treatment") return ColumnRole::treatment;
  if (s == "covariate") return ColumnRole::covariate;
  if (s == "cluster") return ColumnRole::cluster;
  if (s == "ignore") return ColumnRole::ignore;
  throw SchemaError("unknown column role '" + s + "'");
}

ColumnKind parse_kind(const std::string& s) {
  if (s == "binary") return ColumnKind::binary;
  if (s == "numeric") return ColumnKind::numeric;
  if (s == "ordinal") return ColumnKind::ordinal;
  if (s == "categorical") return ColumnKind::categorical;
  throw SchemaError("unknown column kind '" + s + "'");
}

std::string to_string(ColumnRole role) {
  switch (role) {
    case ColumnRole::outcome: return "outcome";
    case ColumnRole::treatment: return "treatment";
    case ColumnRole::covariate: return "covariate";
    case ColumnRole::cluster: return "cluster";
    case ColumnRole::ignore: return "ignore";
  }
  return "?";
}

std::string to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::binary: return "binary";
    case ColumnKind::numeric: return "numeric";
    case ColumnKind::ordinal: return "ordinal";
    case ColumnKind::categorical: return "categorical";
  }
  return "?";
}

CovariateSchema::CovariateSchema(std::vector<ColumnSpec> columns)
    : columns_(std::move(columns)) {
  std::set<std::string> names;
  int n_outcome = 0, n_treatment = 0, n_cluster = 0;
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    const auto& c = columns_[i];
    if (!names.insert(c.name).second) {
      throw SchemaError("schema: duplicate column name '" + c.name + "'");
    }
    switch (c.role) {
      case ColumnRole::outcome:
        ++n_outcome;
        outcome_ = i;
        if (c.kind != ColumnKind::binary) {
          throw SchemaError("schema: outcome column '" + c.name +
                            "' must be binary");
        }
        break;
      case ColumnRole::treatment:
        ++n_treatment;
        treatment_ = i;
        if (c.kind != ColumnKind::binary) {
          throw SchemaError("schema: treatment column '" + c.name +
                            "' must be binary");
        }
        break;
      case ColumnRole::cluster:
        ++n_cluster;
        cluster_ = i;
        break;
      default:
        break;
    }
  }
  if (n_outcome != 1 || n_treatment != 1 || n_cluster != 1) {
    throw SchemaError(
        "schema: need exactly one outcome, one treatment and one cluster "
        "column (got " +
        std::to_string(n_outcome) + "/" + std::to_string(n_treatment) + "/" +
        std::to_string(n_cluster) + ")");
  }
}

CovariateSchema CovariateSchema::from_config(const Config& cfg) {
  std::vector<ColumnSpec> specs;
  for (const auto& name : cfg.column_names()) {
    ColumnSpec spec;
    spec.name = name;
    spec.role = parse_role(cfg.get("column." + name + ".role"));
    spec.kind = spec.role == ColumnRole::cluster
                    ? ColumnKind::categorical
                    : parse_kind(cfg.get_or("column." + name + ".kind",
                                            spec.role == ColumnRole::outcome ||
                                                    spec.role ==
                                                        ColumnRole::treatment
                                                ? "binary"
                                                : "numeric"));
    specs.push_back(std::move(spec));
  }
  return CovariateSchema(std::move(specs));
}

const ColumnSpec* CovariateSchema::find(const std::string& name) const {
  for (const auto& c : columns_) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

const Covariate& ObservationTable::covariate(const std::string& name) const {
  for (const auto& c : covariates) {
    if (c.name == name) return c;
  }
  throw SchemaError("no such covariate: '" + name + "'");
}

bool ObservationTable::has_covariate(const std::string& name) const {
  for (const auto& c : covariates) {
    if (c.name == name) return true;
  }
  return false;
}

ObservationTable ingest(const csv::Table& data, const CovariateSchema& schema,
                        MissingPolicy policy) {
  // Header must cover the schema exactly: every schema column present, no
  // undeclared columns.
  std::map<std::string, std::size_t> col_index;
  for (std::size_t j = 0; j < data.header.size(); ++j) {
    if (!col_index.emplace(data.header[j], j).second) {
      throw SchemaError("duplicate data column '" + data.header[j] + "'");
    }
    if (schema.find(data.header[j]) == nullptr) {
      throw SchemaError("data column '" + data.header[j] +
                        "' is not declared in the schema");
    }
  }
  for (const auto& spec : schema.columns()) {
    if (col_index.find(spec.name) == col_index.end()) {
      throw SchemaError("schema column '" + spec.name +
                        "' is missing from the data header");
    }
  }

  ObservationTable table;
  for (const auto& spec : schema.columns()) {
    if (spec.role != ColumnRole::covariate) continue;
    Covariate cov;
    cov.name = spec.name;
    cov.kind = spec.kind;
    table.covariates.push_back(std::move(cov));
  }

  std::map<std::string, int> cluster_index;
  std::vector<std::size_t> active;  // header positions of non-ignored columns
  for (const auto& spec : schema.columns()) {
    if (spec.role != ColumnRole::ignore) active.push_back(col_index[spec.name]);
  }

  for (std::size_t i = 0; i < data.rows.size(); ++i) {
    const auto& row = data.rows[i];
    const std::size_t rowno = i + 1;

    bool missing = false;
    for (const std::size_t j : active) {
      if (is_missing(row[j])) {
        if (policy == MissingPolicy::error) {
          throw DataError("row " + std::to_string(rowno) + ", column '" +
                          data.header[j] + "': missing value");
        }
        missing = true;
        break;
      }
    }
    if (missing) {
      ++table.dropped_rows;
      continue;
    }

    table.source_rows.push_back(i);
    table.y.push_back(
        parse_binary(row[col_index[schema.outcome().name]], rowno,
                     schema.outcome().name));
    table.w.push_back(
        parse_binary(row[col_index[schema.treatment().name]], rowno,
                     schema.treatment().name));

    const std::string& cluster_label = row[col_index[schema.cluster().name]];
    auto [it, inserted] = cluster_index.emplace(
        cluster_label, static_cast<int>(table.cluster_labels.size()));
    if (inserted) table.cluster_labels.push_back(cluster_label);
    table.cluster.push_back(it->second);

    table.weight.push_back(1.0);

    std::size_t c = 0;
    for (const auto& spec : schema.columns()) {
      if (spec.role != ColumnRole::covariate) continue;
      const std::string& field = row[col_index[spec.name]];
      Covariate& cov = table.covariates[c++];
      switch (spec.kind) {
        case ColumnKind::binary:
          cov.values.push_back(parse_binary(field, rowno, spec.name));
          break;
        case ColumnKind::numeric:
          cov.values.push_back(parse_double(field, rowno, spec.name));
          break;
        case ColumnKind::ordinal:
          cov.values.push_back(parse_ordinal(field, rowno, spec.name));
          break;
        case ColumnKind::categorical:
          cov.labels.push_back(field);
          break;
      }
    }
  }
  if (table.n_rows() == 0) {
    throw DataError("empty table after ingestion (all rows missing or no "
                    "data rows)");
  }
  return table;
}

ObservationTable ingest_file(const std::filesystem::path& path,
                             const CovariateSchema& schema,
                             MissingPolicy policy) {
  return ingest(csv::read_file(path), schema, policy);
}

EncodingMap EncodingMap::build(const ObservationTable& table) {
  EncodingMap map;
  for (const auto& cov : table.covariates) {
    ColumnEncoding enc;
    enc.name = cov.name;
    enc.kind = cov.kind;
    if (cov.kind == ColumnKind::categorical) {
      std::set<std::string> levels(cov.labels.begin(), cov.labels.end());
      enc.levels.assign(levels.begin(), levels.end());
      for (std::size_t l = 1; l < enc.levels.size(); ++l) {
        map.names_.push_back(cov.name + "=" + enc.levels[l]);
      }
    } else {
      map.names_.push_back(cov.name);
    }
    map.columns_.push_back(std::move(enc));
  }
  return map;
}

EncodedMatrix EncodingMap::apply(const ObservationTable& table) const {
  const std::size_t n = table.n_rows();
  EncodedMatrix out;
  out.feature_names = names_;
  out.X = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                static_cast<Eigen::Index>(names_.size()));
  std::size_t col = 0;
  for (const auto& enc : columns_) {
    const Covariate& cov = table.covariate(enc.name);
    if (cov.kind != enc.kind) {
      throw SchemaError("encoding map: column '" + enc.name +
                        "' kind changed");
    }
    if (enc.kind == ColumnKind::categorical) {
      for (std::size_t i = 0; i < n; ++i) {
        const auto it = std::lower_bound(enc.levels.begin(), enc.levels.end(),
                                         cov.labels[i]);
        if (it == enc.levels.end() || *it != cov.labels[i]) {
          throw DataError("column '" + enc.name + "': unseen level '" +
                          cov.labels[i] + "'");
        }
        const std::size_t level =
            static_cast<std::size_t>(it - enc.levels.begin());
        if (level > 0) {
          out.X(static_cast<Eigen::Index>(i),
                static_cast<Eigen::Index>(col + level - 1)) = 1.0;
        }
      }
      col += enc.levels.size() - 1;
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        out.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(col)) =
            cov.values[i];
      }
      ++col;
    }
  }
  return out;
}

EncodedMatrix encode(const ObservationTable& table) {
  return EncodingMap::build(table).apply(table);
}

BalanceTable balance_table(const ObservationTable& table) {
  BalanceTable out;
  const std::size_t n = table.n_rows();
  for (std::size_t i = 0; i < n; ++i) {
    ++out.arm_n[static_cast<std::size_t>(table.w[i])];
  }
  if (out.arm_n[0] == 0 || out.arm_n[1] == 0) {
    throw DataError("balance table: an exposure arm has zero rows (n0=" +
                    std::to_string(out.arm_n[0]) +
                    ", n1=" + std::to_string(out.arm_n[1]) + ")");
  }
  for (const auto& cov : table.covariates) {
    BalanceEntry entry;
    entry.name = cov.name;
    entry.kind = cov.kind;
    if (cov.kind == ColumnKind::categorical) {
      std::set<std::string> levels(cov.labels.begin(), cov.labels.end());
      std::map<std::string, std::array<std::size_t, 2>> counts;
      for (const auto& l : levels) counts[l] = {0, 0};
      for (std::size_t i = 0; i < n; ++i) {
        counts[cov.labels[i]][static_cast<std::size_t>(table.w[i])] += 1;
      }
      for (const auto& [label, c] : counts) {
        BalanceEntry::Level lv;
        lv.label = label;
        lv.count = c;
        for (int arm = 0; arm < 2; ++arm) {
          lv.percent[static_cast<std::size_t>(arm)] =
              100.0 * static_cast<double>(c[static_cast<std::size_t>(arm)]) /
              static_cast<double>(out.arm_n[static_cast<std::size_t>(arm)]);
        }
        entry.levels.push_back(std::move(lv));
      }
    } else {
      for (int arm = 0; arm < 2; ++arm) {
        const auto a = static_cast<std::size_t>(arm);
        double sum = 0.0;
        std::size_t m = 0;
        for (std::size_t i = 0; i < n; ++i) {
          if (table.w[i] == arm) {
            sum += cov.values[i];
            ++m;
          }
        }
        const double mean = sum / static_cast<double>(m);
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          if (table.w[i] == arm) {
            const double d = cov.values[i] - mean;
            ss += d * d;
          }
        }
        entry.mean[a] = mean;
        entry.sd[a] = m > 1 ? std::sqrt(ss / static_cast<double>(m - 1)) : 0.0;
      }
    }
    out.entries.push_back(std::move(entry));
  }
  return out;
}

void write_balance_csv(const std::filesystem::path& path,
                       const BalanceTable& balance,
                       const std::vector<std::string>& comments) {
  csv::Table out;
  out.comments = comments;
  out.header = {"covariate", "statistic", "arm0", "arm1"};
  auto num = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return std::string(buf);
  };
  out.rows.push_back({"n", "count", std::to_string(balance.arm_n[0]),
                      std::to_string(balance.arm_n[1])});
  for (const auto& e : balance.entries) {
    if (e.kind == ColumnKind::categorical) {
      for (const auto& lv : e.levels) {
        out.rows.push_back({e.name + "=" + lv.label, "count",
                            std::to_string(lv.count[0]),
                            std::to_string(lv.count[1])});
        out.rows.push_back({e.name + "=" + lv.label, "percent",
                            num(lv.percent[0]), num(lv.percent[1])});
      }
    } else {
      out.rows.push_back({e.name, "mean", num(e.mean[0]), num(e.mean[1])});
      out.rows.push_back({e.name, "sd", num(e.sd[0]), num(e.sd[1])});
    }
  }
  csv::write_file(path, out);
}

std::string format_balance_text(const BalanceTable& balance) {
  std::vector<std::array<std::string, 3>> lines;
  char buf[128];
  lines.push_back({"n", std::to_string(balance.arm_n[0]),
                   std::to_string(balance.arm_n[1])});
  for (const auto& e : balance.entries) {
    if (e.kind == ColumnKind::categorical) {
      lines.push_back({e.name + " (count (%))", "", ""});
      for (const auto& lv : e.levels) {
        std::array<std::string, 3> line;
        line[0] = "  " + lv.label;
        for (int arm = 0; arm < 2; ++arm) {
          const auto a = static_cast<std::size_t>(arm);
          std::snprintf(buf, sizeof(buf), "%zu (%.2f)", lv.count[a],
                        lv.percent[a]);
          line[a + 1] = buf;
        }
        lines.push_back(std::move(line));
      }
    } else {
      std::array<std::string, 3> line;
      line[0] = e.name + " (mean (sd))";
      for (int arm = 0; arm < 2; ++arm) {
        const auto a = static_cast<std::size_t>(arm);
        std::snprintf(buf, sizeof(buf), "%.2f (%.2f)", e.mean[a], e.sd[a]);
        line[a + 1] = buf;
      }
      lines.push_back(std::move(line));
    }
  }
  lines.insert(lines.begin(), {"covariate", "exposure=0", "exposure=1"});
  std::size_t w0 = 0, w1 = 0;
  for (const auto& l : lines) {
    w0 = std::max(w0, l[0].size());
    w1 = std::max(w1, l[1].size());
  }
  std::ostringstream os;
  for (const auto& l : lines) {
    os << l[0] << std::string(w0 - l[0].size(), ' ') << "  " << l[1]
       << std::string(w1 - l[1].size(), ' ') << "  " << l[2] << '\n';
  }
  return os.str();
}

ObservationTable subset(const ObservationTable& table,
                        const std::vector<std::size_t>& rows) {
  ObservationTable out;
  std::map<int, int> cluster_map;
  for (const std::size_t i : rows) {
    out.y.push_back(table.y[i]);
    out.w.push_back(table.w[i]);
    out.weight.push_back(table.weight[i]);
    if (!table.source_rows.empty()) {
      out.source_rows.push_back(table.source_rows[i]);
    }
    const int old_c = table.cluster[i];
    auto [it, inserted] = cluster_map.emplace(
        old_c, static_cast<int>(out.cluster_labels.size()));
    if (inserted) {
      out.cluster_labels.push_back(
          table.cluster_labels[static_cast<std::size_t>(old_c)]);
    }
    out.cluster.push_back(it->second);
  }
  for (const auto& cov : table.covariates) {
    Covariate c;
    c.name = cov.name;
    c.kind = cov.kind;
    for (const std::size_t i : rows) {
      if (cov.kind == ColumnKind::categorical) {
        c.labels.push_back(cov.labels[i]);
      } else {
        c.values.push_back(cov.values[i]);
      }
    }
    out.covariates.push_back(std::move(c));
  }
  return out;
}

std::vector<SubTable> stratify(const ObservationTable& table,
                               const std::string& column,
                               const std::vector<std::string>& values) {
  const Covariate& cov = table.covariate(column);
  std::vector<SubTable> out;
  std::vector<bool> taken(table.n_rows(), false);
  for (const auto& value : values) {
    SubTable sub;
    sub.value = value;
    std::vector<std::size_t> rows;
    if (cov.kind == ColumnKind::categorical) {
      for (std::size_t i = 0; i < table.n_rows(); ++i) {
        if (!taken[i] && cov.labels[i] == value) {
          rows.push_back(i);
          taken[i] = true;
        }
      }
    } else {
      const double target = parse_double(value, 0, column);
      for (std::size_t i = 0; i < table.n_rows(); ++i) {
        if (!taken[i] && cov.values[i] == target) {
          rows.push_back(i);
          taken[i] = true;
        }
      }
    }
    if (rows.empty()) {
      sub.empty = true;
    } else {
      sub.table = subset(table, rows);
    }
    out.push_back(std::move(sub));
  }
  return out;
}

std::vector<std::string> distinct_values(const ObservationTable& table,
                                         const std::string& column) {
  const Covariate& cov = table.covariate(column);
  std::vector<std::string> out;
  if (cov.kind == ColumnKind::categorical) {
    std::set<std::string> values(cov.labels.begin(), cov.labels.end());
    out.assign(values.begin(), values.end());
  } else {
    std::set<double> values(cov.values.begin(), cov.values.end());
    for (const double v : values) out.push_back(format_number(v));
  }
  return out;
}

std::vector<double> lag_within_cluster(const std::vector<int>& clusters,
                                       const std::vector<double>& time,
                                       const std::vector<double>& values) {
  const std::size_t n = clusters.size();
  if (time.size() != n || values.size() != n) {
    throw DataError("lag_within_cluster: input lengths differ");
  }
  std::map<int, std::vector<std::size_t>> by_cluster;
  for (std::size_t i = 0; i < n; ++i) by_cluster[clusters[i]].push_back(i);
  std::vector<double> out(n, std::numeric_limits<double>::quiet_NaN());
  for (auto& [c, idx] : by_cluster) {
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return time[a] < time[b];
    });
    for (std::size_t k = 1; k < idx.size(); ++k) {
      out[idx[k]] = values[idx[k - 1]];
    }
  }
  return out;
}

}  // namespace poleval
