#include <doctest.h>

#include <cmath>
#include <set>

#include "poleval/errors.hpp"
#include "poleval/rng.hpp"
#include "poleval/table.hpp"

using namespace poleval;

namespace {

CovariateSchema demo_schema() {
  return CovariateSchema({{"y", ColumnRole::outcome, ColumnKind::binary},
                          {"w", ColumnRole::treatment, ColumnKind::binary},
                          {"country", ColumnRole::cluster,
                           ColumnKind::categorical},
                          {"age", ColumnRole::covariate, ColumnKind::numeric},
                          {"wealth", ColumnRole::covariate,
                           ColumnKind::ordinal},
                          {"educ", ColumnRole::covariate,
                           ColumnKind::categorical},
                          {"note", ColumnRole::ignore,
                           ColumnKind::categorical}});
}

csv::Table demo_rows() {
  csv::Table t;
  t.header = {"y", "w", "country", "age", "wealth", "educ", "note"};
  t.rows = {
      {"0", "1", "KEN", "7", "1", "Primary", "-"},
      {"1", "0", "KEN", "9", "3", "noEducation", "-"},
      {"0", "1", "SLE", "12", "5", "SecondaryPlus", "-"},
      {"0", "0", "SLE", "15", "2", "Primary", "-"},
      {"1", "1", "BOL", "11", "4", "noEducation", "-"},
  };
  return t;
}

}  // namespace

TEST_CASE("schema validation") {
  CHECK_THROWS_AS(
      CovariateSchema({{"y", ColumnRole::outcome, ColumnKind::binary}}),
      SchemaError);
  CHECK_THROWS_AS(
      CovariateSchema({{"y", ColumnRole::outcome, ColumnKind::numeric},
                       {"w", ColumnRole::treatment, ColumnKind::binary},
                       {"c", ColumnRole::cluster, ColumnKind::categorical}}),
      SchemaError);
  CHECK_THROWS_AS(
      CovariateSchema({{"y", ColumnRole::outcome, ColumnKind::binary},
                       {"y", ColumnRole::treatment, ColumnKind::binary},
                       {"c", ColumnRole::cluster, ColumnKind::categorical}}),
      SchemaError);
  const CovariateSchema ok = demo_schema();
  CHECK(ok.outcome().name == "y");
  CHECK(ok.treatment().name == "w");
  CHECK(ok.cluster().name == "country");
}

TEST_CASE("schema from config") {
  const Config cfg = Config::parse(
      "column.y.role = outcome\n"
      "column.w.role = treatment\n"
      "column.cl.role = cluster\n"
      "column.age.role = covariate\n"
      "column.age.kind = numeric\n");
  const CovariateSchema schema = CovariateSchema::from_config(cfg);
  CHECK(schema.columns().size() == 4);
  CHECK(schema.find("age")->kind == ColumnKind::numeric);
  CHECK(schema.outcome().kind == ColumnKind::binary);
}

TEST_CASE("ingest five clean rows") {
  const ObservationTable t = ingest(demo_rows(), demo_schema());
  CHECK(t.n_rows() == 5);
  CHECK(t.n_clusters() == 3);
  CHECK(t.dropped_rows == 0);
  CHECK(t.cluster_labels[0] == "KEN");
  CHECK(t.cluster[2] == t.cluster[3]);      // both SLE
  CHECK(t.cluster[0] != t.cluster[2]);
  CHECK(t.covariates.size() == 3);          // ignore column dropped
  CHECK(t.covariate("age").values[2] == doctest::Approx(12));
  CHECK(t.weight[0] == 1.0);
  CHECK(t.source_rows[4] == 4);
}

TEST_CASE("ingest missing policy") {
  csv::Table rows = demo_rows();
  rows.rows[1][3] = "";  // age missing
  const ObservationTable dropped = ingest(rows, demo_schema(),
                                          MissingPolicy::drop_row);
  CHECK(dropped.n_rows() == 4);
  CHECK(dropped.dropped_rows == 1);
  CHECK(dropped.source_rows == std::vector<std::size_t>{0, 2, 3, 4});
  CHECK_THROWS_WITH_AS(ingest(rows, demo_schema(), MissingPolicy::error),
                       doctest::Contains("column 'age'"), DataError);
}

TEST_CASE("ingest rejects bad values naming row and column") {
  csv::Table rows = demo_rows();
  rows.rows[2][1] = "2";
  CHECK_THROWS_WITH_AS(ingest(rows, demo_schema()),
                       doctest::Contains("row 3, column 'w'"), DataError);

  rows = demo_rows();
  rows.rows[0][4] = "2.5";
  CHECK_THROWS_WITH_AS(ingest(rows, demo_schema()),
                       doctest::Contains("ordinal"), DataError);

  rows = demo_rows();
  rows.rows[4][3] = "old";
  CHECK_THROWS_AS(ingest(rows, demo_schema()), DataError);
}

TEST_CASE("ingest rejects schema/header mismatches and empty tables") {
  csv::Table rows = demo_rows();
  rows.header[3] = "years";
  rows.rows.clear();
  CHECK_THROWS_AS(ingest(rows, demo_schema()), SchemaError);

  csv::Table empty = demo_rows();
  empty.rows.clear();
  CHECK_THROWS_AS(ingest(empty, demo_schema()), DataError);

  csv::Table extra = demo_rows();
  extra.header.push_back("mystery");
  for (auto& r : extra.rows) r.push_back("1");
  CHECK_THROWS_WITH_AS(ingest(extra, demo_schema()),
                       doctest::Contains("mystery"), SchemaError);
}

TEST_CASE("encode one-hot drops the lexicographically first level") {
  const ObservationTable t = ingest(demo_rows(), demo_schema());
  const EncodedMatrix enc = encode(t);
  // age, wealth, educ={Primary,SecondaryPlus,noEducation} minus "Primary"
  REQUIRE(enc.feature_names.size() == 4);
  CHECK(enc.feature_names[0] == "age");
  CHECK(enc.feature_names[1] == "wealth");
  CHECK(enc.feature_names[2] == "educ=SecondaryPlus");
  CHECK(enc.feature_names[3] == "educ=noEducation");
  CHECK(enc.X.rows() == 5);
  // row 0: educ=Primary -> both indicators zero
  CHECK(enc.X(0, 2) == 0.0);
  CHECK(enc.X(0, 3) == 0.0);
  // row 1: noEducation
  CHECK(enc.X(1, 3) == 1.0);
  // row 2: SecondaryPlus
  CHECK(enc.X(2, 2) == 1.0);
  // ordinal passes through as integer codes
  CHECK(enc.X(2, 1) == doctest::Approx(5));
}

TEST_CASE("encode is deterministic and identity for all-numeric tables") {
  const CovariateSchema schema(
      {{"y", ColumnRole::outcome, ColumnKind::binary},
       {"w", ColumnRole::treatment, ColumnKind::binary},
       {"c", ColumnRole::cluster, ColumnKind::categorical},
       {"x1", ColumnRole::covariate, ColumnKind::numeric},
       {"x2", ColumnRole::covariate, ColumnKind::numeric}});
  csv::Table rows;
  rows.header = {"y", "w", "c", "x1", "x2"};
  rows.rows = {{"0", "1", "a", "1.5", "-2"}, {"1", "0", "b", "0.25", "4"}};
  const ObservationTable t = ingest(rows, schema);
  const EncodedMatrix a = encode(t);
  const EncodedMatrix b = encode(t);
  CHECK(a.X == b.X);
  CHECK(a.X(0, 0) == 1.5);
  CHECK(a.X(0, 1) == -2.0);
  CHECK(a.X(1, 0) == 0.25);
  CHECK(a.X(1, 1) == 4.0);
}

TEST_CASE("encoding map applied to new data rejects unseen levels") {
  const ObservationTable t = ingest(demo_rows(), demo_schema());
  const EncodingMap map = EncodingMap::build(t);

  csv::Table rows = demo_rows();
  rows.rows[0][5] = "Tertiary";
  const ObservationTable t2 = ingest(rows, demo_schema());
  CHECK_THROWS_WITH_AS(map.apply(t2), doctest::Contains("Tertiary"),
                       DataError);
}

TEST_CASE("balance table matches hand-computed stats") {
  const CovariateSchema schema(
      {{"y", ColumnRole::outcome, ColumnKind::binary},
       {"w", ColumnRole::treatment, ColumnKind::binary},
       {"c", ColumnRole::cluster, ColumnKind::categorical},
       {"v", ColumnRole::covariate, ColumnKind::numeric}});
  csv::Table rows;
  rows.header = {"y", "w", "c", "v"};
  rows.rows = {{"0", "1", "a", "1"}, {"0", "1", "a", "2"},
               {"0", "1", "b", "3"}, {"1", "0", "b", "10"},
               {"0", "0", "a", "10"}};
  const ObservationTable t = ingest(rows, schema);
  const BalanceTable b = balance_table(t);
  CHECK(b.arm_n[1] == 3);
  CHECK(b.arm_n[0] == 2);
  // arm 1 values {1,2,3}: mean 2, sample SD 1
  CHECK(b.entries[0].mean[1] == doctest::Approx(2.0));
  CHECK(b.entries[0].sd[1] == doctest::Approx(1.0));
  CHECK(b.entries[0].mean[0] == doctest::Approx(10.0));
  CHECK(b.entries[0].sd[0] == doctest::Approx(0.0));
}

TEST_CASE("balance means agree with an independent single-pass oracle") {
  SplitMix64 rng(55);
  csv::Table rows;
  rows.header = {"y", "w", "c", "v"};
  for (int i = 0; i < 400; ++i) {
    rows.rows.push_back({std::to_string(rng.next_below(2)),
                         std::to_string(rng.next_below(2)),
                         "c" + std::to_string(rng.next_below(5)),
                         std::to_string(rng.next_double() * 10 - 5)});
  }
  const CovariateSchema schema(
      {{"y", ColumnRole::outcome, ColumnKind::binary},
       {"w", ColumnRole::treatment, ColumnKind::binary},
       {"c", ColumnRole::cluster, ColumnKind::categorical},
       {"v", ColumnRole::covariate, ColumnKind::numeric}});
  const ObservationTable t = ingest(rows, schema);
  const BalanceTable b = balance_table(t);

  for (int arm = 0; arm < 2; ++arm) {
    double sum = 0.0;
    std::size_t n = 0;
    const auto& v = t.covariate("v").values;
    for (std::size_t i = 0; i < t.n_rows(); ++i) {
      if (t.w[i] == arm) {
        sum += v[i];
        ++n;
      }
    }
    CHECK(b.entries[0].mean[static_cast<std::size_t>(arm)] ==
          doctest::Approx(sum / static_cast<double>(n)).epsilon(1e-12));
  }
}

TEST_CASE("balance with identical arms is symmetric, empty arm errors") {
  csv::Table rows;
  rows.header = {"y", "w", "c", "v"};
  rows.rows = {{"0", "0", "a", "3"}, {"0", "1", "a", "3"},
               {"1", "0", "b", "7"}, {"1", "1", "b", "7"}};
  const CovariateSchema schema(
      {{"y", ColumnRole::outcome, ColumnKind::binary},
       {"w", ColumnRole::treatment, ColumnKind::binary},
       {"c", ColumnRole::cluster, ColumnKind::categorical},
       {"v", ColumnRole::covariate, ColumnKind::numeric}});
  const ObservationTable t = ingest(rows, schema);
  const BalanceTable b = balance_table(t);
  CHECK(b.entries[0].mean[0] == b.entries[0].mean[1]);
  CHECK(b.entries[0].sd[0] == b.entries[0].sd[1]);

  csv::Table one_arm = rows;
  one_arm.rows = {{"0", "1", "a", "1"}, {"1", "1", "b", "2"}};
  const ObservationTable t2 = ingest(one_arm, schema);
  CHECK_THROWS_AS(balance_table(t2), DataError);
}

TEST_CASE("categorical balance percentages sum to 100 per arm") {
  const ObservationTable t = ingest(demo_rows(), demo_schema());
  const BalanceTable b = balance_table(t);
  for (const auto& e : b.entries) {
    if (e.kind != ColumnKind::categorical) continue;
    double p0 = 0.0, p1 = 0.0;
    for (const auto& lv : e.levels) {
      p0 += lv.percent[0];
      p1 += lv.percent[1];
    }
    CHECK(p0 == doctest::Approx(100.0).epsilon(1e-4));
    CHECK(p1 == doctest::Approx(100.0).epsilon(1e-4));
  }
}

TEST_CASE("stratify partitions rows exactly") {
  SplitMix64 rng(11);
  csv::Table rows;
  rows.header = {"y", "w", "c", "age"};
  for (int i = 0; i < 200; ++i) {
    rows.rows.push_back({std::to_string(rng.next_below(2)),
                         std::to_string(rng.next_below(2)),
                         "c" + std::to_string(rng.next_below(4)),
                         std::to_string(7 + rng.next_below(11))});
  }
  const CovariateSchema schema(
      {{"y", ColumnRole::outcome, ColumnKind::binary},
       {"w", ColumnRole::treatment, ColumnKind::binary},
       {"c", ColumnRole::cluster, ColumnKind::categorical},
       {"age", ColumnRole::covariate, ColumnKind::numeric}});
  const ObservationTable t = ingest(rows, schema);

  std::vector<std::string> ages;
  for (int a = 7; a <= 17; ++a) ages.push_back(std::to_string(a));
  const auto subs = stratify(t, "age", ages);
  REQUIRE(subs.size() == 11);
  std::size_t total = 0;
  for (const auto& s : subs) {
    if (!s.empty) total += s.table.n_rows();
  }
  CHECK(total == t.n_rows());

  // absent value: flagged empty, not an error
  const auto missing = stratify(t, "age", {"99"});
  REQUIRE(missing.size() == 1);
  CHECK(missing[0].empty);
}

TEST_CASE("stratify fixture counts and single-value reduction") {
  csv::Table rows;
  rows.header = {"y", "w", "c", "age"};
  for (int i = 0; i < 10; ++i) {
    rows.rows.push_back({"0", i % 2 ? "1" : "0", "c",
                         i < 4 ? "7" : "9"});
  }
  const CovariateSchema schema(
      {{"y", ColumnRole::outcome, ColumnKind::binary},
       {"w", ColumnRole::treatment, ColumnKind::binary},
       {"c", ColumnRole::cluster, ColumnKind::categorical},
       {"age", ColumnRole::covariate, ColumnKind::numeric}});
  const ObservationTable t = ingest(rows, schema);
  const auto subs = stratify(t, "age", {"7"});
  REQUIRE(subs.size() == 1);
  CHECK(subs[0].table.n_rows() == 4);

  const auto all = stratify(t, "age", distinct_values(t, "age"));
  CHECK(all.size() == 2);

  csv::Table single = rows;
  single.rows = {{"0", "1", "c", "7"}, {"1", "0", "c", "7"}};
  const ObservationTable t1 = ingest(single, schema);
  const auto whole = stratify(t1, "age", {"7"});
  REQUIRE(whole.size() == 1);
  CHECK(whole[0].table.n_rows() == t1.n_rows());
}

TEST_CASE("subset re-densifies cluster indices") {
  const ObservationTable t = ingest(demo_rows(), demo_schema());
  const ObservationTable s = subset(t, {2, 3, 4});
  CHECK(s.n_rows() == 3);
  CHECK(s.n_clusters() == 2);
  CHECK(s.cluster[0] == 0);
  CHECK(s.cluster_labels[0] == "SLE");
  CHECK(s.cluster_labels[1] == "BOL");
}

TEST_CASE("lag_within_cluster shifts by time order") {
  const std::vector<int> clusters = {0, 0, 0, 1, 1};
  const std::vector<double> time = {2001, 2000, 2002, 2005, 2004};
  const std::vector<double> values = {10, 20, 30, 40, 50};
  const auto lagged = lag_within_cluster(clusters, time, values);
  // cluster 0 time order: 2000(20) -> 2001(10) -> 2002(30)
  CHECK(std::isnan(lagged[1]));
  CHECK(lagged[0] == 20);
  CHECK(lagged[2] == 10);
  // cluster 1: 2004(50) -> 2005(40)
  CHECK(std::isnan(lagged[4]));
  CHECK(lagged[3] == 50);
}
