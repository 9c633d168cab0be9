#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "poleval/csv.hpp"

namespace fs = std::filesystem;
using poleval::csv::Table;
namespace csv = poleval::csv;

namespace {

const fs::path kFixtures{POLEVAL_FIXTURE_DIR};

struct CommandResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

CommandResult run_cli(const std::string& args, const fs::path& dir) {
  fs::create_directories(dir);
  const fs::path out = dir / "_stdout.txt";
  const fs::path err = dir / "_stderr.txt";
  const std::string cmd = std::string(POLEVAL_BIN) + " " + args + " > " +
                          out.string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  CommandResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("poleval_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace

TEST_CASE("tag flags the fixture corpus") {
  const fs::path dir = fresh_dir("tag");
  const auto r = run_cli("tag --in " + (kFixtures / "conditions.csv").string() +
                             " --out " + (dir / "out").string() + " --seed 1",
                         dir);
  REQUIRE(r.exit_code == 0);

  const csv::Table tagged = csv::read_file(dir / "out" / "tagged.csv");
  REQUIRE(tagged.rows.size() == 40);
  std::size_t flagged = 0;
  for (const auto& row : tagged.rows) flagged += row[5] == "1";
  CHECK(flagged == 9);
  REQUIRE_FALSE(tagged.comments.empty());
  CHECK(tagged.comments[0].find("config=") != std::string::npos);
  CHECK(tagged.comments[0].find("seed=1") != std::string::npos);

  const csv::Table counts =
      csv::read_file(dir / "out" / "country_year_counts.csv");
  REQUIRE_FALSE(counts.rows.empty());
  const auto& total = counts.rows.back();
  CHECK(total[0] == "TOTAL");
  CHECK(total[2] == "40");
  CHECK(total[3] == "9");
  fs::remove_all(dir);
}

TEST_CASE("tag in verbatim mode misses the corrected-only condition") {
  const fs::path dir = fresh_dir("tag_verbatim");
  const auto r = run_cli("tag --in " + (kFixtures / "conditions.csv").string() +
                             " --out " + (dir / "out").string() +
                             " --seed 1 --dict-mode verbatim",
                         dir);
  REQUIRE(r.exit_code == 0);
  const csv::Table counts =
      csv::read_file(dir / "out" / "country_year_counts.csv");
  CHECK(counts.rows.back()[3] == "8");
  fs::remove_all(dir);
}

TEST_CASE("simulate then fit recovers a planted effect") {
  const fs::path dir = fresh_dir("simfit");
  write_file(dir / "sim.conf",
             "sim.n = 4000\n"
             "sim.clusters = 40\n"
             "sim.p = 4\n"
             "sim.propensity = randomized\n"
             "sim.tau = constant\n"
             "sim.tau.value = 0.06\n"
             "sim.base.intercept = 0.2\n"
             "sim.base.coefs = 0.05,-0.04,0,0\n"
             "sim.cluster_sd = 0.02\n"
             "forest.n_trees = 150\n"
             "forest.min_leaf = 50\n");
  auto r = run_cli("simulate --config " + (dir / "sim.conf").string() +
                       " --out " + (dir / "sim").string() + " --seed 2",
                   dir);
  REQUIRE(r.exit_code == 0);
  r = run_cli("fit --config " + (dir / "sim" / "schema.conf").string() +
                  " --in " + (dir / "sim" / "data.csv").string() + " --out " +
                  (dir / "fit").string() + " --seed 2",
              dir);
  REQUIRE(r.exit_code == 0);

  const csv::Table ate = csv::read_file(dir / "fit" / "ate.csv");
  REQUIRE(ate.rows.size() == 1);
  const double estimate = std::stod(ate.rows[0][0]);
  CHECK(estimate > 0.04);
  CHECK(estimate < 0.08);
  CHECK(fs::exists(dir / "fit" / "tau.csv"));
  CHECK(fs::exists(dir / "fit" / "nuisance.csv"));
  CHECK(fs::exists(dir / "fit" / "ate.txt"));
  fs::remove_all(dir);
}

TEST_CASE("report groups by age with one row per group") {
  const fs::path dir = fresh_dir("report");
  write_file(dir / "sim.conf",
             "sim.n = 3000\n"
             "sim.clusters = 30\n"
             "sim.p = 3\n"
             "sim.covariate.1.dist = uniform_int\n"
             "sim.covariate.1.lo = 7\n"
             "sim.covariate.1.hi = 17\n"
             "sim.covariate.1.name = age\n"
             "sim.tau = threshold\n"
             "sim.tau.feature = 1\n"
             "sim.tau.cut = 11.5\n"
             "sim.tau.below = 0.09\n"
             "sim.tau.above_add = -0.05\n"
             "sim.base.intercept = 0.2\n"
             "forest.n_trees = 80\n"
             "forest.min_leaf = 60\n");
  auto r = run_cli("simulate --config " + (dir / "sim.conf").string() +
                       " --out " + (dir / "sim").string() + " --seed 5",
                   dir);
  REQUIRE(r.exit_code == 0);
  r = run_cli("report --config " + (dir / "sim" / "schema.conf").string() +
                  " --in " + (dir / "sim" / "data.csv").string() + " --out " +
                  (dir / "rep").string() + " --seed 5 --group age" +
                  " --quintile-covariates age,x2",
              dir);
  REQUIRE(r.exit_code == 0);

  const csv::Table groups = csv::read_file(dir / "rep" / "group_ate.csv");
  CHECK(groups.rows.size() == 11);
  const csv::Table quintiles =
      csv::read_file(dir / "rep" / "quintile_profile.csv");
  CHECK(quintiles.rows.size() == 5);
  CHECK(quintiles.header.size() == 5);  // quintile, n, mean_tau, 2 covariates
  const csv::Table hist = csv::read_file(dir / "rep" / "cate_histogram.csv");
  std::size_t total = 0;
  for (const auto& row : hist.rows) total += std::stoul(row[2]);
  CHECK(total == 3000);
  const csv::Table imp =
      csv::read_file(dir / "rep" / "moderator_importance.csv");
  CHECK(imp.rows.size() == 3);
  fs::remove_all(dir);
}

TEST_CASE("heckman writes the first stage and the lambda column") {
  const fs::path dir = fresh_dir("heckman");
  write_file(dir / "sim.conf",
             "sim.n = 2000\n"
             "sim.clusters = 25\n"
             "sim.p = 3\n"
             "sim.propensity = cluster_probit\n"
             "sim.propensity.intercept = 0.1\n"
             "sim.propensity.coefs = 0.8,0,0\n"
             "sim.covariate.1.dist = cluster_normal\n"
             "sim.selection_strength = 0.4\n"
             "sim.tau = constant\n"
             "sim.tau.value = 0.05\n"
             "sim.base.intercept = 0.2\n");
  auto r = run_cli("simulate --config " + (dir / "sim.conf").string() +
                       " --out " + (dir / "sim").string() + " --seed 9",
                   dir);
  REQUIRE(r.exit_code == 0);
  r = run_cli("heckman --config " + (dir / "sim" / "schema.conf").string() +
                  " --in " + (dir / "sim" / "data.csv").string() + " --out " +
                  (dir / "heck").string() + " --seed 9",
              dir);
  REQUIRE(r.exit_code == 0);

  const csv::Table gamma = csv::read_file(dir / "heck" / "gamma.csv");
  REQUIRE(gamma.rows.size() == 2);  // intercept + x1
  CHECK(gamma.rows[0][0] == "(intercept)");
  CHECK(gamma.rows[1][0] == "x1");
  CHECK(std::stod(gamma.rows[1][1]) > 0.0);  // planted 0.8

  const csv::Table data = csv::read_file(dir / "heck" / "data_lambda.csv");
  REQUIRE(data.header.back() == "political_will_lambda");
  const std::size_t w_col = 1;
  for (const auto& row : data.rows) {
    const double lambda = std::stod(row.back());
    if (row[w_col] == "1") {
      CHECK(lambda > 0.0);
    } else {
      CHECK(lambda < 0.0);
    }
  }
  const std::string schema = slurp(dir / "heck" / "schema_lambda.conf");
  CHECK(schema.find("column.political_will_lambda.role = covariate") !=
        std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("identical seeds give byte-identical artifacts") {
  const fs::path dir = fresh_dir("determinism");
  write_file(dir / "sim.conf",
             "sim.n = 1500\n"
             "sim.clusters = 15\n"
             "sim.p = 3\n"
             "sim.tau = constant\n"
             "sim.tau.value = 0.05\n"
             "sim.base.intercept = 0.2\n"
             "forest.n_trees = 60\n"
             "forest.min_leaf = 40\n");
  for (const char* run : {"a", "b"}) {
    auto r = run_cli("simulate --config " + (dir / "sim.conf").string() +
                         " --out " + (dir / run / "sim").string() +
                         " --seed 21",
                     dir);
    REQUIRE(r.exit_code == 0);
    r = run_cli("fit --config " +
                    (dir / run / "sim" / "schema.conf").string() + " --in " +
                    (dir / run / "sim" / "data.csv").string() + " --out " +
                    (dir / run / "fit").string() + " --seed 21",
                dir);
    REQUIRE(r.exit_code == 0);
  }
  for (const char* stage : {"sim", "fit"}) {
    for (const auto& entry :
         fs::directory_iterator(dir / "a" / stage)) {
      const fs::path b_file = dir / "b" / stage / entry.path().filename();
      REQUIRE(fs::exists(b_file));
      CHECK(slurp(entry.path()) == slurp(b_file));
    }
  }
  fs::remove_all(dir);
}

TEST_CASE("error paths exit with their documented codes") {
  const fs::path dir = fresh_dir("errors");

  // unknown flag -> usage error 2
  auto r = run_cli("tag --in x.csv --out y --frobnicate", dir);
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("poleval: error code=2 kind=usage") != std::string::npos);
  CHECK(r.err.find('\n') == r.err.size() - 1);  // single line

  // unreadable file -> io error 3
  r = run_cli("tag --in " + (dir / "missing.csv").string() + " --out " +
                  (dir / "out").string() + " --seed 1",
              dir);
  CHECK(r.exit_code == 3);
  CHECK(r.err.find("code=3 kind=io") != std::string::npos);

  // schema violation -> 4
  write_file(dir / "data.csv", "y,w,c,x\n0,1,a,1\n1,0,b,2\n");
  write_file(dir / "schema.conf",
             "column.y.role = outcome\n"
             "column.w.role = treatment\n"
             "column.c.role = cluster\n");  // x missing from schema
  r = run_cli("balance --config " + (dir / "schema.conf").string() +
                  " --in " + (dir / "data.csv").string() + " --out " +
                  (dir / "out").string() + " --seed 1",
              dir);
  CHECK(r.exit_code == 4);
  CHECK(r.err.find("code=4 kind=schema") != std::string::npos);

  // bad treatment value -> data error 5
  write_file(dir / "data2.csv", "y,w,c,x\n0,2,a,1\n1,0,b,2\n");
  write_file(dir / "schema2.conf",
             "column.y.role = outcome\n"
             "column.w.role = treatment\n"
             "column.c.role = cluster\n"
             "column.x.role = covariate\n"
             "column.x.kind = numeric\n");
  r = run_cli("balance --config " + (dir / "schema2.conf").string() +
                  " --in " + (dir / "data2.csv").string() + " --out " +
                  (dir / "out").string() + " --seed 1",
              dir);
  CHECK(r.exit_code == 5);
  CHECK(r.err.find("code=5 kind=data") != std::string::npos);

  // fit without a seed -> schema error 4
  r = run_cli("fit --config " + (dir / "schema2.conf").string() + " --in " +
                  (dir / "data2.csv").string() + " --out " +
                  (dir / "out").string(),
              dir);
  CHECK(r.exit_code == 4);
  fs::remove_all(dir);
}

TEST_CASE("balance artifacts carry the header and aligned text") {
  const fs::path dir = fresh_dir("balance");
  write_file(dir / "data.csv",
             "y,w,c,v\n0,1,a,1\n0,1,a,2\n0,1,b,3\n1,0,b,10\n0,0,a,12\n");
  write_file(dir / "schema.conf",
             "column.y.role = outcome\n"
             "column.w.role = treatment\n"
             "column.c.role = cluster\n"
             "column.v.role = covariate\n"
             "column.v.kind = numeric\n");
  const auto r = run_cli("balance --config " + (dir / "schema.conf").string() +
                             " --in " + (dir / "data.csv").string() +
                             " --out " + (dir / "out").string() + " --seed 1",
                         dir);
  REQUIRE(r.exit_code == 0);
  const csv::Table balance = csv::read_file(dir / "out" / "balance.csv");
  REQUIRE(balance.rows.size() >= 3);
  CHECK(balance.rows[0][0] == "n");
  const std::string text = slurp(dir / "out" / "balance.txt");
  CHECK(text.find("exposure=0") != std::string::npos);
  CHECK(text.find("2.00 (1.00)") != std::string::npos);
  fs::remove_all(dir);
}
