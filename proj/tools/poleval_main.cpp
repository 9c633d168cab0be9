// poleval: tag -> ingest -> (heckman) -> fit -> report pipeline front end.
//
// Exit codes: 0 success, 2 usage, 3 I/O, 4 schema/config, 5 data,
// 6 numerical. Errors print a single machine-parsable line on stderr.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "poleval/causal.hpp"
#include "poleval/config.hpp"
#include "poleval/corpus.hpp"
#include "poleval/csv.hpp"
#include "poleval/errors.hpp"
#include "poleval/forest.hpp"
#include "poleval/simgen.hpp"
#include "poleval/stats.hpp"
#include "poleval/table.hpp"
#include "poleval/version.hpp"

namespace fs = std::filesystem;
using namespace poleval;

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

struct CliArgs {
  std::string config_path;
  std::string in_path;
  std::string out_dir;
  std::string dict_path;
  std::string dict_mode;
  std::string missing;
  std::string trim;
  std::string group;
  std::string quintile_covariates;
  std::string seed;  // as text so "absent" is distinguishable
  long long trees = -1;
  long long bins = -1;
};

Config resolve_config(const CliArgs& args) {
  Config cfg;
  if (!args.config_path.empty()) cfg = Config::load(args.config_path);
  if (!args.seed.empty()) cfg.set("seed", args.seed);
  if (args.trees >= 0) cfg.set("forest.n_trees", std::to_string(args.trees));
  if (args.bins >= 0) cfg.set("report.bins", std::to_string(args.bins));
  if (!args.trim.empty()) {
    const auto comma = args.trim.find(',');
    if (comma == std::string::npos) {
      throw SchemaError("--trim expects 'lo,hi'");
    }
    cfg.set("trim.lo", args.trim.substr(0, comma));
    cfg.set("trim.hi", args.trim.substr(comma + 1));
  }
  if (!args.dict_path.empty()) cfg.set("lexicon.file", args.dict_path);
  if (!args.dict_mode.empty()) cfg.set("lexicon.mode", args.dict_mode);
  if (!args.missing.empty()) cfg.set("missing.policy", args.missing);
  if (!args.group.empty()) cfg.set("report.group", args.group);
  if (!args.quintile_covariates.empty()) {
    cfg.set("report.quintile_covariates", args.quintile_covariates);
  }
  return cfg;
}

std::vector<std::string> artifact_header(const Config& cfg) {
  return {std::string("poleval ") + kVersion + " config=" + cfg.hash() +
          " seed=" + cfg.get_or("seed", "0")};
}

std::uint64_t require_seed(const Config& cfg) {
  if (!cfg.has("seed")) {
    throw SchemaError("a seed is required (--seed or config key 'seed'); "
                      "wall-clock seeding is not supported");
  }
  return cfg.get_uint("seed");
}

ForestParams forest_params_from(const Config& cfg, std::uint64_t seed) {
  ForestParams p;
  p.n_trees = static_cast<std::size_t>(cfg.get_int_or("forest.n_trees", 1000));
  p.subsample_fraction = cfg.get_double_or("forest.subsample_fraction", 0.5);
  p.honesty_fraction = cfg.get_double_or("forest.honesty_fraction", 0.5);
  p.min_leaf = static_cast<std::size_t>(cfg.get_int_or("forest.min_leaf", 5));
  p.max_features =
      static_cast<std::size_t>(cfg.get_int_or("forest.max_features", 0));
  p.cluster_subsampling = cfg.get_bool_or("forest.cluster_subsampling", true);
  p.seed = seed;
  return p;
}

CausalOptions causal_options_from(const Config& cfg, std::uint64_t seed) {
  CausalOptions opts;
  opts.forest = forest_params_from(cfg, seed);
  opts.trim_lo = cfg.get_double_or("trim.lo", 0.05);
  opts.trim_hi = cfg.get_double_or("trim.hi", 0.95);
  return opts;
}

MissingPolicy missing_policy_from(const Config& cfg) {
  const std::string policy = cfg.get_or("missing.policy", "drop_row");
  if (policy == "drop_row") return MissingPolicy::drop_row;
  if (policy == "error") return MissingPolicy::error;
  throw SchemaError("unknown missing policy '" + policy + "'");
}

EducationLexicon lexicon_from(const Config& cfg) {
  if (cfg.has("lexicon.file")) {
    return EducationLexicon::load(cfg.get("lexicon.file"));
  }
  const std::string mode = cfg.get_or("lexicon.mode", "corrected");
  if (mode == "corrected") return EducationLexicon::corrected();
  if (mode == "verbatim") return EducationLexicon::verbatim();
  throw SchemaError("unknown lexicon mode '" + mode +
                    "' (expected corrected or verbatim)");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string token;
  std::istringstream in(text);
  while (std::getline(in, token, ',')) {
    if (!token.empty()) out.push_back(token);
  }
  return out;
}

fs::path make_out_dir(const std::string& out_dir) {
  if (out_dir.empty()) throw SchemaError("--out is required");
  fs::path dir(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory: " + dir.string());
  return dir;
}

int cmd_tag(const CliArgs& args) {
  const Config cfg = resolve_config(args);
  const auto header = artifact_header(cfg);
  const fs::path out = make_out_dir(args.out_dir);

  CorpusBounds bounds;
  bounds.min_year = static_cast<int>(cfg.get_int_or("corpus.min_year", 1985));
  bounds.max_year = static_cast<int>(cfg.get_int_or("corpus.max_year", 2014));
  const auto corpus = load_corpus_csv(args.in_path, bounds);
  const EducationLexicon lexicon = lexicon_from(cfg);
  const TaggedCorpus tagged = tag_corpus(corpus, lexicon);
  const CountryYearCounts counts = country_year_counts(tagged, corpus);

  write_tagged_csv(out / "tagged.csv", corpus, tagged, header);
  write_counts_csv(out / "country_year_counts.csv", counts, header);
  std::cout << "tagged " << counts.total_conditions << " conditions, "
            << counts.total_education << " education-related\n";
  return 0;
}

int cmd_balance(const CliArgs& args) {
  const Config cfg = resolve_config(args);
  const auto header = artifact_header(cfg);
  const fs::path out = make_out_dir(args.out_dir);

  const CovariateSchema schema = CovariateSchema::from_config(cfg);
  const ObservationTable table =
      ingest_file(args.in_path, schema, missing_policy_from(cfg));
  const BalanceTable balance = balance_table(table);

  write_balance_csv(out / "balance.csv", balance, header);
  std::ofstream text(out / "balance.txt");
  if (!text) throw IoError("cannot write balance.txt");
  for (const auto& line : header) text << "# " << line << '\n';
  text << format_balance_text(balance);
  if (table.dropped_rows > 0) {
    std::cout << "dropped " << table.dropped_rows
              << " rows with missing values\n";
  }
  std::cout << "balance over " << table.n_rows() << " rows written\n";
  return 0;
}

int cmd_heckman(const CliArgs& args) {
  const Config cfg = resolve_config(args);
  const auto header = artifact_header(cfg);
  const fs::path out = make_out_dir(args.out_dir);

  const CovariateSchema schema = CovariateSchema::from_config(cfg);
  const csv::Table raw = csv::read_file(args.in_path);
  const ObservationTable table =
      ingest(raw, schema, missing_policy_from(cfg));

  const std::vector<std::string> regressors =
      split_list(cfg.get("heckman.regressors"));
  if (regressors.empty()) {
    throw SchemaError("heckman.regressors lists no columns");
  }
  const std::size_t n = table.n_rows();
  Eigen::MatrixXd Z(static_cast<Eigen::Index>(n),
                    static_cast<Eigen::Index>(regressors.size() + 1));
  Z.col(0).setOnes();
  for (std::size_t j = 0; j < regressors.size(); ++j) {
    const Covariate& cov = table.covariate(regressors[j]);
    if (cov.kind == ColumnKind::categorical) {
      throw SchemaError("heckman regressor '" + regressors[j] +
                        "' is categorical; use numeric columns");
    }
    for (std::size_t i = 0; i < n; ++i) {
      Z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j + 1)) =
          cov.values[i];
    }
  }

  const ProbitFit fit = fit_probit(Z, table.w);
  const MillsVector mills = inverse_mills(fit, Z, table.w);

  // First-stage coefficient table.
  {
    csv::Table gamma;
    gamma.comments = header;
    gamma.comments.push_back(
        "loglik=" + num(fit.loglik) + " iterations=" +
        std::to_string(fit.n_iter) + " converged=" +
        (fit.converged ? "1" : "0"));
    gamma.header = {"term", "estimate", "se"};
    for (std::size_t j = 0; j <= regressors.size(); ++j) {
      const std::string term = j == 0 ? "(intercept)" : regressors[j - 1];
      const auto jj = static_cast<Eigen::Index>(j);
      gamma.rows.push_back({term, num(fit.gamma(jj)),
                            num(std::sqrt(fit.cov(jj, jj)))});
    }
    csv::write_file(out / "gamma.csv", gamma);
  }

  // Input rows that survived ingestion, with the lambda column appended.
  {
    csv::Table with_lambda;
    with_lambda.comments = header;
    with_lambda.header = raw.header;
    with_lambda.header.push_back("political_will_lambda");
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::string> row = raw.rows[table.source_rows[i]];
      row.push_back(num(mills.lambda[i]));
      with_lambda.rows.push_back(std::move(row));
    }
    csv::write_file(out / "data_lambda.csv", with_lambda);
  }

  // Schema for the downstream fit: original columns plus the new covariate.
  {
    Config schema_out;
    for (const auto& [k, v] : cfg.entries()) {
      if (k.rfind("column.", 0) == 0) schema_out.set(k, v);
    }
    schema_out.set("column.political_will_lambda.role", "covariate");
    schema_out.set("column.political_will_lambda.kind", "numeric");
    std::ofstream sf(out / "schema_lambda.conf");
    if (!sf) throw IoError("cannot write schema_lambda.conf");
    for (const auto& line : header) sf << "# " << line << '\n';
    sf << schema_out.canonical();
  }

  std::cout << "probit converged=" << (fit.converged ? 1 : 0) << " loglik="
            << num(fit.loglik) << ", lambda appended for " << n << " rows\n";
  return 0;
}

struct FitBundle {
  ObservationTable table;
  EncodedMatrix enc;
  NuisanceFits nuisance;
  CATEModel cate;
  AteEstimate ate;
};

FitBundle run_fit(const Config& cfg, const std::string& in_path) {
  const std::uint64_t seed = require_seed(cfg);
  const CovariateSchema schema = CovariateSchema::from_config(cfg);
  FitBundle bundle;
  bundle.table = ingest_file(in_path, schema, missing_policy_from(cfg));
  bundle.enc = encode(bundle.table);
  const CausalOptions opts = causal_options_from(cfg, seed);
  bundle.nuisance = fit_nuisance(bundle.table, bundle.enc, opts);
  bundle.cate = fit_cate(bundle.table, bundle.enc, bundle.nuisance, opts);
  bundle.ate = estimate_ate(bundle.table, bundle.nuisance, bundle.cate);
  return bundle;
}

void write_fit_artifacts(const fs::path& out, const FitBundle& bundle,
                         const std::vector<std::string>& header) {
  write_ate_csv(out / "ate.csv", bundle.ate, header);
  std::ofstream text(out / "ate.txt");
  if (!text) throw IoError("cannot write ate.txt");
  for (const auto& line : header) text << "# " << line << '\n';
  text << format_ate_text(bundle.ate);
  write_nuisance_csv(out / "nuisance.csv", bundle.nuisance, header);
  write_tau_csv(out / "tau.csv", bundle.cate, header);
}

int cmd_fit(const CliArgs& args) {
  const Config cfg = resolve_config(args);
  const auto header = artifact_header(cfg);
  const fs::path out = make_out_dir(args.out_dir);
  const FitBundle bundle = run_fit(cfg, args.in_path);
  write_fit_artifacts(out, bundle, header);
  std::cout << format_ate_text(bundle.ate);
  return 0;
}

int cmd_report(const CliArgs& args) {
  const Config cfg = resolve_config(args);
  const auto header = artifact_header(cfg);
  const fs::path out = make_out_dir(args.out_dir);
  const FitBundle bundle = run_fit(cfg, args.in_path);
  write_fit_artifacts(out, bundle, header);

  if (!cfg.has("report.group")) {
    throw SchemaError("report needs a group column (--group or config key "
                      "'report.group')");
  }
  const std::string group_col = cfg.get("report.group");
  const GroupAteResult groups =
      group_ate(bundle.table, bundle.nuisance, bundle.cate, group_col);
  write_group_ate_csv(out / "group_ate.csv", groups, header);

  std::vector<std::string> quintile_covs;
  if (cfg.has("report.quintile_covariates")) {
    quintile_covs = split_list(cfg.get("report.quintile_covariates"));
  } else {
    for (const auto& cov : bundle.table.covariates) {
      if (cov.kind != ColumnKind::categorical) {
        quintile_covs.push_back(cov.name);
      }
    }
  }
  const QuintileProfile profile =
      quintile_profile(bundle.cate, bundle.table, quintile_covs);
  write_quintile_csv(out / "quintile_profile.csv", profile, header);

  const auto bins =
      static_cast<std::size_t>(cfg.get_int_or("report.bins", 20));
  write_histogram_csv(out / "cate_histogram.csv",
                      cate_distribution(bundle.cate, bins), header);
  write_importance_csv(out / "moderator_importance.csv",
                       moderator_importance(bundle.cate), header);

  std::cout << format_ate_text(bundle.ate);
  std::cout << "report: " << groups.groups.size() << " groups by '"
            << group_col << "', artifacts in " << out.string() << '\n';
  return 0;
}

int cmd_simulate(const CliArgs& args) {
  const Config cfg = resolve_config(args);
  const auto header = artifact_header(cfg);
  const fs::path out = make_out_dir(args.out_dir);
  require_seed(cfg);

  SyntheticSpec spec = spec_from_config(cfg);
  const SyntheticData data = generate(spec);
  write_simulated_csv(out / "data.csv", data, header);
  write_truth_csv(out / "truth.csv", data, header);

  Config schema = schema_config_for(spec);
  schema.set("seed", cfg.get_or("seed", "0"));
  for (const auto& [k, v] : cfg.entries()) {
    if (k.rfind("forest.", 0) == 0 || k.rfind("trim.", 0) == 0 ||
        k.rfind("report.", 0) == 0) {
      schema.set(k, v);
    }
  }
  std::ofstream sf(out / "schema.conf");
  if (!sf) throw IoError("cannot write schema.conf");
  for (const auto& line : header) sf << "# " << line << '\n';
  sf << schema.canonical();

  std::cout << "simulated n=" << data.table.n_rows() << " clusters="
            << data.table.n_clusters() << " true_ate="
            << num(data.truth.true_ate) << '\n';
  return 0;
}

std::string one_line(std::string msg) {
  for (char& c : msg) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return msg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"policy-evaluation pipeline: lexicon tagging, honest-forest "
               "treatment effects, selection correction"};
  app.require_subcommand(1);

  CliArgs args;
  auto add_common = [&args](CLI::App* cmd, bool needs_in) {
    cmd->add_option("--config", args.config_path, "flat key-value config file");
    if (needs_in) {
      cmd->add_option("--in", args.in_path, "input CSV")->required();
    }
    cmd->add_option("--out", args.out_dir, "output directory")->required();
    cmd->add_option("--seed", args.seed, "RNG seed (64-bit unsigned)");
  };

  CLI::App* tag = app.add_subcommand(
      "tag", "tag policy conditions against the education lexicon");
  add_common(tag, true);
  tag->add_option("--dict", args.dict_path, "lexicon file, one pattern per line");
  tag->add_option("--dict-mode", args.dict_mode, "verbatim or corrected");

  CLI::App* balance = app.add_subcommand(
      "balance", "covariate balance tables stratified by exposure");
  add_common(balance, true);
  balance->add_option("--missing", args.missing, "drop_row or error");

  CLI::App* heckman = app.add_subcommand(
      "heckman", "first-stage probit and inverse Mills ratio column");
  add_common(heckman, true);
  heckman->add_option("--missing", args.missing, "drop_row or error");

  CLI::App* fit = app.add_subcommand(
      "fit", "nuisance + CATE forests and doubly-robust ATE");
  add_common(fit, true);
  fit->add_option("--missing", args.missing, "drop_row or error");
  fit->add_option("--trees", args.trees, "override forest.n_trees");
  fit->add_option("--trim", args.trim, "propensity trim bounds 'lo,hi'");

  CLI::App* report = app.add_subcommand(
      "report", "fit plus subgroup, quintile, histogram and importance tables");
  add_common(report, true);
  report->add_option("--missing", args.missing, "drop_row or error");
  report->add_option("--trees", args.trees, "override forest.n_trees");
  report->add_option("--trim", args.trim, "propensity trim bounds 'lo,hi'");
  report->add_option("--group", args.group, "column for subgroup estimates");
  report->add_option("--quintile-covariates", args.quintile_covariates,
                     "comma list of columns profiled by CATE quintile");
  report->add_option("--bins", args.bins, "histogram bin count");

  CLI::App* simulate = app.add_subcommand(
      "simulate", "generate a synthetic table with known ground truth");
  add_common(simulate, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "poleval: error code=2 kind=usage: " << one_line(e.what())
              << '\n';
    return 2;
  }

  try {
    if (tag->parsed()) return cmd_tag(args);
    if (balance->parsed()) return cmd_balance(args);
    if (heckman->parsed()) return cmd_heckman(args);
    if (fit->parsed()) return cmd_fit(args);
    if (report->parsed()) return cmd_report(args);
    if (simulate->parsed()) return cmd_simulate(args);
  } catch (const IoError& e) {
    std::cerr << "poleval: error code=3 kind=io: " << one_line(e.what())
              << '\n';
    return 3;
  } catch (const SchemaError& e) {
    std::cerr << "poleval: error code=4 kind=schema: " << one_line(e.what())
              << '\n';
    return 4;
  } catch (const DataError& e) {
    std::cerr << "poleval: error code=5 kind=data: " << one_line(e.what())
              << '\n';
    return 5;
  } catch (const NumericError& e) {
    std::cerr << "poleval: error code=6 kind=numeric: " << one_line(e.what())
              << '\n';
    return 6;
  } catch (const std::exception& e) {
    std::cerr << "poleval: error code=1 kind=internal: " << one_line(e.what())
              << '\n';
    return 1;
  }
  return 0;
}
