#include "poleval/causal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "poleval/errors.hpp"
#include "poleval/rng.hpp"
#include "poleval/stats.hpp"

namespace poleval {

namespace {

constexpr double kZ95 = 1.959964;
constexpr double kZ90 = 1.644854;

// Substream tags for the three forests.
constexpr std::uint64_t kPropensityStream = 101;
constexpr std::uint64_t kMarginalStream = 102;
constexpr std::uint64_t kCateStream = 103;

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

Eigen::VectorXd to_eigen(const std::vector<int>& v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = static_cast<double>(v[i]);
  }
  return out;
}

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(),
                                           static_cast<Eigen::Index>(v.size()));
}

AteEstimate summarize_scores(const std::vector<double>& scores,
                             const std::vector<int>& clusters) {
  AteEstimate out;
  out.n = scores.size();
  std::set<int> distinct(clusters.begin(), clusters.end());
  out.n_clusters = distinct.size();
  if (out.n_clusters >= 2) {
    const ClusterSe cse = cluster_se(scores, clusters);
    out.ate = cse.mean;
    out.se = cse.se;
    out.se_available = true;
    out.ci95 = {out.ate - kZ95 * out.se, out.ate + kZ95 * out.se};
    out.ci90 = {out.ate - kZ90 * out.se, out.ate + kZ90 * out.se};
  } else {
    long double sum = 0.0L;
    for (const double s : scores) sum += s;
    out.ate = static_cast<double>(sum / static_cast<long double>(scores.size()));
    out.se = std::numeric_limits<double>::quiet_NaN();
    out.se_available = false;
    out.ci95 = {std::numeric_limits<double>::quiet_NaN(),
                std::numeric_limits<double>::quiet_NaN()};
    out.ci90 = out.ci95;
  }
  return out;
}

}  // namespace

NuisanceFits fit_nuisance(const ObservationTable& table,
                          const EncodedMatrix& enc,
                          const CausalOptions& opts) {
  const std::size_t n = table.n_rows();
  if (static_cast<std::size_t>(enc.X.rows()) != n) {
    throw DataError("fit_nuisance: design matrix rows do not match table");
  }
  if (!(opts.trim_lo > 0.0 && opts.trim_lo < opts.trim_hi &&
        opts.trim_hi < 1.0)) {
    throw DataError("fit_nuisance: trim bounds must satisfy 0 < lo < hi < 1");
  }
  int n_treated = 0;
  for (const int w : table.w) n_treated += w;
  if (n_treated == 0 || static_cast<std::size_t>(n_treated) == n) {
    throw DataError("fit_nuisance: data contains a single treatment arm");
  }

  const Eigen::VectorXd weights = to_eigen(table.weight);

  ForestParams e_params = opts.forest;
  e_params.seed = derive_stream_seed(opts.forest.seed, kPropensityStream);
  const ForestModel e_forest = fit_forest(enc.X, to_eigen(table.w), weights,
                                          table.cluster, e_params,
                                          enc.feature_names);

  ForestParams m_params = opts.forest;
  m_params.seed = derive_stream_seed(opts.forest.seed, kMarginalStream);
  const ForestModel m_forest = fit_forest(enc.X, to_eigen(table.y), weights,
                                          table.cluster, m_params,
                                          enc.feature_names);

  NuisanceFits fits;
  fits.trim_lo = opts.trim_lo;
  fits.trim_hi = opts.trim_hi;
  fits.e_hat = e_forest.predict_oob();
  fits.m_hat = m_forest.predict_oob();
  for (double& e : fits.e_hat) {
    const double clipped = std::clamp(e, opts.trim_lo, opts.trim_hi);
    if (clipped != e) ++fits.trimmed_rows;
    e = clipped;
  }
  return fits;
}

CATEModel fit_cate(const ObservationTable& table, const EncodedMatrix& enc,
                   const NuisanceFits& nuisance, const CausalOptions& opts) {
  const std::size_t n = table.n_rows();
  if (nuisance.e_hat.size() != n || nuisance.m_hat.size() != n) {
    throw DataError("fit_cate: nuisance fits do not match table rows");
  }

  std::vector<std::size_t> included;
  included.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w_res = static_cast<double>(table.w[i]) - nuisance.e_hat[i];
    if (std::abs(w_res) >= opts.min_residual) included.push_back(i);
  }
  const std::size_t excluded = n - included.size();
  if (static_cast<double>(excluded) >
      opts.max_excluded_fraction * static_cast<double>(n)) {
    throw NumericError(
        "fit_cate: " + std::to_string(excluded) + " of " + std::to_string(n) +
        " rows have |W - e_hat| < " + std::to_string(opts.min_residual) +
        "; propensity fit looks degenerate");
  }

  const std::size_t m = included.size();
  Eigen::MatrixXd X(static_cast<Eigen::Index>(m), enc.X.cols());
  Eigen::VectorXd u(static_cast<Eigen::Index>(m));
  Eigen::VectorXd wt(static_cast<Eigen::Index>(m));
  std::vector<int> clusters(m);
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t i = included[k];
    const double y_res = static_cast<double>(table.y[i]) - nuisance.m_hat[i];
    const double w_res = static_cast<double>(table.w[i]) - nuisance.e_hat[i];
    X.row(static_cast<Eigen::Index>(k)) =
        enc.X.row(static_cast<Eigen::Index>(i));
    u(static_cast<Eigen::Index>(k)) = y_res / w_res;
    wt(static_cast<Eigen::Index>(k)) = table.weight[i] * w_res * w_res;
    clusters[k] = table.cluster[i];
  }

  ForestParams params = opts.forest;
  params.seed = derive_stream_seed(opts.forest.seed, kCateStream);

  CATEModel model;
  model.excluded_rows = excluded;
  model.forest =
      fit_forest(X, u, wt, clusters, params, enc.feature_names);
  {
    std::ostringstream os;
    os << "r-learner: weighted honest forest on (Y-m)/(W-e) with (W-e)^2 "
          "weights, trees="
       << params.n_trees << ", min_leaf=" << params.min_leaf;
    model.model_descriptor = os.str();
  }

  model.tau_hat.assign(n, 0.0);
  const std::vector<double> oob = model.forest.predict_oob();
  for (std::size_t k = 0; k < m; ++k) model.tau_hat[included[k]] = oob[k];
  if (excluded > 0) {
    std::vector<std::size_t> rest;
    rest.reserve(excluded);
    std::vector<bool> in(n, false);
    for (const std::size_t i : included) in[i] = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (!in[i]) rest.push_back(i);
    }
    Eigen::MatrixXd Xr(static_cast<Eigen::Index>(rest.size()), enc.X.cols());
    for (std::size_t k = 0; k < rest.size(); ++k) {
      Xr.row(static_cast<Eigen::Index>(k)) =
          enc.X.row(static_cast<Eigen::Index>(rest[k]));
    }
    const std::vector<double> pred = model.forest.predict(Xr);
    for (std::size_t k = 0; k < rest.size(); ++k) {
      model.tau_hat[rest[k]] = pred[k];
    }
  }
  return model;
}

std::vector<double> dr_scores(const ObservationTable& table,
                              const NuisanceFits& nuisance,
                              const CATEModel& cate) {
  const std::size_t n = table.n_rows();
  if (nuisance.e_hat.size() != n || cate.tau_hat.size() != n) {
    throw DataError("dr_scores: inputs are not aligned");
  }
  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double e = nuisance.e_hat[i];
    const double tau = cate.tau_hat[i];
    const double w_res = static_cast<double>(table.w[i]) - e;
    const double y_res = static_cast<double>(table.y[i]) - nuisance.m_hat[i];
    scores[i] = tau + w_res / (e * (1.0 - e)) * (y_res - w_res * tau);
  }
  return scores;
}

AteEstimate estimate_ate(const ObservationTable& table,
                         const NuisanceFits& nuisance, const CATEModel& cate) {
  const std::vector<double> scores = dr_scores(table, nuisance, cate);
  return summarize_scores(scores, table.cluster);
}

GroupAteResult group_ate(const ObservationTable& table,
                         const NuisanceFits& nuisance, const CATEModel& cate,
                         const std::string& column,
                         const std::vector<std::string>& values) {
  const std::vector<double> scores = dr_scores(table, nuisance, cate);
  const Covariate& cov = table.covariate(column);
  const std::vector<std::string> group_values =
      values.empty() ? distinct_values(table, column) : values;

  GroupAteResult out;
  for (const auto& value : group_values) {
    std::vector<double> group_scores;
    std::vector<int> group_clusters;
    if (cov.kind == ColumnKind::categorical) {
      for (std::size_t i = 0; i < table.n_rows(); ++i) {
        if (cov.labels[i] == value) {
          group_scores.push_back(scores[i]);
          group_clusters.push_back(table.cluster[i]);
        }
      }
    } else {
      double target = 0.0;
      try {
        std::size_t consumed = 0;
        target = std::stod(value, &consumed);
        if (consumed != value.size()) throw std::invalid_argument(value);
      } catch (const std::exception&) {
        throw DataError("group_ate: group value '" + value +
                        "' is not numeric for column '" + column + "'");
      }
      for (std::size_t i = 0; i < table.n_rows(); ++i) {
        if (cov.values[i] == target) {
          group_scores.push_back(scores[i]);
          group_clusters.push_back(table.cluster[i]);
        }
      }
    }
    if (group_scores.empty()) {
      out.warnings.push_back("group '" + value + "' has no rows, omitted");
      continue;
    }
    GroupAte g;
    g.group = value;
    g.estimate = summarize_scores(group_scores, group_clusters);
    if (!g.estimate.se_available) {
      out.warnings.push_back("group '" + value +
                             "' spans fewer than 2 clusters, SE unavailable");
    }
    out.groups.push_back(std::move(g));
  }
  return out;
}

QuintileProfile quintile_profile(const CATEModel& cate,
                                 const ObservationTable& table,
                                 const std::vector<std::string>& covariates) {
  const std::size_t n = cate.tau_hat.size();
  if (n != table.n_rows()) {
    throw DataError("quintile_profile: tau and table are not aligned");
  }
  if (n < 5) {
    throw DataError("quintile_profile: need at least 5 rows, got " +
                    std::to_string(n));
  }
  std::vector<const Covariate*> cols;
  for (const auto& name : covariates) {
    const Covariate& cov = table.covariate(name);
    if (cov.kind == ColumnKind::categorical) {
      throw SchemaError("quintile_profile: covariate '" + name +
                        "' is categorical; select numeric columns");
    }
    cols.push_back(&cov);
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (cate.tau_hat[a] != cate.tau_hat[b]) {
      return cate.tau_hat[a] < cate.tau_hat[b];
    }
    return a < b;  // stable id tie-break
  });

  QuintileProfile out;
  out.covariates = covariates;
  const std::size_t base = n / 5;
  const std::size_t rem = n % 5;
  std::size_t pos = 0;
  for (std::size_t q = 0; q < 5; ++q) {
    const std::size_t size = base + (q < rem ? 1 : 0);
    auto& bin = out.bins[q];
    bin.n = size;
    bin.covariate_means.assign(cols.size(), 0.0);
    double tau_sum = 0.0;
    for (std::size_t k = 0; k < size; ++k) {
      const std::size_t row = order[pos + k];
      tau_sum += cate.tau_hat[row];
      for (std::size_t c = 0; c < cols.size(); ++c) {
        bin.covariate_means[c] += cols[c]->values[row];
      }
    }
    bin.mean_tau = tau_sum / static_cast<double>(size);
    for (double& m : bin.covariate_means) m /= static_cast<double>(size);
    pos += size;
  }
  return out;
}

ModeratorImportance moderator_importance(const CATEModel& cate) {
  const ImportanceResult imp = split_importance(cate.forest);
  ModeratorImportance out;
  out.no_splits = imp.no_splits;
  const auto& names = cate.forest.feature_names();
  for (std::size_t j = 0; j < names.size(); ++j) {
    out.ranked.emplace_back(names[j], imp.shares[j]);
  }
  std::stable_sort(out.ranked.begin(), out.ranked.end(),
                   [](const auto& a, const auto& b) {
                     return a.second > b.second;
                   });
  return out;
}

CateDistribution cate_distribution(const CATEModel& cate, std::size_t bins) {
  if (bins < 1) throw DataError("cate_distribution: bins must be >= 1");
  const std::vector<double>& tau = cate.tau_hat;
  if (tau.empty()) throw DataError("cate_distribution: no tau estimates");

  CateDistribution out;
  out.min = *std::min_element(tau.begin(), tau.end());
  out.max = *std::max_element(tau.begin(), tau.end());
  const double lo = out.min;
  const double hi = out.max > out.min ? out.max : out.min + 1.0;
  const double width = (hi - lo) / static_cast<double>(bins);
  out.counts.assign(bins, 0);
  out.edges.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b) {
    out.edges[b] = lo + width * static_cast<double>(b);
  }
  for (const double t : tau) {
    auto b = static_cast<std::size_t>((t - lo) / width);
    if (b >= bins) b = bins - 1;
    out.counts[b] += 1;
  }

  const std::size_t n = tau.size();
  long double sum = 0.0L;
  for (const double t : tau) sum += t;
  out.mean = static_cast<double>(sum / static_cast<long double>(n));
  long double ss = 0.0L;
  for (const double t : tau) {
    const long double d = t - out.mean;
    ss += d * d;
  }
  out.sd = n > 1 ? std::sqrt(static_cast<double>(
                       ss / static_cast<long double>(n - 1)))
                 : 0.0;

  std::vector<double> sorted = tau;
  std::sort(sorted.begin(), sorted.end());
  for (int d = 1; d <= 9; ++d) {
    const double h =
        static_cast<double>(n - 1) * (static_cast<double>(d) / 10.0);
    const auto k = static_cast<std::size_t>(std::floor(h));
    const double frac = h - std::floor(h);
    const double v = k + 1 < n
                         ? sorted[k] + frac * (sorted[k + 1] - sorted[k])
                         : sorted[k];
    out.deciles[static_cast<std::size_t>(d - 1)] = v;
  }
  return out;
}

void write_ate_csv(const std::filesystem::path& path, const AteEstimate& ate,
                   const std::vector<std::string>& comments) {
  csv::Table out;
  out.comments = comments;
  out.header = {"ate",      "se",       "n",       "n_clusters",
                "ci95_lo",  "ci95_hi",  "ci90_lo", "ci90_hi"};
  out.rows.push_back({num(ate.ate), num(ate.se), std::to_string(ate.n),
                      std::to_string(ate.n_clusters), num(ate.ci95[0]),
                      num(ate.ci95[1]), num(ate.ci90[0]), num(ate.ci90[1])});
  csv::write_file(path, out);
}

std::string format_ate_text(const AteEstimate& ate) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "ATE %.6f  (SE %.6f)  95%% CI [%.6f, %.6f]  90%% CI "
                "[%.6f, %.6f]  n=%zu clusters=%zu\n",
                ate.ate, ate.se, ate.ci95[0], ate.ci95[1], ate.ci90[0],
                ate.ci90[1], ate.n, ate.n_clusters);
  return buf;
}

void write_group_ate_csv(const std::filesystem::path& path,
                         const GroupAteResult& groups,
                         const std::vector<std::string>& comments) {
  csv::Table out;
  out.comments = comments;
  for (const auto& w : groups.warnings) out.comments.push_back("warning: " + w);
  out.header = {"group",   "ate",     "se",      "n",
                "n_clusters", "ci95_lo", "ci95_hi"};
  for (const auto& g : groups.groups) {
    out.rows.push_back({g.group, num(g.estimate.ate),
                        g.estimate.se_available ? num(g.estimate.se) : "",
                        std::to_string(g.estimate.n),
                        std::to_string(g.estimate.n_clusters),
                        g.estimate.se_available ? num(g.estimate.ci95[0]) : "",
                        g.estimate.se_available ? num(g.estimate.ci95[1])
                                                : ""});
  }
  csv::write_file(path, out);
}

void write_quintile_csv(const std::filesystem::path& path,
                        const QuintileProfile& profile,
                        const std::vector<std::string>& comments) {
  csv::Table out;
  out.comments = comments;
  out.header = {"quintile", "n", "mean_tau"};
  for (const auto& c : profile.covariates) out.header.push_back("mean_" + c);
  for (std::size_t q = 0; q < 5; ++q) {
    const auto& bin = profile.bins[q];
    std::vector<std::string> row = {"Q" + std::to_string(q + 1),
                                    std::to_string(bin.n), num(bin.mean_tau)};
    for (const double m : bin.covariate_means) row.push_back(num(m));
    out.rows.push_back(std::move(row));
  }
  csv::write_file(path, out);
}

void write_histogram_csv(const std::filesystem::path& path,
                         const CateDistribution& dist,
                         const std::vector<std::string>& comments) {
  csv::Table out;
  out.comments = comments;
  out.comments.push_back(
      "summary mean=" + num(dist.mean) + " sd=" + num(dist.sd) + " min=" +
      num(dist.min) + " max=" + num(dist.max));
  std::string deciles = "deciles";
  for (const double d : dist.deciles) deciles += " " + num(d);
  out.comments.push_back(deciles);
  out.header = {"bin_lo", "bin_hi", "count"};
  for (std::size_t b = 0; b < dist.counts.size(); ++b) {
    out.rows.push_back({num(dist.edges[b]), num(dist.edges[b + 1]),
                        std::to_string(dist.counts[b])});
  }
  csv::write_file(path, out);
}

void write_importance_csv(const std::filesystem::path& path,
                          const ModeratorImportance& imp,
                          const std::vector<std::string>& comments) {
  csv::Table out;
  out.comments = comments;
  if (imp.no_splits) out.comments.push_back("warning: forest has no splits");
  out.header = {"rank", "feature", "share"};
  for (std::size_t i = 0; i < imp.ranked.size(); ++i) {
    out.rows.push_back({std::to_string(i + 1), imp.ranked[i].first,
                        num(imp.ranked[i].second)});
  }
  csv::write_file(path, out);
}

void write_nuisance_csv(const std::filesystem::path& path,
                        const NuisanceFits& nuisance,
                        const std::vector<std::string>& comments) {
  csv::Table out;
  out.comments = comments;
  out.comments.push_back("trim [" + num(nuisance.trim_lo) + ", " +
                         num(nuisance.trim_hi) + "], trimmed_rows=" +
                         std::to_string(nuisance.trimmed_rows));
  out.header = {"row", "e_hat", "m_hat"};
  for (std::size_t i = 0; i < nuisance.e_hat.size(); ++i) {
    out.rows.push_back({std::to_string(i), num(nuisance.e_hat[i]),
                        num(nuisance.m_hat[i])});
  }
  csv::write_file(path, out);
}

void write_tau_csv(const std::filesystem::path& path, const CATEModel& cate,
                   const std::vector<std::string>& comments) {
  csv::Table out;
  out.comments = comments;
  out.comments.push_back(cate.model_descriptor);
  out.comments.push_back("excluded_rows=" + std::to_string(cate.excluded_rows));
  out.header = {"row", "tau_hat"};
  for (std::size_t i = 0; i < cate.tau_hat.size(); ++i) {
    out.rows.push_back({std::to_string(i), num(cate.tau_hat[i])});
  }
  csv::write_file(path, out);
}

}  // namespace poleval
