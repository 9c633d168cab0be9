#include "poleval/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "poleval/errors.hpp"
#include "poleval/rng.hpp"
#include "poleval/stats.hpp"

namespace poleval {

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::string token;
  std::istringstream in(text);
  while (std::getline(in, token, ',')) {
    try {
      out.push_back(std::stod(token));
    } catch (const std::exception&) {
      throw SchemaError("sim config: bad number in list '" + text + "'");
    }
  }
  return out;
}

double linear_index(const std::vector<double>& coefs, double intercept,
                    const std::vector<Covariate>& covs, std::size_t row) {
  double idx = intercept;
  for (std::size_t j = 0; j < coefs.size() && j < covs.size(); ++j) {
    idx += coefs[j] * covs[j].values[row];
  }
  return idx;
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

SyntheticData generate(const SyntheticSpec& spec) {
  if (spec.clusters < 2 || spec.n < spec.clusters) {
    throw DataError("simgen: need n >= clusters >= 2");
  }
  if (spec.p < 1) throw DataError("simgen: need p >= 1");
  if (spec.noise_sd < 0 || spec.cluster_sd < 0) {
    throw DataError("simgen: noise/cluster sd must be >= 0");
  }
  if (spec.tau.kind == TauKind::threshold && spec.tau.feature >= spec.p) {
    throw DataError("simgen: tau threshold feature index out of range");
  }

  std::vector<CovariateSpec> cov_specs = spec.covariates;
  if (cov_specs.size() > spec.p) {
    throw DataError("simgen: more covariate specs than p");
  }
  cov_specs.resize(spec.p);
  for (std::size_t j = 0; j < spec.p; ++j) {
    if (cov_specs[j].name.empty()) {
      cov_specs[j].name = "x" + std::to_string(j + 1);
    }
  }

  const std::size_t n = spec.n;
  const std::size_t K = spec.clusters;
  SplitMix64 rng(derive_stream_seed(spec.seed, 0xD6));

  SyntheticData out;
  ObservationTable& table = out.table;
  table.y.resize(n);
  table.w.resize(n);
  table.cluster.resize(n);
  table.weight.assign(n, 1.0);
  table.source_rows.resize(n);
  for (std::size_t i = 0; i < n; ++i) table.source_rows[i] = i;
  for (std::size_t k = 0; k < K; ++k) {
    table.cluster_labels.push_back("c" + std::to_string(k));
  }
  // Balanced contiguous cluster blocks.
  for (std::size_t i = 0; i < n; ++i) {
    table.cluster[i] = static_cast<int>(i * K / n);
  }

  // 1. Cluster latents (shared by selection and outcome).
  std::vector<double> latent(K);
  for (std::size_t k = 0; k < K; ++k) latent[k] = rng.next_normal();

  // 2. Covariates.
  for (std::size_t j = 0; j < spec.p; ++j) {
    Covariate cov;
    cov.name = cov_specs[j].name;
    cov.kind = ColumnKind::numeric;
    cov.values.resize(n);
    switch (cov_specs[j].dist) {
      case CovariateDist::standard_normal:
        for (std::size_t i = 0; i < n; ++i) cov.values[i] = rng.next_normal();
        break;
      case CovariateDist::uniform_int: {
        const auto lo = static_cast<long long>(cov_specs[j].lo);
        const auto hi = static_cast<long long>(cov_specs[j].hi);
        if (hi < lo) throw DataError("simgen: uniform_int hi < lo");
        const auto span = static_cast<std::uint64_t>(hi - lo + 1);
        for (std::size_t i = 0; i < n; ++i) {
          cov.values[i] = static_cast<double>(
              lo + static_cast<long long>(rng.next_below(span)));
        }
        break;
      }
      case CovariateDist::cluster_normal: {
        std::vector<double> draws(K);
        for (std::size_t k = 0; k < K; ++k) draws[k] = rng.next_normal();
        for (std::size_t i = 0; i < n; ++i) {
          cov.values[i] = draws[static_cast<std::size_t>(table.cluster[i])];
        }
        break;
      }
    }
    table.covariates.push_back(std::move(cov));
  }

  // 3. Treatment and true propensity.
  out.truth.true_e.resize(n);
  const double s = spec.selection_strength;
  const double sel_scale = std::sqrt(1.0 + s * s);
  switch (spec.propensity.kind) {
    case PropensityKind::randomized: {
      if (!(spec.propensity.p0 > 0.0 && spec.propensity.p0 < 1.0)) {
        throw DataError("simgen: randomized propensity needs p0 in (0,1)");
      }
      if (spec.propensity.cluster_assign) {
        std::vector<int> w_k(K);
        for (std::size_t k = 0; k < K; ++k) {
          w_k[k] = rng.next_double() < spec.propensity.p0 ? 1 : 0;
        }
        for (std::size_t i = 0; i < n; ++i) {
          table.w[i] = w_k[static_cast<std::size_t>(table.cluster[i])];
        }
      } else {
        for (std::size_t i = 0; i < n; ++i) {
          table.w[i] = rng.next_double() < spec.propensity.p0 ? 1 : 0;
        }
      }
      for (std::size_t i = 0; i < n; ++i) {
        out.truth.true_e[i] = spec.propensity.p0;
      }
      break;
    }
    case PropensityKind::probit_x: {
      for (std::size_t i = 0; i < n; ++i) {
        const double idx = linear_index(spec.propensity.coefs,
                                        spec.propensity.intercept,
                                        table.covariates, i);
        const double shifted =
            idx + s * latent[static_cast<std::size_t>(table.cluster[i])];
        table.w[i] = shifted + rng.next_normal() > 0.0 ? 1 : 0;
        out.truth.true_e[i] = norm_cdf(idx / sel_scale);
      }
      break;
    }
    case PropensityKind::cluster_probit: {
      // Index from cluster means of the covariates, one draw per cluster.
      std::vector<double> index(K, 0.0);
      std::vector<std::size_t> size(K, 0);
      for (std::size_t i = 0; i < n; ++i) {
        ++size[static_cast<std::size_t>(table.cluster[i])];
      }
      for (std::size_t j = 0;
           j < spec.propensity.coefs.size() && j < spec.p; ++j) {
        std::vector<double> mean(K, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
          mean[static_cast<std::size_t>(table.cluster[i])] +=
              table.covariates[j].values[i];
        }
        for (std::size_t k = 0; k < K; ++k) {
          index[k] += spec.propensity.coefs[j] * mean[k] /
                      static_cast<double>(size[k]);
        }
      }
      std::vector<int> w_k(K);
      for (std::size_t k = 0; k < K; ++k) {
        const double idx = spec.propensity.intercept + index[k];
        w_k[k] = idx + s * latent[k] + rng.next_normal() > 0.0 ? 1 : 0;
        index[k] = idx;  // keep the latent-free index for the truth
      }
      for (std::size_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(table.cluster[i]);
        table.w[i] = w_k[k];
        out.truth.true_e[i] = norm_cdf(index[k] / sel_scale);
      }
      break;
    }
  }

  // 4. Per-row outcome jitter.
  std::vector<double> jitter(n, 0.0);
  if (spec.noise_sd > 0.0) {
    for (std::size_t i = 0; i < n; ++i) {
      jitter[i] = spec.noise_sd * rng.next_normal();
    }
  }

  // 5. Outcomes. true_tau is the realized effect on P(Y=1) at the noise-free
  // index, so mean(true_tau) is the exact ground-truth ATE.
  out.truth.true_tau.resize(n);
  std::size_t clamped = 0;
  long double tau_sum = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    double tau = 0.0;
    switch (spec.tau.kind) {
      case TauKind::constant:
        tau = spec.tau.value;
        break;
      case TauKind::threshold:
        tau = spec.tau.below +
              (table.covariates[spec.tau.feature].values[i] > spec.tau.cut
                   ? spec.tau.above_add
                   : 0.0);
        break;
      case TauKind::linear:
        tau = linear_index(spec.tau.coefs, spec.tau.intercept,
                           table.covariates, i);
        break;
    }
    const auto k = static_cast<std::size_t>(table.cluster[i]);
    const double base = linear_index(spec.base_coefs, spec.base_intercept,
                                     table.covariates, i) +
                        spec.cluster_sd * latent[k];
    double p0, p1, p_draw;
    if (spec.logistic) {
      p0 = logistic(base);
      p1 = logistic(base + tau);
      p_draw = logistic(base + jitter[i] +
                        (table.w[i] == 1 ? tau : 0.0));
    } else {
      const double raw0 = base;
      const double raw1 = base + tau;
      const double raw = base + jitter[i] + (table.w[i] == 1 ? tau : 0.0);
      if (raw < 0.0 || raw > 1.0) ++clamped;
      p0 = std::clamp(raw0, 0.0, 1.0);
      p1 = std::clamp(raw1, 0.0, 1.0);
      p_draw = std::clamp(raw, 0.0, 1.0);
    }
    out.truth.true_tau[i] = p1 - p0;
    tau_sum += out.truth.true_tau[i];
    table.y[i] = rng.next_double() < p_draw ? 1 : 0;
  }
  if (static_cast<double>(clamped) >
      spec.max_clamp_fraction * static_cast<double>(n)) {
    throw DataError("simgen: outcome probability clamped on " +
                    std::to_string(clamped) + " of " + std::to_string(n) +
                    " rows; the recipe is misconfigured");
  }
  out.truth.true_ate =
      static_cast<double>(tau_sum / static_cast<long double>(n));
  return out;
}

SyntheticSpec spec_from_config(const Config& cfg) {
  SyntheticSpec spec;
  spec.n = static_cast<std::size_t>(cfg.get_int_or("sim.n", 1000));
  spec.clusters = static_cast<std::size_t>(cfg.get_int_or("sim.clusters", 10));
  spec.p = static_cast<std::size_t>(cfg.get_int_or("sim.p", 4));
  spec.seed = cfg.has("sim.seed") ? cfg.get_uint("sim.seed")
                                  : (cfg.has("seed") ? cfg.get_uint("seed")
                                                     : 0);

  const std::string prop = cfg.get_or("sim.propensity", "randomized");
  if (prop == "randomized") {
    spec.propensity.kind = PropensityKind::randomized;
  } else if (prop == "probit") {
    spec.propensity.kind = PropensityKind::probit_x;
  } else if (prop == "cluster_probit") {
    spec.propensity.kind = PropensityKind::cluster_probit;
  } else {
    throw SchemaError("sim config: unknown propensity '" + prop + "'");
  }
  spec.propensity.p0 = cfg.get_double_or("sim.propensity.p0", 0.5);
  spec.propensity.cluster_assign =
      cfg.get_bool_or("sim.propensity.cluster_assign", false);
  spec.propensity.intercept =
      cfg.get_double_or("sim.propensity.intercept", 0.0);
  if (cfg.has("sim.propensity.coefs")) {
    spec.propensity.coefs = parse_list(cfg.get("sim.propensity.coefs"));
  }

  const std::string tau = cfg.get_or("sim.tau", "constant");
  if (tau == "constant") {
    spec.tau.kind = TauKind::constant;
    spec.tau.value = cfg.get_double_or("sim.tau.value", 0.0);
  } else if (tau == "threshold") {
    spec.tau.kind = TauKind::threshold;
    spec.tau.feature =
        static_cast<std::size_t>(cfg.get_int_or("sim.tau.feature", 1)) - 1;
    spec.tau.cut = cfg.get_double_or("sim.tau.cut", 0.0);
    spec.tau.above_add = cfg.get_double_or("sim.tau.above_add", 0.0);
    spec.tau.below = cfg.get_double_or("sim.tau.below", 0.0);
  } else if (tau == "linear") {
    spec.tau.kind = TauKind::linear;
    spec.tau.intercept = cfg.get_double_or("sim.tau.intercept", 0.0);
    if (cfg.has("sim.tau.coefs")) {
      spec.tau.coefs = parse_list(cfg.get("sim.tau.coefs"));
    }
  } else {
    throw SchemaError("sim config: unknown tau recipe '" + tau + "'");
  }

  spec.base_intercept = cfg.get_double_or("sim.base.intercept", 0.2);
  if (cfg.has("sim.base.coefs")) {
    spec.base_coefs = parse_list(cfg.get("sim.base.coefs"));
  }
  spec.cluster_sd = cfg.get_double_or("sim.cluster_sd", 0.0);
  spec.noise_sd = cfg.get_double_or("sim.noise_sd", 0.0);
  spec.selection_strength =
      cfg.get_double_or("sim.selection_strength", 0.0);
  const std::string link = cfg.get_or("sim.link", "additive");
  if (link == "logistic") {
    spec.logistic = true;
  } else if (link != "additive") {
    throw SchemaError("sim config: unknown link '" + link + "'");
  }

  spec.covariates.resize(spec.p);
  for (std::size_t j = 0; j < spec.p; ++j) {
    const std::string prefix = "sim.covariate." + std::to_string(j + 1);
    CovariateSpec& cs = spec.covariates[j];
    cs.name = cfg.get_or(prefix + ".name", "x" + std::to_string(j + 1));
    const std::string dist = cfg.get_or(prefix + ".dist", "normal");
    if (dist == "normal") {
      cs.dist = CovariateDist::standard_normal;
    } else if (dist == "uniform_int") {
      cs.dist = CovariateDist::uniform_int;
      cs.lo = cfg.get_double(prefix + ".lo");
      cs.hi = cfg.get_double(prefix + ".hi");
    } else if (dist == "cluster_normal") {
      cs.dist = CovariateDist::cluster_normal;
    } else {
      throw SchemaError("sim config: unknown covariate dist '" + dist + "'");
    }
  }
  return spec;
}

void write_simulated_csv(const std::filesystem::path& path,
                         const SyntheticData& data,
                         const std::vector<std::string>& comments) {
  csv::Table out;
  out.comments = comments;
  out.header = {"y", "w", "cluster"};
  for (const auto& cov : data.table.covariates) out.header.push_back(cov.name);
  const std::size_t n = data.table.n_rows();
  out.rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::string> row = {
        std::to_string(data.table.y[i]), std::to_string(data.table.w[i]),
        data.table.cluster_labels[static_cast<std::size_t>(
            data.table.cluster[i])]};
    for (const auto& cov : data.table.covariates) {
      row.push_back(num(cov.values[i]));
    }
    out.rows.push_back(std::move(row));
  }
  csv::write_file(path, out);
}

void write_truth_csv(const std::filesystem::path& path,
                     const SyntheticData& data,
                     const std::vector<std::string>& comments) {
  csv::Table out;
  out.comments = comments;
  out.comments.push_back("true_ate=" + num(data.truth.true_ate));
  out.header = {"row", "true_e", "true_tau"};
  for (std::size_t i = 0; i < data.truth.true_e.size(); ++i) {
    out.rows.push_back({std::to_string(i), num(data.truth.true_e[i]),
                        num(data.truth.true_tau[i])});
  }
  csv::write_file(path, out);
}

Config schema_config_for(const SyntheticSpec& spec) {
  Config cfg;
  cfg.set("column.y.role", "outcome");
  cfg.set("column.y.kind", "binary");
  cfg.set("column.w.role", "treatment");
  cfg.set("column.w.kind", "binary");
  cfg.set("column.cluster.role", "cluster");
  std::string regressors;
  for (std::size_t j = 0; j < spec.p; ++j) {
    const std::string name = spec.covariates.size() > j &&
                                     !spec.covariates[j].name.empty()
                                 ? spec.covariates[j].name
                                 : "x" + std::to_string(j + 1);
    cfg.set("column." + name + ".role", "covariate");
    cfg.set("column." + name + ".kind", "numeric");
    const bool in_propensity = j < spec.propensity.coefs.size() &&
                               spec.propensity.coefs[j] != 0.0;
    if (in_propensity) {
      regressors += (regressors.empty() ? "" : ",") + name;
    }
  }
  if (regressors.empty() && !spec.covariates.empty()) {
    regressors = spec.covariates[0].name;
  }
  cfg.set("heckman.regressors", regressors);
  return cfg;
}

}  // namespace poleval
