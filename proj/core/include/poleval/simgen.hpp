#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "poleval/config.hpp"
#include "poleval/table.hpp"

namespace poleval {

enum class PropensityKind {
  randomized,      // constant P(W=1), assigned per cluster
  probit_x,        // row-level probit in the covariates
  cluster_probit,  // cluster-level probit in cluster covariate means
};

struct PropensityRecipe {
  PropensityKind kind = PropensityKind::randomized;
  double p0 = 0.5;         // randomized
  double intercept = 0.0;  // probit kinds
  std::vector<double> coefs;
  // randomized draws are per row unless this upgrades them to one draw per
  // cluster; cluster_probit always assigns whole clusters.
  bool cluster_assign = false;
};

enum class TauKind { constant, threshold, linear };

struct TauRecipe {
  TauKind kind = TauKind::constant;
  double value = 0.0;      // constant
  std::size_t feature = 0; // threshold: covariate index (0-based)
  double cut = 0.0;        // threshold: tau = below + above_add * 1{x_j > cut}
  double above_add = 0.0;
  double below = 0.0;
  double intercept = 0.0;  // linear
  std::vector<double> coefs;
};

enum class CovariateDist {
  standard_normal,
  uniform_int,     // integers in [lo, hi]
  cluster_normal,  // one N(0,1) draw per cluster, shared by its rows
};

struct CovariateSpec {
  std::string name;
  CovariateDist dist = CovariateDist::standard_normal;
  double lo = 0.0;
  double hi = 0.0;
};

// Deterministic synthetic observation tables with known propensity and known
// tau(x). Outcomes are binary with
//   P(Y=1|X,W) = clamp(base(x) + cluster_sd*u_k + noise_sd*eps_i + W*tau(x))
// under the additive link; the logistic link pushes the same index through a
// logistic. A cluster-level latent u_k can enter both the treatment index
// (scaled by selection_strength) and the outcome (via cluster_sd), which is
// the unobserved-selection scenario the first-stage probit corrects for.
struct SyntheticSpec {
  std::size_t n = 1000;
  std::size_t clusters = 10;
  std::size_t p = 4;
  PropensityRecipe propensity;
  TauRecipe tau;
  double base_intercept = 0.2;
  std::vector<double> base_coefs;
  double cluster_sd = 0.0;
  double noise_sd = 0.0;
  double selection_strength = 0.0;
  bool logistic = false;
  std::vector<CovariateSpec> covariates;  // defaults to x1..xp standard normal
  std::uint64_t seed = 0;
  double max_clamp_fraction = 0.05;
};

struct GroundTruth {
  std::vector<double> true_e;    // P(W=1|X), latent noise integrated out
  std::vector<double> true_tau;  // realized effect on P(Y=1), after clamping
  double true_ate = 0.0;         // mean of true_tau, exactly
};

struct SyntheticData {
  ObservationTable table;
  GroundTruth truth;
};

SyntheticData generate(const SyntheticSpec& spec);

// sim.* keys; see the config grammar in the README.
SyntheticSpec spec_from_config(const Config& cfg);

// Data CSV (y,w,cluster,covariates...), ground-truth CSV, and a schema
// config usable directly by the fit/report stages.
void write_simulated_csv(const std::filesystem::path& path,
                         const SyntheticData& data,
                         const std::vector<std::string>& comments = {});
void write_truth_csv(const std::filesystem::path& path,
                     const SyntheticData& data,
                     const std::vector<std::string>& comments = {});
Config schema_config_for(const SyntheticSpec& spec);

}  // namespace poleval
