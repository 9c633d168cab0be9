#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "poleval/forest.hpp"
#include "poleval/table.hpp"

namespace poleval {

struct CausalOptions {
  // Base forest settings; the propensity, marginal-outcome and CATE forests
  // each run on their own stream derived from forest.seed.
  ForestParams forest;
  double trim_lo = 0.05;  // propensity overlap guard
  double trim_hi = 0.95;
  double min_residual = 1e-6;  // |w - e_hat| below this excludes the row
  double max_excluded_fraction = 0.2;
};

// Out-of-bag nuisance fits: e_hat = E[W|X], m_hat = E[Y|X].
struct NuisanceFits {
  std::vector<double> e_hat;  // trimmed to [trim_lo, trim_hi]
  std::vector<double> m_hat;
  double trim_lo = 0.05;
  double trim_hi = 0.95;
  std::size_t trimmed_rows = 0;  // rows clipped by the trim
};

NuisanceFits fit_nuisance(const ObservationTable& table,
                          const EncodedMatrix& enc,
                          const CausalOptions& opts);

// CATE model: weighted honest forest on residual-on-residual pseudo-outcomes
// U = (Y - m_hat)/(W - e_hat) with weights (W - e_hat)^2.
struct CATEModel {
  ForestModel forest;
  std::vector<double> tau_hat;  // per input row; OOB where the row trained
  std::size_t excluded_rows = 0;  // |W - e_hat| under the residual guard
  std::string model_descriptor;
};

CATEModel fit_cate(const ObservationTable& table, const EncodedMatrix& enc,
                   const NuisanceFits& nuisance, const CausalOptions& opts);

struct AteEstimate {
  double ate = 0.0;
  double se = 0.0;
  std::size_t n = 0;
  std::size_t n_clusters = 0;
  std::array<double, 2> ci95{{0.0, 0.0}};
  std::array<double, 2> ci90{{0.0, 0.0}};
  bool se_available = true;  // false when a group spans < 2 clusters
};

// Per-row doubly-robust score
//   G_i = tau_i + (W_i - e_i)/(e_i (1 - e_i)) (Y_i - m_i - (W_i - e_i) tau_i)
std::vector<double> dr_scores(const ObservationTable& table,
                              const NuisanceFits& nuisance,
                              const CATEModel& cate);

// Mean of the scores with cluster-robust SE; 95% and 90% intervals.
AteEstimate estimate_ate(const ObservationTable& table,
                         const NuisanceFits& nuisance, const CATEModel& cate);

struct GroupAte {
  std::string group;
  AteEstimate estimate;
};

struct GroupAteResult {
  std::vector<GroupAte> groups;      // non-empty groups, value order
  std::vector<std::string> warnings; // empty groups, missing SEs
};

// Group means of the same scores; the CATE model is not refit per group.
// Values are the distinct values of `column` unless supplied.
GroupAteResult group_ate(const ObservationTable& table,
                         const NuisanceFits& nuisance, const CATEModel& cate,
                         const std::string& column,
                         const std::vector<std::string>& values = {});

struct QuintileProfile {
  std::vector<std::string> covariates;
  struct Bin {
    std::size_t n = 0;
    double mean_tau = 0.0;
    std::vector<double> covariate_means;
  };
  std::array<Bin, 5> bins;  // Q1..Q5 by ascending tau_hat
};

// Rows ranked by tau_hat (ties by row id) and cut into 5 near-equal bins;
// per-bin mean tau_hat and means of the selected numeric covariates.
QuintileProfile quintile_profile(const CATEModel& cate,
                                 const ObservationTable& table,
                                 const std::vector<std::string>& covariates);

struct ModeratorImportance {
  std::vector<std::pair<std::string, double>> ranked;  // descending share
  bool no_splits = false;
};

ModeratorImportance moderator_importance(const CATEModel& cate);

struct CateDistribution {
  std::vector<std::size_t> counts;
  std::vector<double> edges;  // counts.size() + 1 bin edges
  double mean = 0.0;
  double sd = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::array<double, 9> deciles{};  // 10%..90%, linear interpolation
};

CateDistribution cate_distribution(const CATEModel& cate, std::size_t bins);

// Artifact writers (CSV, plus aligned text for the ATE).
void write_ate_csv(const std::filesystem::path& path, const AteEstimate& ate,
                   const std::vector<std::string>& comments = {});
std::string format_ate_text(const AteEstimate& ate);
void write_group_ate_csv(const std::filesystem::path& path,
                         const GroupAteResult& groups,
                         const std::vector<std::string>& comments = {});
void write_quintile_csv(const std::filesystem::path& path,
                        const QuintileProfile& profile,
                        const std::vector<std::string>& comments = {});
void write_histogram_csv(const std::filesystem::path& path,
                         const CateDistribution& dist,
                         const std::vector<std::string>& comments = {});
void write_importance_csv(const std::filesystem::path& path,
                          const ModeratorImportance& imp,
                          const std::vector<std::string>& comments = {});
void write_nuisance_csv(const std::filesystem::path& path,
                        const NuisanceFits& nuisance,
                        const std::vector<std::string>& comments = {});
void write_tau_csv(const std::filesystem::path& path, const CATEModel& cate,
                   const std::vector<std::string>& comments = {});

}  // namespace poleval
