#pragma once

#include <Eigen/Dense>
#include <vector>

namespace poleval {

// Standard normal density and CDF. Throw on non-finite input.
double norm_pdf(double z);
double norm_cdf(double z);
// Upper tail 1 - Phi(z), computed via erfc so it does not cancel to zero
// until z ~ 37.5.
double norm_sf(double z);

struct ProbitOptions {
  double tol = 1e-8;  // gradient max-norm at convergence
  int max_iter = 100;
};

// First-stage selection fit: T ~ Probit(Z gamma). Z includes the intercept
// column; T is 0/1.
struct ProbitFit {
  Eigen::VectorXd gamma;
  Eigen::MatrixXd cov;  // inverse observed information at the optimum
  double loglik = 0.0;
  int n_iter = 0;
  bool converged = false;
  // Linear predictor hit the +-30 clamp at the optimum; estimates for the
  // affected rows sit on the numerical guard rather than the raw index.
  bool clamp_active = false;
  std::vector<double> loglik_path;  // log-likelihood after each accepted step
};

// Newton-Raphson with analytic gradient/Hessian and step-halving. The
// likelihood is concave, so accepted steps never decrease it. Throws on
// rank-deficient Z, or when the fit looks separated (some |Z gamma| > 30
// while the likelihood is still growing).
ProbitFit fit_probit(const Eigen::MatrixXd& Z, const std::vector<int>& T,
                     const ProbitOptions& opts = {});

// Phi(Z gamma), every value strictly inside (0, 1).
Eigen::VectorXd predict_probit(const ProbitFit& fit, const Eigen::MatrixXd& Z);

struct MillsVector {
  std::vector<double> lambda;  // > 0 where treated, < 0 where untreated
  std::vector<int> treatment;
};

// Inverse Mills ratio at the fitted index:
//   phi(eta)/Phi(eta)        where T = 1
//   -phi(eta)/(1 - Phi(eta)) where T = 0
// Throws when a denominator underflows below 1e-300, naming the rows.
MillsVector inverse_mills(const ProbitFit& fit, const Eigen::MatrixXd& Z,
                          const std::vector<int>& T);

struct ClusterSe {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;
  std::size_t n_clusters = 0;
};

// Cluster-robust standard error of the mean of per-row scores:
//   se = sqrt( sum_k (S_k - n_k * mean)^2 ) / n
// with S_k the within-cluster score sum. Requires >= 2 distinct clusters.
ClusterSe cluster_se(const std::vector<double>& scores,
                     const std::vector<int>& clusters);

}  // namespace poleval
