#include "poleval/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <string>

#include "poleval/errors.hpp"

namespace poleval {

namespace {

constexpr double kIndexClamp = 30.0;
constexpr double kDenomFloor = 1e-300;

double clamp_index(double eta) {
  return std::clamp(eta, -kIndexClamp, kIndexClamp);
}

}  // namespace

double norm_pdf(double z) {
  if (!std::isfinite(z)) throw NumericError("norm_pdf: non-finite input");
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

double norm_cdf(double z) {
  if (!std::isfinite(z)) throw NumericError("norm_cdf: non-finite input");
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double norm_sf(double z) {
  if (!std::isfinite(z)) throw NumericError("norm_sf: non-finite input");
  return 0.5 * std::erfc(z / std::numbers::sqrt2);
}

ProbitFit fit_probit(const Eigen::MatrixXd& Z, const std::vector<int>& T,
                     const ProbitOptions& opts) {
  const Eigen::Index n = Z.rows();
  const Eigen::Index p = Z.cols();
  if (static_cast<std::size_t>(n) != T.size()) {
    throw DataError("fit_probit: Z rows and T length differ");
  }
  if (n <= p) {
    throw DataError("fit_probit: need n > p (n=" + std::to_string(n) +
                    ", p=" + std::to_string(p) + ")");
  }
  int n_treated = 0;
  for (const int t : T) {
    if (t != 0 && t != 1) throw DataError("fit_probit: T must be 0/1");
    n_treated += t;
  }
  if (n_treated == 0 || n_treated == static_cast<int>(T.size())) {
    throw DataError("fit_probit: T contains a single class");
  }
  {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Z);
    qr.setThreshold(1e-10);
    if (qr.rank() < p) {
      throw NumericError("fit_probit: design matrix is rank-deficient (rank " +
                         std::to_string(qr.rank()) + " < " +
                         std::to_string(p) + " columns)");
    }
  }

  // Signed generalized residual; doubles as the gradient weight and, via
  // lambda*(lambda+eta), the observed-information weight.
  const auto mills = [](double eta, int t) {
    if (t == 1) return norm_pdf(eta) / std::max(norm_cdf(eta), kDenomFloor);
    return -norm_pdf(eta) / std::max(norm_sf(eta), kDenomFloor);
  };
  const auto loglik_at = [&](const Eigen::VectorXd& gamma) {
    const Eigen::VectorXd eta = Z * gamma;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double e = clamp_index(eta(i));
      ll += T[static_cast<std::size_t>(i)] == 1
                ? std::log(std::max(norm_cdf(e), kDenomFloor))
                : std::log(std::max(norm_sf(e), kDenomFloor));
    }
    return ll;
  };

  ProbitFit fit;
  fit.gamma = Eigen::VectorXd::Zero(p);
  double ll = loglik_at(fit.gamma);

  Eigen::VectorXd lambda(n), info_w(n);
  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    const Eigen::VectorXd eta = Z * fit.gamma;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double e = clamp_index(eta(i));
      const double l = mills(e, T[static_cast<std::size_t>(i)]);
      lambda(i) = l;
      info_w(i) = l * (l + e);
    }
    const Eigen::VectorXd grad = Z.transpose() * lambda;
    const double grad_norm = grad.cwiseAbs().maxCoeff();
    fit.n_iter = iter - 1;
    if (grad_norm <= opts.tol) {
      // A gradient that vanished because every |lambda_i| is ~0 means the
      // likelihood saturated: every row sits far from its decision boundary,
      // which only happens under perfect separation. A healthy optimum has
      // O(1) lambdas that cancel.
      if (lambda.cwiseAbs().maxCoeff() < 1e-6) {
        throw NumericError(
            "fit_probit: perfect separation suspected (likelihood saturated, "
            "max |Z gamma| = " +
            std::to_string(eta.cwiseAbs().maxCoeff()) + ")");
      }
      fit.converged = true;
      break;
    }

    const Eigen::MatrixXd info =
        Z.transpose() * info_w.asDiagonal() * Z;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    if (ldlt.info() != Eigen::Success) {
      throw NumericError("fit_probit: observed information is singular");
    }
    const Eigen::VectorXd step = ldlt.solve(grad);

    // Step-halving keeps the likelihood non-decreasing. Near the optimum the
    // attainable gain 0.5*g'step falls below what the summed log-likelihood
    // can resolve; line-searching there would strangle the step and stall
    // the gradient above tolerance, so the full step is taken as-is.
    const double expected_gain = 0.5 * grad.dot(step);
    const double noise = 16.0 * std::numeric_limits<double>::epsilon() *
                         (1.0 + std::abs(ll));
    double scale = 1.0;
    double ll_new = loglik_at(fit.gamma + step);
    if (expected_gain > 1e-11 * (1.0 + std::abs(ll))) {
      int halvings = 0;
      while (ll_new < ll - noise && halvings < 40) {
        scale *= 0.5;
        ll_new = loglik_at(fit.gamma + scale * step);
        ++halvings;
      }
      if (ll_new < ll - noise) {
        throw NumericError("fit_probit: line search failed to improve the "
                           "likelihood");
      }
    }
    fit.gamma += scale * step;
    const double gain = ll_new - ll;
    ll = ll_new;
    fit.loglik_path.push_back(ll);
    fit.n_iter = iter;

    const double max_index = (Z * fit.gamma).cwiseAbs().maxCoeff();
    if (max_index > kIndexClamp && gain > 1e-9) {
      throw NumericError(
          "fit_probit: perfect separation suspected (|Z gamma| reached " +
          std::to_string(max_index) +
          " while the likelihood is still growing)");
    }
  }
  fit.loglik = ll;
  fit.clamp_active = (Z * fit.gamma).cwiseAbs().maxCoeff() >= kIndexClamp;

  // Covariance from the observed information at the optimum.
  const Eigen::VectorXd eta = Z * fit.gamma;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double e = clamp_index(eta(i));
    const double l = mills(e, T[static_cast<std::size_t>(i)]);
    info_w(i) = l * (l + e);
  }
  const Eigen::MatrixXd info = Z.transpose() * info_w.asDiagonal() * Z;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
  if (ldlt.info() != Eigen::Success) {
    throw NumericError("fit_probit: information matrix singular at optimum");
  }
  Eigen::MatrixXd cov = ldlt.solve(Eigen::MatrixXd::Identity(p, p));
  fit.cov = 0.5 * (cov + cov.transpose());
  return fit;
}

Eigen::VectorXd predict_probit(const ProbitFit& fit,
                               const Eigen::MatrixXd& Z) {
  if (Z.cols() != fit.gamma.size()) {
    throw DataError("predict_probit: Z has " + std::to_string(Z.cols()) +
                    " columns, fit has " + std::to_string(fit.gamma.size()) +
                    " coefficients");
  }
  Eigen::VectorXd p = Z * fit.gamma;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    p(i) = std::clamp(norm_cdf(p(i)), kDenomFloor, 1.0 - 1e-16);
  }
  return p;
}

MillsVector inverse_mills(const ProbitFit& fit, const Eigen::MatrixXd& Z,
                          const std::vector<int>& T) {
  if (Z.cols() != fit.gamma.size()) {
    throw DataError("inverse_mills: Z column count does not match fit");
  }
  if (static_cast<std::size_t>(Z.rows()) != T.size()) {
    throw DataError("inverse_mills: Z rows and T length differ");
  }
  const Eigen::VectorXd eta = Z * fit.gamma;
  MillsVector out;
  out.lambda.resize(T.size());
  out.treatment = T;
  std::string bad_rows;
  for (std::size_t i = 0; i < T.size(); ++i) {
    if (T[i] != 0 && T[i] != 1) {
      throw DataError("inverse_mills: T must be 0/1");
    }
    const double e = eta(static_cast<Eigen::Index>(i));
    const double denom = T[i] == 1 ? norm_cdf(e) : norm_sf(e);
    if (denom < kDenomFloor) {
      bad_rows += bad_rows.empty() ? "" : ", ";
      bad_rows += std::to_string(i);
      continue;
    }
    out.lambda[i] = (T[i] == 1 ? 1.0 : -1.0) * norm_pdf(e) / denom;
  }
  if (!bad_rows.empty()) {
    throw NumericError("inverse_mills: probit probability underflow at rows " +
                       bad_rows);
  }
  return out;
}

ClusterSe cluster_se(const std::vector<double>& scores,
                     const std::vector<int>& clusters) {
  const std::size_t n = scores.size();
  if (clusters.size() != n) {
    throw DataError("cluster_se: scores and clusters lengths differ");
  }
  if (n == 0) throw DataError("cluster_se: no scores");

  std::map<int, std::pair<double, std::size_t>> sums;  // cluster -> (sum, n_k)
  long double total = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    auto& [s, m] = sums[clusters[i]];
    s += scores[i];
    m += 1;
    total += scores[i];
  }
  if (sums.size() < 2) {
    throw DataError("cluster_se: need at least 2 distinct clusters, got " +
                    std::to_string(sums.size()));
  }
  ClusterSe out;
  out.n = n;
  out.n_clusters = sums.size();
  out.mean = static_cast<double>(total / static_cast<long double>(n));
  long double ss = 0.0L;
  for (const auto& [c, sm] : sums) {
    const long double centered =
        static_cast<long double>(sm.first) -
        static_cast<long double>(sm.second) * out.mean;
    ss += centered * centered;
  }
  out.se = static_cast<double>(std::sqrt(static_cast<double>(ss)) /
                               static_cast<double>(n));
  return out;
}

}  // namespace poleval
