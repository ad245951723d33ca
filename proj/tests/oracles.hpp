// Test-only oracles, independent of the library's marginal-likelihood path:
// the dense N x N evaluation of the log marginal likelihood and a
// neighborhood search that checks a fitted support for single-action local
// optimality. Shared by the unit suite and the acceptance suite.
#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "gprvm/rng.hpp"
#include "gprvm/rvm.hpp"

namespace oracles {

// -1/2 [N ln 2pi + ln|C| + t^T C^-1 t] with C built explicitly as
// beta^-1 I + sum_i alpha_i^-1 phi_i phi_i^T over columns with finite alpha.
inline double dense_log_marginal(const Eigen::MatrixXd& phi,
                                 const Eigen::VectorXd& t,
                                 const std::vector<double>& alpha, double beta,
                                 double alpha_ceiling = 1e12) {
  const int n = static_cast<int>(t.size());
  Eigen::MatrixXd c = Eigen::MatrixXd::Identity(n, n) / beta;
  for (int i = 0; i < static_cast<int>(alpha.size()); ++i) {
    if (!std::isfinite(alpha[i]) || alpha[i] >= alpha_ceiling) continue;
    c.noalias() += (phi.col(i) * phi.col(i).transpose()) / alpha[i];
  }
  Eigen::LLT<Eigen::MatrixXd> llt(c);
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const double quad = t.dot(llt.solve(t));
  return -0.5 * (n * std::log(2.0 * M_PI) + log_det + quad);
}

inline std::vector<double> alpha_vector(const gprvm::SparseLinearModel& m, int c) {
  std::vector<double> alpha(static_cast<std::size_t>(c),
                            std::numeric_limits<double>::infinity());
  for (int j = 0; j < static_cast<int>(m.active.size()); ++j)
    alpha[static_cast<std::size_t>(m.active[j])] = m.alpha[j];
  return alpha;
}

// Best log-ml over one precision value, all else fixed: coarse grid over
// ln(alpha) followed by golden-section refinement (the profile is unimodal).
inline double best_over_alpha(const gprvm::DesignMatrix& dm, const Eigen::VectorXd& t,
                              std::vector<double> alpha, int index, double beta) {
  auto value = [&](double ln_a) {
    alpha[static_cast<std::size_t>(index)] = std::exp(ln_a);
    return gprvm::log_marginal(dm, t, alpha, beta);
  };
  double best_x = -25.0, best_v = -std::numeric_limits<double>::infinity();
  for (int k = 0; k <= 128; ++k) {
    const double x = -25.0 + 50.0 * k / 128.0;
    const double v = value(x);
    if (v > best_v) { best_v = v; best_x = x; }
  }
  double lo = best_x - 0.5, hi = best_x + 0.5;
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
  double f1 = value(x1), f2 = value(x2);
  for (int it = 0; it < 60; ++it) {
    if (f1 < f2) {
      lo = x1; x1 = x2; f1 = f2;
      x2 = lo + gr * (hi - lo); f2 = value(x2);
    } else {
      hi = x2; x2 = x1; f2 = f1;
      x1 = hi - gr * (hi - lo); f1 = value(x1);
    }
  }
  return std::max({best_v, f1, f2});
}

// Largest single-action improvement over the fitted model: any add (with a
// free precision), any delete, or any re-estimate of one active precision.
inline double best_neighbor_gain(const gprvm::DesignMatrix& dm,
                                 const Eigen::VectorXd& t,
                                 const gprvm::SparseLinearModel& model,
                                 const gprvm::RvmConfig& cfg) {
  const int c = static_cast<int>(dm.columns.cols());
  const std::vector<double> alpha = alpha_vector(model, c);
  const double l0 = gprvm::log_marginal(dm, t, alpha, model.beta);
  double best = -std::numeric_limits<double>::infinity();

  for (int i = 0; i < c; ++i) {
    const bool active = std::isfinite(alpha[static_cast<std::size_t>(i)]) &&
                        alpha[static_cast<std::size_t>(i)] < cfg.alpha_ceiling;
    if (active) {
      // delete
      std::vector<double> del = alpha;
      del[static_cast<std::size_t>(i)] = std::numeric_limits<double>::infinity();
      best = std::max(best, gprvm::log_marginal(dm, t, del, model.beta) - l0);
      // re-estimate
      best = std::max(best, best_over_alpha(dm, t, alpha, i, model.beta) - l0);
    } else {
      if (dm.columns.col(i).norm() < cfg.min_column_norm) continue;
      bool duplicate = false;
      for (int j : model.active) {
        const double corr = std::abs(dm.columns.col(i).dot(dm.columns.col(j))) /
                            (dm.columns.col(i).norm() * dm.columns.col(j).norm());
        if (corr > cfg.max_active_correlation) { duplicate = true; break; }
      }
      if (duplicate) continue;  // inadmissible by the conditioning guard
      best = std::max(best, best_over_alpha(dm, t, alpha, i, model.beta) - l0);
    }
  }
  return best;
}

// Random planted-sparse-truth instance.
struct Instance {
  gprvm::DesignMatrix dm;
  Eigen::VectorXd t;
};

inline Instance random_instance(gprvm::Rng& rng, int n, int c, int k_true,
                                double noise_sigma) {
  Instance inst;
  inst.dm.columns.resize(n, c);
  for (int j = 0; j < c; ++j) {
    for (int i = 0; i < n; ++i) inst.dm.columns(i, j) = rng.normal(0.0, 1.0);
    inst.dm.ids.push_back(j);
  }
  inst.t = Eigen::VectorXd::Zero(n);
  for (int k = 0; k < k_true; ++k) {
    const int j = static_cast<int>(rng.below(static_cast<std::size_t>(c)));
    inst.t += rng.normal(0.0, 2.0) * inst.dm.columns.col(j);
  }
  for (int i = 0; i < n; ++i) inst.t[i] += rng.normal(0.0, noise_sigma);
  return inst;
}

}  // namespace oracles
