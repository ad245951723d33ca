#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace gprvm {

using FeatureId = int;

// Candidate feature columns over the N training rows. Columns must be finite;
// all-zero columns are inadmissible and skipped by the learner.
struct DesignMatrix {
  Eigen::MatrixXd columns;             // N x C
  std::vector<FeatureId> ids;          // size C, pairwise distinct
};

struct RvmConfig {
  double alpha_ceiling = 1e12;         // finite encoding of alpha = infinity
  double beta_max = 1e12;
  double tol_dln_alpha = 1e-6;
  double tol_dln_beta = 1e-6;
  int max_sweeps = 1000;
  double jitter_scale = 1e-10;         // relative diagonal jitter per retry
  int jitter_retries = 3;
  double min_column_norm = 1e-12;
  double max_active_correlation = 1.0 - 1e-12;
  bool check_consistency = false;      // recompute the posterior from raw
                                       // columns after every action (tests)
};

struct SparseLinearModel {
  std::vector<int> active;             // positions into the candidate matrix
  Eigen::VectorXd alpha;               // per active entry, aligned
  double beta = 0.0;
  Eigen::VectorXd mean;                // posterior mean m
  Eigen::MatrixXd covariance;          // posterior covariance Sigma
  double log_ml = -std::numeric_limits<double>::infinity();
};

struct BasisStats {
  Eigen::VectorXd S, Q;                // capital factors (full-model form)
  Eigen::VectorXd s, q;                // leave-one-out sparsity/quality
};

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NoAdmissibleBasis : public FitError {
 public:
  NoAdmissibleBasis() : FitError("no admissible basis: every candidate has q^2 <= s") {}
};

class SingularPosterior : public FitError {
 public:
  explicit SingularPosterior(const std::vector<FeatureId>& ids)
      : FitError(describe(ids)) {}

 private:
  static std::string describe(const std::vector<FeatureId>& ids) {
    std::string msg = "singular posterior; active feature ids:";
    for (FeatureId id : ids) msg += ' ' + std::to_string(id);
    return msg;
  }
};

struct FitDiagnostics {
  int sweeps = 0;
  int adds = 0;
  int deletes = 0;
  int reestimates = 0;
  double sweep_seconds = 0.0;          // time inside the sweep loop; the
                                       // gram precompute is excluded
  double min_action_rel_gain = std::numeric_limits<double>::infinity();
  double max_gamma_violation = 0.0;    // distance of any gamma_i from [0, 1]
  double max_consistency_error = 0.0;  // only with check_consistency
  bool converged = false;
};

struct FitResult {
  std::vector<SparseLinearModel> snapshots;  // distinct supports seen, in
                                             // first-occurrence order, each
                                             // holding its latest state
  SparseLinearModel final_model;
  FitDiagnostics diagnostics;
};

inline Eigen::VectorXd gammas(const Eigen::VectorXd& alpha,
                              const Eigen::MatrixXd& sigma) {
  return Eigen::VectorXd::Ones(alpha.size()) -
         alpha.cwiseProduct(sigma.diagonal());
}

namespace detail {

// Cholesky of H = diag(alpha) + beta * Gaa with cumulative diagonal jitter on
// failure. Returns false when all retries fail.
inline bool factor_posterior(const Eigen::MatrixXd& gaa,
                             const Eigen::VectorXd& alpha, double beta,
                             double jitter_scale, int retries,
                             Eigen::LLT<Eigen::MatrixXd>& llt) {
  const int m = static_cast<int>(alpha.size());
  Eigen::MatrixXd h = beta * gaa;
  h.diagonal() += alpha;
  const double jitter = jitter_scale * h.trace() / static_cast<double>(m);
  for (int attempt = 0; attempt <= retries; ++attempt) {
    llt.compute(h);
    if (llt.info() == Eigen::Success) return true;
    h.diagonal().array() += jitter;
  }
  return false;
}

inline double log_det_from_llt(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace detail

// Posterior mean and covariance (m, Sigma) for the active design matrix:
//   Sigma = (A + beta Phi^T Phi)^-1,  m = beta Sigma Phi^T t
// computed through a symmetric positive definite factorization.
inline std::pair<Eigen::VectorXd, Eigen::MatrixXd> compute_posterior(
    const DesignMatrix& phi_active, const Eigen::VectorXd& t,
    const Eigen::VectorXd& alpha, double beta, const RvmConfig& cfg = {}) {
  const int m = static_cast<int>(phi_active.columns.cols());
  if (m < 1) throw std::invalid_argument("compute_posterior needs at least one column");
  Eigen::MatrixXd gaa = phi_active.columns.transpose() * phi_active.columns;
  Eigen::VectorXd ha = phi_active.columns.transpose() * t;
  Eigen::LLT<Eigen::MatrixXd> llt;
  if (!detail::factor_posterior(gaa, alpha, beta, cfg.jitter_scale,
                                cfg.jitter_retries, llt))
    throw SingularPosterior(phi_active.ids);
  Eigen::MatrixXd sigma = llt.solve(Eigen::MatrixXd::Identity(m, m));
  Eigen::VectorXd mean = beta * (sigma * ha);
  return {std::move(mean), std::move(sigma)};
}

// Log marginal likelihood -1/2 [N ln 2pi + ln|C| + t^T C^-1 t] with
// C = beta^-1 I + Phi A^-1 Phi^T, evaluated in the M-dimensional form:
//   ln|C|     = -N ln beta + ln|A + beta Phi^T Phi| - sum ln alpha
//   t^T C^-1 t = beta (t^T t - ha^T m)
// Columns with alpha >= ceiling (or non-finite alpha) contribute nothing.
inline double log_marginal(const DesignMatrix& phi, const Eigen::VectorXd& t,
                           const std::vector<double>& alpha, double beta,
                           const RvmConfig& cfg = {}) {
  const int n = static_cast<int>(t.size());
  std::vector<int> act;
  for (int i = 0; i < static_cast<int>(alpha.size()); ++i)
    if (std::isfinite(alpha[i]) && alpha[i] < cfg.alpha_ceiling) act.push_back(i);
  const double tt = t.squaredNorm();
  double log_det_c, quad;
  if (act.empty()) {
    log_det_c = -n * std::log(beta);
    quad = beta * tt;
  } else {
    const int m = static_cast<int>(act.size());
    Eigen::MatrixXd phia(n, m);
    Eigen::VectorXd a(m);
    for (int j = 0; j < m; ++j) {
      phia.col(j) = phi.columns.col(act[j]);
      a[j] = alpha[act[j]];
    }
    Eigen::MatrixXd gaa = phia.transpose() * phia;
    Eigen::VectorXd ha = phia.transpose() * t;
    Eigen::LLT<Eigen::MatrixXd> llt;
    if (!detail::factor_posterior(gaa, a, beta, cfg.jitter_scale,
                                  cfg.jitter_retries, llt)) {
      std::vector<FeatureId> ids;
      for (int j : act) ids.push_back(j < static_cast<int>(phi.ids.size()) ? phi.ids[j] : j);
      throw SingularPosterior(ids);
    }
    Eigen::MatrixXd sigma = llt.solve(Eigen::MatrixXd::Identity(m, m));
    Eigen::VectorXd mean = beta * (sigma * ha);
    log_det_c = -n * std::log(beta) + detail::log_det_from_llt(llt) -
                a.array().log().sum();
    quad = beta * (tt - ha.dot(mean));
  }
  return -0.5 * (n * std::log(2.0 * M_PI) + log_det_c + quad);
}

// Sparsity/quality factors for every candidate against the current model:
//   S_i = beta phi_i^T phi_i - beta^2 phi_i^T Phi_a Sigma Phi_a^T phi_i
//   Q_i = beta phi_i^T t     - beta^2 phi_i^T Phi_a Sigma Phi_a^T t
// with the leave-one-out identities for active i:
//   s_i = alpha_i S_i / (alpha_i - S_i),  q_i = alpha_i Q_i / (alpha_i - S_i)
// and s_i = S_i, q_i = Q_i for inactive i.
inline BasisStats basis_stats(const SparseLinearModel& model,
                              const DesignMatrix& candidates,
                              const Eigen::VectorXd& t) {
  const int c = static_cast<int>(candidates.columns.cols());
  const double beta = model.beta;
  BasisStats st;
  st.S.resize(c);
  st.Q.resize(c);
  const int m = static_cast<int>(model.active.size());
  if (m == 0) {
    st.S = beta * candidates.columns.colwise().squaredNorm().transpose();
    st.Q = beta * (candidates.columns.transpose() * t);
  } else {
    Eigen::MatrixXd phia(candidates.columns.rows(), m);
    for (int j = 0; j < m; ++j) phia.col(j) = candidates.columns.col(model.active[j]);
    Eigen::MatrixXd v = phia.transpose() * candidates.columns;  // m x c
    Eigen::MatrixXd w = model.covariance * v;
    Eigen::VectorXd ha = phia.transpose() * t;
    Eigen::VectorXd u = model.covariance * ha;
    st.S = beta * candidates.columns.colwise().squaredNorm().transpose() -
           beta * beta * (v.cwiseProduct(w)).colwise().sum().transpose();
    st.Q = beta * (candidates.columns.transpose() * t) - beta * beta * (v.transpose() * u);
  }
  st.s = st.S;
  st.q = st.Q;
  for (int j = 0; j < m; ++j) {
    const int i = model.active[j];
    const double denom = model.alpha[j] - st.S[i];
    if (denom != 0.0) {
      st.s[i] = model.alpha[j] * st.S[i] / denom;
      st.q[i] = model.alpha[j] * st.Q[i] / denom;
    } else {
      st.s[i] = std::numeric_limits<double>::infinity();
      st.q[i] = 0.0;
    }
  }
  return st;
}

// Eq.-(10)-style noise precision update: beta = (N - sum gamma) / ||t-Phi m||^2
// with a clamp at beta_max for vanishing residuals or degenerate denominators.
inline double reestimate_beta_raw(double residual_sq, double sum_gamma, int n,
                                  double beta_max) {
  const double denom = static_cast<double>(n) - sum_gamma;
  if (denom < 1e-9) return beta_max;
  if (residual_sq <= 0.0) return beta_max;
  const double beta = denom / residual_sq;
  return beta > beta_max ? beta_max : beta;
}

inline double reestimate_beta(const SparseLinearModel& model,
                              const DesignMatrix& candidates,
                              const Eigen::VectorXd& t,
                              double beta_max = 1e12) {
  const int m = static_cast<int>(model.active.size());
  if (m == 0)
    return reestimate_beta_raw(t.squaredNorm(), 0.0, static_cast<int>(t.size()), beta_max);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(t.size());
  for (int j = 0; j < m; ++j)
    y += model.mean[j] * candidates.columns.col(model.active[j]);
  const double resid = (t - y).squaredNorm();
  const double sg = gammas(model.alpha, model.covariance).sum();
  return reestimate_beta_raw(resid, sg, static_cast<int>(t.size()), beta_max);
}

namespace detail {

// Marginal-likelihood gain of holding basis precision `a` given leave-one-out
// factors (s, q): L(with, alpha=a) - L(without).
inline double add_gain_at(double a, double s, double q) {
  return 0.5 * (std::log(a) - std::log(a + s) + q * q / (a + s));
}

// Gain at the optimal precision a* = s^2 / (q^2 - s), valid for q^2 > s:
// 1/2 [q^2/s - 1 + ln(s/q^2)].
inline double add_gain_opt(double s, double q) {
  const double r = q * q / s;
  return 0.5 * (r - 1.0 - std::log(r));
}

class SequentialFitter {
 public:
  SequentialFitter(const DesignMatrix& phi, const Eigen::VectorXd& t,
                   const RvmConfig& cfg)
      : phi_(phi), t_(t), cfg_(cfg),
        n_(static_cast<int>(t.size())),
        c_(static_cast<int>(phi.columns.cols())) {
    if (c_ < 1) throw std::invalid_argument("sequential_fit needs at least one candidate");
    if (n_ < 2) throw std::invalid_argument("sequential_fit needs N >= 2");
    if (static_cast<int>(phi.columns.rows()) != n_)
      throw std::invalid_argument("design matrix / target size mismatch");
  }

  FitResult run() {
    precompute();
    init_model();
    record_snapshot();

    using clock = std::chrono::steady_clock;
    for (int sweep = 0; sweep < cfg_.max_sweeps; ++sweep) {
      const auto start = clock::now();
      ++diag_.sweeps;

      compute_stats();
      Action act = select_action();
      double dln_alpha = 0.0;
      bool structural = false;
      if (act.kind != Action::None) {
        const double l_before = log_ml_;
        apply_action(act);
        refresh_posterior();
        const double gain = log_ml_ - l_before;
        const double rel = gain / std::max(1.0, std::abs(l_before));
        diag_.min_action_rel_gain = std::min(diag_.min_action_rel_gain, rel);
        if (act.kind == Action::Reestimate) {
          dln_alpha = std::abs(std::log(act.alpha_new / act.alpha_old));
          ++diag_.reestimates;
        } else {
          structural = true;
          if (act.kind == Action::Add) ++diag_.adds; else ++diag_.deletes;
        }
      }

      const double dln_beta = update_beta();
      record_gamma();
      record_snapshot();
      diag_.sweep_seconds +=
          std::chrono::duration<double>(clock::now() - start).count();

      if (!structural && dln_alpha < cfg_.tol_dln_alpha &&
          dln_beta < cfg_.tol_dln_beta) {
        diag_.converged = true;
        break;
      }
    }

    FitResult result;
    result.final_model = current_model();
    result.snapshots = std::move(snapshots_);
    result.diagnostics = diag_;
    return result;
  }

 private:
  struct Action {
    enum Kind { None, Add, Delete, Reestimate } kind = None;
    int candidate = -1;
    double alpha_new = 0.0;
    double alpha_old = 0.0;
    double gain = 0.0;
  };

  void precompute() {
    gram_ = phi_.columns.transpose() * phi_.columns;  // C x C
    d_ = phi_.columns.transpose() * t_;
    diag_k_ = gram_.diagonal();
    tt_ = t_.squaredNorm();
    norms_ = diag_k_.cwiseSqrt();
    admissible_.assign(c_, true);
    for (int i = 0; i < c_; ++i)
      if (!(norms_[i] >= cfg_.min_column_norm)) admissible_[i] = false;
    pos_of_.assign(c_, -1);
  }

  void init_model() {
    const double mean_t = t_.mean();
    const double var_t = tt_ / n_ - mean_t * mean_t;
    beta_ = var_t > 0.0 ? 10.0 / var_t : cfg_.beta_max;
    beta_ = std::min(beta_, cfg_.beta_max);

    int best = -1;
    double best_score = -1.0;
    for (int i = 0; i < c_; ++i) {
      if (!admissible_[i]) continue;
      const double score = d_[i] * d_[i] / diag_k_[i];
      if (score > best_score) { best_score = score; best = i; }
    }
    if (best < 0) throw NoAdmissibleBasis();
    const double denom = best_score - 1.0 / beta_;  // q^2 > s iff positive
    if (denom <= 0.0) throw NoAdmissibleBasis();
    double a0 = diag_k_[best] / denom;
    if (!(a0 > 0.0) || a0 >= cfg_.alpha_ceiling) throw NoAdmissibleBasis();
    active_.push_back(best);
    alpha_vec_.push_back(a0);
    pos_of_[best] = 0;
    refresh_posterior();
  }

  void refresh_posterior() {
    const int m = static_cast<int>(active_.size());
    if (m == 0) {
      alpha_.resize(0);
      sigma_.resize(0, 0);
      mean_.resize(0);
      ha_.resize(0);
      gaa_.resize(0, 0);
      log_ml_ = -0.5 * (n_ * std::log(2.0 * M_PI) - n_ * std::log(beta_) + beta_ * tt_);
      return;
    }
    alpha_ = Eigen::Map<const Eigen::VectorXd>(alpha_vec_.data(), m);
    gaa_.resize(m, m);
    ha_.resize(m);
    for (int j = 0; j < m; ++j) {
      ha_[j] = d_[active_[j]];
      for (int k = 0; k < m; ++k) gaa_(j, k) = gram_(active_[j], active_[k]);
    }
    Eigen::LLT<Eigen::MatrixXd> llt;
    if (!factor_posterior(gaa_, alpha_, beta_, cfg_.jitter_scale,
                          cfg_.jitter_retries, llt))
      throw SingularPosterior(active_ids());
    sigma_ = llt.solve(Eigen::MatrixXd::Identity(m, m));
    mean_ = beta_ * (sigma_ * ha_);
    const double log_det_c = -n_ * std::log(beta_) + log_det_from_llt(llt) -
                             alpha_.array().log().sum();
    const double quad = beta_ * (tt_ - ha_.dot(mean_));
    log_ml_ = -0.5 * (n_ * std::log(2.0 * M_PI) + log_det_c + quad);

    if (cfg_.check_consistency) check_consistency();
  }

  void check_consistency() {
    const int m = static_cast<int>(active_.size());
    Eigen::MatrixXd phia(n_, m);
    for (int j = 0; j < m; ++j) phia.col(j) = phi_.columns.col(active_[j]);
    Eigen::MatrixXd h = beta_ * (phia.transpose() * phia);
    h.diagonal() += alpha_;
    Eigen::MatrixXd sigma_ref = h.llt().solve(Eigen::MatrixXd::Identity(m, m));
    Eigen::VectorXd mean_ref = beta_ * (sigma_ref * (phia.transpose() * t_));
    const double scale = std::max(1.0, mean_ref.norm());
    const double merr = (mean_ref - mean_).norm() / scale;
    const double serr = (sigma_ref - sigma_).norm() / std::max(1.0, sigma_ref.norm());
    diag_.max_consistency_error =
        std::max({diag_.max_consistency_error, merr, serr});
  }

  void compute_stats() {
    const int m = static_cast<int>(active_.size());
    if (m == 0) {
      s_cap_ = beta_ * diag_k_;
      q_cap_ = beta_ * d_;
      return;
    }
    v_.resize(m, c_);
    for (int j = 0; j < m; ++j) v_.row(j) = gram_.row(active_[j]);
    w_.noalias() = sigma_ * v_;
    s_cap_ = beta_ * diag_k_ -
             beta_ * beta_ * (v_.cwiseProduct(w_)).colwise().sum().transpose();
    q_cap_ = beta_ * d_ - beta_ * (v_.transpose() * mean_);
  }

  // Exact deletion gain by trial removal; used only when the leave-one-out
  // identities are numerically unusable (alpha - S <= 0).
  double exact_delete_gain(int pos) {
    std::vector<int> act = active_;
    std::vector<double> alv = alpha_vec_;
    act.erase(act.begin() + pos);
    alv.erase(alv.begin() + pos);
    const int m = static_cast<int>(act.size());
    if (m == 0) {
      const double l0 =
          -0.5 * (n_ * std::log(2.0 * M_PI) - n_ * std::log(beta_) + beta_ * tt_);
      return l0 - log_ml_;
    }
    Eigen::MatrixXd gaa(m, m);
    Eigen::VectorXd ha(m), al(m);
    for (int j = 0; j < m; ++j) {
      ha[j] = d_[act[j]];
      al[j] = alv[j];
      for (int k = 0; k < m; ++k) gaa(j, k) = gram_(act[j], act[k]);
    }
    Eigen::LLT<Eigen::MatrixXd> llt;
    if (!factor_posterior(gaa, al, beta_, cfg_.jitter_scale, cfg_.jitter_retries, llt))
      return -std::numeric_limits<double>::infinity();
    Eigen::VectorXd mn = beta_ * llt.solve(ha);
    const double log_det_c = -n_ * std::log(beta_) + log_det_from_llt(llt) -
                             al.array().log().sum();
    const double quad = beta_ * (tt_ - ha.dot(mn));
    return -0.5 * (n_ * std::log(2.0 * M_PI) + log_det_c + quad) - log_ml_;
  }

  bool correlated_with_active(int i) const {
    for (int j = 0; j < static_cast<int>(active_.size()); ++j) {
      const int k = active_[j];
      const double corr = std::abs(gram_(k, i)) / (norms_[k] * norms_[i]);
      if (corr > cfg_.max_active_correlation) return true;
    }
    return false;
  }

  Action select_action() {
    constexpr double kGainEps = 1e-10;
    Action best;
    for (int i = 0; i < c_; ++i) {
      if (!admissible_[i]) continue;
      const int pos = pos_of_[i];
      const double cs = s_cap_[i], cq = q_cap_[i];
      Action act;
      act.candidate = i;
      if (pos >= 0) {
        const double a_old = alpha_vec_[pos];
        const double denom = a_old - cs;
        if (denom <= 0.0) {
          act.kind = Action::Delete;
          act.gain = exact_delete_gain(pos);
        } else {
          const double s = a_old * cs / denom;
          const double q = a_old * cq / denom;
          if (q * q > s) {
            const double a_new = s * s / (q * q - s);
            if (a_new >= cfg_.alpha_ceiling) {
              act.kind = Action::Delete;
              act.gain = -add_gain_at(a_old, s, q);
            } else {
              act.kind = Action::Reestimate;
              act.alpha_new = a_new;
              act.alpha_old = a_old;
              act.gain = add_gain_at(a_new, s, q) - add_gain_at(a_old, s, q);
            }
          } else {
            act.kind = Action::Delete;
            act.gain = -add_gain_at(a_old, s, q);
          }
        }
        act.alpha_old = a_old;
      } else {
        if (cq * cq <= cs || cs <= 0.0) continue;
        const double a_new = cs * cs / (cq * cq - cs);
        if (a_new >= cfg_.alpha_ceiling || !(a_new > 0.0)) continue;
        if (correlated_with_active(i)) continue;
        act.kind = Action::Add;
        act.alpha_new = a_new;
        act.gain = add_gain_opt(cs, cq);
      }
      if (act.kind != Action::None && act.gain > kGainEps && act.gain > best.gain)
        best = act;
    }
    return best;
  }

  void apply_action(const Action& act) {
    switch (act.kind) {
      case Action::Add:
        pos_of_[act.candidate] = static_cast<int>(active_.size());
        active_.push_back(act.candidate);
        alpha_vec_.push_back(act.alpha_new);
        break;
      case Action::Delete: {
        const int pos = pos_of_[act.candidate];
        active_.erase(active_.begin() + pos);
        alpha_vec_.erase(alpha_vec_.begin() + pos);
        pos_of_[act.candidate] = -1;
        for (int j = pos; j < static_cast<int>(active_.size()); ++j)
          pos_of_[active_[j]] = j;
        break;
      }
      case Action::Reestimate:
        alpha_vec_[pos_of_[act.candidate]] = act.alpha_new;
        break;
      case Action::None:
        break;
    }
  }

  double update_beta() {
    double resid_sq, sum_gamma;
    const int m = static_cast<int>(active_.size());
    if (m == 0) {
      resid_sq = tt_;
      sum_gamma = 0.0;
    } else {
      resid_sq = tt_ - 2.0 * mean_.dot(ha_) + mean_.dot(gaa_ * mean_);
      if (resid_sq < 0.0) resid_sq = 0.0;
      sum_gamma = gammas(alpha_, sigma_).sum();
    }
    const double beta_new = reestimate_beta_raw(resid_sq, sum_gamma, n_, cfg_.beta_max);
    const double dln = std::abs(std::log(beta_new / beta_));
    beta_ = beta_new;
    refresh_posterior();
    return dln;
  }

  void record_gamma() {
    if (active_.empty()) return;
    Eigen::VectorXd g = gammas(alpha_, sigma_);
    for (int j = 0; j < g.size(); ++j) {
      const double viol = std::max(-g[j], g[j] - 1.0);
      if (viol > diag_.max_gamma_violation) diag_.max_gamma_violation = viol;
    }
  }

  std::vector<FeatureId> active_ids() const {
    std::vector<FeatureId> ids;
    for (int i : active_)
      ids.push_back(i < static_cast<int>(phi_.ids.size()) ? phi_.ids[i] : i);
    return ids;
  }

  SparseLinearModel current_model() const {
    SparseLinearModel m;
    m.active = active_;
    m.alpha = alpha_;
    m.beta = beta_;
    m.mean = mean_;
    m.covariance = sigma_;
    m.log_ml = log_ml_;
    return m;
  }

  // One snapshot per distinct support, in first-occurrence order; revisits
  // overwrite with the latest (most converged) state for that support.
  void record_snapshot() {
    std::vector<int> key = active_;
    std::sort(key.begin(), key.end());
    auto it = snapshot_index_.find(key);
    if (it == snapshot_index_.end()) {
      snapshot_index_.emplace(std::move(key), snapshots_.size());
      snapshots_.push_back(current_model());
    } else {
      snapshots_[it->second] = current_model();
    }
  }

  const DesignMatrix& phi_;
  const Eigen::VectorXd& t_;
  RvmConfig cfg_;
  int n_, c_;

  Eigen::MatrixXd gram_;
  Eigen::VectorXd d_, diag_k_, norms_;
  double tt_ = 0.0;
  std::vector<bool> admissible_;

  std::vector<int> active_;
  std::vector<double> alpha_vec_;
  std::vector<int> pos_of_;
  double beta_ = 1.0;
  Eigen::VectorXd alpha_, mean_, ha_;
  Eigen::MatrixXd sigma_, gaa_, v_, w_;
  Eigen::VectorXd s_cap_, q_cap_;
  double log_ml_ = -std::numeric_limits<double>::infinity();

  std::map<std::vector<int>, std::size_t> snapshot_index_;
  std::vector<SparseLinearModel> snapshots_;
  FitDiagnostics diag_;
};

}  // namespace detail

// Sequential sparse Bayesian learning: starting from the single best-aligned
// basis, repeatedly applies the highest-gain add / delete / re-estimate
// action, updating the noise precision once per sweep, until neither the
// precisions nor the noise level move. Returns the distinct models visited
// (for model selection) plus the final state.
inline FitResult sequential_fit(const DesignMatrix& candidates,
                                const Eigen::VectorXd& t,
                                const RvmConfig& cfg = {}) {
  detail::SequentialFitter fitter(candidates, t, cfg);
  return fitter.run();
}

}  // namespace gprvm
