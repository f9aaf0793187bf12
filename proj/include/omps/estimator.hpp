#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "omps/mdp.hpp"

namespace omps {

/// Confidence radius, evaluated exactly as printed:
///   12 sqrt(d log(1 + kH/(xi^2 d lambda)) log(32 (log(gamma^2/xi)+1) k^2 H^2 / delta))
///   + 30 log(32 (log(gamma^2/xi)+1) k^2 H^2 / delta) / gamma^2 + sqrt(lambda) B.
/// Throws std::domain_error if any log argument is non-positive.
double confidence_radius(int k, int d, int H, double xi, double gamma, double lambda,
                         double B, double delta);

/// Practically scaled alternative radius for desk-scale studies where the
/// printed constants saturate every bonus:
///   scale * sqrt(d log((1 + kH)/delta)) + sqrt(lambda) B.
double practical_radius(int k, int d, int H, double lambda, double B, double delta,
                        double scale);

struct ConfidenceSet {
  Eigen::VectorXd center;   // theta_hat_{k,0}
  Eigen::MatrixXd shape;    // Sigma_hat_{k,0}
  double radius = 0.0;      // beta_hat_k
  double delta = 0.0;

  /// Membership test: ||Sigma^{1/2}(theta - center)|| <= radius, plus margin.
  std::pair<bool, double> contains(const Eigen::VectorXd& theta) const;
};

/// Weighted-regression state for the M moment levels.  Covariances are
/// accumulated by rank-one updates within an episode and snapshotted at
/// episode boundaries; solves go through Cholesky factorizations that are
/// refreshed rather than updated incrementally.
class MomentBank {
 public:
  MomentBank(int dim, int levels, double lambda, double xi, double gamma);

  int dim() const { return dim_; }
  int levels() const { return levels_; }
  double lambda_reg() const { return lambda_; }
  double xi() const { return xi_; }
  double gamma_u() const { return gamma_; }

  const Eigen::MatrixXd& running_cov(int m) const { return running_cov_[m]; }
  const Eigen::MatrixXd& episode_cov(int m) const { return episode_cov_[m]; }
  const Eigen::VectorXd& estimate(int m) const { return estimate_[m]; }

  /// sqrt(phi^T Sigma_tilde^{-1} phi) for the running covariance.
  double running_mahalanobis(int m, const Eigen::VectorXd& phi) const;
  /// sqrt(phi^T Sigma_hat^{-1} phi) for the episode covariance.
  double episode_mahalanobis(int m, const Eigen::VectorXd& phi) const;

  /// Rank-one update of level m with weight 1/sigma_bar^2 (Algorithm lines
  /// that push phi phi^T and phi * target into the running statistics).
  void update(int m, const Eigen::VectorXd& phi, double target, double sigma_bar);

  /// Episode boundary: snapshot running statistics and recompute estimates.
  void finish_episode();

  /// Overrides one level's estimate (exact-moment oracles in tests).
  void set_estimate(int m, Eigen::VectorXd value);

  /// 1{ det(Sigma_hat^{-1/2}) / det(Sigma_tilde^{-1/2}) <= 4 for all m }.
  bool det_ratio_indicator() const;

  /// Smallest eigenvalue across levels minus lambda (for invariant checks).
  double min_eigen_slack() const;

 private:
  void refresh_running(int m);

  int dim_, levels_;
  double lambda_, xi_, gamma_;
  std::vector<Eigen::MatrixXd> running_cov_, episode_cov_;
  std::vector<Eigen::VectorXd> running_resp_, episode_resp_, estimate_;
  std::vector<Eigen::LLT<Eigen::MatrixXd>> running_chol_, episode_chol_;
  std::vector<double> running_logdet_, episode_logdet_;
};

/// High-order moment estimator: per-level variance upper bounds
/// sigma_bar^2_m used as regression weights.  `features[m]` is
/// phi_{V^{2^m}}(s_h, a_h).
std::vector<double> home_variances(const std::vector<Eigen::VectorXd>& features,
                                   const MomentBank& bank, double beta,
                                   double xi, double gamma);

/// Free-function wrapper around MomentBank::update (keeps the algorithm's
/// update step nameable on its own).
void update_regression(MomentBank& bank, int level, const Eigen::VectorXd& phi,
                       double target, double sigma_bar);

struct OptimisticValues {
  Eigen::MatrixXd v;               // (H+1) x S, truncated to [0,1]
  std::vector<Eigen::MatrixXd> q;  // H entries, S x A, truncated to [0,1]
};

/// Backward optimistic pass
///   Q_h = [ r + <theta, phi_{V_{h+1}}> + beta ||Sigma^{-1/2} phi_{V_{h+1}}|| ]_{[0,1]},
///   V_h = E_{a~pi_h} Q_h.
/// Only the feature map of `model` is read.
OptimisticValues optimistic_backup(const LinearMixtureModel& model,
                                   const RewardFunction& reward,
                                   const StochasticPolicy& policy,
                                   const Eigen::VectorXd& theta,
                                   const Eigen::MatrixXd& cov, double beta);

}  // namespace omps
