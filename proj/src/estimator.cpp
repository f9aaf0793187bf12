#include "omps/estimator.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace omps {

namespace {

double clip01(double x) { return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x); }

double logdet_of_llt(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  double ld = 0.0;
  const auto& L = llt.matrixLLT();
  for (Eigen::Index i = 0; i < L.rows(); ++i) ld += 2.0 * std::log(L(i, i));
  return ld;
}

}  // namespace

double confidence_radius(int k, int d, int H, double xi, double gamma, double lambda,
                         double B, double delta) {
  if (k < 1 || d < 1 || H < 1 || xi <= 0 || gamma <= 0 || lambda <= 0 || B <= 0 ||
      delta <= 0)
    throw std::domain_error("confidence_radius: parameters must be positive");
  const double inner1 = 1.0 + static_cast<double>(k) * H / (xi * xi * d * lambda);
  const double log_ratio = std::log(gamma * gamma / xi);
  const double inner2 =
      32.0 * (log_ratio + 1.0) * static_cast<double>(k) * k * H * H / delta;
  if (inner1 <= 0.0 || inner2 <= 0.0 || log_ratio + 1.0 <= 0.0)
    throw std::domain_error("confidence_radius: log argument non-positive");
  const double l1 = std::log(inner1);
  const double l2 = std::log(inner2);
  return 12.0 * std::sqrt(d * l1 * l2) + 30.0 * l2 / (gamma * gamma) +
         std::sqrt(lambda) * B;
}

double practical_radius(int k, int d, int H, double lambda, double B, double delta,
                        double scale) {
  if (k < 1 || delta <= 0 || lambda <= 0)
    throw std::domain_error("practical_radius: parameters must be positive");
  return scale * std::sqrt(d * std::log((1.0 + static_cast<double>(k) * H) / delta)) +
         std::sqrt(lambda) * B;
}

std::pair<bool, double> ConfidenceSet::contains(const Eigen::VectorXd& theta) const {
  if (theta.size() != center.size())
    throw std::invalid_argument("ConfidenceSet::contains: size mismatch");
  const Eigen::VectorXd diff = theta - center;
  const double norm = std::sqrt(std::max(0.0, diff.dot(shape * diff)));
  return {norm <= radius, radius - norm};
}

MomentBank::MomentBank(int dim, int levels, double lambda, double xi, double gamma)
    : dim_(dim), levels_(levels), lambda_(lambda), xi_(xi), gamma_(gamma) {
  if (dim < 1 || levels < 1 || lambda <= 0 || xi <= 0 || gamma <= 0)
    throw std::invalid_argument("MomentBank: bad parameters");
  const Eigen::MatrixXd eye = lambda * Eigen::MatrixXd::Identity(dim, dim);
  running_cov_.assign(levels, eye);
  episode_cov_.assign(levels, eye);
  running_resp_.assign(levels, Eigen::VectorXd::Zero(dim));
  episode_resp_.assign(levels, Eigen::VectorXd::Zero(dim));
  estimate_.assign(levels, Eigen::VectorXd::Zero(dim));
  running_chol_.resize(levels);
  episode_chol_.resize(levels);
  running_logdet_.assign(levels, 0.0);
  episode_logdet_.assign(levels, 0.0);
  for (int m = 0; m < levels; ++m) {
    running_chol_[m].compute(eye);
    episode_chol_[m].compute(eye);
    running_logdet_[m] = episode_logdet_[m] = dim * std::log(lambda);
  }
}

void MomentBank::refresh_running(int m) {
  running_chol_[m].compute(running_cov_[m]);
  if (running_chol_[m].info() != Eigen::Success)
    throw std::runtime_error("MomentBank: running covariance lost positive definiteness");
  running_logdet_[m] = logdet_of_llt(running_chol_[m]);
}

double MomentBank::running_mahalanobis(int m, const Eigen::VectorXd& phi) const {
  return std::sqrt(std::max(0.0, phi.dot(running_chol_[m].solve(phi))));
}

double MomentBank::episode_mahalanobis(int m, const Eigen::VectorXd& phi) const {
  return std::sqrt(std::max(0.0, phi.dot(episode_chol_[m].solve(phi))));
}

void MomentBank::update(int m, const Eigen::VectorXd& phi, double target,
                        double sigma_bar) {
  if (m < 0 || m >= levels_) throw std::out_of_range("MomentBank::update: level");
  if (!(sigma_bar >= xi_))
    throw std::invalid_argument("MomentBank::update: sigma_bar below xi floor");
  const double w = 1.0 / (sigma_bar * sigma_bar);
  running_cov_[m].selfadjointView<Eigen::Lower>().rankUpdate(phi, w);
  running_cov_[m] = running_cov_[m].selfadjointView<Eigen::Lower>();
  running_resp_[m] += phi * (target * w);
  refresh_running(m);
}

void MomentBank::finish_episode() {
  for (int m = 0; m < levels_; ++m) {
    episode_cov_[m] = running_cov_[m];
    episode_resp_[m] = running_resp_[m];
    episode_chol_[m].compute(episode_cov_[m]);
    if (episode_chol_[m].info() != Eigen::Success)
      throw std::runtime_error("MomentBank: episode covariance not SPD");
    episode_logdet_[m] = logdet_of_llt(episode_chol_[m]);
    estimate_[m] = episode_chol_[m].solve(episode_resp_[m]);
  }
}

void MomentBank::set_estimate(int m, Eigen::VectorXd value) {
  if (m < 0 || m >= levels_ || value.size() != dim_)
    throw std::invalid_argument("MomentBank::set_estimate: bad level or size");
  estimate_[m] = std::move(value);
}

bool MomentBank::det_ratio_indicator() const {
  // det(Sigma_hat^{-1/2}) / det(Sigma_tilde^{-1/2}) = exp((logdet_tilde - logdet_hat)/2)
  for (int m = 0; m < levels_; ++m) {
    const double ratio = std::exp(0.5 * (running_logdet_[m] - episode_logdet_[m]));
    if (ratio > 4.0) return false;
  }
  return true;
}

double MomentBank::min_eigen_slack() const {
  double slack = std::numeric_limits<double>::infinity();
  for (int m = 0; m < levels_; ++m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(running_cov_[m]);
    slack = std::min(slack, es.eigenvalues().minCoeff() - lambda_);
  }
  return slack;
}

std::vector<double> home_variances(const std::vector<Eigen::VectorXd>& features,
                                   const MomentBank& bank, double beta,
                                   double xi, double gamma) {
  const int M = bank.levels();
  if (static_cast<int>(features.size()) != M)
    throw std::invalid_argument("home_variances: need one feature per level");
  std::vector<double> sigma(M);
  for (int m = 0; m + 1 < M; ++m) {
    const double mean_m = clip01(features[m].dot(bank.estimate(m)));
    const double mean_m1 = clip01(features[m + 1].dot(bank.estimate(m + 1)));
    const double vbar = mean_m1 - mean_m * mean_m;
    const double err =
        std::min(1.0, 2.0 * beta * bank.episode_mahalanobis(m, features[m])) +
        std::min(1.0, beta * bank.episode_mahalanobis(m + 1, features[m + 1]));
    const double uncert = gamma * gamma * bank.running_mahalanobis(m, features[m]);
    sigma[m] = std::sqrt(std::max({vbar + err, xi * xi, uncert}));
  }
  const double top_uncert =
      gamma * gamma * bank.running_mahalanobis(M - 1, features[M - 1]);
  sigma[M - 1] = std::sqrt(std::max({1.0, xi * xi, top_uncert}));
  return sigma;
}

void update_regression(MomentBank& bank, int level, const Eigen::VectorXd& phi,
                       double target, double sigma_bar) {
  bank.update(level, phi, target, sigma_bar);
}

OptimisticValues optimistic_backup(const LinearMixtureModel& model,
                                   const RewardFunction& reward,
                                   const StochasticPolicy& policy,
                                   const Eigen::VectorXd& theta,
                                   const Eigen::MatrixXd& cov, double beta) {
  const int H = model.horizon, S = model.num_states, A = model.num_actions;
  OptimisticValues out;
  out.v = Eigen::MatrixXd::Zero(H + 1, S);
  out.q.assign(H, Eigen::MatrixXd::Zero(S, A));
  Eigen::LLT<Eigen::MatrixXd> llt;
  llt.compute(cov);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("optimistic_backup: covariance not SPD");
  for (int h = H - 1; h >= 0; --h) {
    const Eigen::VectorXd vnext = out.v.row(h + 1);
    for (int s = 0; s < S; ++s) {
      double vs = 0.0;
      for (int a = 0; a < A; ++a) {
        const Eigen::VectorXd phi = model.features(s, a).transpose() * vnext;
        double bonus = 0.0;
        if (beta > 0.0)
          bonus = beta * std::sqrt(std::max(0.0, phi.dot(llt.solve(phi))));
        const double q = clip01(reward(s, a) + theta.dot(phi) + bonus);
        out.q[h](s, a) = q;
        vs += policy.probs[h](s, a) * q;
      }
      out.v(h, s) = vs;
    }
  }
  return out;
}

}  // namespace omps
