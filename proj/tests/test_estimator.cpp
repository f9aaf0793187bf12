#include <cmath>

#include "doctest.h"
#include "omps/estimator.hpp"
#include "omps/instances.hpp"
#include "omps/rng.hpp"

using namespace omps;

TEST_CASE("confidence_radius: nondecreasing in k and pinned fixture value") {
  const int d = 4, H = 10, K = 500;
  const double B = 2.0, delta = 0.01;
  const double xi = std::sqrt(static_cast<double>(d) / (K * H));
  const double gamma = std::pow(static_cast<double>(d), -0.25);
  const double lambda = d / (B * B);

  double prev = 0.0;
  for (int k = 1; k <= 50; ++k) {
    const double b = confidence_radius(k, d, H, xi, gamma, lambda, B, delta);
    CHECK(b >= prev);
    prev = b;
  }
  // frozen from an independent evaluation of the printed formula
  CHECK(confidence_radius(1, d, H, xi, gamma, lambda, B, delta) ==
        doctest::Approx(1098.8128475325943).epsilon(1e-12));
  // with lambda = d/B^2 the regularization term contributes exactly sqrt(d)
  CHECK(std::sqrt(lambda) * B == doctest::Approx(std::sqrt(static_cast<double>(d))));
  CHECK_THROWS_AS(confidence_radius(0, d, H, xi, gamma, lambda, B, delta), std::domain_error);
  CHECK_THROWS_AS(confidence_radius(1, d, H, 2.0, 0.5, lambda, B, delta), std::domain_error);
}

TEST_CASE("confidence set membership and margins") {
  ConfidenceSet cs;
  cs.center = Eigen::VectorXd::Zero(3);
  cs.shape = Eigen::MatrixXd::Identity(3, 3);
  cs.radius = 2.0;
  auto [inside, margin] = cs.contains(cs.center);
  CHECK(inside);
  CHECK(margin == doctest::Approx(2.0));
  cs.radius = 0.0;
  Eigen::VectorXd off = Eigen::VectorXd::Unit(3, 0);
  CHECK(!cs.contains(off).first);
}

TEST_CASE("update_regression: zero feature is a no-op, single update is 1-d ridge") {
  MomentBank bank(2, 3, 0.5, 0.01, 1.0);
  bank.finish_episode();
  const Eigen::MatrixXd cov0 = bank.running_cov(0);
  update_regression(bank, 0, Eigen::VectorXd::Zero(2), 0.7, 1.0);
  CHECK((bank.running_cov(0) - cov0).cwiseAbs().maxCoeff() == 0.0);

  MomentBank ridge(2, 1, 0.5, 0.01, 1.0);
  update_regression(ridge, 0, Eigen::VectorXd::Unit(2, 0), 0.8, 1.0);
  ridge.finish_episode();
  CHECK(ridge.estimate(0)[0] == doctest::Approx(0.8 / (0.5 + 1.0)).epsilon(1e-14));
  CHECK(ridge.estimate(0)[1] == 0.0);
  CHECK_THROWS_AS(ridge.update(0, Eigen::VectorXd::Unit(2, 0), 0.1, 0.001),
                  std::invalid_argument);
}

TEST_CASE("regression coverage: noisy targets stay inside the printed radius") {
  const int d = 3, H = 5, K = 200;  // N = 1000 updates
  const double B = 2.0, delta = 0.05;
  const double xi = std::sqrt(static_cast<double>(d) / (K * H));
  const double gamma = std::pow(static_cast<double>(d), -0.25);
  const double lambda = d / (B * B);
  int covered = 0;
  const int runs = 20;
  for (int run = 0; run < runs; ++run) {
    Rng rng(500 + run);
    Eigen::VectorXd theta(d);
    for (int i = 0; i < d; ++i) theta[i] = rng.uniform();
    theta *= B / (theta.norm() * 1.3);
    MomentBank bank(d, 1, lambda, xi, gamma);
    bool ok = true;
    for (int k = 1; k <= K; ++k) {
      for (int h = 0; h < H; ++h) {
        Eigen::VectorXd phi(d);
        for (int i = 0; i < d; ++i) phi[i] = rng.uniform() / std::sqrt(static_cast<double>(d));
        const double noise = rng.uniform(-0.5, 0.5);
        bank.update(0, phi, phi.dot(theta) + noise, 1.0);
      }
      bank.finish_episode();
      const double beta = confidence_radius(k, d, H, xi, gamma, lambda, B, delta);
      const Eigen::VectorXd diff = bank.estimate(0) - theta;
      const double norm = std::sqrt(diff.dot(bank.episode_cov(0) * diff));
      ok = ok && norm <= beta;
    }
    covered += ok;
  }
  CHECK(covered >= static_cast<int>(0.95 * runs));
}

TEST_CASE("home_variances: top level saturates at one, beta zero drops error terms") {
  const int d = 2, M = 3;
  MomentBank bank(d, M, 1.0, 0.5, 0.8);
  bank.finish_episode();
  std::vector<Eigen::VectorXd> feats(M, Eigen::VectorXd::Zero(d));
  const auto sigma = home_variances(feats, bank, 10.0, 0.5, 0.8);
  CHECK(sigma[M - 1] == doctest::Approx(1.0));  // max{1, xi^2, 0}

  // beta = 0: sigma^2 = max{vbar, xi^2, gamma^2 ||phi||}, with vbar from the
  // zero estimates = 0 here
  feats.assign(M, Eigen::VectorXd::Constant(d, 0.3));
  const auto s0 = home_variances(feats, bank, 0.0, 0.5, 0.8);
  const double unc = 0.8 * 0.8 * bank.running_mahalanobis(0, feats[0]);
  CHECK(s0[0] * s0[0] == doctest::Approx(std::max(0.25, unc)).epsilon(1e-12));
}

TEST_CASE("home_variances: exact bank reproduces the true conditional variance") {
  const LinearMixtureModel m = make_basis_mixture(5, 2, 6, 3, 2.0, 36);
  const int M = 4;
  MomentBank bank(3, M, 1.0, 0.01, 1.0);
  bank.finish_episode();
  for (int lvl = 0; lvl < M; ++lvl) bank.set_estimate(lvl, m.theta_star);

  Rng rng(37);
  Eigen::VectorXd v(5);
  for (int i = 0; i < 5; ++i) v[i] = rng.uniform();
  const int s = 2, a = 1;
  std::vector<Eigen::VectorXd> feats(M);
  Eigen::VectorXd vpow = v;
  for (int lvl = 0; lvl < M; ++lvl) {
    if (lvl > 0)
      for (int i = 0; i < 5; ++i) vpow[i] = vpow[i] * vpow[i];
    feats[lvl] = phi_v(m, vpow, s, a);
  }
  const auto sigma = home_variances(feats, bank, 0.0, 0.01, 1.0);
  // with beta = 0 and exact estimates, vbar at level 0 equals the conditional
  // variance of V (as long as it dominates the floors)
  const double exact = conditional_variance(m, v, s, a);
  const double unc = 1.0 * bank.running_mahalanobis(0, feats[0]);
  const double expected = std::max({exact, 0.01 * 0.01, unc});
  CHECK(sigma[0] * sigma[0] == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("det ratio indicator: one at episode start, zero after a massive step") {
  MomentBank bank(2, 1, 1.0, 0.1, 1.0);
  bank.finish_episode();
  CHECK(bank.det_ratio_indicator());
  // inflate the running covariance determinant by more than 16x
  for (int i = 0; i < 40; ++i)
    bank.update(0, Eigen::VectorXd::Unit(2, i % 2) * 2.0, 0.3, 0.1);
  CHECK(!bank.det_ratio_indicator());
  bank.finish_episode();
  CHECK(bank.det_ratio_indicator());
}

TEST_CASE("optimistic_backup: saturation, exact-parameter equality, optimism") {
  const LinearMixtureModel m = make_basis_mixture(4, 2, 5, 3, 2.0, 38);
  Rng rng(39);
  StochasticPolicy pi = uniform_policy(4, 2, 5);
  RewardFunction r{Eigen::MatrixXd::Zero(4, 2)};
  for (int s = 0; s < 4; ++s)
    for (int a = 0; a < 2; ++a) r.values(s, a) = rng.uniform() / 5;

  // large radius: truncation bites at every stage whose continuation value is
  // nonzero (the bonus vanishes with phi_{V_{H+1}} = 0 at the last stage)
  const OptimisticValues sat = optimistic_backup(m, r, pi, Eigen::VectorXd::Zero(3),
                                                 Eigen::MatrixXd::Identity(3, 3), 1e6);
  for (int h = 0; h + 1 < 5; ++h) CHECK(sat.q[h].minCoeff() == doctest::Approx(1.0));
  CHECK((sat.q[4] - r.values).cwiseAbs().maxCoeff() <= 1e-15);

  // exact parameter, zero bonus: equals the true policy value
  const OptimisticValues exact = optimistic_backup(m, r, pi, m.theta_star,
                                                   Eigen::MatrixXd::Identity(3, 3), 0.0);
  const ValueTables truth = policy_value(m, pi, r);
  CHECK((exact.v - truth.v).cwiseAbs().maxCoeff() <= 1e-12);

  // containment implies optimism pointwise
  MomentBank bank(3, 1, 1.0, 0.05, 1.0);
  for (int t = 0; t < 300; ++t) {
    Eigen::VectorXd phi(3);
    for (int i = 0; i < 3; ++i) phi[i] = rng.uniform() / 2.0;
    bank.update(0, phi, phi.dot(m.theta_star) + rng.uniform(-0.1, 0.1), 1.0);
  }
  bank.finish_episode();
  const Eigen::VectorXd diff = bank.estimate(0) - m.theta_star;
  const double beta = 1.05 * std::sqrt(diff.dot(bank.episode_cov(0) * diff));
  const OptimisticValues opt =
      optimistic_backup(m, r, pi, bank.estimate(0), bank.episode_cov(0), beta);
  for (int h = 0; h < 5; ++h) {
    const Eigen::MatrixXd clipped_truth =
        truth.q[h].unaryExpr([](double x) { return std::min(std::max(x, 0.0), 1.0); });
    CHECK((opt.q[h] - clipped_truth).minCoeff() >= -1e-10);
  }
}
