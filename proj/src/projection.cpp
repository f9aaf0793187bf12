#include "omps/projection.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace omps {

namespace {

constexpr double kExpClamp = 700.0;

double safe_exp(double x) {
  return std::exp(std::min(std::max(x, -kExpClamp), kExpClamp));
}

}  // namespace

double bregman_divergence(const std::vector<double>& x, const std::vector<double>& y,
                          const MirrorMap& map) {
  if (x.size() != y.size())
    throw std::invalid_argument("bregman_divergence: size mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > 0.0 && y[i] <= 0.0)
      throw std::domain_error("bregman_divergence: zero reference below positive point");
    total += (x[i] > 0.0 ? x[i] * (map.safe_log(x[i]) - map.safe_log(y[i])) : 0.0) -
             x[i] + y[i];
  }
  return total;
}

HyperplanePiece make_hyperplane(Eigen::MatrixXd a, Eigen::VectorXd b,
                                std::vector<int> support, std::string name) {
  if (a.rows() == 0 || a.cols() != static_cast<Eigen::Index>(support.size()))
    throw std::invalid_argument("hyperplane: shape mismatch");
  if (a.rows() > 1) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a.transpose());
    if (qr.rank() < a.rows())
      throw std::invalid_argument("hyperplane '" + name + "': rows not linearly independent");
  } else if (a.row(0).norm() == 0.0) {
    throw std::invalid_argument("hyperplane '" + name + "': zero row");
  }
  return HyperplanePiece{std::move(a), std::move(b), std::move(support), std::move(name)};
}

HalfspacePiece make_halfspace(Eigen::VectorXd c, double d, std::vector<int> support,
                              std::string name) {
  if (c.size() != static_cast<Eigen::Index>(support.size()) || c.norm() == 0.0)
    throw std::invalid_argument("halfspace: bad normal");
  return HalfspacePiece{std::move(c), d, std::move(support), std::move(name)};
}

void finalize_ellipsoid(EllipsoidPiece& piece) {
  const Eigen::Index n = static_cast<Eigen::Index>(piece.support.size());
  const Eigen::Index r = piece.sing.size();
  piece.scaled_rows = piece.basis.transpose();
  for (Eigen::Index i = 0; i < r; ++i) piece.scaled_rows.row(i) /= piece.sing[i];
  piece.scaled_mean = piece.scaled_rows * piece.mean_row;

  if (n < 2) {  // no zero-sum movement directions in a one-entry block
    piece.frame.resize(r, 0);
    piece.frame_scale.resize(0);
    piece.movement.resize(n, 0);
    return;
  }
  // orthonormal zero-sum slice, then the SVD of the constraint-sensing map
  const Eigen::MatrixXd slice =
      Eigen::HouseholderQR<Eigen::MatrixXd>(Eigen::MatrixXd::Ones(n, 1)).householderQ() *
      Eigen::MatrixXd::Identity(n, n).rightCols(n - 1);
  const Eigen::MatrixXd w_map = piece.scaled_rows * slice;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(w_map, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double cut =
      1e-12 * (svd.singularValues().size() ? svd.singularValues()[0] : 0.0);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()[i] > cut) ++rank;
  piece.frame = svd.matrixU().leftCols(rank);
  piece.frame_scale = svd.singularValues().head(rank);
  piece.movement = slice * svd.matrixV().leftCols(rank);
}

const std::vector<int>& piece_support(const ConstraintPiece& piece) {
  return std::visit([](const auto& p) -> const std::vector<int>& { return p.support; },
                    piece);
}

const std::string& piece_name(const ConstraintPiece& piece) {
  return std::visit([](const auto& p) -> const std::string& { return p.name; }, piece);
}

namespace {

double ellipsoid_residual_block(const EllipsoidPiece& e, const Eigen::VectorXd& v) {
  const double mass = v.sum();
  if (e.scaled_rows.size() > 0)
    return (e.scaled_rows * v - mass * e.scaled_mean).norm() - mass * e.beta;
  const Eigen::VectorXd q = e.basis.transpose() * (v - mass * e.mean_row);
  double norm2 = 0.0;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    const double t = q[i] / e.sing[i];
    norm2 += t * t;
  }
  return std::sqrt(norm2) - mass * e.beta;
}

double piece_residual_block(const ConstraintPiece& piece, const Eigen::VectorXd& v) {
  if (const auto* hp = std::get_if<HyperplanePiece>(&piece))
    return (hp->a * v - hp->b).cwiseAbs().maxCoeff();
  if (const auto* hs = std::get_if<HalfspacePiece>(&piece)) return hs->c.dot(v) - hs->d;
  return ellipsoid_residual_block(std::get<EllipsoidPiece>(piece), v);
}

}  // namespace

double piece_residual(const ConstraintPiece& piece, const std::vector<double>& x) {
  const std::vector<int>& sup = piece_support(piece);
  Eigen::VectorXd v(static_cast<Eigen::Index>(sup.size()));
  for (std::size_t i = 0; i < sup.size(); ++i) v[static_cast<Eigen::Index>(i)] = x[sup[i]];
  return piece_residual_block(piece, v);
}

Eigen::VectorXd euclid_project_hyperplane(const Eigen::VectorXd& x,
                                          const Eigen::MatrixXd& a,
                                          const Eigen::VectorXd& b) {
  const Eigen::MatrixXd gram = a * a.transpose();
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("euclid_project_hyperplane: rank-deficient rows");
  return x - a.transpose() * llt.solve(a * x - b);
}

Eigen::VectorXd euclid_project_halfspace(const Eigen::VectorXd& x,
                                         const Eigen::VectorXd& c, double d) {
  if (c.norm() == 0.0) throw std::invalid_argument("euclid_project_halfspace: c = 0");
  const double excess = c.dot(x) - d;
  if (excess <= 0.0) return x;
  return x - (excess / c.squaredNorm()) * c;
}

Eigen::VectorXd lin_opt_ellipsoid(const Eigen::MatrixXd& a, const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& c) {
  if (c.norm() == 0.0) throw std::invalid_argument("lin_opt_ellipsoid: c = 0");
  const Eigen::VectorXd ac = a * c;
  const double quad = c.dot(ac);
  if (!(quad > 0.0))
    throw std::invalid_argument("lin_opt_ellipsoid: A not positive definite along c");
  return x + ac / std::sqrt(quad);
}

// ---- block-level projections ---------------------------------------------------

namespace {

// Exact KL projection of y > 0 onto {a^T v = b}: v_i = y_i exp(-mu a_i), mu the
// root of the strictly decreasing g(mu) = sum a_i y_i exp(-mu a_i) - b.
void block_single_row(const Eigen::RowVectorXd& a, double b, Eigen::VectorXd& y) {
  const Eigen::Index n = a.size();

  const double a0 = a[0];
  bool uniform = true;
  for (Eigen::Index i = 1; i < n; ++i)
    if (a[i] != a0) { uniform = false; break; }
  if (uniform) {
    const double total = y.sum();
    if (b == 0.0 || total <= 0.0 || a0 == 0.0) {
      y.setConstant(total > 0.0 || a0 == 0.0 ? 0.0 : std::max(b / (a0 * n), 0.0));
      return;
    }
    y *= b / (a0 * total);
    return;
  }

  // +-p two-block pattern (flow pieces): closed form via the quadratic in
  // x = exp(-mu p):  p Yp x^2 - b x - p Yn = 0
  {
    const double p = std::abs(a0);
    bool two_block = p > 0.0;
    for (Eigen::Index i = 0; i < n && two_block; ++i) two_block = std::abs(a[i]) == p;
    if (two_block) {
      double yp = 0.0, yn = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) (a[i] > 0.0 ? yp : yn) += y[i];
      if (yp > 0.0) {
        const double x = (b + std::sqrt(b * b + 4.0 * p * p * yp * yn)) / (2.0 * p * yp);
        if (x > 0.0) {
          for (Eigen::Index i = 0; i < n; ++i) y[i] *= (a[i] > 0.0 ? x : 1.0 / x);
          return;
        }
      }
      if (b == 0.0) {  // one side empty: the other must vanish
        y.setZero();
        return;
      }
      // remaining sign patterns fall through to the generic root find
    }
  }

  auto eval = [&](double mu, double* deriv) {
    double g = -b, dg = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (a[i] == 0.0 || y[i] == 0.0) continue;
      const double vi = y[i] * safe_exp(-mu * a[i]);
      g += a[i] * vi;
      dg -= a[i] * a[i] * vi;
    }
    if (deriv) *deriv = dg;
    return g;
  };

  double lo = 0.0, hi = 0.0;
  double glo = eval(0.0, nullptr), ghi = glo;
  double step = 1.0;
  while (glo < 0.0 && lo > -kExpClamp) { lo -= step; step *= 2.0; glo = eval(lo, nullptr); }
  step = 1.0;
  while (ghi > 0.0 && hi < kExpClamp) { hi += step; step *= 2.0; ghi = eval(hi, nullptr); }
  if (glo < 0.0 || (ghi > 1e-300 && b != 0.0))
    throw std::domain_error("kl projection: hyperplane unreachable from the positive orthant");

  double mu = 0.5 * (lo + hi);
  for (int it = 0; it < 120; ++it) {
    double dg = 0.0;
    const double g = eval(mu, &dg);
    if (g > 0.0) lo = mu; else hi = mu;
    double next = (dg < 0.0) ? mu - g / dg : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - mu) <= 1e-16 * (1.0 + std::abs(mu))) { mu = next; break; }
    mu = next;
  }
  for (Eigen::Index i = 0; i < n; ++i) y[i] *= safe_exp(-mu * a[i]);
}

double block_objective(const Eigen::VectorXd& v, const Eigen::VectorXd& y,
                       const MirrorMap& map) {
  double f = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double xi = std::max(v[i], 0.0);
    f += (xi > 0.0 ? xi * (map.safe_log(xi) - map.safe_log(y[i])) : 0.0) - xi + y[i];
  }
  return f;
}

// PGD with the closed-form Euclidean sub-projections for affine pieces.
void block_affine_pgd(const ConstraintPiece& piece, Eigen::VectorXd& v,
                      const MirrorMap& map, double inner_tol, int max_iters,
                      ProjectionStats* stats) {
  const Eigen::VectorXd y = v;
  auto project = [&](const Eigen::VectorXd& u) -> Eigen::VectorXd {
    if (const auto* hp = std::get_if<HyperplanePiece>(&piece))
      return euclid_project_hyperplane(u, hp->a, hp->b);
    const auto& hs = std::get<HalfspacePiece>(piece);
    return euclid_project_halfspace(u, hs.c, hs.d);
  };

  v = project(y);
  double f = block_objective(v, y, map);
  double eta = std::max(v.cwiseAbs().maxCoeff(), map.z_min);
  double step_norm = inner_tol + 1.0;
  int it = 0;
  for (; it < max_iters; ++it) {
    Eigen::VectorXd grad(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i)
      grad[i] = map.safe_log(std::max(v[i], 0.0)) - map.safe_log(y[i]);
    bool moved = false;
    for (int bt = 0; bt < 40 && !moved; ++bt) {
      const Eigen::VectorXd cand = project(v - eta * grad);
      const double fc = block_objective(cand, y, map);
      if (fc <= f - 1e-14 * (1.0 + std::abs(f))) {
        step_norm = (cand - v).norm();
        v = cand;
        f = fc;
        eta *= 1.3;
        moved = true;
      } else {
        eta *= 0.5;
      }
    }
    if (!moved || step_norm <= inner_tol) break;
  }
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = std::max(v[i], 0.0);
  if (stats) {
    stats->iterations = it;
    stats->gap = step_norm;
    stats->converged = step_norm <= inner_tol;
  }
}

// Frank-Wolfe information projection onto the occupancy cone piece.
//
// The block mass enters the constraint linearly, so the piece is the cone
// {t u : t >= 0, sum(u) = 1, ||G^+(u - c)|| <= beta}, and for fixed direction
// u the optimal mass has the closed form t = ||y||_1 exp(-KL(u, y/||y||_1)).
// The projection therefore reduces to minimizing KL(u, y/||y||_1) over the
// fixed ellipsoid slice, which Frank-Wolfe handles with the ellipsoid linear
// optimization oracle.  Movement happens inside the slice directions that the
// constraint actually senses; when the feature rank is below the slice
// dimension the result is feasible and its residual is surfaced rather than
// certified optimal.
void block_ellipsoid_fw(const EllipsoidPiece& piece, Eigen::VectorXd& v,
                        const MirrorMap& map, double inner_tol, int max_iters,
                        ProjectionStats* stats) {
  const Eigen::Index n = v.size();
  const double mass_y = v.sum();
  double gap = 0.0;
  int iters = 0;

  if (mass_y <= 0.0) {
    if (stats) { stats->iterations = 0; stats->gap = 0.0; stats->converged = true; }
    return;  // zero block: piece vacuously satisfied
  }
  if (piece.movement.size() == 0) {
    EllipsoidPiece finalized = piece;
    finalize_ellipsoid(finalized);
    block_ellipsoid_fw(finalized, v, map, inner_tol, max_iters, stats);
    return;
  }

  const Eigen::VectorXd u_target = v / mass_y;
  const Eigen::Index m = piece.frame_scale.size();
  Eigen::VectorXd u_best = u_target;

  if (m > 0) {
    const Eigen::VectorXd w0 = piece.scaled_rows * u_target - piece.scaled_mean;
    const Eigen::VectorXd a = piece.frame.transpose() * w0;
    const double off2 = std::max(0.0, w0.squaredNorm() - a.squaredNorm());
    const double rho2 = piece.beta * piece.beta - off2;
    const Eigen::VectorXd center = (-a.array() / piece.frame_scale.array()).matrix();

    if (rho2 <= 0.0) {
      // the reachable part of the constraint cannot absorb the off-range
      // residual; take the norm-minimizing point and surface the rest
      u_best.noalias() = u_target + piece.movement * center;
      for (Eigen::Index i = 0; i < n; ++i) u_best[i] = std::max(u_best[i], 0.0);
    } else {
      Eigen::MatrixXd shape = Eigen::MatrixXd::Zero(m, m);
      for (Eigen::Index i = 0; i < m; ++i)
        shape(i, i) = rho2 / (piece.frame_scale[i] * piece.frame_scale[i]);

      Eigen::VectorXd log_target(n);
      for (Eigen::Index i = 0; i < n; ++i) log_target[i] = map.safe_log(u_target[i]);

      Eigen::VectorXd u(n), full(n), grad(m), dir_block(n);
      auto gradient_at = [&](const Eigen::VectorXd& g, Eigen::VectorXd* out) {
        u.noalias() = u_target + piece.movement * g;
        for (Eigen::Index i = 0; i < n; ++i)
          full[i] = map.safe_log(std::max(u[i], 0.0)) - log_target[i];
        out->noalias() = piece.movement.transpose() * full;
      };
      // directional derivative & curvature along a cached block direction
      Eigen::VectorXd base(n);
      auto dir_deriv = [&](double gamma, double* curv) {
        double d = 0.0, c2 = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          const double ui = base[i] + gamma * dir_block[i];
          d += dir_block[i] * (map.safe_log(std::max(ui, 0.0)) - log_target[i]);
          if (curv) c2 += dir_block[i] * dir_block[i] / std::max(ui, map.z_min);
        }
        if (curv) *curv = c2;
        return d;
      };

      Eigen::VectorXd g = center;  // strictly feasible start
      for (; iters < max_iters; ++iters) {
        gradient_at(g, &grad);
        if (grad.norm() == 0.0) { gap = 0.0; break; }
        // linear minimization oracle: the ellipsoid closed form
        const Eigen::VectorXd vertex = lin_opt_ellipsoid(shape, center, -grad);
        gap = grad.dot(g - vertex);
        if (gap <= inner_tol) break;
        base.noalias() = u_target + piece.movement * g;
        dir_block.noalias() = piece.movement * (vertex - g);
        // exact line search: guarded Newton on the floored directional
        // derivative (the floor repels the iterate from the orthant boundary)
        double gamma = 1.0;
        if (dir_deriv(1.0, nullptr) > 0.0) {
          double lo = 0.0, hi = 1.0;
          gamma = 0.5;
          for (int ls = 0; ls < 30; ++ls) {
            double curv = 0.0;
            const double d = dir_deriv(gamma, &curv);
            (d < 0.0 ? lo : hi) = gamma;
            double next = (curv > 0.0) ? gamma - d / curv : 0.5 * (lo + hi);
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            if (std::abs(next - gamma) <= 1e-12) { gamma = next; break; }
            gamma = next;
          }
        }
        if (gamma <= 0.0) break;
        g += gamma * (vertex - g);
      }
      u_best.noalias() = u_target + piece.movement * g;
      for (Eigen::Index i = 0; i < n; ++i) u_best[i] = std::max(u_best[i], 0.0);
    }
  }

  // closed-form mass for the chosen direction (renormalized so the unit-sum
  // premise of the mass formula holds exactly even after clamping)
  const double u_sum = u_best.sum();
  if (u_sum > 0.0) u_best /= u_sum;
  double kl = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    if (u_best[i] > 0.0)
      kl += u_best[i] * (map.safe_log(u_best[i]) - map.safe_log(u_target[i]));
  v = (mass_y * std::exp(-std::min(kl, kExpClamp))) * u_best;

  if (stats) {
    stats->iterations = iters;
    stats->gap = gap;
    stats->converged = ellipsoid_residual_block(piece, v) <= 10.0 * inner_tol;
  }
}

// Dispatch on the block vector.  Skips work when the piece already holds.
void block_project(const ConstraintPiece& piece, Eigen::VectorXd& v, const MirrorMap& map,
                   double inner_tol, int max_iters, ProjectionStats* stats) {
  if (stats) *stats = ProjectionStats{};
  if (const auto* hp = std::get_if<HyperplanePiece>(&piece)) {
    if ((hp->a * v - hp->b).cwiseAbs().maxCoeff() <= 1e-15) return;
    if (hp->a.rows() == 1) {
      block_single_row(hp->a.row(0), hp->b[0], v);
    } else {
      block_affine_pgd(piece, v, map, inner_tol, max_iters, stats);
    }
    return;
  }
  if (const auto* hs = std::get_if<HalfspacePiece>(&piece)) {
    if (hs->c.dot(v) - hs->d <= 0.0) return;
    // active halfspace: KL projection lands on the boundary hyperplane
    block_single_row(hs->c.transpose(), hs->d, v);
    return;
  }
  const auto& e = std::get<EllipsoidPiece>(piece);
  if (ellipsoid_residual_block(e, v) <= 0.0) return;
  block_ellipsoid_fw(e, v, map, inner_tol, max_iters, stats);
}

}  // namespace

std::vector<double> kl_project_piece(const ConstraintPiece& piece,
                                     std::vector<double> target, const MirrorMap& map,
                                     double inner_tol, int max_iters,
                                     ProjectionStats* stats) {
  const std::vector<int>& sup = piece_support(piece);
  Eigen::VectorXd v(static_cast<Eigen::Index>(sup.size()));
  for (std::size_t i = 0; i < sup.size(); ++i) v[static_cast<Eigen::Index>(i)] = target[sup[i]];
  block_project(piece, v, map, inner_tol, max_iters, stats);
  for (std::size_t i = 0; i < sup.size(); ++i) target[sup[i]] = v[static_cast<Eigen::Index>(i)];
  return target;
}

std::vector<double> kl_project_single_row(const HyperplanePiece& piece,
                                          std::vector<double> target,
                                          const MirrorMap& map) {
  (void)map;
  if (piece.a.rows() != 1)
    throw std::invalid_argument("kl_project_single_row: needs a single row");
  Eigen::VectorXd v(static_cast<Eigen::Index>(piece.support.size()));
  for (std::size_t i = 0; i < piece.support.size(); ++i)
    v[static_cast<Eigen::Index>(i)] = target[piece.support[i]];
  block_single_row(piece.a.row(0), piece.b[0], v);
  for (std::size_t i = 0; i < piece.support.size(); ++i)
    target[piece.support[i]] = v[static_cast<Eigen::Index>(i)];
  return target;
}

DykstraResult dykstra(const std::vector<ConstraintPiece>& pieces,
                      std::vector<double> start, const MirrorMap& map, double eps,
                      int max_sweeps, double inner_tol) {
  if (pieces.empty()) throw std::invalid_argument("dykstra: no pieces");
  for (double v : start)
    if (!(v >= 0.0)) throw std::invalid_argument("dykstra: start must be nonnegative");

  const std::size_t n_pieces = pieces.size();
  // corrections kept multiplicatively: factor[i] = exp(q[i])
  std::vector<std::vector<double>> corrections(n_pieces);
  for (std::size_t p = 0; p < n_pieces; ++p)
    corrections[p].assign(piece_support(pieces[p]).size(), 1.0);
  constexpr double kFactorCap = 1e290;

  DykstraResult out;
  std::vector<double>& x = start;
  std::vector<double> prev_sweep = x;
  Eigen::VectorXd block, y, projected;

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    for (std::size_t p = 0; p < n_pieces; ++p) {
      const std::vector<int>& sup = piece_support(pieces[p]);
      std::vector<double>& factor = corrections[p];

      bool unit_correction = true;
      for (double c : factor)
        if (c != 1.0) { unit_correction = false; break; }

      block.resize(static_cast<Eigen::Index>(sup.size()));
      for (std::size_t i = 0; i < sup.size(); ++i)
        block[static_cast<Eigen::Index>(i)] = x[sup[i]];

      if (unit_correction) {
        // satisfied piece with no correction memory: projection is the identity
        const double res = piece_residual_block(pieces[p], block);
        const bool equality = std::holds_alternative<HyperplanePiece>(pieces[p]);
        if (equality ? res <= 1e-15 : res <= 0.0) continue;
      }

      // y = grad Phi^* ( grad Phi(x) + q ) = x * exp(q), with the floor inside
      // the log only (identity on unit corrections so zeros stay exact)
      y.resize(block.size());
      for (Eigen::Index i = 0; i < block.size(); ++i) {
        const double f = factor[static_cast<std::size_t>(i)];
        y[i] = (f == 1.0) ? block[i] : std::max(block[i], map.z_min) * f;
      }

      projected = y;
      block_project(pieces[p], projected, map, inner_tol, 100, nullptr);

      for (Eigen::Index i = 0; i < block.size(); ++i) {
        const double f = factor[static_cast<std::size_t>(i)];
        const double numer = (f == 1.0) ? block[i] : std::max(block[i], map.z_min) * f;
        const double next = numer / std::max(projected[i], map.z_min);
        factor[static_cast<std::size_t>(i)] = std::min(next, kFactorCap);
        x[sup[static_cast<std::size_t>(i)]] = projected[i];
      }
    }

    double tv = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) tv += std::abs(x[i] - prev_sweep[i]);
    tv *= 0.5;
    out.sweeps = sweep + 1;
    out.last_step_tv = tv;
    if (tv <= eps) { out.converged = true; break; }
    prev_sweep = x;
  }

  for (const auto& piece : pieces)
    out.max_residual = std::max(out.max_residual, piece_residual(piece, x));
  out.point = std::move(x);
  return out;
}

}  // namespace omps
