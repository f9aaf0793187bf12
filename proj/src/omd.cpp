#include "omps/omd.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <stdexcept>

namespace omps {

ActiveSupport ActiveSupport::compute(const LinearMixtureModel& model) {
  const int H = model.horizon, S = model.num_states, A = model.num_actions;
  ActiveSupport sup;
  sup.horizon = H; sup.num_states = S; sup.num_actions = A;
  sup.entry.assign(static_cast<std::size_t>(H) * S * A * S, 0);
  sup.state.assign(static_cast<std::size_t>(H) * S, 0);

  // phi(s'|s,a) == 0 forces a structural zero for every theta
  std::vector<std::uint8_t> edge(static_cast<std::size_t>(S) * A * S, 0);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) {
      const Eigen::MatrixXd& f = model.features(s, a);
      for (int sp = 0; sp < S; ++sp)
        edge[(static_cast<std::size_t>(s) * A + a) * S + sp] =
            (f.row(sp).norm() > 0.0) ? 1 : 0;
    }

  std::vector<std::uint8_t> reach(S, 0);
  reach[LinearMixtureModel::initial_state] = 1;
  for (int h = 0; h < H; ++h) {
    std::vector<std::uint8_t> next(S, 0);
    for (int s = 0; s < S; ++s) {
      if (!reach[s]) continue;
      sup.state[static_cast<std::size_t>(h) * S + s] = 1;
      for (int a = 0; a < A; ++a)
        for (int sp = 0; sp < S; ++sp)
          if (edge[(static_cast<std::size_t>(s) * A + a) * S + sp]) {
            sup.entry[sup.entry_index(h, s, a, sp)] = 1;
            next[sp] = 1;
          }
    }
    reach = next;
  }
  return sup;
}

double FeasibleSet::membership_residual(const OccupancyMeasure& z) const {
  double worst = 0.0;
  for (const auto& piece : pieces)
    worst = std::max(worst, piece_residual(piece, z.z));
  return worst;
}

namespace {

std::vector<ConstraintPiece> affine_pieces(const ActiveSupport& sup) {
  const int H = sup.horizon, S = sup.num_states, A = sup.num_actions;
  std::vector<ConstraintPiece> pieces;

  // per-stage normalization
  for (int h = 0; h < H; ++h) {
    std::vector<int> idx;
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a)
        for (int sp = 0; sp < S; ++sp)
          if (sup.active(h, s, a, sp))
            idx.push_back(static_cast<int>(sup.entry_index(h, s, a, sp)));
    Eigen::MatrixXd a_mat = Eigen::MatrixXd::Ones(1, static_cast<Eigen::Index>(idx.size()));
    pieces.push_back(make_hyperplane(std::move(a_mat), Eigen::VectorXd::Ones(1),
                                     std::move(idx), "norm_h" + std::to_string(h)));
  }

  // initial-state mass (only the initial state is in the mask at h = 0, so a
  // single piece pinning its block to 1; the normalization piece for h = 0 is
  // the same set and is kept for the fixed cycle order)
  {
    std::vector<int> idx;
    const int s1 = LinearMixtureModel::initial_state;
    for (int a = 0; a < A; ++a)
      for (int sp = 0; sp < S; ++sp)
        if (sup.active(0, s1, a, sp))
          idx.push_back(static_cast<int>(sup.entry_index(0, s1, a, sp)));
    Eigen::MatrixXd a_mat = Eigen::MatrixXd::Ones(1, static_cast<Eigen::Index>(idx.size()));
    pieces.push_back(make_hyperplane(std::move(a_mat), Eigen::VectorXd::Ones(1),
                                     std::move(idx), "init_state"));
  }

  // flow conservation for h in [1:H-1] (0-based), one piece per reachable state
  for (int h = 1; h < H; ++h)
    for (int s = 0; s < S; ++s) {
      if (!sup.reachable(h, s)) continue;
      std::vector<int> idx;
      std::vector<double> coef;
      for (int a = 0; a < A; ++a)
        for (int sp = 0; sp < S; ++sp)
          if (sup.active(h, s, a, sp)) {
            idx.push_back(static_cast<int>(sup.entry_index(h, s, a, sp)));
            coef.push_back(1.0);
          }
      for (int x = 0; x < S; ++x)
        for (int a = 0; a < A; ++a)
          if (sup.active(h - 1, x, a, s)) {
            idx.push_back(static_cast<int>(sup.entry_index(h - 1, x, a, s)));
            coef.push_back(-1.0);
          }
      if (idx.empty()) continue;
      Eigen::MatrixXd a_mat(1, static_cast<Eigen::Index>(idx.size()));
      for (std::size_t i = 0; i < coef.size(); ++i) a_mat(0, static_cast<Eigen::Index>(i)) = coef[i];
      pieces.push_back(make_hyperplane(std::move(a_mat), Eigen::VectorXd::Zero(1),
                                       std::move(idx),
                                       "flow_h" + std::to_string(h) + "_s" + std::to_string(s)));
    }
  return pieces;
}

}  // namespace

FeasibleSet build_feasible_set(const LinearMixtureModel& model, const ActiveSupport& support,
                               const ConfidenceSet& confidence, double sv_threshold_rel) {
  const int H = model.horizon, S = model.num_states, A = model.num_actions;
  FeasibleSet set;
  set.horizon = H; set.num_states = S; set.num_actions = A;
  set.support = &support;
  set.pieces = affine_pieces(support);

  // Sigma^{-1/2} once per episode
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(confidence.shape);
  if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0)
    throw std::invalid_argument("build_feasible_set: covariance not SPD");
  const Eigen::MatrixXd inv_sqrt =
      es.eigenvectors() *
      es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
      es.eigenvectors().transpose();

  // one SVD per (s,a), shared across stages
  struct PerRow {
    EllipsoidPiece proto;    // finalized prototype; per-stage copies fill support
    std::vector<int> next;   // active s' list
    bool degenerate = false;
  };
  std::vector<PerRow> rows(static_cast<std::size_t>(S) * A);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) {
      PerRow& pr = rows[static_cast<std::size_t>(s) * A + a];
      for (int sp = 0; sp < S; ++sp) {
        // the s' mask is stage-independent: phi support
        if (model.features(s, a).row(sp).norm() > 0.0) pr.next.push_back(sp);
      }
      if (pr.next.empty()) { pr.degenerate = true; continue; }
      Eigen::MatrixXd b_active(static_cast<Eigen::Index>(pr.next.size()), model.dim);
      for (std::size_t i = 0; i < pr.next.size(); ++i)
        b_active.row(static_cast<Eigen::Index>(i)) = model.features(s, a).row(pr.next[i]);
      const Eigen::MatrixXd g = b_active * inv_sqrt;
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(g, Eigen::ComputeThinU);
      const double cutoff = sv_threshold_rel * svd.singularValues().maxCoeff();
      int rank = 0;
      for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()[i] > cutoff) ++rank;
      if (rank == 0) { pr.degenerate = true; continue; }
      pr.proto.basis = svd.matrixU().leftCols(rank);
      pr.proto.sing = svd.singularValues().head(rank);
      pr.proto.mean_row = b_active * confidence.center;
      pr.proto.beta = confidence.radius;
      pr.proto.s = s;
      pr.proto.a = a;
      pr.proto.support.assign(pr.next.size(), 0);
      if (confidence.radius > 0.0) finalize_ellipsoid(pr.proto);
    }

  for (int h = 0; h < H; ++h)
    for (int s = 0; s < S; ++s) {
      if (!support.reachable(h, s)) continue;
      for (int a = 0; a < A; ++a) {
        const PerRow& pr = rows[static_cast<std::size_t>(s) * A + a];
        if (pr.degenerate)
          throw std::runtime_error("build_feasible_set: all-zero feature rows at (s,a)=(" +
                                   std::to_string(s) + "," + std::to_string(a) + ")");
        std::vector<int> idx;
        idx.reserve(pr.next.size());
        for (int sp : pr.next)
          idx.push_back(static_cast<int>(support.entry_index(h, s, a, sp)));
        const std::string name = "ell_h" + std::to_string(h) + "_s" + std::to_string(s) +
                                 "_a" + std::to_string(a);
        if (confidence.radius <= 0.0) {
          // zero radius: induced row pinned to the center kernel, which in the
          // singular coordinates is the hyperplane U^T v = (U^T mean) 1^T v
          const Eigen::Index n = static_cast<Eigen::Index>(idx.size());
          Eigen::MatrixXd a_mat = pr.proto.basis.transpose() -
                                  (pr.proto.basis.transpose() * pr.proto.mean_row) *
                                      Eigen::RowVectorXd::Ones(n);
          // drop numerically-zero rows (one-hot deterministic rows)
          std::vector<Eigen::Index> keep;
          for (Eigen::Index rr = 0; rr < a_mat.rows(); ++rr)
            if (a_mat.row(rr).norm() > 1e-14) keep.push_back(rr);
          if (keep.empty()) continue;
          Eigen::MatrixXd a_keep(static_cast<Eigen::Index>(keep.size()), n);
          for (std::size_t rr = 0; rr < keep.size(); ++rr)
            a_keep.row(static_cast<Eigen::Index>(rr)) = a_mat.row(keep[rr]);
          // rows can be dependent after the zero-row drop; orthonormalize
          Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a_keep.transpose());
          const Eigen::Index rk = qr.rank();
          Eigen::MatrixXd qmat = qr.householderQ() * Eigen::MatrixXd::Identity(n, rk);
          set.pieces.push_back(make_hyperplane(qmat.transpose(), Eigen::VectorXd::Zero(rk),
                                               std::move(idx), name));
        } else {
          EllipsoidPiece e = pr.proto;
          e.h = h;
          e.name = name;
          e.support = std::move(idx);
          set.pieces.emplace_back(std::move(e));
          ++set.num_ellipsoid_pieces;
        }
      }
    }
  return set;
}

OccupancyMeasure exp_reward_step(const OccupancyMeasure& z, const RewardFunction& reward,
                                 double alpha) {
  OccupancyMeasure w = z;
  const int H = z.horizon, S = z.num_states, A = z.num_actions;
  for (int h = 0; h < H; ++h)
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) {
        const double f = std::exp(alpha * reward(s, a));
        for (int sp = 0; sp < S; ++sp) w.at(h, s, a, sp) *= f;
      }
  return w;
}

double bregman_divergence(const OccupancyMeasure& x, const OccupancyMeasure& y,
                          const MirrorMap& map) {
  return bregman_divergence(x.z, y.z, map);
}

OccupancyMeasure uniform_occupancy(const ActiveSupport& sup) {
  const int H = sup.horizon, S = sup.num_states, A = sup.num_actions;
  OccupancyMeasure z(H, S, A);
  for (int h = 0; h < H; ++h) {
    std::size_t count = 0;
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a)
        for (int sp = 0; sp < S; ++sp)
          if (sup.active(h, s, a, sp)) ++count;
    const double mass = 1.0 / static_cast<double>(count);
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a)
        for (int sp = 0; sp < S; ++sp)
          if (sup.active(h, s, a, sp)) z.at(h, s, a, sp) = mass;
  }
  return z;
}

OccupancyMeasure initial_occupancy(const ActiveSupport& sup, const MirrorMap& map,
                                   double tol, int max_sweeps) {
  OccupancyMeasure z = uniform_occupancy(sup);
  auto pieces = affine_pieces(sup);
  DykstraResult res = dykstra(pieces, z.z, map, tol, max_sweeps);
  z.z = std::move(res.point);
  return z;
}

OmdResult omd_update(const OccupancyMeasure& z_prev, const RewardFunction& r_prev,
                     double alpha, const FeasibleSet& set, const MirrorMap& map,
                     double tol, int max_sweeps) {
  if (alpha < 0.0) throw std::invalid_argument("omd_update: alpha must be >= 0");
  OccupancyMeasure w = exp_reward_step(z_prev, r_prev, alpha);
  const double inner_tol = std::max(1e-12, 1e-3 * tol);
  DykstraResult res = dykstra(set.pieces, std::move(w.z), map, tol, max_sweeps, inner_tol);

  OmdResult out;
  out.z = OccupancyMeasure(z_prev.horizon, z_prev.num_states, z_prev.num_actions);
  out.z.z = std::move(res.point);
  out.sweeps = res.sweeps;
  out.step_tv = res.last_step_tv;
  out.converged = res.converged;

  // renormalize each stage exactly
  const int H = out.z.horizon;
  const std::size_t stage = out.z.z.size() / static_cast<std::size_t>(H);
  for (int h = 0; h < H; ++h) {
    double total = 0.0;
    for (std::size_t i = stage * h; i < stage * (h + 1); ++i) total += out.z.z[i];
    if (total > 0.0)
      for (std::size_t i = stage * h; i < stage * (h + 1); ++i) out.z.z[i] /= total;
  }
  out.residual = set.membership_residual(out.z);
  return out;
}

PolicyExtraction extract_policy(const OccupancyMeasure& z, double mass_floor) {
  const int H = z.horizon, S = z.num_states, A = z.num_actions;
  PolicyExtraction out;
  out.policy.probs.assign(H, Eigen::MatrixXd::Zero(S, A));
  for (int h = 0; h < H; ++h)
    for (int s = 0; s < S; ++s) {
      double state_mass = 0.0;
      Eigen::VectorXd action_mass = Eigen::VectorXd::Zero(A);
      for (int a = 0; a < A; ++a) {
        for (int sp = 0; sp < S; ++sp) action_mass[a] += z.at(h, s, a, sp);
        state_mass += action_mass[a];
      }
      if (state_mass < mass_floor) {
        out.policy.probs[h].row(s).setConstant(1.0 / A);
        out.flagged.emplace_back(h, s);
      } else {
        out.policy.probs[h].row(s) = (action_mass / state_mass).transpose();
      }
    }
  return out;
}

}  // namespace omps
