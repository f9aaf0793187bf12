#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <variant>
#include <vector>

namespace omps {

/// Entropic mirror map Phi(z) = sum z (log z - 1).  The floor applies inside
/// logarithms only; stored values may be exactly zero.
struct MirrorMap {
  double z_min = 1e-12;

  double safe_log(double x) const { return std::log(x < z_min ? z_min : x); }
};

/// Unnormalized-KL Bregman divergence sum x log(x/y) - x + y over a flat pair.
double bregman_divergence(const std::vector<double>& x, const std::vector<double>& y,
                          const MirrorMap& map);

// ---- Constraint pieces -------------------------------------------------------
//
// Pieces act on a flat nonnegative vector through an explicit support index
// list; coordinates outside the support are never read or written.

struct HyperplanePiece {
  Eigen::MatrixXd a;        // rows x |support|, validated full row rank
  Eigen::VectorXd b;
  std::vector<int> support;
  std::string name;
};

struct HalfspacePiece {
  Eigen::VectorXd c;        // |support|, nonzero
  double d = 0.0;
  std::vector<int> support;
  std::string name;
};

/// Occupancy ellipsoid on one (s,a,h) block:
///   || diag(1/sing) U^T (v - ||v||_1 mean_row) ||_2 <= ||v||_1 * beta,
/// the SVD form of the pseudo-inverse constraint with U, sing from
/// B_{s,a} Sigma^{-1/2}.  Vacuous when the block mass is zero.
struct EllipsoidPiece {
  Eigen::MatrixXd basis;    // U, |support| x r
  Eigen::VectorXd sing;     // r singular values above threshold
  Eigen::VectorXd mean_row; // B theta_hat restricted to support
  double beta = 0.0;
  int s = -1, a = -1, h = -1;
  std::vector<int> support;
  std::string name;

  // projection cache, filled by finalize_ellipsoid (geometry-only, shared by
  // every projection call onto this piece)
  Eigen::MatrixXd scaled_rows;  // diag(1/sing) U^T, r x |support|
  Eigen::VectorXd scaled_mean;  // scaled_rows * mean_row
  Eigen::MatrixXd frame;        // r x m orthonormal, constraint-sensing frame
  Eigen::VectorXd frame_scale;  // m singular values of the slice map
  Eigen::MatrixXd movement;     // |support| x m zero-sum movement directions
};

/// Precomputes the slice geometry used by the Frank-Wolfe sub-projection.
void finalize_ellipsoid(EllipsoidPiece& piece);

using ConstraintPiece = std::variant<HyperplanePiece, HalfspacePiece, EllipsoidPiece>;

HyperplanePiece make_hyperplane(Eigen::MatrixXd a, Eigen::VectorXd b,
                                std::vector<int> support, std::string name);
HalfspacePiece make_halfspace(Eigen::VectorXd c, double d, std::vector<int> support,
                              std::string name);

const std::vector<int>& piece_support(const ConstraintPiece& piece);
const std::string& piece_name(const ConstraintPiece& piece);

/// Signed violation of the piece at x (<= 0 means satisfied):
/// hyperplane: max_i |A x - b|_i; halfspace: c^T x - d; ellipsoid: the norm
/// residual above.
double piece_residual(const ConstraintPiece& piece, const std::vector<double>& x);

// ---- Closed-form Euclidean projections (hyperplane / halfspace) -------------

Eigen::VectorXd euclid_project_hyperplane(const Eigen::VectorXd& x,
                                          const Eigen::MatrixXd& a,
                                          const Eigen::VectorXd& b);

Eigen::VectorXd euclid_project_halfspace(const Eigen::VectorXd& x,
                                         const Eigen::VectorXd& c, double d);

/// argmax c^T y over the ellipsoid ||y - x||_{A^{-1}} <= 1 with A SPD:
/// y = x + A c / sqrt(c^T A c).
Eigen::VectorXd lin_opt_ellipsoid(const Eigen::MatrixXd& a, const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& c);

// ---- Single-piece Bregman (information) projections --------------------------

struct ProjectionStats {
  int iterations = 0;
  double gap = 0.0;         // duality gap / step norm at exit
  bool converged = true;
};

/// Approximate Bregman projection of `target` onto one piece under the
/// entropic map: projected gradient descent with the closed-form Euclidean
/// sub-projections for affine pieces, Frank-Wolfe with the ellipsoid linear
/// optimization oracle for ellipsoid pieces.  Touches support coordinates
/// only.
std::vector<double> kl_project_piece(const ConstraintPiece& piece,
                                     std::vector<double> target, const MirrorMap& map,
                                     double inner_tol, int max_iters = 400,
                                     ProjectionStats* stats = nullptr);

/// Exact KL projection onto a single-row hyperplane (dual 1-d root find);
/// used as the fast path inside dykstra and as a cross-check for the PGD
/// path.  Requires a single-row piece.
std::vector<double> kl_project_single_row(const HyperplanePiece& piece,
                                          std::vector<double> target,
                                          const MirrorMap& map);

// ---- Dykstra ------------------------------------------------------------------

struct DykstraResult {
  std::vector<double> point;
  int sweeps = 0;
  double last_step_tv = 0.0;   // TV distance between the final two sweep iterates
  double max_residual = 0.0;   // max piece residual at the returned point
  bool converged = false;
};

/// Dykstra's algorithm with Bregman projections over the pieces, cyclic order
/// as given, dual corrections per piece, stopping when one full sweep moves
/// the iterate by at most eps in total-variation distance.  On sweep
/// exhaustion the best iterate(last) is returned with converged = false.
DykstraResult dykstra(const std::vector<ConstraintPiece>& pieces,
                      std::vector<double> start, const MirrorMap& map, double eps,
                      int max_sweeps, double inner_tol = 1e-11);

}  // namespace omps
