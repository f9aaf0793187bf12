#pragma once

#include <cstdint>
#include <vector>

#include "omps/estimator.hpp"
#include "omps/mdp.hpp"
#include "omps/projection.hpp"

namespace omps {

/// Structural support of occupancy measures for a model class: entries
/// (h,s,a,s') with phi(s'|s,a) == 0 are zero under every admissible parameter,
/// and states unreachable from the initial state within h steps carry no
/// mass.  Everything outside the mask is pinned to exact zero and excluded
/// from all constraint pieces.
struct ActiveSupport {
  int horizon = 0, num_states = 0, num_actions = 0;
  std::vector<std::uint8_t> entry;   // H*S*A*S
  std::vector<std::uint8_t> state;   // H*S reachable flags

  std::size_t entry_index(int h, int s, int a, int sp) const {
    return ((static_cast<std::size_t>(h) * num_states + s) * num_actions + a) *
               num_states + sp;
  }
  bool active(int h, int s, int a, int sp) const { return entry[entry_index(h, s, a, sp)] != 0; }
  bool reachable(int h, int s) const { return state[static_cast<std::size_t>(h) * num_states + s] != 0; }

  static ActiveSupport compute(const LinearMixtureModel& model);
};

/// Episode feasible set: affine pieces (per-stage normalization, flow,
/// initial-state) plus one ellipsoid piece per reachable (s,a,h).  A zero
/// confidence radius turns the ellipsoid pieces into the equivalent
/// hyperplane pieces (induced rows pinned to the center kernel).
struct FeasibleSet {
  int horizon = 0, num_states = 0, num_actions = 0;
  const ActiveSupport* support = nullptr;
  std::vector<ConstraintPiece> pieces;
  int num_ellipsoid_pieces = 0;

  double membership_residual(const OccupancyMeasure& z) const;
};

FeasibleSet build_feasible_set(const LinearMixtureModel& model, const ActiveSupport& support,
                               const ConfidenceSet& confidence,
                               double sv_threshold_rel = 1e-10);

/// w_h(s,a,s') = z_h(s,a,s') exp(alpha r(s,a)).
OccupancyMeasure exp_reward_step(const OccupancyMeasure& z, const RewardFunction& reward,
                                 double alpha);

double bregman_divergence(const OccupancyMeasure& x, const OccupancyMeasure& y,
                          const MirrorMap& map);

/// Uniform occupancy over active entries, per stage.
OccupancyMeasure uniform_occupancy(const ActiveSupport& support);

/// Uniform occupancy projected once onto the affine pieces so episode 1
/// starts flow-feasible.
OccupancyMeasure initial_occupancy(const ActiveSupport& support, const MirrorMap& map,
                                   double tol, int max_sweeps);

struct OmdResult {
  OccupancyMeasure z;
  int sweeps = 0;
  double residual = 0.0;
  double step_tv = 0.0;
  bool converged = false;
};

/// One mirror-descent update: exponentiated-reward step on the previous
/// iterate, Bregman projection onto the feasible set via Dykstra, per-stage
/// renormalization of the result.  Reports convergence data instead of
/// throwing on sweep exhaustion.
OmdResult omd_update(const OccupancyMeasure& z_prev, const RewardFunction& r_prev,
                     double alpha, const FeasibleSet& set, const MirrorMap& map,
                     double tol, int max_sweeps);

struct PolicyExtraction {
  StochasticPolicy policy;
  std::vector<std::pair<int, int>> flagged;  // zero-mass (h,s), uniform rows
};

PolicyExtraction extract_policy(const OccupancyMeasure& z, double mass_floor = 1e-15);

}  // namespace omps
