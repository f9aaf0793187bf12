#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace omps {

/// Episodic homogeneous MDP whose transition kernel is a linear combination
/// of d known base kernels: P(s'|s,a) = <phi(s'|s,a), theta>.
///
/// The convention throughout is that episodes start from state 0.
struct LinearMixtureModel {
  int num_states = 0;
  int num_actions = 0;
  int horizon = 0;
  int dim = 0;
  double norm_bound = 0.0;  // B, upper bound on ||theta||_2

  // feature_rows[s * num_actions + a] is the S x d matrix whose s'-th row is
  // phi(s'|s,a)^T (the matrix B_{s,a} used by the occupancy constraints).
  std::vector<Eigen::MatrixXd> feature_rows;

  // Hidden parameter. Evaluation/verification code only; learners must not
  // read it (they receive features and trajectories).
  Eigen::VectorXd theta_star;

  // Dense kernel, row s * num_actions + a holds P(.|s,a).
  Eigen::MatrixXd kernel;

  static constexpr int initial_state = 0;

  const Eigen::MatrixXd& features(int s, int a) const {
    return feature_rows[static_cast<std::size_t>(s) * num_actions + a];
  }
  void rebuild_kernel();
};

/// JSON round trip for fixture reuse (dimensions, features in (s',s,a,i)
/// row-major order, theta, B).  Implemented in mdp.cpp.
std::string model_to_json_string(const LinearMixtureModel& model);
LinearMixtureModel model_from_json_string(const std::string& text);

/// Checks the three structural invariants: rows are distributions, theta is
/// inside the norm ball, and ||phi_V|| <= 1 for V in [0,1]^S (probed on the
/// constant, indicator and `num_random_probes` random value vectors).
/// Throws std::runtime_error describing the first violation.
void validate_model(const LinearMixtureModel& model, int num_random_probes,
                    std::uint64_t seed);

struct RewardFunction {
  Eigen::MatrixXd values;  // S x A

  double operator()(int s, int a) const { return values(s, a); }
};

/// Entries must lie in [0, 1/H].
void validate_reward(const RewardFunction& reward, int horizon, double slack = 1e-12);

struct StochasticPolicy {
  std::vector<Eigen::MatrixXd> probs;  // per stage h, S x A row-stochastic

  int horizon() const { return static_cast<int>(probs.size()); }
};

StochasticPolicy uniform_policy(int num_states, int num_actions, int horizon);
void validate_policy(const StochasticPolicy& policy, double tol = 1e-12);

/// Stage-indexed occupancy z_h(s,a,s'), stored flat.
struct OccupancyMeasure {
  int horizon = 0;
  int num_states = 0;
  int num_actions = 0;
  std::vector<double> z;

  OccupancyMeasure() = default;
  OccupancyMeasure(int H, int S, int A)
      : horizon(H), num_states(S), num_actions(A),
        z(static_cast<std::size_t>(H) * S * A * S, 0.0) {}

  std::size_t index(int h, int s, int a, int sp) const {
    return ((static_cast<std::size_t>(h) * num_states + s) * num_actions + a) *
               num_states + sp;
  }
  double& at(int h, int s, int a, int sp) { return z[index(h, s, a, sp)]; }
  double at(int h, int s, int a, int sp) const { return z[index(h, s, a, sp)]; }

  double stage_sum(int h) const;
};

/// Max violations of the three occupancy constraints (normalization, flow,
/// initial-state support), all as absolute residuals.
struct OccupancyResidual {
  double normalization = 0.0;
  double flow = 0.0;
  double initial = 0.0;
  double max() const;
};
OccupancyResidual occupancy_residual(const OccupancyMeasure& z, int initial_state = 0);

struct Trajectory {
  std::vector<int> states;    // s_1..s_{H+1}
  std::vector<int> actions;   // a_1..a_H
  std::vector<double> rewards;
};

// ---- Operations ------------------------------------------------------------

/// phi_V(s,a) = sum_{s'} phi(s'|s,a) V(s').
Eigen::VectorXd phi_v(const LinearMixtureModel& model, const Eigen::VectorXd& value,
                      int s, int a);

/// P(.|s,a) as inner products with theta_star.
Eigen::VectorXd transition_probs(const LinearMixtureModel& model, int s, int a);

Trajectory sample_episode(const LinearMixtureModel& model, const StochasticPolicy& policy,
                          const RewardFunction& reward, std::uint64_t seed);

struct ValueTables {
  Eigen::MatrixXd v;                  // (H+1) x S, row H is zero
  std::vector<Eigen::MatrixXd> q;     // H entries, each S x A
};

/// Exact backward DP: Q_h = r + P V_{h+1}, V_h = E_{a~pi_h} Q_h.
ValueTables policy_value(const LinearMixtureModel& model, const StochasticPolicy& policy,
                         const RewardFunction& reward);

/// [P V^2](s,a) - ([P V](s,a))^2, clamped at 0 against roundoff.
double conditional_variance(const LinearMixtureModel& model, const Eigen::VectorXd& value,
                            int s, int a);

struct InducedDecomposition {
  StochasticPolicy policy;
  std::vector<Eigen::MatrixXd> stage_kernels;    // per h, (S*A) x S
  std::vector<std::pair<int, int>> flagged_states;          // (h,s) below floor
  std::vector<std::array<int, 3>> flagged_rows;             // (h,s,a) below floor
};

/// Policy and per-stage transition induced by an occupancy measure.
/// Rows with visit mass below `mass_floor` default to uniform and are flagged.
InducedDecomposition occupancy_to_policy_and_transition(const OccupancyMeasure& z,
                                                        double mass_floor = 1e-15);

OccupancyMeasure occupancy_of_policy(const LinearMixtureModel& model,
                                     const StochasticPolicy& policy);

/// Same forward recursion under explicit per-stage kernels ((S*A) x S each).
OccupancyMeasure occupancy_of_policy_kernels(const std::vector<Eigen::MatrixXd>& stage_kernels,
                                             const StochasticPolicy& policy,
                                             int num_states, int num_actions,
                                             int initial_state = 0);

/// <z, r> = sum_{h,s,a,s'} z_h(s,a,s') r(s,a).
double occupancy_value(const OccupancyMeasure& z, const RewardFunction& reward);

struct HindsightResult {
  StochasticPolicy policy;   // deterministic, ties to the lowest action index
  double total_value = 0.0;  // sum over episodes of V^pi_{k,1}(s_1)
};

/// Best fixed policy in hindsight for a reward sequence, by DP on the summed
/// reward (optimal for the sum iff optimal as a fixed comparator).
HindsightResult best_hindsight_policy(const LinearMixtureModel& model,
                                      const std::vector<RewardFunction>& rewards);

}  // namespace omps
