#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "omps/mdp.hpp"

namespace omps {

/// Random mixture of d Dirichlet base kernels with the 1/sqrt(d) feature
/// scaling, so that both norm requirements hold by construction.  Throws if
/// the requested B cannot accommodate sqrt(d) * ||w||_2 for the drawn simplex
/// weight w.
LinearMixtureModel make_basis_mixture(int num_states, int num_actions, int horizon,
                                      int dim, double norm_bound, std::uint64_t seed);

/// Complete |A|-way tree of the given depth, deterministic one-hot rows,
/// d = 1, theta = 1.  Leaves absorb to themselves.  horizon = depth.
LinearMixtureModel make_tree_mdp(int num_actions, int tree_depth);

// Tree indexing helpers (layers are 1-based; layer l holds A^(l-1) nodes).
long long tree_num_states(int num_actions, int tree_depth);
int tree_layer_offset(int num_actions, int layer);
int tree_layer_of(int num_actions, int state);
/// Global index of the child reached from `state` with action a; `state`
/// must not be a leaf of a depth-`tree_depth` tree.
int tree_child(int num_actions, int state, int action);

enum class AdversaryKind { kFixed, kIidExpertRademacher, kObliviousSequence, kDegenerateFixed };

std::string to_string(AdversaryKind kind);
AdversaryKind adversary_kind_from_string(const std::string& name);

/// Oblivious reward schedule.  All rewards are pre-drawn from the seed at
/// construction; the commit/reveal API enforces that episode k's reward
/// becomes visible only after its trajectory was committed.
class AdversarySchedule {
 public:
  AdversarySchedule(AdversaryKind kind, std::vector<RewardFunction> rewards,
                    std::uint64_t seed);

  int num_episodes() const { return static_cast<int>(rewards_.size()); }
  AdversaryKind kind() const { return kind_; }
  std::uint64_t seed() const { return seed_; }

  void commit_trajectory(int k, const Trajectory& traj);
  /// Reward of episode k; throws unless commit_trajectory(k) already happened.
  const RewardFunction& reveal(int k) const;

  /// Evaluation-side access for comparator computation (bypasses the gate;
  /// never handed to learners).
  const std::vector<RewardFunction>& all_rewards() const { return rewards_; }

  std::string to_json_string() const;

 private:
  AdversaryKind kind_;
  std::vector<RewardFunction> rewards_;
  std::uint64_t seed_;
  int committed_ = -1;
};

/// Schedule for a tree model cast as prediction with expert advice: experts
/// are the layer-(H/2+1) subtree roots, every edge inside expert i's subtree
/// pays c_i/H with c_i a fair coin per episode (iid kind) and all earlier
/// edges pay zero.  Requires even depth for the two-stage kinds.
AdversarySchedule make_expert_reward_schedule(const LinearMixtureModel& tree_model,
                                              int num_episodes, AdversaryKind kind,
                                              std::uint64_t seed);

/// Generic schedule on any model: kFixed / kDegenerateFixed repeat one random
/// Assumption-1 table, kObliviousSequence pre-draws an independent table per
/// episode.
AdversarySchedule make_reward_schedule(const LinearMixtureModel& model, int num_episodes,
                                       AdversaryKind kind, std::uint64_t seed);

}  // namespace omps
