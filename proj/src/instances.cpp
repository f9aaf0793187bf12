#include "omps/instances.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "omps/rng.hpp"

namespace omps {

LinearMixtureModel make_basis_mixture(int num_states, int num_actions, int horizon,
                                      int dim, double norm_bound, std::uint64_t seed) {
  if (dim < 1 || num_states < 2 || num_actions < 1 || horizon < 1)
    throw std::invalid_argument("make_basis_mixture: bad dimensions");
  Rng rng(seed);
  const int S = num_states, A = num_actions, d = dim;

  // d base kernels with Dirichlet(1,..,1) rows.
  std::vector<Eigen::MatrixXd> base(d);
  for (int i = 0; i < d; ++i) {
    base[i].resize(static_cast<Eigen::Index>(S) * A, S);
    for (Eigen::Index row = 0; row < base[i].rows(); ++row) {
      double total = 0.0;
      for (int sp = 0; sp < S; ++sp) {
        const double e = rng.exponential();
        base[i](row, sp) = e;
        total += e;
      }
      base[i].row(row) /= total;
    }
  }
  // simplex weight
  Eigen::VectorXd w(d);
  for (int i = 0; i < d; ++i) w[i] = rng.exponential();
  w /= w.sum();

  LinearMixtureModel m;
  m.num_states = S; m.num_actions = A; m.horizon = horizon; m.dim = d;
  m.norm_bound = norm_bound;
  m.theta_star = std::sqrt(static_cast<double>(d)) * w;
  if (m.theta_star.norm() > norm_bound + 1e-12) {
    std::ostringstream os;
    os << "make_basis_mixture: B=" << norm_bound << " too small for d=" << d
       << " (||theta||=" << m.theta_star.norm() << ")";
    throw std::invalid_argument(os.str());
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  m.feature_rows.assign(static_cast<std::size_t>(S) * A, Eigen::MatrixXd::Zero(S, d));
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) {
      Eigen::MatrixXd& f = m.feature_rows[static_cast<std::size_t>(s) * A + a];
      for (int i = 0; i < d; ++i)
        f.col(i) = scale * base[i].row(static_cast<Eigen::Index>(s) * A + a).transpose();
    }
  m.rebuild_kernel();
  validate_model(m, 20, rng.derive(1));
  return m;
}

long long tree_num_states(int num_actions, int tree_depth) {
  long long n = 0, layer = 1;
  for (int l = 0; l <= tree_depth; ++l) { n += layer; layer *= num_actions; }
  return n;
}

int tree_layer_offset(int num_actions, int layer) {
  long long n = 0, width = 1;
  for (int l = 1; l < layer; ++l) { n += width; width *= num_actions; }
  return static_cast<int>(n);
}

int tree_layer_of(int num_actions, int state) {
  int layer = 1;
  long long offset = 0, width = 1;
  while (state >= offset + width) { offset += width; width *= num_actions; ++layer; }
  return layer;
}

int tree_child(int num_actions, int state, int action) {
  const int layer = tree_layer_of(num_actions, state);
  const int pos = state - tree_layer_offset(num_actions, layer);
  return tree_layer_offset(num_actions, layer + 1) + pos * num_actions + action;
}

LinearMixtureModel make_tree_mdp(int num_actions, int tree_depth) {
  if (num_actions < 2 || tree_depth < 1)
    throw std::invalid_argument("make_tree_mdp: need |A| >= 2 and depth >= 1");
  double leaves = std::pow(static_cast<double>(num_actions), tree_depth);
  if (leaves > 1e6) throw std::invalid_argument("make_tree_mdp: |A|^depth exceeds 1e6");

  const int S = static_cast<int>(tree_num_states(num_actions, tree_depth));
  const int A = num_actions;
  LinearMixtureModel m;
  m.num_states = S; m.num_actions = A; m.horizon = tree_depth; m.dim = 1;
  m.norm_bound = 1.0;
  m.theta_star = Eigen::VectorXd::Ones(1);
  m.feature_rows.assign(static_cast<std::size_t>(S) * A, Eigen::MatrixXd::Zero(S, 1));
  const int leaf_offset = tree_layer_offset(A, tree_depth + 1);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) {
      const int next = (s >= leaf_offset) ? s : tree_child(A, s, a);
      m.feature_rows[static_cast<std::size_t>(s) * A + a](next, 0) = 1.0;
    }
  m.rebuild_kernel();
  return m;
}

std::string to_string(AdversaryKind kind) {
  switch (kind) {
    case AdversaryKind::kFixed: return "fixed";
    case AdversaryKind::kIidExpertRademacher: return "iid-expert-rademacher";
    case AdversaryKind::kObliviousSequence: return "oblivious-sequence";
    case AdversaryKind::kDegenerateFixed: return "degenerate-fixed";
  }
  return "?";
}

AdversaryKind adversary_kind_from_string(const std::string& name) {
  if (name == "fixed") return AdversaryKind::kFixed;
  if (name == "iid-expert-rademacher") return AdversaryKind::kIidExpertRademacher;
  if (name == "oblivious-sequence") return AdversaryKind::kObliviousSequence;
  if (name == "degenerate-fixed") return AdversaryKind::kDegenerateFixed;
  throw std::invalid_argument("unknown adversary kind: " + name);
}

AdversarySchedule::AdversarySchedule(AdversaryKind kind, std::vector<RewardFunction> rewards,
                                     std::uint64_t seed)
    : kind_(kind), rewards_(std::move(rewards)), seed_(seed) {
  if (rewards_.empty()) throw std::invalid_argument("schedule: no rewards");
}

void AdversarySchedule::commit_trajectory(int k, const Trajectory& traj) {
  if (k != committed_ + 1)
    throw std::logic_error("schedule: episodes must be committed in order");
  if (traj.actions.empty()) throw std::invalid_argument("schedule: empty trajectory");
  committed_ = k;
}

const RewardFunction& AdversarySchedule::reveal(int k) const {
  if (k < 0 || k >= num_episodes()) throw std::out_of_range("schedule: episode index");
  if (k > committed_)
    throw std::logic_error("schedule: reveal(k) before commit_trajectory(k)");
  return rewards_[k];
}

std::string AdversarySchedule::to_json_string() const {
  nlohmann::json j;
  j["kind"] = to_string(kind_);
  j["seed"] = seed_;
  j["num_episodes"] = num_episodes();
  std::vector<std::vector<double>> tables;
  tables.reserve(rewards_.size());
  for (const auto& r : rewards_)
    tables.emplace_back(r.values.data(), r.values.data() + r.values.size());
  j["rewards_colmajor_sxa"] = tables;
  return j.dump();
}

namespace {

bool is_tree_model(const LinearMixtureModel& m, int* depth_out) {
  if (m.dim != 1) return false;
  // one-hot rows
  for (int s = 0; s < m.num_states; ++s)
    for (int a = 0; a < m.num_actions; ++a) {
      const auto& f = m.features(s, a);
      if (std::abs(f.sum() - 1.0) > 1e-12 || f.maxCoeff() != 1.0) return false;
    }
  int depth = 1;
  while (tree_num_states(m.num_actions, depth) < m.num_states) ++depth;
  if (tree_num_states(m.num_actions, depth) != m.num_states) return false;
  *depth_out = depth;
  return true;
}

}  // namespace

AdversarySchedule make_expert_reward_schedule(const LinearMixtureModel& tree_model,
                                              int num_episodes, AdversaryKind kind,
                                              std::uint64_t seed) {
  int depth = 0;
  if (!is_tree_model(tree_model, &depth))
    throw std::invalid_argument("expert schedule: model is not a tree MDP");
  const int S = tree_model.num_states, A = tree_model.num_actions, H = tree_model.horizon;
  if (H != depth) throw std::invalid_argument("expert schedule: horizon != tree depth");

  if (kind == AdversaryKind::kFixed || kind == AdversaryKind::kDegenerateFixed)
    return make_reward_schedule(tree_model, num_episodes, kind, seed);
  if (kind != AdversaryKind::kIidExpertRademacher &&
      kind != AdversaryKind::kObliviousSequence)
    throw std::invalid_argument("expert schedule: unsupported kind");
  if (H % 2 != 0)
    throw std::invalid_argument("expert schedule: two-stage construction needs even depth");

  const int half = H / 2;
  const int expert_layer = half + 1;               // subtree roots
  const int expert_offset = tree_layer_offset(A, expert_layer);
  const int num_experts = static_cast<int>(std::llround(std::pow(A, half)));
  const int leaf_offset = tree_layer_offset(A, H + 1);

  // expert owning each state of layers expert_layer..H (states deeper in the
  // subtree inherit the root's expert); earlier layers pay zero.
  std::vector<int> expert_of(S, -1);
  for (int s = expert_offset; s < leaf_offset; ++s) {
    int cur = s;
    while (cur >= expert_offset + num_experts) {
      const int layer = tree_layer_of(A, cur);
      const int pos = cur - tree_layer_offset(A, layer);
      cur = tree_layer_offset(A, layer - 1) + pos / A;
    }
    expert_of[s] = cur - expert_offset;
  }

  Rng rng(seed);
  std::vector<RewardFunction> rewards;
  rewards.reserve(num_episodes);
  for (int k = 0; k < num_episodes; ++k) {
    std::vector<double> coin(num_experts);
    for (int i = 0; i < num_experts; ++i) coin[i] = rng.coin() ? 1.0 : 0.0;
    RewardFunction r{Eigen::MatrixXd::Zero(S, A)};
    for (int s = expert_offset; s < leaf_offset; ++s)
      r.values.row(s).setConstant(coin[expert_of[s]] / H);
    rewards.push_back(std::move(r));
  }
  // kObliviousSequence differs only in intent (a frozen pre-drawn sequence);
  // the draws above are already committed at construction.
  return AdversarySchedule(kind, std::move(rewards), seed);
}

AdversarySchedule make_reward_schedule(const LinearMixtureModel& model, int num_episodes,
                                       AdversaryKind kind, std::uint64_t seed) {
  if (kind == AdversaryKind::kIidExpertRademacher)
    return make_expert_reward_schedule(model, num_episodes, kind, seed);
  Rng rng(seed);
  const int S = model.num_states, A = model.num_actions, H = model.horizon;
  auto draw = [&]() {
    RewardFunction r{Eigen::MatrixXd::Zero(S, A)};
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) r.values(s, a) = rng.uniform() / H;
    return r;
  };
  std::vector<RewardFunction> rewards;
  rewards.reserve(num_episodes);
  if (kind == AdversaryKind::kFixed || kind == AdversaryKind::kDegenerateFixed) {
    const RewardFunction r = draw();
    for (int k = 0; k < num_episodes; ++k) rewards.push_back(r);
  } else {
    for (int k = 0; k < num_episodes; ++k) rewards.push_back(draw());
  }
  return AdversarySchedule(kind, std::move(rewards), seed);
}

}  // namespace omps
