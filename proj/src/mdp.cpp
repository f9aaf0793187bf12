#include "omps/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "omps/rng.hpp"

namespace omps {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::runtime_error(what);
}

}  // namespace

void LinearMixtureModel::rebuild_kernel() {
  kernel.resize(static_cast<Eigen::Index>(num_states) * num_actions, num_states);
  for (int s = 0; s < num_states; ++s)
    for (int a = 0; a < num_actions; ++a)
      kernel.row(static_cast<Eigen::Index>(s) * num_actions + a) =
          (features(s, a) * theta_star).transpose();
}

void validate_model(const LinearMixtureModel& model, int num_random_probes,
                    std::uint64_t seed) {
  const int S = model.num_states, A = model.num_actions, d = model.dim;
  require(S > 0 && A > 0 && model.horizon > 0 && d > 0, "model: empty dimensions");
  require(static_cast<int>(model.feature_rows.size()) == S * A,
          "model: feature_rows size mismatch");
  require(model.theta_star.size() == d, "model: theta size mismatch");

  if (model.theta_star.norm() > model.norm_bound + 1e-12) {
    std::ostringstream os;
    os << "model: ||theta||=" << model.theta_star.norm() << " exceeds B=" << model.norm_bound;
    throw std::runtime_error(os.str());
  }

  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      const Eigen::VectorXd row = model.features(s, a) * model.theta_star;
      require(row.minCoeff() >= -1e-12, "model: negative transition probability");
      require(std::abs(row.sum() - 1.0) <= 1e-12, "model: row does not sum to 1");
    }
  }

  // ||phi_V|| <= 1 on V == 1, V == 0, indicators, and random probes.
  auto probe = [&](const Eigen::VectorXd& v) {
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a)
        require(phi_v(model, v, s, a).norm() <= 1.0 + 1e-9,
                "model: ||phi_V|| exceeds 1");
  };
  probe(Eigen::VectorXd::Ones(S));
  probe(Eigen::VectorXd::Zero(S));
  for (int i = 0; i < S; ++i) probe(Eigen::VectorXd::Unit(S, i));
  Rng rng(seed);
  for (int t = 0; t < num_random_probes; ++t) {
    Eigen::VectorXd v(S);
    for (int i = 0; i < S; ++i) v[i] = rng.uniform();
    probe(v);
  }
}

void validate_reward(const RewardFunction& reward, int horizon, double slack) {
  const double cap = 1.0 / horizon;
  require(reward.values.minCoeff() >= -slack && reward.values.maxCoeff() <= cap + slack,
          "reward: entry outside [0, 1/H]");
}

StochasticPolicy uniform_policy(int num_states, int num_actions, int horizon) {
  StochasticPolicy pi;
  pi.probs.assign(horizon,
                  Eigen::MatrixXd::Constant(num_states, num_actions, 1.0 / num_actions));
  return pi;
}

void validate_policy(const StochasticPolicy& policy, double tol) {
  for (const auto& p : policy.probs) {
    require(p.minCoeff() >= -tol, "policy: negative probability");
    for (Eigen::Index s = 0; s < p.rows(); ++s)
      require(std::abs(p.row(s).sum() - 1.0) <= tol, "policy: row does not sum to 1");
  }
}

double OccupancyMeasure::stage_sum(int h) const {
  const std::size_t stage = static_cast<std::size_t>(num_states) * num_actions * num_states;
  double total = 0.0;
  for (std::size_t i = stage * h; i < stage * (h + 1); ++i) total += z[i];
  return total;
}

double OccupancyResidual::max() const {
  return std::max(normalization, std::max(flow, initial));
}

OccupancyResidual occupancy_residual(const OccupancyMeasure& z, int initial_state) {
  const int H = z.horizon, S = z.num_states, A = z.num_actions;
  OccupancyResidual r;
  for (int h = 0; h < H; ++h)
    r.normalization = std::max(r.normalization, std::abs(z.stage_sum(h) - 1.0));

  std::vector<double> in(S), out(S);
  for (int h = 1; h < H; ++h) {
    std::fill(in.begin(), in.end(), 0.0);
    std::fill(out.begin(), out.end(), 0.0);
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a)
        for (int sp = 0; sp < S; ++sp) {
          out[s] += z.at(h, s, a, sp);
          in[sp] += z.at(h - 1, s, a, sp);
        }
    for (int s = 0; s < S; ++s) r.flow = std::max(r.flow, std::abs(out[s] - in[s]));
  }
  for (int s = 0; s < S; ++s) {
    double mass = 0.0;
    for (int a = 0; a < A; ++a)
      for (int sp = 0; sp < S; ++sp) mass += z.at(0, s, a, sp);
    r.initial = std::max(r.initial, std::abs(mass - (s == initial_state ? 1.0 : 0.0)));
  }
  return r;
}

Eigen::VectorXd phi_v(const LinearMixtureModel& model, const Eigen::VectorXd& value,
                      int s, int a) {
  if (s < 0 || s >= model.num_states || a < 0 || a >= model.num_actions)
    throw std::out_of_range("phi_v: state or action index");
  if (value.size() != model.num_states) throw std::out_of_range("phi_v: value size");
  return model.features(s, a).transpose() * value;
}

Eigen::VectorXd transition_probs(const LinearMixtureModel& model, int s, int a) {
  if (s < 0 || s >= model.num_states || a < 0 || a >= model.num_actions)
    throw std::out_of_range("transition_probs: index");
  return model.features(s, a) * model.theta_star;
}

Trajectory sample_episode(const LinearMixtureModel& model, const StochasticPolicy& policy,
                          const RewardFunction& reward, std::uint64_t seed) {
  Rng rng(seed);
  Trajectory traj;
  const int H = model.horizon;
  traj.states.reserve(H + 1);
  traj.actions.reserve(H);
  traj.rewards.reserve(H);
  int s = LinearMixtureModel::initial_state;
  traj.states.push_back(s);
  for (int h = 0; h < H; ++h) {
    const Eigen::MatrixXd& p = policy.probs[h];
    Eigen::VectorXd row = p.row(s);
    const int a = rng.categorical(row.data(), model.num_actions);
    traj.actions.push_back(a);
    traj.rewards.push_back(reward(s, a));
    Eigen::VectorXd next = model.kernel.row(static_cast<Eigen::Index>(s) * model.num_actions + a);
    for (int i = 0; i < next.size(); ++i) next[i] = std::max(next[i], 0.0);
    s = rng.categorical(next.data(), model.num_states);
    traj.states.push_back(s);
  }
  return traj;
}

ValueTables policy_value(const LinearMixtureModel& model, const StochasticPolicy& policy,
                         const RewardFunction& reward) {
  const int H = model.horizon, S = model.num_states, A = model.num_actions;
  ValueTables out;
  out.v = Eigen::MatrixXd::Zero(H + 1, S);
  out.q.assign(H, Eigen::MatrixXd::Zero(S, A));
  for (int h = H - 1; h >= 0; --h) {
    const Eigen::VectorXd vnext = out.v.row(h + 1);
    for (int s = 0; s < S; ++s) {
      double vs = 0.0;
      for (int a = 0; a < A; ++a) {
        const double q = reward(s, a) +
            model.kernel.row(static_cast<Eigen::Index>(s) * A + a).dot(vnext);
        out.q[h](s, a) = q;
        vs += policy.probs[h](s, a) * q;
      }
      out.v(h, s) = vs;
    }
  }
  return out;
}

double conditional_variance(const LinearMixtureModel& model, const Eigen::VectorXd& value,
                            int s, int a) {
  const Eigen::VectorXd row = model.kernel.row(static_cast<Eigen::Index>(s) * model.num_actions + a);
  const double mean = row.dot(value);
  const double second = row.dot(value.cwiseProduct(value));
  return std::max(0.0, second - mean * mean);
}

InducedDecomposition occupancy_to_policy_and_transition(const OccupancyMeasure& z,
                                                        double mass_floor) {
  const int H = z.horizon, S = z.num_states, A = z.num_actions;
  InducedDecomposition out;
  out.policy.probs.assign(H, Eigen::MatrixXd::Zero(S, A));
  out.stage_kernels.assign(H, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(S) * A, S));
  for (int h = 0; h < H; ++h) {
    for (int s = 0; s < S; ++s) {
      Eigen::VectorXd action_mass = Eigen::VectorXd::Zero(A);
      for (int a = 0; a < A; ++a)
        for (int sp = 0; sp < S; ++sp) action_mass[a] += z.at(h, s, a, sp);
      const double state_mass = action_mass.sum();
      if (state_mass < mass_floor) {
        out.policy.probs[h].row(s).setConstant(1.0 / A);
        out.flagged_states.emplace_back(h, s);
      } else {
        out.policy.probs[h].row(s) = (action_mass / state_mass).transpose();
      }
      for (int a = 0; a < A; ++a) {
        auto row = out.stage_kernels[h].row(static_cast<Eigen::Index>(s) * A + a);
        if (action_mass[a] < mass_floor) {
          row.setConstant(1.0 / S);
          out.flagged_rows.push_back({h, s, a});
        } else {
          for (int sp = 0; sp < S; ++sp) row[sp] = z.at(h, s, a, sp) / action_mass[a];
        }
      }
    }
  }
  return out;
}

OccupancyMeasure occupancy_of_policy(const LinearMixtureModel& model,
                                     const StochasticPolicy& policy) {
  std::vector<Eigen::MatrixXd> kernels(model.horizon, model.kernel);
  return occupancy_of_policy_kernels(kernels, policy, model.num_states, model.num_actions,
                                     LinearMixtureModel::initial_state);
}

OccupancyMeasure occupancy_of_policy_kernels(const std::vector<Eigen::MatrixXd>& stage_kernels,
                                             const StochasticPolicy& policy,
                                             int num_states, int num_actions,
                                             int initial_state) {
  const int H = static_cast<int>(stage_kernels.size());
  const int S = num_states, A = num_actions;
  OccupancyMeasure z(H, S, A);
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(S);
  mu[initial_state] = 1.0;
  for (int h = 0; h < H; ++h) {
    Eigen::VectorXd next = Eigen::VectorXd::Zero(S);
    for (int s = 0; s < S; ++s) {
      if (mu[s] == 0.0) continue;
      for (int a = 0; a < A; ++a) {
        const double mass = mu[s] * policy.probs[h](s, a);
        if (mass == 0.0) continue;
        const auto row = stage_kernels[h].row(static_cast<Eigen::Index>(s) * A + a);
        for (int sp = 0; sp < S; ++sp) {
          const double m = mass * row[sp];
          z.at(h, s, a, sp) = m;
          next[sp] += m;
        }
      }
    }
    mu = next;
  }
  return z;
}

double occupancy_value(const OccupancyMeasure& z, const RewardFunction& reward) {
  const int H = z.horizon, S = z.num_states, A = z.num_actions;
  double total = 0.0;
  for (int h = 0; h < H; ++h)
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) {
        double block = 0.0;
        for (int sp = 0; sp < S; ++sp) block += z.at(h, s, a, sp);
        total += block * reward(s, a);
      }
  return total;
}

HindsightResult best_hindsight_policy(const LinearMixtureModel& model,
                                      const std::vector<RewardFunction>& rewards) {
  if (rewards.empty()) throw std::invalid_argument("best_hindsight_policy: no rewards");
  const int S = model.num_states, A = model.num_actions, H = model.horizon;
  RewardFunction total{Eigen::MatrixXd::Zero(S, A)};
  for (const auto& r : rewards) total.values += r.values;

  HindsightResult out;
  out.policy.probs.assign(H, Eigen::MatrixXd::Zero(S, A));
  Eigen::VectorXd vnext = Eigen::VectorXd::Zero(S);
  for (int h = H - 1; h >= 0; --h) {
    Eigen::VectorXd v(S);
    for (int s = 0; s < S; ++s) {
      int best = 0;
      double best_q = -1.0;
      for (int a = 0; a < A; ++a) {
        const double q = total(s, a) +
            model.kernel.row(static_cast<Eigen::Index>(s) * A + a).dot(vnext);
        if (q > best_q + 1e-15) { best_q = q; best = a; }
      }
      out.policy.probs[h](s, best) = 1.0;
      v[s] = best_q;
    }
    vnext = v;
  }
  out.total_value = vnext[LinearMixtureModel::initial_state];
  return out;
}

std::string model_to_json_string(const LinearMixtureModel& model) {
  nlohmann::json j;
  j["num_states"] = model.num_states;
  j["num_actions"] = model.num_actions;
  j["horizon"] = model.horizon;
  j["dim"] = model.dim;
  j["norm_bound"] = model.norm_bound;
  j["theta_star"] = std::vector<double>(model.theta_star.data(),
                                        model.theta_star.data() + model.dim);
  // features in (s', s, a, i) row-major order
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(model.num_states) * model.num_states *
               model.num_actions * model.dim);
  for (int sp = 0; sp < model.num_states; ++sp)
    for (int s = 0; s < model.num_states; ++s)
      for (int a = 0; a < model.num_actions; ++a)
        for (int i = 0; i < model.dim; ++i)
          flat.push_back(model.features(s, a)(sp, i));
  j["features"] = flat;
  return j.dump();
}

LinearMixtureModel model_from_json_string(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  LinearMixtureModel m;
  m.num_states = j.at("num_states").get<int>();
  m.num_actions = j.at("num_actions").get<int>();
  m.horizon = j.at("horizon").get<int>();
  m.dim = j.at("dim").get<int>();
  m.norm_bound = j.at("norm_bound").get<double>();
  const auto theta = j.at("theta_star").get<std::vector<double>>();
  m.theta_star = Eigen::Map<const Eigen::VectorXd>(theta.data(), m.dim);
  const auto flat = j.at("features").get<std::vector<double>>();
  if (flat.size() != static_cast<std::size_t>(m.num_states) * m.num_states *
                         m.num_actions * m.dim)
    throw std::runtime_error("model json: features length mismatch");
  m.feature_rows.assign(static_cast<std::size_t>(m.num_states) * m.num_actions,
                        Eigen::MatrixXd::Zero(m.num_states, m.dim));
  std::size_t idx = 0;
  for (int sp = 0; sp < m.num_states; ++sp)
    for (int s = 0; s < m.num_states; ++s)
      for (int a = 0; a < m.num_actions; ++a)
        for (int i = 0; i < m.dim; ++i)
          m.feature_rows[static_cast<std::size_t>(s) * m.num_actions + a](sp, i) = flat[idx++];
  m.rebuild_kernel();
  return m;
}

}  // namespace omps
