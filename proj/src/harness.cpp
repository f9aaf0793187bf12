#include "omps/harness.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "omps/rng.hpp"

namespace omps {

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kHfO2ps: return "hf-o2ps";
    case Algorithm::kOmdKnownTransition: return "omd-known-transition";
    case Algorithm::kUniformPolicy: return "uniform-policy";
    case Algorithm::kGreedyNoBonus: return "greedy-no-bonus";
  }
  return "?";
}

Algorithm algorithm_from_string(const std::string& name) {
  if (name == "hf-o2ps") return Algorithm::kHfO2ps;
  if (name == "omd-known-transition") return Algorithm::kOmdKnownTransition;
  if (name == "uniform-policy") return Algorithm::kUniformPolicy;
  if (name == "greedy-no-bonus") return Algorithm::kGreedyNoBonus;
  throw std::invalid_argument("unknown algorithm: " + name);
}

std::string to_string(RadiusMode m) {
  return m == RadiusMode::kPrinted ? "printed" : "practical";
}

RadiusMode radius_mode_from_string(const std::string& name) {
  if (name == "printed") return RadiusMode::kPrinted;
  if (name == "practical") return RadiusMode::kPractical;
  throw std::invalid_argument("unknown radius mode: " + name);
}

int ExperimentConfig::resolved_levels() const {
  if (levels > 0) return levels;
  const double m = std::log2(4.0 * num_episodes * horizon);
  return std::max(1, static_cast<int>(std::ceil(m)));
}

double ExperimentConfig::resolved_alpha() const {
  return alpha > 0 ? alpha : horizon / std::sqrt(static_cast<double>(num_episodes));
}

double ExperimentConfig::resolved_xi() const {
  return xi > 0 ? xi : std::sqrt(static_cast<double>(dim) / (static_cast<double>(num_episodes) * horizon));
}

double ExperimentConfig::resolved_gamma() const {
  return gamma_u > 0 ? gamma_u : std::pow(static_cast<double>(dim), -0.25);
}

double ExperimentConfig::resolved_lambda() const {
  return lambda > 0 ? lambda : dim / (norm_bound * norm_bound);
}

namespace {

void reject_unknown_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                         const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw std::invalid_argument("config: unknown key '" + it.key() + "' in " + where);
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_string(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  ExperimentConfig cfg;
  reject_unknown_keys(j, {"instance", "adversary", "K", "algorithm", "overrides",
                          "run_seed", "out_dir", "format"},
                      "document root");
  if (j.contains("instance")) {
    const auto& ji = j.at("instance");
    reject_unknown_keys(ji, {"generator", "num_states", "num_actions", "horizon", "dim",
                             "norm_bound", "tree_depth", "seed"},
                        "instance");
    if (ji.contains("generator")) cfg.generator = ji.at("generator").get<std::string>();
    if (ji.contains("num_states")) cfg.num_states = ji.at("num_states").get<int>();
    if (ji.contains("num_actions")) cfg.num_actions = ji.at("num_actions").get<int>();
    if (ji.contains("horizon")) cfg.horizon = ji.at("horizon").get<int>();
    if (ji.contains("dim")) cfg.dim = ji.at("dim").get<int>();
    if (ji.contains("norm_bound")) cfg.norm_bound = ji.at("norm_bound").get<double>();
    if (ji.contains("tree_depth")) cfg.tree_depth = ji.at("tree_depth").get<int>();
    if (ji.contains("seed")) cfg.instance_seed = ji.at("seed").get<std::uint64_t>();
  }
  if (j.contains("adversary")) {
    const auto& ja = j.at("adversary");
    reject_unknown_keys(ja, {"kind", "seed"}, "adversary");
    if (ja.contains("kind"))
      cfg.adversary = adversary_kind_from_string(ja.at("kind").get<std::string>());
    if (ja.contains("seed")) cfg.adversary_seed = ja.at("seed").get<std::uint64_t>();
  }
  if (j.contains("K")) cfg.num_episodes = j.at("K").get<int>();
  if (j.contains("algorithm"))
    cfg.algorithm = algorithm_from_string(j.at("algorithm").get<std::string>());
  if (j.contains("overrides")) {
    const auto& jo = j.at("overrides");
    reject_unknown_keys(jo, {"alpha", "xi", "gamma", "lambda", "delta", "levels", "tol",
                             "max_sweeps", "radius", "radius_scale"},
                        "overrides");
    auto positive = [&](const char* key, double v) {
      if (!(v > 0)) throw std::invalid_argument(std::string("config: override ") + key +
                                                " must be positive");
      return v;
    };
    if (jo.contains("alpha")) cfg.alpha = positive("alpha", jo.at("alpha").get<double>());
    if (jo.contains("xi")) cfg.xi = positive("xi", jo.at("xi").get<double>());
    if (jo.contains("gamma")) cfg.gamma_u = positive("gamma", jo.at("gamma").get<double>());
    if (jo.contains("lambda")) cfg.lambda = positive("lambda", jo.at("lambda").get<double>());
    if (jo.contains("delta")) cfg.delta = positive("delta", jo.at("delta").get<double>());
    if (jo.contains("levels")) {
      cfg.levels = jo.at("levels").get<int>();
      if (cfg.levels < 1) throw std::invalid_argument("config: levels must be positive");
    }
    if (jo.contains("tol")) cfg.tol = positive("tol", jo.at("tol").get<double>());
    if (jo.contains("max_sweeps")) {
      cfg.max_sweeps = jo.at("max_sweeps").get<int>();
      if (cfg.max_sweeps < 1) throw std::invalid_argument("config: max_sweeps must be positive");
    }
    if (jo.contains("radius"))
      cfg.radius_mode = radius_mode_from_string(jo.at("radius").get<std::string>());
    if (jo.contains("radius_scale"))
      cfg.radius_scale = positive("radius_scale", jo.at("radius_scale").get<double>());
  }
  if (j.contains("run_seed")) cfg.run_seed = j.at("run_seed").get<std::uint64_t>();
  if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
  if (j.contains("format")) cfg.format = j.at("format").get<std::string>();
  return cfg;
}

std::string ExperimentConfig::to_json_string() const {
  nlohmann::json j;
  j["instance"] = {{"generator", generator},   {"num_states", num_states},
                   {"num_actions", num_actions}, {"horizon", horizon},
                   {"dim", dim},               {"norm_bound", norm_bound},
                   {"tree_depth", tree_depth}, {"seed", instance_seed}};
  j["adversary"] = {{"kind", omps::to_string(adversary)}, {"seed", adversary_seed}};
  j["K"] = num_episodes;
  j["algorithm"] = omps::to_string(algorithm);
  j["overrides"] = {{"alpha", resolved_alpha()},   {"xi", resolved_xi()},
                    {"gamma", resolved_gamma()},   {"lambda", resolved_lambda()},
                    {"delta", delta},              {"levels", resolved_levels()},
                    {"tol", tol},                  {"max_sweeps", max_sweeps},
                    {"radius", omps::to_string(radius_mode)},
                    {"radius_scale", radius_scale}};
  j["run_seed"] = run_seed;
  j["out_dir"] = out_dir;
  j["format"] = format;
  return j.dump(2);
}

LinearMixtureModel build_instance(const ExperimentConfig& cfg) {
  if (cfg.generator == "basis-mixture")
    return make_basis_mixture(cfg.num_states, cfg.num_actions, cfg.horizon, cfg.dim,
                              cfg.norm_bound, cfg.instance_seed);
  if (cfg.generator == "tree") return make_tree_mdp(cfg.num_actions, cfg.tree_depth);
  throw std::invalid_argument("unknown generator: " + cfg.generator);
}

AdversarySchedule build_schedule(const ExperimentConfig& cfg, const LinearMixtureModel& model) {
  return make_reward_schedule(model, cfg.num_episodes, cfg.adversary, cfg.adversary_seed);
}

namespace {

double clip01(double x) { return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x); }

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg, const EpisodeObserver& observer,
                         const StepObserver& step_observer) {
  const LinearMixtureModel model = build_instance(cfg);
  return run_experiment(cfg, model, build_schedule(cfg, model), observer, step_observer);
}

RunResult run_experiment(const ExperimentConfig& cfg, const LinearMixtureModel& model,
                         AdversarySchedule schedule, const EpisodeObserver& observer,
                         const StepObserver& step_observer) {
  if (schedule.num_episodes() < cfg.num_episodes)
    throw std::invalid_argument("run_experiment: schedule shorter than K");
  const int S = model.num_states, A = model.num_actions, H = model.horizon;
  const int K = cfg.num_episodes;
  const double alpha = cfg.resolved_alpha();
  const double xi = cfg.resolved_xi();
  const double gamma = cfg.resolved_gamma();
  const double lambda = cfg.resolved_lambda();
  const int M = cfg.resolved_levels();
  const bool learns = cfg.algorithm == Algorithm::kHfO2ps ||
                      cfg.algorithm == Algorithm::kGreedyNoBonus;
  const bool runs_omd = cfg.algorithm != Algorithm::kUniformPolicy;

  const ActiveSupport support = ActiveSupport::compute(model);
  const MirrorMap map;

  MomentBank bank(model.dim, M, lambda, xi, gamma);
  bank.finish_episode();  // theta_hat_1 = 0, Sigma_hat_1 = lambda I

  OccupancyMeasure z = runs_omd ? initial_occupancy(support, map, cfg.tol, cfg.max_sweeps)
                                : OccupancyMeasure(H, S, A);
  RewardFunction r_prev{Eigen::MatrixXd::Zero(S, A)};  // r^0 = 0

  Rng run_rng(cfg.run_seed);

  RunResult out;
  out.records.reserve(K);

  for (int k = 1; k <= K; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    EpisodeRecord rec;
    rec.k = k;

    // confidence set and radius for this episode
    ConfidenceSet cs;
    if (cfg.algorithm == Algorithm::kOmdKnownTransition) {
      cs.center = model.theta_star;
      cs.shape = Eigen::MatrixXd::Identity(model.dim, model.dim);
      cs.radius = 0.0;
    } else {
      cs.center = bank.estimate(0);
      cs.shape = bank.episode_cov(0);
      // the practical radius models post-data concentration; episode 1 has an
      // uninformative estimate (center zero), so it keeps the printed radius
      // and the constraints stay vacuous until data arrives, as they do under
      // the printed constants
      const bool practical = cfg.radius_mode == RadiusMode::kPractical && k > 1;
      cs.radius = practical
                      ? practical_radius(k, model.dim, H, lambda, model.norm_bound,
                                         cfg.delta, cfg.radius_scale)
                      : confidence_radius(k, model.dim, H, xi, gamma, lambda,
                                          model.norm_bound, cfg.delta);
    }
    cs.delta = cfg.delta;
    rec.beta = cs.radius;
    rec.containment = cs.contains(model.theta_star).first;

    // policy update
    StochasticPolicy policy;
    if (runs_omd) {
      const FeasibleSet feasible = build_feasible_set(model, support, cs);
      OmdResult omd = omd_update(z, r_prev, alpha, feasible, map, cfg.tol, cfg.max_sweeps);
      z = std::move(omd.z);
      rec.proj_iters = omd.sweeps;
      rec.proj_residual = omd.residual;
      policy = extract_policy(z).policy;
    } else {
      policy = uniform_policy(S, A, H);
      z = occupancy_of_policy(model, policy);
    }

    // play the episode, then the reward becomes visible
    const Trajectory traj =
        sample_episode(model, policy, schedule.all_rewards()[k - 1], run_rng.derive(k));
    schedule.commit_trajectory(k - 1, traj);
    const RewardFunction& reward = schedule.reveal(k - 1);
    for (double r : traj.rewards) rec.realized_return += r;
    rec.v_bar = occupancy_value(z, reward);
    r_prev = reward;

    // optimistic backward pass
    OptimisticValues opt;
    if (cfg.algorithm == Algorithm::kHfO2ps) {
      opt = optimistic_backup(model, reward, policy, bank.estimate(0), bank.episode_cov(0),
                              cs.radius);
    } else if (cfg.algorithm == Algorithm::kGreedyNoBonus) {
      opt = optimistic_backup(model, reward, policy, bank.estimate(0), bank.episode_cov(0),
                              0.0);
    } else {
      // known transition / uniform baselines: exact values, no bonus
      const ValueTables vt = policy_value(model, policy, reward);
      opt.v = vt.v;
      opt.q = vt.q;
      for (auto& q : opt.q) q = q.unaryExpr([](double x) { return clip01(x); });
      opt.v = opt.v.unaryExpr([](double x) { return clip01(x); });
    }
    rec.v_opt = opt.v(0, LinearMixtureModel::initial_state);

    // moment estimation and weighted-regression updates
    if (learns) {
      std::vector<Eigen::VectorXd> feats(M);
      Eigen::VectorXd vpow(S);
      for (int h = 0; h < H; ++h) {
        const int s_h = traj.states[h], a_h = traj.actions[h], s_next = traj.states[h + 1];
        rec.indicator_h = bank.det_ratio_indicator();
        // V^{2^m} targets by repeated squaring, clipped before squaring
        Eigen::VectorXd v = opt.v.row(h + 1);
        for (int m = 0; m < M; ++m) {
          if (m == 0) {
            vpow = v;
          } else {
            for (int i = 0; i < S; ++i) vpow[i] = clip01(vpow[i]) * clip01(vpow[i]);
          }
          feats[m] = model.features(s_h, a_h).transpose() * vpow;
        }
        const std::vector<double> sigma = home_variances(feats, bank, cs.radius, xi, gamma);
        if (rec.indicator_h)
          rec.r0_increment +=
              std::min(1.0, cs.radius * bank.episode_mahalanobis(0, feats[0]));
        if (step_observer) {
          StepInfo info;
          info.s = s_h; info.a = a_h; info.s_next = s_next;
          info.sigma_bar = &sigma;
          info.features = &feats;
          info.bank = &bank;
          info.v_table = &opt.v;
          info.indicator = rec.indicator_h;
          step_observer(k, h, info);
        }
        double target = clip01(opt.v(h + 1, s_next));
        for (int m = 0; m < M; ++m) {
          bank.update(m, feats[m], target, sigma[m]);
          target = clip01(target) * clip01(target);
        }
      }
      bank.finish_episode();
    }

    // evaluation-side exact value of the executed policy
    rec.v_executed =
        policy_value(model, policy, reward).v(0, LinearMixtureModel::initial_state);

    rec.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t0).count();
    if (observer) observer(k, z, rec);
    out.records.push_back(std::move(rec));
  }

  // hindsight comparator over the full revealed sequence
  const HindsightResult comp = best_hindsight_policy(model, schedule.all_rewards());
  out.comparator_total = comp.total_value;
  for (int k = 0; k < K; ++k) {
    out.records[k].v_comparator =
        policy_value(model, comp.policy, schedule.all_rewards()[k])
            .v(0, LinearMixtureModel::initial_state);
    if (out.records[k].containment) ++out.episodes_contained;
  }
  out.cumulative_regret = compute_regret(out.records);
  out.final_regret = out.cumulative_regret.empty() ? 0.0 : out.cumulative_regret.back();
  return out;
}

std::vector<double> compute_regret(const std::vector<EpisodeRecord>& records) {
  std::vector<double> series;
  series.reserve(records.size());
  double cum = 0.0;
  for (const auto& rec : records) {
    cum += rec.v_comparator - rec.v_executed;
    series.push_back(cum);
  }
  return series;
}

SweepResult sweep(const ExperimentConfig& base, const std::string& axis,
                  const std::vector<double>& values, int num_seeds) {
  if (values.empty()) throw std::invalid_argument("sweep: no values");
  if (num_seeds < 1) throw std::invalid_argument("sweep: need at least one seed");
  SweepResult out;
  out.axis = axis;
  for (double value : values) {
    if (!(value > 0)) throw std::invalid_argument("sweep: values must be positive");
    SweepCell cell;
    cell.axis_value = value;
    for (int i = 0; i < num_seeds; ++i) {
      ExperimentConfig cfg = base;
      const auto iv = static_cast<int>(value);
      if (axis == "K") cfg.num_episodes = iv;
      else if (axis == "H") cfg.horizon = iv;
      else if (axis == "d") cfg.dim = iv;
      else if (axis == "S") cfg.num_states = iv;
      else throw std::invalid_argument("sweep: unknown axis " + axis);
      cfg.instance_seed = base.instance_seed + 1000003ULL * i;
      cfg.adversary_seed = base.adversary_seed + 2000003ULL * i;
      cfg.run_seed = base.run_seed + 3000017ULL * i;
      cell.per_seed.push_back(run_experiment(cfg).final_regret);
    }
    double mean = 0.0;
    for (double r : cell.per_seed) mean += r;
    mean /= num_seeds;
    double var = 0.0;
    for (double r : cell.per_seed) var += (r - mean) * (r - mean);
    cell.mean_final_regret = mean;
    cell.stderr_final_regret =
        num_seeds > 1 ? std::sqrt(var / (num_seeds - 1) / num_seeds) : 0.0;
    out.cells.push_back(std::move(cell));
  }
  std::vector<double> xs, ys;
  for (const auto& c : out.cells) { xs.push_back(c.axis_value); ys.push_back(c.mean_final_regret); }
  out.loglog_slope = loglog_slope(xs, ys);
  return out;
}

double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2) return 0.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0) || !(ys[i] > 0)) continue;
    const double lx = std::log(xs[i]), ly = std::log(ys[i]);
    sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
    ++n;
  }
  if (n < 2) return 0.0;
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// ---- emission -----------------------------------------------------------------

namespace {

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc()) throw std::runtime_error("csv: bad float field '" + s + "'");
  return v;
}

const char* kCsvHeader =
    "k,realized_return,v_bar,v_opt,v_executed,v_comparator,beta,containment,"
    "indicator_h,r0_increment,proj_iters,proj_residual,cumulative_regret,wall_ms";

}  // namespace

std::string records_to_csv(const std::vector<EpisodeRecord>& records) {
  std::ostringstream os;
  os << kCsvHeader << "\n";
  double cum = 0.0;
  for (const auto& r : records) {
    cum += r.v_comparator - r.v_executed;
    os << r.k << ',' << shortest(r.realized_return) << ',' << shortest(r.v_bar) << ','
       << shortest(r.v_opt) << ',' << shortest(r.v_executed) << ','
       << shortest(r.v_comparator) << ',' << shortest(r.beta) << ','
       << (r.containment ? 1 : 0) << ',' << (r.indicator_h ? 1 : 0) << ','
       << shortest(r.r0_increment) << ',' << r.proj_iters << ','
       << shortest(r.proj_residual) << ',' << shortest(cum) << ','
       << shortest(r.wall_ms) << "\n";
  }
  return os.str();
}

std::vector<EpisodeRecord> records_from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader)
    throw std::runtime_error("csv: unexpected header");
  std::vector<EpisodeRecord> records;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      const std::size_t next = line.find(',', pos);
      f.push_back(line.substr(pos, next == std::string::npos ? next : next - pos));
      if (next == std::string::npos) break;
      pos = next + 1;
    }
    if (f.size() != 14) throw std::runtime_error("csv: wrong field count");
    EpisodeRecord r;
    r.k = std::stoi(f[0]);
    r.realized_return = parse_double(f[1]);
    r.v_bar = parse_double(f[2]);
    r.v_opt = parse_double(f[3]);
    r.v_executed = parse_double(f[4]);
    r.v_comparator = parse_double(f[5]);
    r.beta = parse_double(f[6]);
    r.containment = f[7] == "1";
    r.indicator_h = f[8] == "1";
    r.r0_increment = parse_double(f[9]);
    r.proj_iters = std::stoi(f[10]);
    r.proj_residual = parse_double(f[11]);
    r.wall_ms = parse_double(f[13]);
    records.push_back(r);
  }
  return records;
}

void write_file(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << content;
  if (!os) throw std::runtime_error("write failed: " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

std::string run_summary_json(const ExperimentConfig& cfg, const RunResult& result) {
  nlohmann::json j;
  j["config"] = nlohmann::json::parse(cfg.to_json_string());
  j["episodes"] = result.records.size();
  j["final_regret"] = result.final_regret;
  j["comparator_total"] = result.comparator_total;
  j["episodes_contained"] = result.episodes_contained;
  double vbar = 0.0, ret = 0.0, r0 = 0.0;
  for (const auto& r : result.records) {
    vbar += r.v_bar;
    ret += r.realized_return;
    r0 += r.r0_increment;
  }
  j["mean_v_bar"] = result.records.empty() ? 0.0 : vbar / result.records.size();
  j["mean_realized_return"] = result.records.empty() ? 0.0 : ret / result.records.size();
  j["r0_total"] = r0;
  return j.dump(2);
}

std::string sweep_to_csv(const SweepResult& result) {
  std::ostringstream os;
  os << result.axis << ",mean_final_regret,stderr_final_regret,num_seeds\n";
  for (const auto& c : result.cells)
    os << shortest(c.axis_value) << ',' << shortest(c.mean_final_regret) << ','
       << shortest(c.stderr_final_regret) << ',' << c.per_seed.size() << "\n";
  return os.str();
}

std::string sweep_summary_json(const ExperimentConfig& cfg, const SweepResult& result) {
  nlohmann::json j;
  j["config"] = nlohmann::json::parse(cfg.to_json_string());
  j["axis"] = result.axis;
  j["loglog_slope"] = result.loglog_slope;
  auto cells = nlohmann::json::array();
  for (const auto& c : result.cells)
    cells.push_back({{"value", c.axis_value},
                     {"mean_final_regret", c.mean_final_regret},
                     {"stderr_final_regret", c.stderr_final_regret},
                     {"per_seed", c.per_seed}});
  j["cells"] = cells;
  return j.dump(2);
}

std::string series_to_svg(const std::vector<double>& ys, const std::string& title) {
  const int width = 720, height = 420, margin = 50;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
     << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\" "
        "font-family=\"sans-serif\">" << title << "</text>\n";
  if (!ys.empty()) {
    double lo = ys[0], hi = ys[0];
    for (double y : ys) { lo = std::min(lo, y); hi = std::max(hi, y); }
    if (hi - lo < 1e-12) hi = lo + 1.0;
    os << "<polyline fill=\"none\" stroke=\"#1f6fb2\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < ys.size(); ++i) {
      const double x = margin + (width - 2.0 * margin) * (ys.size() == 1 ? 0.5 : static_cast<double>(i) / (ys.size() - 1));
      const double y = height - margin - (height - 2.0 * margin) * (ys[i] - lo) / (hi - lo);
      os << x << ',' << y << ' ';
    }
    os << "\"/>\n";
    os << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\""
       << width - margin << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin
       << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << margin << "\" y=\"" << height - margin + 18
       << "\" font-size=\"11\" font-family=\"sans-serif\">1</text>\n";
    os << "<text x=\"" << width - margin << "\" y=\"" << height - margin + 18
       << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">"
       << ys.size() << "</text>\n";
    os << "<text x=\"" << margin - 6 << "\" y=\"" << height - margin
       << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">"
       << shortest(lo) << "</text>\n";
    os << "<text x=\"" << margin - 6 << "\" y=\"" << margin + 4
       << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">"
       << shortest(hi) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace omps
