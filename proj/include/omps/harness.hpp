#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "omps/estimator.hpp"
#include "omps/instances.hpp"
#include "omps/mdp.hpp"
#include "omps/omd.hpp"

namespace omps {

enum class Algorithm { kHfO2ps, kOmdKnownTransition, kUniformPolicy, kGreedyNoBonus };
enum class RadiusMode { kPrinted, kPractical };

std::string to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& name);
std::string to_string(RadiusMode m);
RadiusMode radius_mode_from_string(const std::string& name);

struct ExperimentConfig {
  // instance
  std::string generator = "basis-mixture";  // or "tree"
  int num_states = 5;
  int num_actions = 3;
  int horizon = 10;
  int dim = 4;
  double norm_bound = 2.0;
  int tree_depth = 4;                        // tree generator only
  std::uint64_t instance_seed = 1;

  // adversary
  AdversaryKind adversary = AdversaryKind::kObliviousSequence;
  std::uint64_t adversary_seed = 2;

  int num_episodes = 100;                    // K
  Algorithm algorithm = Algorithm::kHfO2ps;
  std::uint64_t run_seed = 3;

  // parameters; negative values mean "use the standard binding"
  double alpha = -1.0;      // H / sqrt(K)
  double xi = -1.0;         // sqrt(d / (K H))
  double gamma_u = -1.0;    // d^{-1/4}
  double lambda = -1.0;     // d / B^2
  double delta = 0.01;
  int levels = -1;          // ceil(log2(4 K H))
  double tol = 1e-8;
  int max_sweeps = 5000;
  RadiusMode radius_mode = RadiusMode::kPrinted;
  double radius_scale = 1.0;

  std::string out_dir;
  std::string format = "csv";

  int resolved_levels() const;
  double resolved_alpha() const;
  double resolved_xi() const;
  double resolved_gamma() const;
  double resolved_lambda() const;

  /// Strict parse: unknown keys anywhere in the document are rejected.
  static ExperimentConfig from_json_string(const std::string& text);
  std::string to_json_string() const;
};

LinearMixtureModel build_instance(const ExperimentConfig& cfg);
AdversarySchedule build_schedule(const ExperimentConfig& cfg, const LinearMixtureModel& model);

struct EpisodeRecord {
  int k = 0;
  double realized_return = 0.0;
  double v_bar = 0.0;         // <z^k, r^k>
  double v_opt = 0.0;         // optimistic V_{k,1}(s_1)
  double v_executed = 0.0;    // exact V^{pi_k}_{k,1}(s_1) under the true kernel
  double v_comparator = 0.0;  // V^{pi*}_{k,1}(s_1)
  double beta = 0.0;
  bool containment = false;
  bool indicator_h = true;    // I_H^k
  double r0_increment = 0.0;
  int proj_iters = 0;
  double proj_residual = 0.0;
  double wall_ms = 0.0;
};

struct RunResult {
  std::vector<EpisodeRecord> records;
  std::vector<double> cumulative_regret;
  double final_regret = 0.0;
  double comparator_total = 0.0;
  int episodes_contained = 0;
};

/// Called after each episode with the projected occupancy measure and the
/// filled record (comparator fields still zero at that point).
using EpisodeObserver =
    std::function<void(int k, const OccupancyMeasure& z, const EpisodeRecord& rec)>;

/// Per-step view of the learning pass (learning algorithms only): the visited
/// transition, the moment weights chosen by the estimator, and the value
/// table whose rows are the regression targets.
struct StepInfo {
  int s = 0, a = 0, s_next = 0;
  const std::vector<double>* sigma_bar = nullptr;
  const std::vector<Eigen::VectorXd>* features = nullptr;  // phi_{k,h,m} per level
  const MomentBank* bank = nullptr;          // state before this step's updates
  const Eigen::MatrixXd* v_table = nullptr;  // (H+1) x S optimistic values
  bool indicator = true;
};
using StepObserver = std::function<void(int k, int h, const StepInfo& info)>;

/// Full per-episode loop: feasible set build, mirror-descent update, policy
/// extraction, trajectory, reveal, optimistic backup, moment estimation and
/// regression updates; comparator computed once at the end from the revealed
/// sequence.  Deterministic given the three seeds in the config.
RunResult run_experiment(const ExperimentConfig& cfg, const EpisodeObserver& observer = {},
                         const StepObserver& step_observer = {});

/// Same loop on a caller-supplied instance and schedule.
RunResult run_experiment(const ExperimentConfig& cfg, const LinearMixtureModel& model,
                         AdversarySchedule schedule, const EpisodeObserver& observer = {},
                         const StepObserver& step_observer = {});

/// Cumulative sum of v_comparator - v_executed.
std::vector<double> compute_regret(const std::vector<EpisodeRecord>& records);

struct SweepCell {
  double axis_value = 0.0;
  double mean_final_regret = 0.0;
  double stderr_final_regret = 0.0;
  std::vector<double> per_seed;
};

struct SweepResult {
  std::string axis;
  std::vector<SweepCell> cells;
  double loglog_slope = 0.0;  // least-squares fit of log(mean) vs log(value)
};

/// Independent seeded runs per axis value (axis in {K, H, d, S}); seeds are
/// derived per cell from the base config seeds.
SweepResult sweep(const ExperimentConfig& base, const std::string& axis,
                  const std::vector<double>& values, int num_seeds);

// ---- emission -----------------------------------------------------------------

std::string records_to_csv(const std::vector<EpisodeRecord>& records);
std::vector<EpisodeRecord> records_from_csv(const std::string& text);
void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

std::string run_summary_json(const ExperimentConfig& cfg, const RunResult& result);
std::string sweep_to_csv(const SweepResult& result);
std::string sweep_summary_json(const ExperimentConfig& cfg, const SweepResult& result);

/// Self-contained line plot of a cumulative series.
std::string series_to_svg(const std::vector<double>& ys, const std::string& title);

double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace omps
