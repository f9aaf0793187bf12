#include <cmath>

#include "doctest.h"
#include "omps/harness.hpp"
#include "omps/instances.hpp"

using namespace omps;

TEST_CASE("config: standard parameter bindings and strict key checking") {
  const std::string text = R"({
    "instance": {"generator": "basis-mixture", "num_states": 5, "num_actions": 3,
                 "horizon": 10, "dim": 4, "norm_bound": 2.0, "seed": 7},
    "adversary": {"kind": "oblivious-sequence", "seed": 8},
    "K": 500,
    "algorithm": "hf-o2ps",
    "run_seed": 9
  })";
  const ExperimentConfig cfg = ExperimentConfig::from_json_string(text);
  CHECK(cfg.resolved_alpha() == doctest::Approx(10.0 / std::sqrt(500.0)));
  CHECK(cfg.resolved_xi() == doctest::Approx(std::sqrt(4.0 / 5000.0)));
  CHECK(cfg.resolved_gamma() == doctest::Approx(std::pow(4.0, -0.25)));
  CHECK(cfg.resolved_lambda() == doctest::Approx(1.0));
  CHECK(cfg.resolved_levels() == static_cast<int>(std::ceil(std::log2(4.0 * 500 * 10))));

  CHECK_THROWS_AS(ExperimentConfig::from_json_string(R"({"bogus": 1})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::from_json_string(
                      R"({"overrides": {"alpha": -1.0}})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::from_json_string(
                      R"({"instance": {"generatorr": "tree"}})"),
                  std::invalid_argument);

  // round trip through to_json_string re-parses cleanly
  CHECK_NOTHROW(ExperimentConfig::from_json_string(cfg.to_json_string()));
}

TEST_CASE("run_experiment: zero rewards give zero regret") {
  ExperimentConfig cfg;
  cfg.num_states = 3; cfg.num_actions = 2; cfg.horizon = 3; cfg.dim = 2;
  cfg.num_episodes = 1;
  const LinearMixtureModel model = build_instance(cfg);
  std::vector<RewardFunction> zeros(1, RewardFunction{Eigen::MatrixXd::Zero(3, 2)});
  AdversarySchedule schedule(AdversaryKind::kFixed, zeros, 0);
  const RunResult result = run_experiment(cfg, model, schedule);
  CHECK(result.final_regret == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(result.records.size() == 1);
}

TEST_CASE("run_experiment: degenerate-fixed equals fixed pointwise") {
  ExperimentConfig a;
  a.num_states = 4; a.num_actions = 2; a.horizon = 4; a.dim = 2;
  a.num_episodes = 12;
  a.adversary = AdversaryKind::kFixed;
  a.instance_seed = 70; a.adversary_seed = 71; a.run_seed = 72;
  ExperimentConfig b = a;
  b.adversary = AdversaryKind::kDegenerateFixed;
  const RunResult ra = run_experiment(a);
  const RunResult rb = run_experiment(b);
  REQUIRE(ra.records.size() == rb.records.size());
  for (std::size_t i = 0; i < ra.records.size(); ++i) {
    CHECK(ra.records[i].v_bar == rb.records[i].v_bar);
    CHECK(ra.records[i].v_executed == rb.records[i].v_executed);
    CHECK(ra.records[i].realized_return == rb.records[i].realized_return);
  }
  CHECK(ra.final_regret == rb.final_regret);
}

TEST_CASE("run_experiment: known-transition tree run obeys the mirror-descent bound") {
  ExperimentConfig cfg;
  cfg.generator = "tree";
  cfg.num_actions = 2; cfg.tree_depth = 4; cfg.horizon = 4;
  cfg.algorithm = Algorithm::kOmdKnownTransition;
  cfg.adversary = AdversaryKind::kIidExpertRademacher;
  cfg.num_episodes = 80;
  cfg.tol = 1e-9;
  cfg.instance_seed = 73; cfg.adversary_seed = 74; cfg.run_seed = 75;
  const RunResult result = run_experiment(cfg);
  double lhs = 0.0;
  for (const auto& rec : result.records) lhs += rec.v_comparator - rec.v_bar;
  const double S = static_cast<double>(tree_num_states(2, 4));
  const double alpha = cfg.resolved_alpha();
  const double bound = cfg.horizon * std::log(S * S * 2.0) / alpha +
                       cfg.num_episodes * alpha / (2.0 * cfg.horizon);
  CHECK(lhs <= bound + 1e-6);
}

TEST_CASE("compute_regret: comparator equal to executed policy gives zero") {
  std::vector<EpisodeRecord> records(5);
  for (int i = 0; i < 5; ++i) {
    records[i].v_comparator = 0.3;
    records[i].v_executed = 0.3;
  }
  const auto series = compute_regret(records);
  CHECK(series.back() == doctest::Approx(0.0));
}

TEST_CASE("uniform baseline on a single-good-leaf tree pays the closed-form gap") {
  ExperimentConfig cfg;
  cfg.generator = "tree";
  cfg.num_actions = 2; cfg.tree_depth = 2; cfg.horizon = 2;
  cfg.algorithm = Algorithm::kUniformPolicy;
  cfg.num_episodes = 20;
  const LinearMixtureModel tree = build_instance(cfg);
  // reward 1/H on the unique edge into the last leaf
  RewardFunction r{Eigen::MatrixXd::Zero(tree.num_states, 2)};
  r.values(2, 1) = 0.5;  // node S[2,2] action 1 -> leaf S[3,4]
  std::vector<RewardFunction> tables(cfg.num_episodes, r);
  AdversarySchedule schedule(AdversaryKind::kFixed, tables, 0);
  const RunResult result = run_experiment(cfg, tree, schedule);
  // V* = 0.5, uniform value = 0.5/4; per-episode gap 0.375
  CHECK(result.final_regret == doctest::Approx(cfg.num_episodes * 0.375).epsilon(1e-10));
}

TEST_CASE("regret series is nondecreasing when every gap is nonnegative") {
  ExperimentConfig cfg;
  cfg.num_states = 4; cfg.num_actions = 2; cfg.horizon = 4; cfg.dim = 2;
  cfg.num_episodes = 15;
  cfg.adversary = AdversaryKind::kFixed;  // fixed reward: comparator optimal per episode
  cfg.instance_seed = 76; cfg.adversary_seed = 77; cfg.run_seed = 78;
  const RunResult result = run_experiment(cfg);
  for (std::size_t i = 1; i < result.cumulative_regret.size(); ++i)
    CHECK(result.cumulative_regret[i] >= result.cumulative_regret[i - 1] - 1e-12);
}

TEST_CASE("csv: empty record list yields a header-only document") {
  const std::string csv = records_to_csv({});
  CHECK(csv.find("k,realized_return") == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1);
  CHECK(records_from_csv(csv).empty());
}

TEST_CASE("csv round trip is bit exact; json summary parses with expected keys") {
  ExperimentConfig cfg;
  cfg.num_states = 3; cfg.num_actions = 2; cfg.horizon = 3; cfg.dim = 2;
  cfg.num_episodes = 8;
  cfg.instance_seed = 80; cfg.adversary_seed = 81; cfg.run_seed = 82;
  const RunResult result = run_experiment(cfg);
  const std::string csv = records_to_csv(result.records);
  const auto parsed = records_from_csv(csv);
  REQUIRE(parsed.size() == result.records.size());
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    CHECK(parsed[i].v_bar == result.records[i].v_bar);
    CHECK(parsed[i].v_opt == result.records[i].v_opt);
    CHECK(parsed[i].beta == result.records[i].beta);
    CHECK(parsed[i].wall_ms == result.records[i].wall_ms);
  }
  const std::string summary = run_summary_json(cfg, result);
  CHECK(summary.find("final_regret") != std::string::npos);
  CHECK(summary.find("\"K\": 8") != std::string::npos);

  const std::string svg = series_to_svg(result.cumulative_regret, "cumulative regret");
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.find("polyline") != std::string::npos);
}

TEST_CASE("sweep: single value produces one row; slope fits a power law") {
  ExperimentConfig cfg;
  cfg.num_states = 3; cfg.num_actions = 2; cfg.horizon = 3; cfg.dim = 2;
  cfg.num_episodes = 10;
  cfg.adversary = AdversaryKind::kFixed;
  const SweepResult one = sweep(cfg, "K", {12}, 2);
  CHECK(one.cells.size() == 1);
  CHECK(one.cells[0].per_seed.size() == 2);

  CHECK(loglog_slope({10, 100, 1000}, {2, 20, 200}) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(loglog_slope({10, 1000}, {3, 30}) == doctest::Approx(0.5).epsilon(1e-12));
}
