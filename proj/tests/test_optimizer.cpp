#include "mirrorbench/optimizer.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mb = mirrorbench;

namespace {

mb::SearchSpace default_space() {
  mb::SearchSpace space;
  space.x_min = 0.0;
  space.x_max = 40.0;
  space.y_min = -5.5;
  space.y_max = 5.5;
  space.theta_min = -M_PI;
  space.theta_max = M_PI;
  space.min_route_distance = 1.5;
  return space;
}

mb::Polyline straight_route() { return mb::Polyline({{0, 0, 1.2}, {40, 0, 1.2}}); }

/// Smooth objective with one interior optimum; lets the search be judged
/// against a closed-form answer.
double quadratic_score(const mb::MirrorPlacement& p) {
  const double dx = p.x - 20.0, dy = p.y - 3.0, dt = p.theta - 0.5;
  return -(dx * dx + dy * dy + dt * dt);
}

}  // namespace

TEST(SearchSpace, InBoundsIsInclusive) {
  const mb::SearchSpace space = default_space();
  EXPECT_TRUE(space.in_bounds({0.0, -5.5, -M_PI}));
  EXPECT_TRUE(space.in_bounds({40.0, 5.5, M_PI}));
  EXPECT_FALSE(space.in_bounds({-0.01, 0, 0}));
  EXPECT_FALSE(space.in_bounds({0, 5.51, 0}));
}

TEST(Feasibility, RequiresStandoffFromTheRoute) {
  const mb::SearchSpace space = default_space();
  const mb::Polyline route = straight_route();
  EXPECT_TRUE(mb::placement_feasible(space, route, {10, 2.0, 0}));
  EXPECT_FALSE(mb::placement_feasible(space, route, {10, 1.0, 0}));   // too close
  EXPECT_FALSE(mb::placement_feasible(space, route, {50, 3.0, 0}));   // out of bounds
  EXPECT_TRUE(mb::placement_feasible(space, route, {10, -1.5, 0}));   // boundary counts
}

TEST(Optimizer, FindsTheQuadraticOptimum) {
  mb::OptimizerConfig config;
  config.budget = 300;
  config.seed = 7;
  const mb::OptimizationResult result =
      mb::optimize_placement(default_space(), straight_route(), config, quadratic_score);
  EXPECT_NEAR(result.best_params.x, 20.0, 0.1);
  EXPECT_NEAR(result.best_params.y, 3.0, 0.1);
  EXPECT_NEAR(result.best_params.theta, 0.5, 0.1);
  EXPECT_GT(result.best_score, -0.03);
}

TEST(Optimizer, SpendsExactlyTheBudget) {
  mb::OptimizerConfig config;
  config.budget = 57;
  config.seed = 3;
  const auto result =
      mb::optimize_placement(default_space(), straight_route(), config, quadratic_score);
  EXPECT_EQ(result.history.size(), 57u);

  config.budget = 1;
  const auto tiny =
      mb::optimize_placement(default_space(), straight_route(), config, quadratic_score);
  EXPECT_EQ(tiny.history.size(), 1u);
  EXPECT_TRUE(tiny.history[0].feasible);
  EXPECT_EQ(tiny.best_score, tiny.history[0].score);
}

TEST(Optimizer, IncumbentIsMonotoneAndBestMatchesHistory) {
  mb::OptimizerConfig config;
  config.budget = 120;
  config.seed = 11;
  const auto result =
      mb::optimize_placement(default_space(), straight_route(), config, quadratic_score);
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& entry : result.history) {
    if (entry.feasible) best = std::max(best, entry.score);
    EXPECT_LE(entry.score, best + 1e-15);  // incumbent never regresses
  }
  EXPECT_DOUBLE_EQ(result.best_score, best);
}

TEST(Optimizer, FeasibleEntriesSatisfyTheConstraints) {
  const mb::SearchSpace space = default_space();
  const mb::Polyline route = straight_route();
  mb::OptimizerConfig config;
  config.budget = 150;
  config.seed = 19;
  config.sigma_y = 2.0;  // push refinement across the standoff boundary
  const auto result = mb::optimize_placement(space, route, config, quadratic_score);
  bool saw_infeasible = false;
  for (const auto& entry : result.history) {
    EXPECT_TRUE(space.in_bounds(entry.params));  // refinement clips to bounds
    if (entry.feasible) {
      EXPECT_GE(mb::route_distance_xy(route, entry.params.x, entry.params.y),
                space.min_route_distance - 1e-12);
    } else {
      saw_infeasible = true;
      EXPECT_EQ(entry.score, -std::numeric_limits<double>::infinity());
    }
  }
  // The quadratic optimum's y sits 3 m off the route with sigma_y = 2, so
  // some refinement draws should land inside the keep-out strip.
  EXPECT_TRUE(saw_infeasible);
}

TEST(Optimizer, DeterministicForAGivenSeed) {
  mb::OptimizerConfig config;
  config.budget = 80;
  config.seed = 23;
  const auto a =
      mb::optimize_placement(default_space(), straight_route(), config, quadratic_score);
  const auto b =
      mb::optimize_placement(default_space(), straight_route(), config, quadratic_score);
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i].params.x, b.history[i].params.x);
    EXPECT_EQ(a.history[i].params.y, b.history[i].params.y);
    EXPECT_EQ(a.history[i].params.theta, b.history[i].params.theta);
    EXPECT_EQ(a.history[i].score, b.history[i].score);
  }
  config.seed = 24;
  const auto c =
      mb::optimize_placement(default_space(), straight_route(), config, quadratic_score);
  EXPECT_NE(a.history[0].params.x, c.history[0].params.x);
}

TEST(Optimizer, PureRandomNeverRefines) {
  mb::OptimizerConfig config;
  config.budget = 60;
  config.seed = 29;
  config.strategy = mb::OptimizerStrategy::PureRandom;
  const auto result =
      mb::optimize_placement(default_space(), straight_route(), config, quadratic_score);
  EXPECT_EQ(result.history.size(), 60u);
  for (const auto& entry : result.history) {
    EXPECT_TRUE(entry.feasible);  // uniform phase rejects infeasible draws
  }
}

TEST(Optimizer, ImpossibleConstraintRaisesInfeasibleSpace) {
  mb::SearchSpace cramped = default_space();
  cramped.y_min = -0.5;
  cramped.y_max = 0.5;  // the whole box hugs the route
  cramped.min_route_distance = 5.0;
  mb::OptimizerConfig config;
  config.budget = 20;
  config.seed = 31;
  EXPECT_THROW(
      mb::optimize_placement(cramped, straight_route(), config, quadratic_score),
      mb::InfeasibleSpaceError);
}

TEST(Optimizer, RejectsInvalidConfigs) {
  mb::OptimizerConfig config;
  config.budget = 0;
  EXPECT_THROW(
      mb::optimize_placement(default_space(), straight_route(), config, quadratic_score),
      std::invalid_argument);
}

TEST(BaselineSampler, HitsTheRequestedStandoffExactly) {
  const mb::SearchSpace space = default_space();
  const mb::Polyline route = straight_route();
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 99ULL}) {
    const mb::MirrorPlacement p = mb::sample_random_placement(space, route, 2.5, seed);
    EXPECT_TRUE(space.in_bounds(p));
    EXPECT_NEAR(mb::route_distance_xy(route, p.x, p.y), 2.5, 1e-6);
  }
}

TEST(BaselineSampler, SeedControlsTheDraw) {
  const mb::SearchSpace space = default_space();
  const mb::Polyline route = straight_route();
  const auto a = mb::sample_random_placement(space, route, 2.0, 5);
  const auto b = mb::sample_random_placement(space, route, 2.0, 5);
  const auto c = mb::sample_random_placement(space, route, 2.0, 6);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.y, b.y);
  EXPECT_EQ(a.theta, b.theta);
  EXPECT_TRUE(a.x != c.x || a.y != c.y || a.theta != c.theta);
}

TEST(BaselineSampler, UnreachableStandoffThrows) {
  const mb::SearchSpace space = default_space();
  const mb::Polyline route = straight_route();
  EXPECT_THROW(mb::sample_random_placement(space, route, 50.0, 1),
               mb::InfeasibleSpaceError);
  EXPECT_THROW(mb::sample_random_placement(space, route, -1.0, 1), std::invalid_argument);
}

TEST(History, CsvListsTrialsAndRendersInfinities) {
  mb::OptimizationResult result;
  result.best_params = {1.0, 2.0, 0.25};
  result.best_score = 3.5;
  result.history.push_back({{1.0, 2.0, 0.25}, 3.5, true});
  result.history.push_back(
      {{4.0, 0.0, 0.0}, -std::numeric_limits<double>::infinity(), false});
  std::ostringstream os;
  mb::write_optimizer_history_csv(os, result);
  const std::string text = os.str();
  EXPECT_EQ(text.rfind("trial,x,y,theta,feasible,score\n", 0), 0u);
  EXPECT_NE(text.find("0,1,2,0.25,1,3.5"), std::string::npos);
  EXPECT_NE(text.find("-inf"), std::string::npos);
  EXPECT_NE(text.find("# best"), std::string::npos);
}
