// Copyright (c) 2026 the quadblow developers
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <utility>
#include <vector>

#include "quadblow/dynamics.hpp"
#include "quadblow/ensemble.hpp"
#include "quadblow/exact.hpp"
#include "test_maps.hpp"

using namespace quadblow;
using qbtest::domain_error_code;

namespace {

IntegratorConfig cfg_with(double t_end) {
  IntegratorConfig cfg;
  cfg.t_end = t_end;
  return cfg;
}

}  // namespace

TEST_CASE("scalar blowup is detected at the pole") {
  const QuadraticMap Q = matrix_square_map(1);
  const Trajectory traj = integrate(Q, StateVector({-1.0}), cfg_with(2.0));
  REQUIRE(traj.status == TrajectoryStatus::BlowupDetected);
  REQUIRE(traj.blowup.has_value());
  CHECK(std::abs(traj.blowup->estimated_time - 1.0) <= 1e-6);
  CHECK(traj.blowup->fit_residual <= 1e-6);
  CHECK(traj.norms.back() >= cfg_with(2.0).r_max);
  CHECK(traj.blowup->estimated_time > traj.times.back());
}

TEST_CASE("decaying scalar solution reaches the horizon") {
  const QuadraticMap Q = matrix_square_map(1);
  const Trajectory traj = integrate(Q, StateVector({1.0}), cfg_with(10.0));
  REQUIRE(traj.status == TrajectoryStatus::ReachedHorizon);
  CHECK(traj.times.back() == Catch::Approx(10.0).margin(1e-12));
  CHECK(traj.states.back()[0] == Catch::Approx(1.0 / 11.0).margin(1e-8));
}

TEST_CASE("trajectory invariants hold") {
  const QuadraticMap Q = matrix_square_map(2);
  const Trajectory traj =
      integrate(Q, flatten(SquareMatrix(2, {0.0, -1.0, 1.0, 0.0})), cfg_with(5.0));
  REQUIRE(traj.times.size() == traj.states.size());
  REQUIRE(traj.times.size() == traj.norms.size());
  CHECK(traj.times.front() == 0.0);
  for (std::size_t i = 1; i < traj.times.size(); ++i)
    CHECK(traj.times[i] > traj.times[i - 1]);
  for (std::size_t i = 0; i < traj.norms.size(); ++i)
    CHECK(std::abs(traj.norms[i] - traj.states[i].norm()) <= 1e-14 * (1.0 + traj.norms[i]));
}

TEST_CASE("rotation initial condition tracks the closed form") {
  const QuadraticMap Q = matrix_square_map(2);
  const SquareMatrix A(2, {0.0, -1.0, 1.0, 0.0});
  const Trajectory traj = integrate(Q, flatten(A), cfg_with(50.0));
  REQUIRE(traj.status == TrajectoryStatus::ReachedHorizon);
  for (std::size_t i = 0; i < traj.times.size(); i += 7) {
    const Eigen::MatrixXd want = matrix_solution(A, traj.times[i]).to_eigen();
    const Eigen::MatrixXd got = unflatten(traj.states[i]).to_eigen();
    CHECK((got - want).norm() <= 1e-7 * want.norm());
  }
}

TEST_CASE("estimate_blowup_time on exact affine data") {
  // 1/x(t) = 1 - t sampled late
  std::vector<std::pair<double, double>> tail;
  for (double t : {0.90, 0.95, 0.99}) tail.emplace_back(t, 1.0 / (1.0 - t));
  const BlowupEstimate est = estimate_blowup_time(tail);
  CHECK(std::abs(est.estimated_time - 1.0) <= 1e-9);
  CHECK(est.fit_residual <= 1e-10);
}

TEST_CASE("estimate_blowup_time error paths") {
  std::vector<std::pair<double, double>> constant{{0.0, 2.0}, {0.5, 2.0}, {1.0, 2.0}};
  CHECK(domain_error_code([&] { estimate_blowup_time(constant); }) == "no blowup signature");

  std::vector<std::pair<double, double>> decreasing{{0.0, 3.0}, {0.5, 2.0}, {1.0, 1.0}};
  CHECK(domain_error_code([&] { estimate_blowup_time(decreasing); }) == "no blowup signature");

  std::vector<std::pair<double, double>> short_tail{{0.0, 1.0}, {0.5, 2.0}};
  CHECK_THROWS_AS(estimate_blowup_time(short_tail), std::invalid_argument);
}

TEST_CASE("classify_trajectory verdicts") {
  const QuadraticMap Q = matrix_square_map(2);
  const auto blow = classify_trajectory(Q, flatten(SquareMatrix(2, {-1, 0, 0, 1})), cfg_with(5.0));
  REQUIRE(blow.has_value());
  CHECK(std::abs(*blow - 1.0) <= 1e-4);

  const auto rot = classify_trajectory(Q, flatten(SquareMatrix(2, {0, -1, 1, 0})), cfg_with(5.0));
  CHECK_FALSE(rot.has_value());

  const auto eq = classify_trajectory(Q, StateVector::zeros(4), cfg_with(5.0));
  CHECK_FALSE(eq.has_value());
}

TEST_CASE("integrated scalar blowup times match the closed form") {
  const QuadraticMap Q = matrix_square_map(1);
  SplitMix64 rng(606);
  for (int trial = 0; trial < 100; ++trial) {
    const double a = -5.0 + 4.9 * rng.next_double();  // in [-5, -0.1]
    const double t_pole = -1.0 / a;
    const auto verdict = classify_trajectory(Q, StateVector({a}), cfg_with(12.0));
    REQUIRE(verdict.has_value());
    CHECK(std::abs(*verdict - t_pole) <= 1e-5 * t_pole);
  }
}

TEST_CASE("integrated matrix verdicts match the spectral oracle") {
  SplitMix64 rng(707);
  int with_blowup = 0;
  int without = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 1 + static_cast<int>(rng.next_u64() % 4);
    const SquareMatrix A = sample_gaussian_matrix(d, rng.next_u64());
    const QuadraticMap Q = matrix_square_map(d);
    const auto t_pole = matrix_blowup_time(A);
    if (t_pole) {
      const auto verdict = classify_trajectory(Q, flatten(A), cfg_with(2.0 * *t_pole));
      REQUIRE(verdict.has_value());
      CHECK(std::abs(*verdict - *t_pole) <= 1e-3 * *t_pole);
      ++with_blowup;
    } else {
      const Trajectory traj = integrate(Q, flatten(A), cfg_with(10.0));
      REQUIRE(traj.status == TrajectoryStatus::ReachedHorizon);
      for (std::size_t i = 0; i < traj.times.size(); i += 11) {
        const Eigen::MatrixXd want = matrix_solution(A, traj.times[i]).to_eigen();
        const Eigen::MatrixXd got = unflatten(traj.states[i]).to_eigen();
        CHECK((got - want).norm() <= 1e-6 * (1.0 + want.norm()));
      }
      ++without;
    }
  }
  CHECK(with_blowup > 10);
  CHECK(without > 10);
}

TEST_CASE("tightening tolerances never demotes a blowup verdict") {
  SplitMix64 rng(808);
  for (int trial = 0; trial < 40; ++trial) {
    const int d = 1 + static_cast<int>(rng.next_u64() % 3);
    const SquareMatrix A = sample_gaussian_matrix(d, rng.next_u64());
    const QuadraticMap Q = matrix_square_map(d);
    IntegratorConfig coarse = cfg_with(8.0);
    IntegratorConfig fine = coarse;
    fine.rtol *= 0.5;
    fine.atol *= 0.5;
    const auto v_coarse = classify_trajectory(Q, flatten(A), coarse);
    const auto v_fine = classify_trajectory(Q, flatten(A), fine);
    if (v_coarse.has_value()) CHECK(v_fine.has_value());
  }
}

TEST_CASE("negating the field reverses time") {
  SplitMix64 rng(909);
  for (int trial = 0; trial < 20; ++trial) {
    const QuadraticMap Q = random_quadratic_map(3, rng.next_u64());
    const QuadraticMap Qneg = Q.scaled(-1.0);
    GaussianStream g(rng.next_u64());
    StateVector x0 = StateVector::zeros(3);
    for (int i = 0; i < 3; ++i) x0[i] = 0.1 * g.next();

    const Trajectory fwd = integrate(Q, x0, cfg_with(0.4));
    REQUIRE(fwd.status == TrajectoryStatus::ReachedHorizon);
    const Trajectory back = integrate(Qneg, fwd.states.back(), cfg_with(0.4));
    REQUIRE(back.status == TrajectoryStatus::ReachedHorizon);
    const StateVector& x_back = back.states.back();
    double diff = 0.0;
    for (int i = 0; i < 3; ++i) diff = std::max(diff, std::abs(x_back[i] - x0[i]));
    CHECK(diff <= 1e-8);
  }
}

TEST_CASE("integrator config validation") {
  IntegratorConfig cfg;
  cfg.h_min = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = IntegratorConfig{};
  cfg.rtol = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = IntegratorConfig{};
  cfg.fit_window = 2;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = IntegratorConfig{};
  cfg.t_end = -1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("integrate rejects mismatched input") {
  const QuadraticMap Q = matrix_square_map(2);
  CHECK(domain_error_code([&] { integrate(Q, StateVector({1.0}), cfg_with(1.0)); }) ==
        "dimension mismatch");
}
