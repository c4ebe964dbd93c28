// Copyright (c) 2026 the quadblow developers
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "quadblow/core.hpp"
#include "quadblow/error.hpp"

namespace quadblow {

struct IntegratorConfig {
  double rtol = 1e-10;
  double atol = 1e-12;
  double h_init = 1e-3;
  double h_min = 1e-14;
  double r_max = 1e8;        // norm threshold that declares blowup
  double t_end = 10.0;       // integration horizon
  std::size_t max_steps = 1'000'000;
  int fit_window = 10;       // trailing samples used for the blowup-time fit

  void validate() const {
    if (!(rtol > 0.0) || !(atol > 0.0))
      throw std::invalid_argument("IntegratorConfig: rtol and atol must be positive");
    if (!(h_min < h_init))
      throw std::invalid_argument("IntegratorConfig: h_min must be < h_init");
    if (!(h_min > 0.0) || !(h_init > 0.0))
      throw std::invalid_argument("IntegratorConfig: step sizes must be positive");
    if (!(r_max > 0.0)) throw std::invalid_argument("IntegratorConfig: r_max must be positive");
    if (!(t_end > 0.0)) throw std::invalid_argument("IntegratorConfig: t_end must be positive");
    if (fit_window < 3) throw std::invalid_argument("IntegratorConfig: fit_window must be >= 3");
    if (max_steps < 1) throw std::invalid_argument("IntegratorConfig: max_steps must be >= 1");
  }
};

enum class TrajectoryStatus { ReachedHorizon, BlowupDetected, StepUnderflow, StepLimit };

struct BlowupEstimate {
  double estimated_time = 0.0;
  double fit_residual = 0.0;
};

struct Trajectory {
  std::vector<double> times;        // accepted step times, strictly increasing from 0
  std::vector<StateVector> states;  // one state per accepted step
  std::vector<double> norms;        // Euclidean norms of the states
  TrajectoryStatus status = TrajectoryStatus::ReachedHorizon;
  std::optional<BlowupEstimate> blowup;
};

/// Blowup-time estimate from trailing (t, |X|) samples. Solutions of
/// quadratic ODEs blow up like 1/(T-t), so 1/|X| is asymptotically affine
/// in t; the root of its least-squares line is the estimate, and the
/// relative RMS misfit is a self-diagnostic.
inline BlowupEstimate estimate_blowup_time(
    const std::vector<std::pair<double, double>>& tail) {
  const std::size_t m = tail.size();
  if (m < 3)
    throw std::invalid_argument("estimate_blowup_time: need at least 3 samples");
  for (std::size_t i = 0; i < m; ++i) {
    if (!(tail[i].second > 0.0))
      throw std::invalid_argument("estimate_blowup_time: norms must be positive");
    if (i > 0 && !(tail[i].second > tail[i - 1].second))
      throw DomainError("no blowup signature",
                        "estimate_blowup_time: norms are not strictly increasing");
    if (i > 0 && !(tail[i].first > tail[i - 1].first))
      throw std::invalid_argument("estimate_blowup_time: times must be strictly increasing");
  }

  double t_mean = 0.0;
  double y_mean = 0.0;
  for (const auto& [t, r] : tail) {
    t_mean += t;
    y_mean += 1.0 / r;
  }
  t_mean /= static_cast<double>(m);
  y_mean /= static_cast<double>(m);

  double sxx = 0.0;
  double sxy = 0.0;
  for (const auto& [t, r] : tail) {
    const double dt = t - t_mean;
    sxx += dt * dt;
    sxy += dt * (1.0 / r - y_mean);
  }
  const double slope = sxy / sxx;
  if (!(slope < 0.0))
    throw DomainError("no blowup signature",
                      "estimate_blowup_time: 1/|X| is not decreasing in t",
                      {{"slope", slope}});

  double ss = 0.0;
  for (const auto& [t, r] : tail) {
    const double res = 1.0 / r - (y_mean + slope * (t - t_mean));
    ss += res * res;
  }
  BlowupEstimate est;
  est.estimated_time = t_mean - y_mean / slope;
  est.fit_residual = std::sqrt(ss / static_cast<double>(m)) / y_mean;
  return est;
}

namespace detail {

// Dormand-Prince 5(4) tableau.
inline constexpr double kA21 = 1.0 / 5.0;
inline constexpr double kA31 = 3.0 / 40.0, kA32 = 9.0 / 40.0;
inline constexpr double kA41 = 44.0 / 45.0, kA42 = -56.0 / 15.0, kA43 = 32.0 / 9.0;
inline constexpr double kA51 = 19372.0 / 6561.0, kA52 = -25360.0 / 2187.0,
                        kA53 = 64448.0 / 6561.0, kA54 = -212.0 / 729.0;
inline constexpr double kA61 = 9017.0 / 3168.0, kA62 = -355.0 / 33.0,
                        kA63 = 46732.0 / 5247.0, kA64 = 49.0 / 176.0,
                        kA65 = -5103.0 / 18656.0;
inline constexpr double kB1 = 35.0 / 384.0, kB3 = 500.0 / 1113.0, kB4 = 125.0 / 192.0,
                        kB5 = -2187.0 / 6784.0, kB6 = 11.0 / 84.0;
inline constexpr double kE1 = 71.0 / 57600.0, kE3 = -71.0 / 16695.0, kE4 = 71.0 / 1920.0,
                        kE5 = -17253.0 / 339200.0, kE6 = 22.0 / 525.0, kE7 = -1.0 / 40.0;

inline std::vector<std::pair<double, double>> monotone_tail(
    const std::vector<double>& times, const std::vector<double>& norms,
    int fit_window) {
  const std::size_t n = times.size();
  const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(fit_window), n);
  std::size_t begin = n - take;
  // Longest suffix with strictly increasing norms.
  for (std::size_t i = n - 1; i > begin; --i) {
    if (!(norms[i] > norms[i - 1])) {
      begin = i;
      break;
    }
  }
  std::vector<std::pair<double, double>> tail;
  tail.reserve(n - begin);
  for (std::size_t i = begin; i < n; ++i) tail.emplace_back(times[i], norms[i]);
  return tail;
}

}  // namespace detail

/// Adaptive Dormand-Prince 5(4) integration of dX/dt = Q(X) with PI step
/// control (safety 0.9, step ratio clamped to [0.2, 5]). A step is accepted
/// when the embedded error estimate is below atol + rtol*|X|. Terminates
/// with the first applicable status: |X| >= r_max (blowup, with the fitted
/// time estimate), t >= t_end (horizon), step underflow, step limit.
inline Trajectory integrate(const QuadraticMap& Q, const StateVector& X0,
                            const IntegratorConfig& cfg) {
  cfg.validate();
  detail::require_same_dim(Q, X0, "integrate");
  detail::require_finite(X0, "integrate");
  if (X0.norm() >= cfg.r_max)
    throw std::invalid_argument("integrate: initial norm already at the blowup threshold");

  Trajectory traj;
  Eigen::VectorXd y = as_eigen(X0);
  double t = 0.0;
  traj.times.push_back(t);
  traj.states.push_back(X0);
  traj.norms.push_back(y.norm());

  Eigen::VectorXd k1 = detail::eval_vec(Q, y);
  Eigen::VectorXd k2(y.size()), k3(y.size()), k4(y.size()), k5(y.size()), k6(y.size()),
      k7(y.size()), y_new(y.size()), err_vec(y.size());

  double h = std::min(cfg.h_init, cfg.t_end);
  double err_old = 1e-4;
  std::size_t steps = 0;

  while (true) {
    if (steps >= cfg.max_steps) {
      traj.status = TrajectoryStatus::StepLimit;
      return traj;
    }
    ++steps;

    const bool last_step = h >= cfg.t_end - t;
    const double h_step = last_step ? cfg.t_end - t : h;

    k2 = detail::eval_vec(Q, y + h_step * (detail::kA21 * k1));
    k3 = detail::eval_vec(Q, y + h_step * (detail::kA31 * k1 + detail::kA32 * k2));
    k4 = detail::eval_vec(Q, y + h_step * (detail::kA41 * k1 + detail::kA42 * k2 +
                                           detail::kA43 * k3));
    k5 = detail::eval_vec(Q, y + h_step * (detail::kA51 * k1 + detail::kA52 * k2 +
                                           detail::kA53 * k3 + detail::kA54 * k4));
    k6 = detail::eval_vec(Q, y + h_step * (detail::kA61 * k1 + detail::kA62 * k2 +
                                           detail::kA63 * k3 + detail::kA64 * k4 +
                                           detail::kA65 * k5));
    y_new = y + h_step * (detail::kB1 * k1 + detail::kB3 * k3 + detail::kB4 * k4 +
                          detail::kB5 * k5 + detail::kB6 * k6);
    k7 = detail::eval_vec(Q, y_new);
    err_vec = h_step * (detail::kE1 * k1 + detail::kE3 * k3 + detail::kE4 * k4 +
                        detail::kE5 * k5 + detail::kE6 * k6 + detail::kE7 * k7);

    const bool finite = y_new.allFinite() && err_vec.allFinite();
    const double scale =
        cfg.atol + cfg.rtol * std::max(y.norm(), finite ? y_new.norm() : 0.0);
    const double err = finite ? err_vec.norm() / scale
                              : std::numeric_limits<double>::infinity();

    if (!(err <= 1.0)) {
      const double fac =
          finite ? std::clamp(0.9 * std::pow(err, -0.2), 0.2, 1.0) : 0.2;
      h = h_step * fac;
      if (h < cfg.h_min) {
        traj.status = TrajectoryStatus::StepUnderflow;
        return traj;
      }
      continue;
    }

    t = last_step ? cfg.t_end : t + h_step;
    y.swap(y_new);
    k1.swap(k7);
    traj.times.push_back(t);
    traj.states.push_back(from_eigen(y));
    traj.norms.push_back(y.norm());

    if (traj.norms.back() >= cfg.r_max) {
      traj.status = TrajectoryStatus::BlowupDetected;
      traj.blowup =
          estimate_blowup_time(detail::monotone_tail(traj.times, traj.norms, cfg.fit_window));
      return traj;
    }
    if (last_step) {
      traj.status = TrajectoryStatus::ReachedHorizon;
      return traj;
    }

    // PI controller (Hairer's stabilized exponents for order 5).
    double fac = 0.9 * std::pow(err > 0.0 ? err : 1e-30, -0.17) * std::pow(err_old, 0.04);
    fac = std::clamp(fac, 0.2, 5.0);
    h = h_step * fac;
    err_old = std::max(err, 1e-4);
  }
}

/// Blowup verdict: estimated blowup time when detected, empty when the
/// horizon was reached. Inconclusive integrator terminations (underflow,
/// step limit) raise an error instead of being coerced to a verdict.
inline std::optional<double> classify_trajectory(const QuadraticMap& Q,
                                                 const StateVector& X0,
                                                 const IntegratorConfig& cfg) {
  const Trajectory traj = integrate(Q, X0, cfg);
  switch (traj.status) {
    case TrajectoryStatus::BlowupDetected:
      return traj.blowup->estimated_time;
    case TrajectoryStatus::ReachedHorizon:
      return std::nullopt;
    case TrajectoryStatus::StepUnderflow:
      throw DomainError("inconclusive integration",
                        "classify_trajectory: step size underflow",
                        {{"t_reached", traj.times.back()}, {"norm", traj.norms.back()}});
    case TrajectoryStatus::StepLimit:
      throw DomainError("inconclusive integration", "classify_trajectory: step limit reached",
                        {{"t_reached", traj.times.back()}, {"norm", traj.norms.back()}});
  }
  throw std::logic_error("classify_trajectory: unreachable");
}

}  // namespace quadblow
