// Copyright (c) 2026 the quadblow developers
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "quadblow/core.hpp"
#include "quadblow/dynamics.hpp"
#include "quadblow/ensemble.hpp"
#include "quadblow/exact.hpp"
#include "quadblow/spherical.hpp"
#include "quadblow/version.hpp"

namespace quadblow {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Core types

inline json json_of(const StateVector& x) { return json{{"coords", x.coords}}; }

inline StateVector load_state_vector(const json& j) {
  StateVector x(j.at("coords").get<std::vector<double>>());
  if (x.dim() < 1) throw std::invalid_argument("StateVector: empty coords");
  if (!x.all_finite()) throw std::invalid_argument("StateVector: non-finite coords");
  return x;
}

inline json json_of(const QuadraticMap& Q) {
  return json{{"dim", Q.dim()}, {"coeffs", Q.coeffs()}};
}

/// Loads a coefficient tensor; the constructor symmetrizes in the last two
/// indices, and the returned map records the symmetrization defect.
inline QuadraticMap load_quadratic_map(const json& j) {
  return QuadraticMap(j.at("dim").get<int>(), j.at("coeffs").get<std::vector<double>>());
}

inline json json_of(const DegeneracyReport& r) {
  return json{{"min_norm", r.min_norm},
              {"argmin", r.argmin.coords},
              {"is_degenerate", r.is_degenerate}};
}

inline DegeneracyReport load_degeneracy_report(const json& j) {
  DegeneracyReport r;
  r.min_norm = j.at("min_norm").get<double>();
  r.argmin = StateVector(j.at("argmin").get<std::vector<double>>());
  r.is_degenerate = j.at("is_degenerate").get<bool>();
  return r;
}

// ---------------------------------------------------------------------------
// Exact solutions

inline json json_of(const SquareMatrix& A) {
  return json{{"d", A.d}, {"entries", A.entries}};
}

inline SquareMatrix load_square_matrix(const json& j) {
  return SquareMatrix(j.at("d").get<int>(), j.at("entries").get<std::vector<double>>());
}

inline std::string to_string(BlowupClass c) {
  switch (c) {
    case BlowupClass::ForwardBlowup: return "forward_blowup";
    case BlowupClass::BackwardOnlyBlowup: return "backward_only_blowup";
    case BlowupClass::NoRealBlowup: return "no_real_blowup";
  }
  return "no_real_blowup";
}

inline BlowupClass blowup_class_from_string(const std::string& s) {
  if (s == "forward_blowup") return BlowupClass::ForwardBlowup;
  if (s == "backward_only_blowup") return BlowupClass::BackwardOnlyBlowup;
  if (s == "no_real_blowup") return BlowupClass::NoRealBlowup;
  throw std::invalid_argument("unknown blowup classification: " + s);
}

inline json json_of(const SpectralReport& r) {
  json eig = json::array();
  for (const auto& lambda : r.eigenvalues)
    eig.push_back(json{{"re", lambda.real()}, {"im", lambda.imag()}});
  json j{{"eigenvalues", eig},
         {"real_eigenvalues", r.real_eigenvalues},
         {"classification", to_string(r.classification)}};
  if (r.forward_blowup_time) j["forward_blowup_time"] = *r.forward_blowup_time;
  return j;
}

inline SpectralReport load_spectral_report(const json& j) {
  SpectralReport r;
  for (const auto& e : j.at("eigenvalues"))
    r.eigenvalues.emplace_back(e.at("re").get<double>(), e.at("im").get<double>());
  r.real_eigenvalues = j.at("real_eigenvalues").get<std::vector<double>>();
  r.classification = blowup_class_from_string(j.at("classification").get<std::string>());
  if (j.contains("forward_blowup_time"))
    r.forward_blowup_time = j.at("forward_blowup_time").get<double>();
  return r;
}

// ---------------------------------------------------------------------------
// Trajectories

inline std::string to_string(TrajectoryStatus s) {
  switch (s) {
    case TrajectoryStatus::ReachedHorizon: return "reached_horizon";
    case TrajectoryStatus::BlowupDetected: return "blowup_detected";
    case TrajectoryStatus::StepUnderflow: return "step_underflow";
    case TrajectoryStatus::StepLimit: return "step_limit";
  }
  return "reached_horizon";
}

inline TrajectoryStatus trajectory_status_from_string(const std::string& s) {
  if (s == "reached_horizon") return TrajectoryStatus::ReachedHorizon;
  if (s == "blowup_detected") return TrajectoryStatus::BlowupDetected;
  if (s == "step_underflow") return TrajectoryStatus::StepUnderflow;
  if (s == "step_limit") return TrajectoryStatus::StepLimit;
  throw std::invalid_argument("unknown trajectory status: " + s);
}

/// Sidecar record for a persisted trajectory: termination status plus the
/// blowup estimate when there is one.
struct TrajectorySummary {
  TrajectoryStatus status = TrajectoryStatus::ReachedHorizon;
  std::optional<BlowupEstimate> blowup;
  double t_final = 0.0;
  double final_norm = 0.0;
  std::size_t steps = 0;
};

inline TrajectorySummary summary_of(const Trajectory& traj) {
  TrajectorySummary s;
  s.status = traj.status;
  s.blowup = traj.blowup;
  s.t_final = traj.times.back();
  s.final_norm = traj.norms.back();
  s.steps = traj.times.size();
  return s;
}

inline json json_of(const TrajectorySummary& s) {
  json j{{"status", to_string(s.status)},
         {"t_final", s.t_final},
         {"final_norm", s.final_norm},
         {"steps", s.steps}};
  if (s.blowup) {
    j["estimated_time"] = s.blowup->estimated_time;
    j["fit_residual"] = s.blowup->fit_residual;
  }
  return j;
}

inline TrajectorySummary load_trajectory_summary(const json& j) {
  TrajectorySummary s;
  s.status = trajectory_status_from_string(j.at("status").get<std::string>());
  s.t_final = j.at("t_final").get<double>();
  s.final_norm = j.at("final_norm").get<double>();
  s.steps = j.at("steps").get<std::size_t>();
  if (j.contains("estimated_time")) {
    BlowupEstimate est;
    est.estimated_time = j.at("estimated_time").get<double>();
    est.fit_residual = j.at("fit_residual").get<double>();
    s.blowup = est;
  }
  return s;
}

/// Decimal with 17 significant digits; reparses to the identical double.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// CSV emission: header `t,norm,coord_0,...`, one row per accepted step.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  const int n = traj.states.empty() ? 0 : traj.states.front().dim();
  os << "t,norm";
  for (int i = 0; i < n; ++i) os << ",coord_" << i;
  os << "\n";
  for (std::size_t row = 0; row < traj.times.size(); ++row) {
    os << format_double(traj.times[row]) << "," << format_double(traj.norms[row]);
    for (int i = 0; i < n; ++i) os << "," << format_double(traj.states[row][i]);
    os << "\n";
  }
}

// ---------------------------------------------------------------------------
// Invariant lines and certificates

inline json json_of(const InvariantLine& line) {
  return json{{"v", line.v.coords}, {"lambda", line.lambda}, {"residual", line.residual}};
}

inline InvariantLine load_invariant_line(const json& j) {
  InvariantLine line;
  line.v = StateVector(j.at("v").get<std::vector<double>>());
  line.lambda = j.at("lambda").get<double>();
  line.residual = j.at("residual").get<double>();
  return line;
}

inline json json_of(const BlowupCertificate& cert) {
  json j{{"v", cert.line.v.coords},
         {"lambda", cert.line.lambda},
         {"residual", cert.line.residual},
         {"c0", cert.c0},
         {"predicted_time", cert.predicted_time}};
  if (cert.verified_time) j["verified_time"] = *cert.verified_time;
  if (cert.verification_error) j["verification_error"] = *cert.verification_error;
  return j;
}

inline BlowupCertificate load_certificate(const json& j) {
  BlowupCertificate cert;
  cert.line.v = StateVector(j.at("v").get<std::vector<double>>());
  cert.line.lambda = j.at("lambda").get<double>();
  cert.line.residual = j.at("residual").get<double>();
  cert.c0 = j.at("c0").get<double>();
  cert.predicted_time = j.at("predicted_time").get<double>();
  cert.x0 = StateVector::zeros(cert.line.v.dim());
  for (int i = 0; i < cert.x0.dim(); ++i) cert.x0[i] = cert.c0 * cert.line.v[i];
  if (j.contains("verified_time")) cert.verified_time = j.at("verified_time").get<double>();
  if (j.contains("verification_error"))
    cert.verification_error = j.at("verification_error").get<double>();
  return cert;
}

inline json json_of(const DegreeReport& r) {
  return json{{"degree", r.degree}, {"lefschetz", r.lefschetz}, {"samples_used", r.samples_used}};
}

inline DegreeReport load_degree_report(const json& j) {
  DegreeReport r;
  r.degree = j.at("degree").get<long>();
  r.lefschetz = j.at("lefschetz").get<long>();
  r.samples_used = j.at("samples_used").get<std::size_t>();
  return r;
}

// ---------------------------------------------------------------------------
// Ensembles

inline std::string to_string(EnsembleKind k) {
  return k == EnsembleKind::Q1RandomQ ? "q1_random_q" : "q2_matrix_case";
}

inline EnsembleKind ensemble_kind_from_string(const std::string& s) {
  if (s == "q1_random_q") return EnsembleKind::Q1RandomQ;
  if (s == "q2_matrix_case") return EnsembleKind::Q2MatrixCase;
  throw std::invalid_argument("unknown ensemble kind: " + s);
}

inline json json_of(const IntegratorConfig& c) {
  return json{{"rtol", c.rtol},         {"atol", c.atol},
              {"h_init", c.h_init},     {"h_min", c.h_min},
              {"r_max", c.r_max},       {"t_end", c.t_end},
              {"max_steps", c.max_steps}, {"fit_window", c.fit_window}};
}

inline IntegratorConfig load_integrator_config(const json& j) {
  IntegratorConfig c;
  c.rtol = j.at("rtol").get<double>();
  c.atol = j.at("atol").get<double>();
  c.h_init = j.at("h_init").get<double>();
  c.h_min = j.at("h_min").get<double>();
  c.r_max = j.at("r_max").get<double>();
  c.t_end = j.at("t_end").get<double>();
  c.max_steps = j.at("max_steps").get<std::size_t>();
  c.fit_window = j.at("fit_window").get<int>();
  return c;
}

inline json json_of(const EnsembleSpec& s) {
  return json{{"kind", to_string(s.kind)},
              {"dim", s.dim},
              {"n_samples", s.n_samples},
              {"master_seed", s.master_seed},
              {"integrator", json_of(s.integrator)},
              {"verify_fraction", s.verify_fraction}};
}

inline EnsembleSpec load_ensemble_spec(const json& j) {
  EnsembleSpec s;
  s.kind = ensemble_kind_from_string(j.at("kind").get<std::string>());
  s.dim = j.at("dim").get<int>();
  s.n_samples = j.at("n_samples").get<std::size_t>();
  s.master_seed = j.at("master_seed").get<std::uint64_t>();
  s.integrator = load_integrator_config(j.at("integrator"));
  s.verify_fraction = j.at("verify_fraction").get<double>();
  return s;
}

inline json json_of(const EnsembleResult& r) {
  json failures = json::array();
  for (const auto& f : r.failure_cases)
    failures.push_back(json{{"sample_index", f.sample_index}, {"diagnostic", f.diagnostic}});
  return json{{"spec", json_of(r.spec)},
              {"successes", r.successes},
              {"failures", r.failures},
              {"estimate", r.estimate},
              {"ci", {r.ci_low, r.ci_high}},
              {"companion", r.companion},
              {"failures_detail", failures},
              {"wall_time_seconds", r.wall_time_seconds},
              {"tool_version", kToolVersion}};
}

inline EnsembleResult load_ensemble_result(const json& j) {
  EnsembleResult r;
  r.spec = load_ensemble_spec(j.at("spec"));
  r.successes = j.at("successes").get<std::size_t>();
  r.failures = j.at("failures").get<std::size_t>();
  r.estimate = j.at("estimate").get<double>();
  r.ci_low = j.at("ci")[0].get<double>();
  r.ci_high = j.at("ci")[1].get<double>();
  for (const auto& f : j.at("failures_detail"))
    r.failure_cases.push_back(
        {f.at("sample_index").get<std::size_t>(), f.at("diagnostic").get<std::string>()});
  r.companion = j.at("companion");
  r.wall_time_seconds = j.at("wall_time_seconds").get<double>();
  return r;
}

}  // namespace quadblow
