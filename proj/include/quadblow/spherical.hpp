// Copyright (c) 2026 the quadblow developers
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "quadblow/core.hpp"
#include "quadblow/dynamics.hpp"
#include "quadblow/error.hpp"

namespace quadblow {

/// Acceptance threshold on |Q(v) - lambda v| for an invariant line.
inline constexpr double kEpsLine = 1e-10;

/// Line through the origin spanned by unit v with Q(v) = lambda * v.
/// Each line has two antipodal unit representatives whose lambdas differ
/// by sign; the stored one has lambda >= 0, which makes v a genuine fixed
/// point of the rescaled sphere map when lambda > 0.
struct InvariantLine {
  StateVector v;
  double lambda = 0.0;
  double residual = 0.0;  // |Q(v) - lambda v|
};

/// Invariant line plus an initial condition on it with the implied blowup
/// time of the scalar reduction dc/dt = lambda c^2.
struct BlowupCertificate {
  InvariantLine line;
  double c0 = 0.0;
  StateVector x0;  // c0 * v
  double predicted_time = 0.0;
  std::optional<double> verified_time;
  std::optional<double> verification_error;
};

/// Winding number of the rescaled circle map (dim 2 only) and the
/// Lefschetz number 1 - degree it implies.
struct DegreeReport {
  long degree = 0;
  long lefschetz = 0;
  std::size_t samples_used = 0;
};

namespace detail {

struct NewtonResult {
  Eigen::VectorXd v;
  double lambda = 0.0;
  double residual = 0.0;
  bool converged = false;
};

/// Damped Newton iteration for {Q(v) - lambda v = 0, (|v|^2 - 1)/2 = 0}
/// in the unknowns (v, lambda).
inline NewtonResult newton_invariant_line(const QuadraticMap& Q, Eigen::VectorXd v,
                                          int max_steps) {
  const int n = Q.dim();
  NewtonResult out;
  v /= v.norm();
  Eigen::VectorXd q = eval_vec(Q, v);
  double lambda = v.dot(q);

  auto residual_vec = [&](const Eigen::VectorXd& w, double lam) {
    Eigen::VectorXd F(n + 1);
    F.head(n) = eval_vec(Q, w) - lam * w;
    F[n] = 0.5 * (w.squaredNorm() - 1.0);
    return F;
  };

  Eigen::VectorXd F = residual_vec(v, lambda);
  double fnorm = F.norm();
  for (int step = 0; step < max_steps && fnorm > 1e-14; ++step) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n + 1, n + 1);
    J.topLeftCorner(n, n) = eval_jacobian(Q, v) - lambda * Eigen::MatrixXd::Identity(n, n);
    J.block(0, n, n, 1) = -v;
    J.block(n, 0, 1, n) = v.transpose();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
    if (!lu.isInvertible()) break;
    const Eigen::VectorXd delta = lu.solve(-F);
    if (!delta.allFinite()) break;

    double damp = 1.0;
    bool improved = false;
    for (int bt = 0; bt < 8; ++bt) {
      const Eigen::VectorXd v_try = v + damp * delta.head(n);
      const double lam_try = lambda + damp * delta[n];
      const Eigen::VectorXd F_try = residual_vec(v_try, lam_try);
      if (F_try.allFinite() && F_try.norm() < fnorm) {
        v = v_try;
        lambda = lam_try;
        F = F_try;
        fnorm = F.norm();
        improved = true;
        break;
      }
      damp *= 0.5;
    }
    if (!improved) break;
  }

  const double vn = v.norm();
  if (!(vn > 0.0) || !v.allFinite()) return out;
  v /= vn;
  q = eval_vec(Q, v);
  lambda = v.dot(q);
  out.v = v;
  out.lambda = lambda;
  out.residual = (q - lambda * v).norm();
  out.converged = out.residual <= kEpsLine;
  return out;
}

/// Iterate the rescaled sphere map a few times and keep the iterate with
/// the smallest line residual; a cheap way to place Newton starts near
/// fixed points. Stops early at degenerate directions.
inline Eigen::VectorXd sphere_iteration_candidate(const QuadraticMap& Q,
                                                  Eigen::VectorXd v, int iters) {
  Eigen::VectorXd best = v;
  double best_res = std::numeric_limits<double>::infinity();
  for (int i = 0; i < iters; ++i) {
    const Eigen::VectorXd q = eval_vec(Q, v);
    const double qn = q.norm();
    if (qn <= kEpsZero) break;
    const double lambda = v.dot(q);
    const double res = (q - lambda * v).norm();
    if (res < best_res) {
      best_res = res;
      best = v;
    }
    v = q / qn;
  }
  return best;
}

}  // namespace detail

/// Multistart search for invariant lines: sphere-map iteration generates a
/// candidate per start, Newton polishes it, duplicates are merged, and
/// representatives are normalized to lambda >= 0. Returns all lines found,
/// sorted by lambda descending; empty is legal (and suspicious for a
/// nondegenerate Q).
inline std::vector<InvariantLine> find_invariant_lines(const QuadraticMap& Q, int starts,
                                                       std::uint64_t seed) {
  if (starts < 1) throw std::invalid_argument("find_invariant_lines: starts must be >= 1");
  const int n = Q.dim();
  std::vector<InvariantLine> lines;
  for (int s = 0; s < starts; ++s) {
    GaussianStream g(derive_seed(seed ^ kSeedTagStart, static_cast<std::uint64_t>(s)));
    Eigen::VectorXd v0 = detail::random_unit_vector(n, g);
    const Eigen::VectorXd cand = detail::sphere_iteration_candidate(Q, v0, 50);
    detail::NewtonResult res = detail::newton_invariant_line(Q, cand, 100);
    if (!res.converged) {
      // One retry from the raw start; iteration may have walked into a
      // bad basin.
      res = detail::newton_invariant_line(Q, v0, 100);
      if (!res.converged) continue;
    }

    Eigen::VectorXd v = res.v;
    double lambda = res.lambda;
    if (lambda < 0.0) {
      v = -v;
      lambda = -lambda;
    }

    bool duplicate = false;
    for (auto& known : lines) {
      const double dot = std::abs(as_eigen(known.v).dot(v));
      if (dot >= 1.0 - 1e-8) {
        duplicate = true;
        if (res.residual < known.residual) {
          known.v = from_eigen(v);
          known.lambda = lambda;
          known.residual = res.residual;
        }
        break;
      }
    }
    if (!duplicate) {
      lines.push_back(InvariantLine{from_eigen(v), lambda, res.residual});
    }
  }
  std::stable_sort(lines.begin(), lines.end(),
                   [](const InvariantLine& a, const InvariantLine& b) {
                     return a.lambda > b.lambda;
                   });
  return lines;
}

/// Blowup time of the scalar reduction dc/dt = lambda c^2 on the line:
/// 1/(lambda c0) when lambda*c0 > 0, absent otherwise (the solution decays).
inline std::optional<double> line_blowup_time(const InvariantLine& line, double c0) {
  if (line.residual > kEpsLine)
    throw std::invalid_argument("line_blowup_time: line residual above tolerance");
  if (c0 == 0.0) throw std::invalid_argument("line_blowup_time: c0 must be nonzero");
  if (std::abs(line.lambda) <= kEpsLine)
    throw DomainError("neutral line",
                      "line_blowup_time: lambda = 0, no scalar blowup reduction",
                      {{"lambda", line.lambda}});
  if (line.lambda * c0 > 0.0) return 1.0 / (line.lambda * c0);
  return std::nullopt;
}

struct CertificateOptions {
  int starts = 0;                 // 0 -> 50 * dim
  bool verify = true;             // confirm by numerical integration
  IntegratorConfig integrator{};  // verification run settings

  CertificateOptions() { integrator.t_end = 2.0; }
};

/// Constructive blowup certificate: the invariant line with the largest
/// lambda, entered at c0 = 1/lambda so the predicted blowup time is 1, and
/// (by default) confirmed by an independent integration. Throws when no
/// line with lambda above tolerance exists, attaching the degeneracy
/// report, and when verification misses the predicted time.
inline BlowupCertificate generic_blowup_certificate(const QuadraticMap& Q,
                                                    std::uint64_t seed,
                                                    const CertificateOptions& opts = {}) {
  const int n = Q.dim();
  const int starts = opts.starts > 0 ? opts.starts : 50 * n;
  const std::vector<InvariantLine> lines = find_invariant_lines(Q, starts, seed);

  const InvariantLine* chosen = nullptr;
  for (const auto& line : lines) {
    if (line.lambda > kEpsLine) {
      chosen = &line;
      break;  // sorted descending; first hit has the largest lambda
    }
  }
  if (chosen == nullptr) {
    const DegeneracyReport deg = min_norm_on_sphere(Q, std::max(8, 8 * n), seed);
    throw DomainError("certificate search failed",
                      "generic_blowup_certificate: no invariant line with positive lambda",
                      {{"lines_found", lines.size()},
                       {"min_norm", deg.min_norm},
                       {"is_degenerate", deg.is_degenerate},
                       {"argmin", deg.argmin.coords}});
  }

  BlowupCertificate cert;
  cert.line = *chosen;
  cert.c0 = 1.0 / chosen->lambda;
  cert.x0 = StateVector::zeros(n);
  for (int i = 0; i < n; ++i) cert.x0[i] = cert.c0 * chosen->v[i];
  cert.predicted_time = 1.0 / (chosen->lambda * cert.c0);

  if (opts.verify) {
    const std::optional<double> verdict = classify_trajectory(Q, cert.x0, opts.integrator);
    if (!verdict.has_value()) {
      throw DomainError("certificate verification failed",
                        "generic_blowup_certificate: no blowup within the verification horizon",
                        {{"predicted_time", cert.predicted_time},
                         {"t_end", opts.integrator.t_end},
                         {"lambda", chosen->lambda}});
    }
    cert.verified_time = *verdict;
    const double err = std::abs(*verdict - cert.predicted_time) / cert.predicted_time;
    cert.verification_error = err;
    if (err > 1e-3) {
      throw DomainError("certificate verification failed",
                        "generic_blowup_certificate: verified time off the prediction",
                        {{"predicted_time", cert.predicted_time},
                         {"verified_time", *verdict},
                         {"verification_error", err}});
    }
  }
  return cert;
}

/// Topological degree of the rescaled circle map (dim 2 only), computed as
/// the winding number of theta -> arg Q(cos theta, sin theta). The sample
/// count doubles until every consecutive angle jump is below pi/2; the
/// total winding must then land on an integer to 1e-6.
inline DegreeReport circle_map_degree(const QuadraticMap& Q, std::size_t samples = 4096) {
  if (Q.dim() != 2)
    throw std::invalid_argument("circle_map_degree: defined for dim 2 only");
  if (samples < 8) samples = 8;

  {
    const DegeneracyReport deg = min_norm_on_sphere(Q, 16, /*seed=*/0x5D0FDE6EECULL);
    if (deg.is_degenerate)
      throw DomainError("degenerate direction",
                        "circle_map_degree: Q vanishes on the circle, degree undefined",
                        {{"min_norm", deg.min_norm}, {"argmin", deg.argmin.coords}});
  }

  constexpr std::size_t kMaxSamples = 1u << 20;
  constexpr double kPi = 3.141592653589793238462643383279502884;

  for (std::size_t n = samples; n <= kMaxSamples; n *= 2) {
    std::vector<double> angle(n);
    bool degenerate_sample = false;
    for (std::size_t k = 0; k < n; ++k) {
      const double theta = 2.0 * kPi * static_cast<double>(k) / static_cast<double>(n);
      const double x = std::cos(theta);
      const double y = std::sin(theta);
      double q[2];
      const double v[2] = {x, y};
      detail::eval_into(Q, v, q);
      if (std::hypot(q[0], q[1]) <= kEpsZero) {
        degenerate_sample = true;
        break;
      }
      angle[k] = std::atan2(q[1], q[0]);
    }
    if (degenerate_sample)
      throw DomainError("degenerate direction",
                        "circle_map_degree: |Q| fell below eps_zero at a sample point");

    double total = 0.0;
    bool ok = true;
    for (std::size_t k = 0; k < n; ++k) {
      double d = angle[(k + 1) % n] - angle[k];
      d -= 2.0 * kPi * std::round(d / (2.0 * kPi));
      if (std::abs(d) >= kPi / 2.0) {
        ok = false;
        break;
      }
      total += d;
    }
    if (!ok) continue;

    const double winding = total / (2.0 * kPi);
    const long degree = std::lround(winding);
    if (std::abs(winding - static_cast<double>(degree)) > 1e-6)
      throw DomainError("resolution exceeded",
                        "circle_map_degree: winding did not land on an integer",
                        {{"winding", winding}, {"samples", n}});
    if (degree % 2 != 0)
      throw DomainError("resolution exceeded",
                        "circle_map_degree: odd winding indicates numerical breakdown",
                        {{"winding", winding}, {"samples", n}});
    DegreeReport rep;
    rep.degree = degree;
    rep.lefschetz = 1 - degree;
    rep.samples_used = n;
    return rep;
  }
  throw DomainError("resolution exceeded",
                    "circle_map_degree: angle jumps above pi/2 at maximum refinement",
                    {{"max_samples", kMaxSamples}});
}

}  // namespace quadblow
