// Copyright (c) 2026 the quadblow developers
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <complex>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "quadblow/core.hpp"
#include "quadblow/error.hpp"

namespace quadblow {

/// Eigenvalue realness/sign tolerance: an eigenvalue counts as real when
/// |Im| <= tau_im(lambda), and as zero when within the same band of 0.
/// Matches the typical backward error of dense eigensolvers at d <= 100.
inline double tau_im(std::complex<double> lambda) {
  return 1e-9 * (1.0 + std::abs(lambda));
}

/// Dense real d x d matrix, row-major.
struct SquareMatrix {
  int d = 0;
  std::vector<double> entries;

  SquareMatrix() = default;
  SquareMatrix(int dim, std::vector<double> e) : d(dim), entries(std::move(e)) {
    if (d < 1) throw std::invalid_argument("SquareMatrix: d must be >= 1");
    if (entries.size() != static_cast<std::size_t>(d) * static_cast<std::size_t>(d))
      throw std::invalid_argument("SquareMatrix: entries must have d*d values");
    for (double v : entries)
      if (!std::isfinite(v))
        throw std::invalid_argument("SquareMatrix: non-finite entry");
  }

  static SquareMatrix identity(int dim) {
    std::vector<double> e(static_cast<std::size_t>(dim) * dim, 0.0);
    for (int i = 0; i < dim; ++i) e[static_cast<std::size_t>(i) * dim + i] = 1.0;
    return SquareMatrix(dim, std::move(e));
  }

  static SquareMatrix zero(int dim) {
    return SquareMatrix(dim, std::vector<double>(static_cast<std::size_t>(dim) * dim, 0.0));
  }

  double at(int r, int c) const { return entries[static_cast<std::size_t>(r) * d + c]; }
  double& at(int r, int c) { return entries[static_cast<std::size_t>(r) * d + c]; }

  Eigen::MatrixXd to_eigen() const {
    Eigen::MatrixXd m(d, d);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) m(r, c) = at(r, c);
    return m;
  }

  static SquareMatrix from_eigen(const Eigen::MatrixXd& m) {
    SquareMatrix out = SquareMatrix::zero(static_cast<int>(m.rows()));
    for (int r = 0; r < out.d; ++r)
      for (int c = 0; c < out.d; ++c) out.at(r, c) = m(r, c);
    return out;
  }

  double frobenius_norm() const {
    double s = 0.0;
    for (double v : entries) s += v * v;
    return std::sqrt(s);
  }
};

/// Row-major flattening (p,q) -> p*d+q, the isometry between the matrix
/// phase space of matrix_square_map and plain state vectors.
inline StateVector flatten(const SquareMatrix& A) { return StateVector(A.entries); }

inline SquareMatrix unflatten(const StateVector& X) {
  const int n = X.dim();
  const int d = static_cast<int>(std::llround(std::sqrt(static_cast<double>(n))));
  if (d * d != n)
    throw std::invalid_argument("unflatten: dimension is not a perfect square");
  return SquareMatrix(d, X.coords);
}

enum class BlowupClass { ForwardBlowup, BackwardOnlyBlowup, NoRealBlowup };

/// Spectral classification of an initial condition A for dX/dt = -X*X:
/// the solution pole of each real eigenvalue lambda sits at t = -1/lambda,
/// so forward blowup needs a negative real eigenvalue.
struct SpectralReport {
  std::vector<std::complex<double>> eigenvalues;
  std::vector<double> real_eigenvalues;
  BlowupClass classification = BlowupClass::NoRealBlowup;
  std::optional<double> forward_blowup_time;
};

/// Trajectory of dx/dt = -x^2 started at a: blows up forward iff a < 0,
/// at time -1/a.
struct ScalarSolution {
  double a = 0.0;
  std::optional<double> blowup_time;

  explicit ScalarSolution(double a0) : a(a0) {
    if (a < 0.0) blowup_time = -1.0 / a;
  }
};

/// x(t) = a/(1+a t), the solution of dx/dt = -x^2 with x(0) = a.
/// Throws "pole crossed" when t is at or beyond the pole -1/a.
inline double scalar_solution(double a, double t) {
  if (!std::isfinite(a) || !std::isfinite(t))
    throw DomainError("non-finite input", "scalar_solution: a and t must be finite");
  const double at = a * t;
  const double denom = 1.0 + at;
  if (denom <= 1e-12 * (1.0 + std::abs(at))) {
    throw DomainError("pole crossed", "scalar_solution: evaluation at or across the pole",
                      {{"pole_time", a != 0.0 ? -1.0 / a : 0.0}, {"t", t}});
  }
  return a / denom;
}

/// X(t) = A (I + tA)^(-1), the solution of dX/dt = -X*X with X(0) = A.
/// Valid for singular A; refuses t where I + tA is numerically singular.
inline SquareMatrix matrix_solution(const SquareMatrix& A, double t) {
  if (!std::isfinite(t))
    throw DomainError("non-finite input", "matrix_solution: t must be finite");
  const int d = A.d;
  const Eigen::MatrixXd a = A.to_eigen();
  const Eigen::MatrixXd b = Eigen::MatrixXd::Identity(d, d) + t * a;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(b);
  double row_norm_product = 1.0;
  for (int r = 0; r < d; ++r) row_norm_product *= b.row(r).norm();
  const double det = lu.determinant();
  if (!(row_norm_product > 0.0) ||
      std::abs(det) < 1e-12 * row_norm_product) {
    throw DomainError("blowup surface", "matrix_solution: I + tA is numerically singular",
                      {{"t", t}, {"det", det}});
  }
  // X = A B^{-1}, computed as the solution of B^T X^T = A^T.
  const Eigen::MatrixXd xt = b.transpose().fullPivLu().solve(a.transpose());
  return SquareMatrix::from_eigen(xt.transpose());
}

/// All eigenvalues of A (dense QR/Schur-class solver) plus the blowup
/// classification they imply.
inline SpectralReport real_spectrum(const SquareMatrix& A) {
  Eigen::EigenSolver<Eigen::MatrixXd> solver(A.to_eigen(), /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw DomainError("eigenvalue failure", "real_spectrum: eigenvalue iteration failed",
                      {{"d", A.d},
                       {"entries", A.entries},
                       {"frobenius_norm", A.frobenius_norm()}});
  }

  SpectralReport rep;
  const auto& ev = solver.eigenvalues();
  rep.eigenvalues.reserve(static_cast<std::size_t>(ev.size()));
  bool has_negative = false;
  bool has_positive = false;
  double most_negative = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    const std::complex<double> lambda = ev[i];
    rep.eigenvalues.push_back(lambda);
    const double thr = tau_im(lambda);
    if (std::abs(lambda.imag()) > thr) continue;
    const double re = lambda.real();
    rep.real_eigenvalues.push_back(re);
    if (re < -thr) {
      has_negative = true;
      most_negative = std::min(most_negative, re);
    } else if (re > thr) {
      has_positive = true;
    }
  }
  if (has_negative) {
    rep.classification = BlowupClass::ForwardBlowup;
    rep.forward_blowup_time = -1.0 / most_negative;
  } else if (has_positive) {
    rep.classification = BlowupClass::BackwardOnlyBlowup;
  } else {
    rep.classification = BlowupClass::NoRealBlowup;
  }
  return rep;
}

/// Least t > 0 with det(I + tA) = 0, i.e. -1/lambda over the most negative
/// real eigenvalue; absent when A has no negative real eigenvalue.
inline std::optional<double> matrix_blowup_time(const SquareMatrix& A) {
  return real_spectrum(A).forward_blowup_time;
}

}  // namespace quadblow
