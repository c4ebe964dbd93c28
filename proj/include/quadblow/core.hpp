// Copyright (c) 2026 the quadblow developers
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "quadblow/error.hpp"
#include "quadblow/rng.hpp"

namespace quadblow {

/// Threshold on |Q(v)| (unit v) below which a direction counts as a
/// numerical zero of Q. Far above accumulated rounding for dim <= ~32,
/// far below generic sphere minima.
inline constexpr double kEpsZero = 1e-8;

/// Point of the ambient space in a fixed basis.
struct StateVector {
  std::vector<double> coords;

  StateVector() = default;
  explicit StateVector(std::vector<double> c) : coords(std::move(c)) {}

  static StateVector zeros(int dim) {
    return StateVector(std::vector<double>(static_cast<std::size_t>(dim), 0.0));
  }

  int dim() const { return static_cast<int>(coords.size()); }

  double norm() const {
    double s = 0.0;
    for (double x : coords) s += x * x;
    return std::sqrt(s);
  }

  bool all_finite() const {
    for (double x : coords) {
      if (!std::isfinite(x)) return false;
    }
    return true;
  }

  double& operator[](int i) { return coords[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return coords[static_cast<std::size_t>(i)]; }
};

inline Eigen::Map<const Eigen::VectorXd> as_eigen(const StateVector& x) {
  return {x.coords.data(), static_cast<Eigen::Index>(x.coords.size())};
}

inline StateVector from_eigen(const Eigen::VectorXd& v) {
  return StateVector(std::vector<double>(v.data(), v.data() + v.size()));
}

/// Homogeneous quadratic map on an n-dimensional real space, stored as the
/// dense rank-3 coefficient tensor c[i][j][k] (row-major, i slowest),
/// symmetric in the last two indices. Construction symmetrizes the input
/// and records how far it was from symmetric.
class QuadraticMap {
 public:
  QuadraticMap(int dim, std::vector<double> coeffs) : dim_(dim), c_(std::move(coeffs)) {
    if (dim < 1) throw std::invalid_argument("QuadraticMap: dim must be >= 1");
    const std::size_t n = static_cast<std::size_t>(dim);
    if (c_.size() != n * n * n)
      throw std::invalid_argument("QuadraticMap: coeffs must have dim^3 entries");
    for (double v : c_) {
      if (!std::isfinite(v))
        throw std::invalid_argument("QuadraticMap: non-finite coefficient");
    }
    symmetrize();
  }

  int dim() const { return dim_; }

  double coeff(int i, int j, int k) const { return c_[flat(i, j, k)]; }

  const std::vector<double>& coeffs() const { return c_; }

  /// Largest absolute change any entry underwent during symmetrization.
  double symmetrization_defect() const { return sym_defect_; }

  QuadraticMap scaled(double s) const {
    std::vector<double> c = c_;
    for (double& v : c) v *= s;
    return QuadraticMap(dim_, std::move(c));
  }

 private:
  std::size_t flat(int i, int j, int k) const {
    const std::size_t n = static_cast<std::size_t>(dim_);
    return (static_cast<std::size_t>(i) * n + static_cast<std::size_t>(j)) * n +
           static_cast<std::size_t>(k);
  }

  void symmetrize() {
    double defect = 0.0;
    for (int i = 0; i < dim_; ++i) {
      for (int j = 0; j < dim_; ++j) {
        for (int k = j + 1; k < dim_; ++k) {
          const std::size_t a = flat(i, j, k);
          const std::size_t b = flat(i, k, j);
          const double mean = 0.5 * (c_[a] + c_[b]);
          defect = std::max(defect, std::abs(c_[a] - mean));
          c_[a] = mean;
          c_[b] = mean;
        }
      }
    }
    sym_defect_ = defect;
  }

  int dim_;
  std::vector<double> c_;
  double sym_defect_ = 0.0;
};

namespace detail {

/// out_i = sum_{j,k} c_ijk x_j x_k, no checks. out must not alias x.
inline void eval_into(const QuadraticMap& Q, const double* x, double* out) {
  const int n = Q.dim();
  const double* c = Q.coeffs().data();
  for (int i = 0; i < n; ++i) {
    const double* ci = c + static_cast<std::size_t>(i) * n * n;
    double acc = 0.0;
    for (int j = 0; j < n; ++j) {
      const double* cij = ci + static_cast<std::size_t>(j) * n;
      double inner = 0.0;
      for (int k = 0; k < n; ++k) inner += cij[k] * x[k];
      acc += x[j] * inner;
    }
    out[i] = acc;
  }
}

inline Eigen::VectorXd eval_vec(const QuadraticMap& Q, const Eigen::VectorXd& x) {
  Eigen::VectorXd y(x.size());
  eval_into(Q, x.data(), y.data());
  return y;
}

/// Jacobian of v -> Q(v): M_ip = 2 * sum_k c_ipk v_k. Equals the partial
/// application bilinear(Q, v, .) of the polarization form.
inline Eigen::MatrixXd eval_jacobian(const QuadraticMap& Q, const Eigen::VectorXd& v) {
  const int n = Q.dim();
  const double* c = Q.coeffs().data();
  Eigen::MatrixXd M(n, n);
  for (int i = 0; i < n; ++i) {
    for (int p = 0; p < n; ++p) {
      const double* cip = c + (static_cast<std::size_t>(i) * n + p) * n;
      double acc = 0.0;
      for (int k = 0; k < n; ++k) acc += cip[k] * v[k];
      M(i, p) = 2.0 * acc;
    }
  }
  return M;
}

inline void require_same_dim(const QuadraticMap& Q, const StateVector& X,
                             const char* op) {
  if (Q.dim() != X.dim())
    throw DomainError("dimension mismatch",
                      std::string(op) + ": map dimension " + std::to_string(Q.dim()) +
                          " vs vector dimension " + std::to_string(X.dim()));
}

inline void require_finite(const StateVector& X, const char* op) {
  if (!X.all_finite())
    throw DomainError("non-finite input", std::string(op) + ": input has non-finite entries");
}

}  // namespace detail

/// Q(X), the right-hand side of dX/dt = Q(X).
inline StateVector eval(const QuadraticMap& Q, const StateVector& X) {
  detail::require_same_dim(Q, X, "eval");
  detail::require_finite(X, "eval");
  StateVector out = StateVector::zeros(Q.dim());
  detail::eval_into(Q, X.coords.data(), out.coords.data());
  return out;
}

/// Polarization B(X,Y) = Q(X+Y) - Q(X) - Q(Y), computed directly from the
/// tensor; symmetric in (X,Y), and B(X,X) = 2 Q(X).
inline StateVector bilinear(const QuadraticMap& Q, const StateVector& X,
                            const StateVector& Y) {
  detail::require_same_dim(Q, X, "bilinear");
  detail::require_same_dim(Q, Y, "bilinear");
  detail::require_finite(X, "bilinear");
  detail::require_finite(Y, "bilinear");
  const int n = Q.dim();
  const double* c = Q.coeffs().data();
  const double* x = X.coords.data();
  const double* y = Y.coords.data();
  StateVector out = StateVector::zeros(n);
  for (int i = 0; i < n; ++i) {
    const double* ci = c + static_cast<std::size_t>(i) * n * n;
    double acc = 0.0;
    for (int j = 0; j < n; ++j) {
      const double* cij = ci + static_cast<std::size_t>(j) * n;
      double xin = 0.0;
      double yin = 0.0;
      for (int k = 0; k < n; ++k) {
        xin += cij[k] * y[k];
        yin += cij[k] * x[k];
      }
      acc += x[j] * xin + y[j] * yin;
    }
    out[i] = acc;
  }
  return out;
}

/// Rescaled direction map v -> Q(v)/|Q(v)| on the unit sphere. Even in v,
/// so it identifies antipodes. Undefined within kEpsZero of a zero of Q.
inline StateVector sphere_map(const QuadraticMap& Q, const StateVector& v) {
  detail::require_same_dim(Q, v, "sphere_map");
  detail::require_finite(v, "sphere_map");
  if (std::abs(v.norm() - 1.0) > 1e-9)
    throw std::invalid_argument("sphere_map: input must be a unit vector");
  StateVector q = StateVector::zeros(Q.dim());
  detail::eval_into(Q, v.coords.data(), q.coords.data());
  const double qn = q.norm();
  if (qn <= kEpsZero)
    throw DomainError("degenerate direction",
                      "sphere_map: |Q(v)| <= eps_zero, map undefined here",
                      {{"q_norm", qn}});
  for (double& x : q.coords) x /= qn;
  return q;
}

/// The matrix ODE dX/dt = -X*X as a quadratic map on d*d matrices
/// flattened row-major: eval(Q, flat(X)) == flat(-X*X).
inline QuadraticMap matrix_square_map(int d) {
  if (d < 1) throw std::invalid_argument("matrix_square_map: d must be >= 1");
  const long long n_ll = static_cast<long long>(d) * d;
  if (n_ll > 4096)
    throw std::invalid_argument("matrix_square_map: flattened dimension too large");
  const int n = static_cast<int>(n_ll);
  const std::size_t nn = static_cast<std::size_t>(n);
  std::vector<double> c(nn * nn * nn, 0.0);
  auto flat = [d](int p, int q) { return p * d + q; };
  for (int p = 0; p < d; ++p) {
    for (int q = 0; q < d; ++q) {
      const std::size_t i = static_cast<std::size_t>(flat(p, q));
      for (int r = 0; r < d; ++r) {
        const std::size_t j = static_cast<std::size_t>(flat(p, r));
        const std::size_t k = static_cast<std::size_t>(flat(r, q));
        c[(i * nn + j) * nn + k] += -1.0;
      }
    }
  }
  return QuadraticMap(n, std::move(c));  // constructor symmetrizes in (j,k)
}

/// Gaussian random map: i.i.d. standard normal tensor entries, then
/// symmetrized in the last two indices. Deterministic given the seed.
inline QuadraticMap random_quadratic_map(int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("random_quadratic_map: n must be >= 1");
  const std::size_t nn = static_cast<std::size_t>(n);
  std::vector<double> c(nn * nn * nn);
  GaussianStream g(seed);
  for (double& v : c) v = g.next();
  return QuadraticMap(n, std::move(c));
}

/// Outcome of the numerical search for nontrivial zeros of Q on the sphere.
/// A nondegeneracy verdict is best-effort: it reports the smallest value of
/// |Q(v)| found, not a certificate that none smaller exists.
struct DegeneracyReport {
  double min_norm = 0.0;
  StateVector argmin;
  bool is_degenerate = false;
};

namespace detail {

inline Eigen::VectorXd random_unit_vector(int n, GaussianStream& g) {
  Eigen::VectorXd v(n);
  while (true) {
    for (int i = 0; i < n; ++i) v[i] = g.next();
    const double nrm = v.norm();
    if (nrm > 1e-8) return v / nrm;
  }
}

/// Projected gradient descent for |Q(v)|^2 on the sphere, Barzilai-Borwein
/// step with Armijo backtracking. Returns (f, v) at the best point reached.
inline std::pair<double, Eigen::VectorXd> minimize_qnorm_from(
    const QuadraticMap& Q, Eigen::VectorXd v, int max_iters) {
  auto f_of = [&Q](const Eigen::VectorXd& w) {
    return eval_vec(Q, w).squaredNorm();
  };
  double f = f_of(v);
  Eigen::VectorXd v_prev = v;
  Eigen::VectorXd gr_prev = Eigen::VectorXd::Zero(v.size());
  bool have_prev = false;
  for (int it = 0; it < max_iters; ++it) {
    const Eigen::VectorXd q = eval_vec(Q, v);
    const Eigen::MatrixXd M = eval_jacobian(Q, v);
    const Eigen::VectorXd grad = 2.0 * (M.transpose() * q);
    const Eigen::VectorXd gr = grad - grad.dot(v) * v;  // tangential part
    const double grn2 = gr.squaredNorm();
    if (grn2 <= 1e-28 * (1.0 + f * f)) break;

    double eta = 1.0 / (1.0 + std::sqrt(grn2));
    if (have_prev) {
      const Eigen::VectorXd s = v - v_prev;
      const Eigen::VectorXd y = gr - gr_prev;
      const double sy = s.dot(y);
      if (sy > 1e-300) eta = std::clamp(s.squaredNorm() / sy, 1e-12, 1e6);
    }
    v_prev = v;
    gr_prev = gr;
    have_prev = true;

    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      Eigen::VectorXd w = v - eta * gr;
      w /= w.norm();
      const double fw = f_of(w);
      if (fw <= f - 1e-4 * eta * grn2) {
        v = std::move(w);
        f = fw;
        accepted = true;
        break;
      }
      eta *= 0.5;
    }
    if (!accepted) break;
  }
  return {f, v};
}

}  // namespace detail

/// Multistart minimization of |Q(v)| over the unit sphere; the verdict
/// is_degenerate means a direction with |Q(v)| <= eps_zero was found.
inline DegeneracyReport min_norm_on_sphere(const QuadraticMap& Q, int starts,
                                           std::uint64_t seed) {
  if (starts < 1) throw std::invalid_argument("min_norm_on_sphere: starts must be >= 1");
  const int n = Q.dim();
  double best_f = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_v;
  for (int s = 0; s < starts; ++s) {
    GaussianStream g(derive_seed(seed ^ kSeedTagMinNorm, static_cast<std::uint64_t>(s)));
    Eigen::VectorXd v0 = detail::random_unit_vector(n, g);
    auto [f, v] = detail::minimize_qnorm_from(Q, std::move(v0), 400);
    if (f < best_f) {
      best_f = f;
      best_v = std::move(v);
    }
  }
  DegeneracyReport rep;
  best_v /= best_v.norm();
  rep.argmin = from_eigen(best_v);
  rep.min_norm = detail::eval_vec(Q, best_v).norm();
  rep.is_degenerate = rep.min_norm <= kEpsZero;
  return rep;
}

}  // namespace quadblow
