// Copyright (c) 2026 the quadblow developers
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"

#include "quadblow/core.hpp"
#include "quadblow/dynamics.hpp"
#include "quadblow/error.hpp"
#include "quadblow/exact.hpp"
#include "quadblow/rng.hpp"
#include "quadblow/spherical.hpp"

namespace quadblow {

enum class EnsembleKind { Q1RandomQ, Q2MatrixCase };

/// Monte Carlo experiment description. Everything that affects the counts
/// lives here; worker scheduling is a runtime knob with no effect on
/// results.
struct EnsembleSpec {
  EnsembleKind kind = EnsembleKind::Q2MatrixCase;
  int dim = 2;                     // n for Q1, d for Q2
  std::size_t n_samples = 1;
  std::uint64_t master_seed = 0;
  IntegratorConfig integrator{};   // verification runs
  double verify_fraction = 0.05;

  void validate() const {
    if (dim < 1) throw std::invalid_argument("EnsembleSpec: dim must be >= 1");
    if (n_samples < 1) throw std::invalid_argument("EnsembleSpec: n_samples must be >= 1");
    if (!(verify_fraction >= 0.0 && verify_fraction <= 1.0))
      throw std::invalid_argument("EnsembleSpec: verify_fraction must be in [0,1]");
    integrator.validate();
  }
};

struct FailureCase {
  std::size_t sample_index = 0;
  std::string diagnostic;
};

struct EnsembleResult {
  EnsembleSpec spec;
  std::size_t successes = 0;
  std::size_t failures = 0;
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::vector<FailureCase> failure_cases;  // capped at 100, ordered by index
  nlohmann::json companion = nlohmann::json::object();
  double wall_time_seconds = 0.0;
};

/// 95% Wilson score interval, z = 1.959964.
inline std::pair<double, double> wilson_interval(std::size_t successes, std::size_t n) {
  if (n < 1) throw std::invalid_argument("wilson_interval: n must be >= 1");
  if (successes > n) throw std::invalid_argument("wilson_interval: successes > n");
  constexpr double z = 1.959964;
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2n = z * z / nn;
  const double denom = 1.0 + z2n;
  const double center = (p + 0.5 * z2n) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + 0.25 * z2n / nn) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

/// d x d matrix of i.i.d. standard normals from the counter-based stream;
/// bit-identical given (d, seed).
inline SquareMatrix sample_gaussian_matrix(int d, std::uint64_t seed) {
  if (d < 1) throw std::invalid_argument("sample_gaussian_matrix: d must be >= 1");
  GaussianStream g(seed);
  std::vector<double> e(static_cast<std::size_t>(d) * static_cast<std::size_t>(d));
  for (double& x : e) x = g.next();
  return SquareMatrix(d, std::move(e));
}

namespace detail {

/// Deterministic slot-based parallel map over sample indices: each worker
/// pulls indices from an atomic counter and writes its own slot, so output
/// never depends on scheduling.
template <typename Fn>
void parallel_for_samples(std::size_t n, int workers, Fn&& fn) {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  std::size_t w = workers > 0 ? static_cast<std::size_t>(workers) : hw;
  w = std::min<std::size_t>(w, n);
  if (w <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(w);
  for (std::size_t t = 0; t < w; ++t) {
    pool.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        fn(i);
      }
    });
  }
  for (auto& th : pool) th.join();
}

inline bool verification_selected(std::uint64_t master_seed, std::size_t index,
                                  double fraction) {
  if (fraction >= 1.0) return true;
  if (fraction <= 0.0) return false;
  SplitMix64 rng(derive_seed(master_seed ^ kSeedTagVerify, index));
  return rng.next_double() < fraction;
}

enum class Agreement { Agree, Disagree, Inconclusive };

struct AgreementOutcome {
  Agreement value = Agreement::Agree;
  std::string note;
};

/// Consistency of the spectral verdict with an integration verdict at the
/// configured horizon. A forward pole beyond the horizon is consistent
/// with reaching the horizon; a pole within a relative 1e-6 band of the
/// horizon is reported inconclusive rather than guessed.
inline AgreementOutcome check_spectral_dynamics_agreement(const SpectralReport& rep,
                                                          const QuadraticMap& Qd,
                                                          const StateVector& x0,
                                                          const IntegratorConfig& cfg) {
  AgreementOutcome out;
  std::optional<double> verdict;
  try {
    verdict = classify_trajectory(Qd, x0, cfg);
  } catch (const DomainError& e) {
    out.value = Agreement::Inconclusive;
    out.note = std::string("inconclusive integration: ") + e.what();
    return out;
  }

  if (rep.classification == BlowupClass::ForwardBlowup) {
    const double t_pole = *rep.forward_blowup_time;
    if (t_pole <= cfg.t_end * (1.0 - 1e-6)) {
      if (!verdict.has_value()) {
        out.value = Agreement::Disagree;
        out.note = "spectral pole at t=" + std::to_string(t_pole) +
                   " but integration reached the horizon";
      } else if (std::abs(*verdict - t_pole) > 1e-3 * t_pole) {
        out.value = Agreement::Disagree;
        out.note = "blowup times differ: spectral " + std::to_string(t_pole) +
                   " vs integrated " + std::to_string(*verdict);
      }
    } else if (t_pole >= cfg.t_end * (1.0 + 1e-6)) {
      if (verdict.has_value()) {
        out.value = Agreement::Disagree;
        out.note = "integration blew up at " + std::to_string(*verdict) +
                   " but the spectral pole lies beyond the horizon";
      }
    } else {
      out.value = Agreement::Inconclusive;
      out.note = "spectral pole within the horizon margin";
    }
  } else if (verdict.has_value()) {
    out.value = Agreement::Disagree;
    out.note = "integration blew up at " + std::to_string(*verdict) +
               " but the spectrum has no negative real eigenvalue";
  }
  return out;
}

inline void finalize_counts(EnsembleResult& res, std::size_t successes, std::size_t n) {
  res.successes = successes;
  res.failures = n - successes;
  res.estimate = static_cast<double>(successes) / static_cast<double>(n);
  const auto ci = wilson_interval(successes, n);
  res.ci_low = ci.first;
  res.ci_high = ci.second;
}

}  // namespace detail

struct RunOptions {
  int workers = 0;           // 0 -> hardware concurrency
  int line_search_starts = 0;  // Q1 budget per sample; 0 -> 50 * n
  /// Q1 test hook: overrides the per-sample map draw (seed, index) -> Q.
  std::function<QuadraticMap(std::uint64_t, std::size_t)> q1_sampler;
};

/// Question 1: fraction of random quadratic maps Q for which a verified
/// blowup certificate is found. A verification integration runs on the
/// selected subsample; the remaining samples accept the Newton residual
/// check carried by the certificate itself.
inline EnsembleResult run_q1_experiment(const EnsembleSpec& spec,
                                        const RunOptions& opts = {}) {
  spec.validate();
  if (spec.kind != EnsembleKind::Q1RandomQ)
    throw std::invalid_argument("run_q1_experiment: spec.kind must be Q1RandomQ");

  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = spec.n_samples;

  struct Outcome {
    bool success = false;
    bool verified = false;
    std::string diagnostic;
  };
  std::vector<Outcome> outcomes(n);

  detail::parallel_for_samples(n, opts.workers, [&](std::size_t i) {
    const std::uint64_t seed_i = derive_seed(spec.master_seed, i);
    Outcome& out = outcomes[i];
    try {
      const QuadraticMap Q = opts.q1_sampler
                                 ? opts.q1_sampler(seed_i, i)
                                 : random_quadratic_map(spec.dim, seed_i);
      CertificateOptions copts;
      copts.starts = opts.line_search_starts;
      copts.integrator = spec.integrator;
      copts.integrator.t_end = 2.0;
      copts.verify = detail::verification_selected(spec.master_seed, i, spec.verify_fraction);
      out.verified = copts.verify;
      (void)generic_blowup_certificate(Q, seed_i, copts);
      out.success = true;
    } catch (const DomainError& e) {
      out.success = false;
      out.diagnostic = e.code() + ": " + e.what();
    } catch (const std::exception& e) {
      out.success = false;
      out.diagnostic = std::string("error: ") + e.what();
    }
  });

  EnsembleResult res;
  res.spec = spec;
  std::size_t successes = 0;
  std::size_t verified = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (outcomes[i].success) ++successes;
    if (outcomes[i].verified) ++verified;
    if (!outcomes[i].success && res.failure_cases.size() < 100)
      res.failure_cases.push_back({i, outcomes[i].diagnostic});
  }
  detail::finalize_counts(res, successes, n);
  res.companion = {{"verified_samples", verified}};
  res.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

/// Question 2 for the matrix case dX/dt = -X*X: fraction of Gaussian d x d
/// initial conditions whose spectrum forces forward blowup. Companion
/// counts report the fraction with any nonzero real eigenvalue (blowup at
/// some real time) and, on the verification subsample, agreement between
/// the spectral and integration verdicts.
inline EnsembleResult run_q2_matrix_experiment(const EnsembleSpec& spec,
                                               const RunOptions& opts = {}) {
  spec.validate();
  if (spec.kind != EnsembleKind::Q2MatrixCase)
    throw std::invalid_argument("run_q2_matrix_experiment: spec.kind must be Q2MatrixCase");

  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = spec.n_samples;
  const QuadraticMap Qd = matrix_square_map(spec.dim);

  struct Outcome {
    bool forward = false;
    bool any_real_nonzero = false;
    std::uint8_t agreement = 0;  // 0 = unchecked, 1 = agree, 2 = disagree, 3 = inconclusive
    std::string note;
  };
  std::vector<Outcome> outcomes(n);

  detail::parallel_for_samples(n, opts.workers, [&](std::size_t i) {
    const std::uint64_t seed_i = derive_seed(spec.master_seed, i);
    Outcome& out = outcomes[i];
    const SquareMatrix A = sample_gaussian_matrix(spec.dim, seed_i);
    const SpectralReport rep = real_spectrum(A);
    out.forward = rep.classification == BlowupClass::ForwardBlowup;
    for (double lambda : rep.real_eigenvalues) {
      if (std::abs(lambda) > 1e-9 * (1.0 + std::abs(lambda))) {
        out.any_real_nonzero = true;
        break;
      }
    }
    if (detail::verification_selected(spec.master_seed, i, spec.verify_fraction)) {
      const detail::AgreementOutcome ag =
          detail::check_spectral_dynamics_agreement(rep, Qd, flatten(A), spec.integrator);
      switch (ag.value) {
        case detail::Agreement::Agree: out.agreement = 1; break;
        case detail::Agreement::Disagree: out.agreement = 2; break;
        case detail::Agreement::Inconclusive: out.agreement = 3; break;
      }
      out.note = ag.note;
    }
  });

  EnsembleResult res;
  res.spec = spec;
  std::size_t successes = 0;
  std::size_t any_real = 0;
  std::size_t checked = 0, agreed = 0, disagreed = 0, inconclusive = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Outcome& out = outcomes[i];
    if (out.forward) ++successes;
    if (out.any_real_nonzero) ++any_real;
    if (out.agreement != 0) {
      ++checked;
      if (out.agreement == 1) ++agreed;
      if (out.agreement == 2) {
        ++disagreed;
        if (res.failure_cases.size() < 100)
          res.failure_cases.push_back({i, "oracle disagreement: " + out.note});
      }
      if (out.agreement == 3) {
        ++inconclusive;
        if (res.failure_cases.size() < 100) res.failure_cases.push_back({i, out.note});
      }
    }
  }
  detail::finalize_counts(res, successes, n);
  res.companion = {
      {"any_real_nonzero_count", any_real},
      {"any_real_nonzero_fraction", static_cast<double>(any_real) / static_cast<double>(n)},
      {"verification",
       {{"checked", checked},
        {"agreed", agreed},
        {"disagreed", disagreed},
        {"inconclusive", inconclusive}}}};
  res.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

}  // namespace quadblow
