// Copyright (c) 2026 the quadblow developers
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: exact solutions, numerical integration, invariant
// lines, blowup certificates, circle-map degree, and seeded Monte Carlo
// experiments, with JSON/CSV persistence.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "quadblow/quadblow.hpp"

namespace {

using nlohmann::json;

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("QUADBLOW_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw quadblow::DomainError("invalid seed", "QUADBLOW_SEED is not a 64-bit integer",
                                  {{"value", env}});
    }
  }
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw quadblow::DomainError("input unreadable", "cannot open input file",
                                {{"path", path}});
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw quadblow::DomainError("input invalid", std::string("JSON parse failure: ") + e.what(),
                                {{"path", path}});
  }
  return j;
}

void write_text_file(const std::string& path, const std::string& content, bool force) {
  if (!force && std::filesystem::exists(path))
    throw quadblow::DomainError("output exists",
                                "refusing to overwrite existing file (use --force)",
                                {{"path", path}});
  std::ofstream out(path, std::ios::trunc);
  if (!out)
    throw quadblow::DomainError("output unwritable", "cannot open output file",
                                {{"path", path}});
  out << content;
}

void emit_result(const json& j, const std::optional<std::string>& output, bool force) {
  const std::string text = j.dump(2) + "\n";
  if (output) {
    write_text_file(*output, text, force);
  } else {
    std::cout << text;
  }
}

quadblow::QuadraticMap load_map_checked(const std::string& path) {
  quadblow::QuadraticMap Q = quadblow::load_quadratic_map(read_json_file(path));
  if (Q.symmetrization_defect() > 0.0)
    std::cerr << "note: symmetrization defect "
              << quadblow::format_double(Q.symmetrization_defect()) << " in " << path << "\n";
  return Q;
}

struct IntegratorOverrides {
  std::optional<double> rtol, atol, t_end, r_max;

  void add_flags(CLI::App* cmd) {
    cmd->add_option("--rtol", rtol, "Relative tolerance of the step controller");
    cmd->add_option("--atol", atol, "Absolute tolerance of the step controller");
    cmd->add_option("--t-end", t_end, "Integration horizon");
    cmd->add_option("--r-max", r_max, "Norm threshold declaring blowup");
  }

  quadblow::IntegratorConfig apply(quadblow::IntegratorConfig cfg) const {
    if (rtol) cfg.rtol = *rtol;
    if (atol) cfg.atol = *atol;
    if (t_end) cfg.t_end = *t_end;
    if (r_max) cfg.r_max = *r_max;
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quadblow: finite-time blowup analysis of homogeneous quadratic ODEs dX/dt = Q(X)"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed_flag;
  app.add_option("--seed", seed_flag, "Master seed (fallback: QUADBLOW_SEED, then entropy)");

  std::optional<std::string> output;
  bool force = false;
  app.add_option("--output", output, "Write the result to this path");
  app.add_flag("--force", force, "Overwrite existing output files");

  std::string format = "json";

  // eval
  auto* cmd_eval = app.add_subcommand("eval", "Evaluate Q(X) for a map and a state vector");
  std::string eval_input, eval_x0;
  cmd_eval->add_option("--input", eval_input, "QuadraticMap JSON file")->required();
  cmd_eval->add_option("--x0", eval_x0, "StateVector JSON file")->required();
  cmd_eval->add_option("--format", format, "Output format: json or csv")
      ->check(CLI::IsMember({"json", "csv"}));

  // integrate
  auto* cmd_integrate =
      app.add_subcommand("integrate", "Integrate dX/dt = Q(X) and persist the trajectory");
  std::string int_input, int_x0;
  IntegratorOverrides int_overrides;
  cmd_integrate->add_option("--input", int_input, "QuadraticMap JSON file")->required();
  cmd_integrate->add_option("--x0", int_x0, "StateVector JSON file")->required();
  int_overrides.add_flags(cmd_integrate);

  // matrix
  auto* cmd_matrix =
      app.add_subcommand("matrix", "Spectral blowup classification of dX/dt = -X*X");
  std::string matrix_input;
  cmd_matrix->add_option("--input", matrix_input, "SquareMatrix JSON file")->required();

  // lines
  auto* cmd_lines = app.add_subcommand("lines", "Find invariant lines Q(v) = lambda v");
  std::string lines_input;
  int lines_starts = 0;
  cmd_lines->add_option("--input", lines_input, "QuadraticMap JSON file")->required();
  cmd_lines->add_option("--starts", lines_starts, "Search starts (default 50 * dim)");

  // degree
  auto* cmd_degree =
      app.add_subcommand("degree", "Topological degree of the rescaled circle map (dim 2)");
  std::string degree_input;
  std::size_t degree_samples = 4096;
  cmd_degree->add_option("--input", degree_input, "QuadraticMap JSON file")->required();
  cmd_degree->add_option("--samples", degree_samples, "Initial circle sample count");

  // search-blowup
  auto* cmd_search =
      app.add_subcommand("search-blowup", "Construct and verify a blowup certificate");
  std::string search_input;
  int search_starts = 0;
  IntegratorOverrides search_overrides;
  cmd_search->add_option("--input", search_input, "QuadraticMap JSON file")->required();
  cmd_search->add_option("--starts", search_starts, "Search starts (default 50 * dim)");
  search_overrides.add_flags(cmd_search);

  // mc-q1 / mc-q2
  auto* cmd_q1 = app.add_subcommand(
      "mc-q1", "Monte Carlo over random Q: how often does a verified certificate exist");
  auto* cmd_q2 = app.add_subcommand(
      "mc-q2", "Monte Carlo over Gaussian matrices A: how often does -X*X blow up forward");
  int mc_dim = 2;
  std::size_t mc_samples = 1000;
  double mc_verify_fraction = 0.05;
  int mc_workers = 0;
  int mc_starts = 0;
  IntegratorOverrides mc_overrides;
  for (CLI::App* cmd : {cmd_q1, cmd_q2}) {
    cmd->add_option("--dim,--d", mc_dim, "Space dimension (n for mc-q1, d for mc-q2)");
    cmd->add_option("--samples", mc_samples, "Number of Monte Carlo samples");
    cmd->add_option("--verify-fraction", mc_verify_fraction,
                    "Fraction of samples re-checked by integration");
    cmd->add_option("--workers", mc_workers, "Worker threads (0 = hardware)");
    mc_overrides.add_flags(cmd);
  }
  cmd_q1->add_option("--starts", mc_starts, "Line-search starts per sample (default 50 * n)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    const std::uint64_t seed = resolve_seed(seed_flag);
    std::cerr << "resolved seed: " << seed << "\n";

    if (cmd_eval->parsed()) {
      const quadblow::QuadraticMap Q = load_map_checked(eval_input);
      const quadblow::StateVector x = quadblow::load_state_vector(read_json_file(eval_x0));
      const quadblow::StateVector y = quadblow::eval(Q, x);
      if (format == "csv") {
        std::ostringstream os;
        for (int i = 0; i < y.dim(); ++i)
          os << (i ? "," : "") << quadblow::format_double(y[i]);
        os << "\n";
        if (output)
          write_text_file(*output, os.str(), force);
        else
          std::cout << os.str();
      } else {
        json j = quadblow::json_of(y);
        j["seed"] = seed;
        j["tool_version"] = quadblow::kToolVersion;
        emit_result(j, output, force);
      }
    } else if (cmd_integrate->parsed()) {
      if (!output)
        throw CLI::RequiredError("--output (integrate writes a CSV trajectory)");
      const quadblow::QuadraticMap Q = load_map_checked(int_input);
      const quadblow::StateVector x0 = quadblow::load_state_vector(read_json_file(int_x0));
      const quadblow::IntegratorConfig cfg = int_overrides.apply({});
      const quadblow::Trajectory traj = quadblow::integrate(Q, x0, cfg);

      std::ostringstream csv;
      quadblow::write_trajectory_csv(csv, traj);
      write_text_file(*output, csv.str(), force);

      json sidecar = quadblow::json_of(quadblow::summary_of(traj));
      sidecar["seed"] = seed;
      sidecar["tool_version"] = quadblow::kToolVersion;
      write_text_file(*output + ".json", sidecar.dump(2) + "\n", force);
      std::cerr << "status: " << quadblow::to_string(traj.status) << "\n";
    } else if (cmd_matrix->parsed()) {
      const quadblow::SquareMatrix A =
          quadblow::load_square_matrix(read_json_file(matrix_input));
      const quadblow::SpectralReport rep = quadblow::real_spectrum(A);
      json j = quadblow::json_of(rep);
      j["seed"] = seed;
      j["tool_version"] = quadblow::kToolVersion;
      emit_result(j, output, force);
    } else if (cmd_lines->parsed()) {
      const quadblow::QuadraticMap Q = load_map_checked(lines_input);
      const quadblow::DegeneracyReport deg =
          quadblow::min_norm_on_sphere(Q, std::max(8, 8 * Q.dim()), seed);
      if (deg.is_degenerate)
        std::cerr << "warning: Q is numerically degenerate (min |Q| = "
                  << quadblow::format_double(deg.min_norm)
                  << " on the sphere); line search results may be incomplete\n";
      const int starts = lines_starts > 0 ? lines_starts : 50 * Q.dim();
      const auto lines = quadblow::find_invariant_lines(Q, starts, seed);
      json arr = json::array();
      for (const auto& line : lines) arr.push_back(quadblow::json_of(line));
      json j{{"lines", arr},
             {"degeneracy", quadblow::json_of(deg)},
             {"seed", seed},
             {"tool_version", quadblow::kToolVersion}};
      emit_result(j, output, force);
    } else if (cmd_degree->parsed()) {
      const quadblow::QuadraticMap Q = load_map_checked(degree_input);
      const quadblow::DegreeReport rep = quadblow::circle_map_degree(Q, degree_samples);
      json j = quadblow::json_of(rep);
      j["seed"] = seed;
      j["tool_version"] = quadblow::kToolVersion;
      emit_result(j, output, force);
    } else if (cmd_search->parsed()) {
      const quadblow::QuadraticMap Q = load_map_checked(search_input);
      quadblow::CertificateOptions copts;
      copts.starts = search_starts;
      copts.integrator = search_overrides.apply(copts.integrator);
      const quadblow::BlowupCertificate cert =
          quadblow::generic_blowup_certificate(Q, seed, copts);
      json j = quadblow::json_of(cert);
      j["seed"] = seed;
      j["tool_version"] = quadblow::kToolVersion;
      emit_result(j, output, force);
    } else if (cmd_q1->parsed() || cmd_q2->parsed()) {
      if (!output)
        throw CLI::RequiredError("--output (Monte Carlo results are persisted)");
      quadblow::EnsembleSpec spec;
      spec.kind = cmd_q1->parsed() ? quadblow::EnsembleKind::Q1RandomQ
                                   : quadblow::EnsembleKind::Q2MatrixCase;
      spec.dim = mc_dim;
      spec.n_samples = mc_samples;
      spec.master_seed = seed;
      spec.verify_fraction = mc_verify_fraction;
      spec.integrator = mc_overrides.apply(spec.integrator);

      quadblow::RunOptions ropts;
      ropts.workers = mc_workers;
      ropts.line_search_starts = mc_starts;
      const quadblow::EnsembleResult res = cmd_q1->parsed()
                                               ? quadblow::run_q1_experiment(spec, ropts)
                                               : quadblow::run_q2_matrix_experiment(spec, ropts);
      json j = quadblow::json_of(res);
      j["seed"] = seed;
      emit_result(j, output, force);
      std::cerr << "estimate: " << res.estimate << " [" << res.ci_low << ", " << res.ci_high
                << "]\n";
    }
    return 0;
  } catch (const CLI::RequiredError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const quadblow::DomainError& e) {
    json err{{"error", e.code()}, {"message", e.what()}, {"detail", e.detail()}};
    std::cerr << err.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    json err{{"error", "error"}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 1;
  }
}
