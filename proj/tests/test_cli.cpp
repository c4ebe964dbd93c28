// Copyright (c) 2026 the quadblow developers
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end checks of the installed command-line surface: exit codes,
// error JSON on stderr, seed echo, and persistence contracts.

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "quadblow/io.hpp"
#include "test_maps.hpp"

#ifndef QUADBLOW_CLI_PATH
#error "QUADBLOW_CLI_PATH must point at the built binary"
#endif

namespace {

namespace fs = std::filesystem;

struct CmdResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "quadblow_cli_tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

CmdResult run_cli(const std::string& args, const std::string& env = "") {
  static int counter = 0;
  const fs::path out = scratch_dir() / ("out" + std::to_string(counter) + ".txt");
  const fs::path err = scratch_dir() / ("err" + std::to_string(counter) + ".txt");
  ++counter;
  const std::string cmd = env + (env.empty() ? "" : " ") + QUADBLOW_CLI_PATH + " " + args +
                          " >" + out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  CmdResult res;
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  res.out = slurp(out);
  res.err = slurp(err);
  return res;
}

fs::path write_json(const std::string& name, const nlohmann::json& j) {
  const fs::path p = scratch_dir() / name;
  std::ofstream out(p);
  out << j.dump(2) << "\n";
  return p;
}

fs::path doubling_map_path() {
  static const fs::path p =
      write_json("doubling.json", quadblow::json_of(qbtest::angle_doubling()));
  return p;
}

}  // namespace

TEST_CASE("cli eval prints Q(X)") {
  const fs::path x = write_json("x11.json", quadblow::json_of(quadblow::StateVector({1.0, 1.0})));
  const CmdResult res = run_cli("eval --input " + doubling_map_path().string() + " --x0 " +
                                x.string() + " --seed 1");
  REQUIRE(res.exit_code == 0);
  const auto j = nlohmann::json::parse(res.out);
  CHECK(j.at("coords")[0].get<double>() == 0.0);
  CHECK(j.at("coords")[1].get<double>() == 2.0);
  CHECK(j.at("seed").get<std::uint64_t>() == 1);
  CHECK(j.at("tool_version").get<std::string>() == quadblow::kToolVersion);
  CHECK(res.err.find("resolved seed: 1") != std::string::npos);
}

TEST_CASE("cli eval csv format") {
  const fs::path x = write_json("x20.json", quadblow::json_of(quadblow::StateVector({2.0, 0.0})));
  const CmdResult res = run_cli("eval --format csv --input " + doubling_map_path().string() +
                                " --x0 " + x.string() + " --seed 1");
  REQUIRE(res.exit_code == 0);
  CHECK(res.out == "4,0\n");
}

TEST_CASE("cli matrix reports the spectral classification") {
  const fs::path a =
      write_json("diag.json", quadblow::json_of(quadblow::SquareMatrix(2, {-1, 0, 0, 1})));
  const CmdResult res = run_cli("matrix --input " + a.string() + " --seed 2");
  REQUIRE(res.exit_code == 0);
  const auto j = nlohmann::json::parse(res.out);
  CHECK(j.at("classification") == "forward_blowup");
  CHECK(j.at("forward_blowup_time").get<double>() == Catch::Approx(1.0).margin(1e-9));
  // accepted back by the loader
  const quadblow::SpectralReport rep = quadblow::load_spectral_report(j);
  CHECK(rep.classification == quadblow::BlowupClass::ForwardBlowup);
}

TEST_CASE("cli degree refuses a degenerate map with exit 1") {
  const fs::path q =
      write_json("degen.json", quadblow::json_of(qbtest::degenerate_x_squared()));
  const CmdResult res = run_cli("degree --input " + q.string() + " --seed 3");
  REQUIRE(res.exit_code == 1);
  const auto err = nlohmann::json::parse(res.err.substr(res.err.find('{')));
  CHECK(err.at("error") == "degenerate direction");
}

TEST_CASE("cli degree computes the winding number") {
  const CmdResult res = run_cli("degree --input " + doubling_map_path().string() + " --seed 3");
  REQUIRE(res.exit_code == 0);
  const auto j = nlohmann::json::parse(res.out);
  CHECK(j.at("degree").get<long>() == 2);
  CHECK(j.at("lefschetz").get<long>() == -1);
}

TEST_CASE("cli lines and search-blowup agree on the doubling map") {
  const CmdResult lines = run_cli("lines --input " + doubling_map_path().string() + " --seed 4");
  REQUIRE(lines.exit_code == 0);
  const auto lj = nlohmann::json::parse(lines.out);
  REQUIRE(lj.at("lines").size() == 1);
  CHECK(quadblow::load_invariant_line(lj.at("lines")[0]).lambda ==
        Catch::Approx(1.0).margin(1e-9));

  const CmdResult cert = run_cli("search-blowup --input " + doubling_map_path().string() +
                                 " --seed 4");
  REQUIRE(cert.exit_code == 0);
  const auto cj = nlohmann::json::parse(cert.out);
  const quadblow::BlowupCertificate c = quadblow::load_certificate(cj);
  CHECK(c.predicted_time == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(c.verified_time.has_value());
  CHECK(*c.verification_error <= 1e-3);
}

TEST_CASE("cli integrate writes a CSV trajectory and a JSON sidecar") {
  const fs::path q = write_json("scalar.json", quadblow::json_of(quadblow::matrix_square_map(1)));
  const fs::path x = write_json("xm1.json", quadblow::json_of(quadblow::StateVector({-1.0})));
  const fs::path csv = scratch_dir() / "traj.csv";
  const CmdResult res = run_cli("integrate --input " + q.string() + " --x0 " + x.string() +
                                " --t-end 2 --output " + csv.string() + " --seed 5");
  REQUIRE(res.exit_code == 0);
  REQUIRE(fs::exists(csv));
  REQUIRE(fs::exists(csv.string() + ".json"));

  std::ifstream in(csv);
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,norm,coord_0");

  const auto sidecar = nlohmann::json::parse(slurp(csv.string() + ".json"));
  CHECK(sidecar.at("status") == "blowup_detected");
  CHECK(sidecar.at("estimated_time").get<double>() == Catch::Approx(1.0).margin(1e-5));
  const quadblow::TrajectorySummary summary = quadblow::load_trajectory_summary(sidecar);
  CHECK(summary.status == quadblow::TrajectoryStatus::BlowupDetected);
}

TEST_CASE("cli refuses to overwrite without --force") {
  const fs::path out = scratch_dir() / "result.json";
  const std::string base =
      "mc-q2 --dim 1 --samples 50 --verify-fraction 0 --seed 6 --output " + out.string();
  REQUIRE(run_cli(base).exit_code == 0);
  const CmdResult second = run_cli(base);
  REQUIRE(second.exit_code == 1);
  const auto err = nlohmann::json::parse(second.err.substr(second.err.find('{')));
  CHECK(err.at("error") == "output exists");
  REQUIRE(run_cli(base + " --force").exit_code == 0);
}

TEST_CASE("cli mc-q2 reruns are byte-identical apart from the wall time") {
  const fs::path f1 = scratch_dir() / "q2a.json";
  const fs::path f2 = scratch_dir() / "q2b.json";
  const std::string common =
      "mc-q2 --dim 2 --samples 500 --verify-fraction 0.02 --workers 2 --seed 1 --output ";
  REQUIRE(run_cli(common + f1.string()).exit_code == 0);
  REQUIRE(run_cli(common + f2.string()).exit_code == 0);
  auto j1 = nlohmann::json::parse(slurp(f1));
  auto j2 = nlohmann::json::parse(slurp(f2));
  j1.erase("wall_time_seconds");
  j2.erase("wall_time_seconds");
  CHECK(j1.dump() == j2.dump());
  // loader accepts the persisted result
  const quadblow::EnsembleResult res =
      quadblow::load_ensemble_result(nlohmann::json::parse(slurp(f1)));
  CHECK(res.spec.master_seed == 1);
}

TEST_CASE("cli mc-q1 persists a fully successful run") {
  const fs::path out = scratch_dir() / "q1.json";
  const CmdResult res = run_cli(
      "mc-q1 --dim 2 --samples 10 --verify-fraction 1 --seed 7 --output " + out.string());
  REQUIRE(res.exit_code == 0);
  const quadblow::EnsembleResult r =
      quadblow::load_ensemble_result(nlohmann::json::parse(slurp(out)));
  CHECK(r.estimate == 1.0);
  CHECK(r.successes == 10);
}

TEST_CASE("cli usage errors exit with 2") {
  CHECK(run_cli("matrix --bogus-flag x").exit_code == 2);
  CHECK(run_cli("eval").exit_code == 2);
  CHECK(run_cli("").exit_code == 2);
  CHECK(run_cli("--help").exit_code == 0);
}

TEST_CASE("cli seed resolution: flag beats environment, environment beats entropy") {
  const CmdResult env_only =
      run_cli("search-blowup --input " + doubling_map_path().string(), "QUADBLOW_SEED=9");
  REQUIRE(env_only.exit_code == 0);
  CHECK(nlohmann::json::parse(env_only.out).at("seed").get<std::uint64_t>() == 9);

  const CmdResult both = run_cli("search-blowup --input " + doubling_map_path().string() +
                                     " --seed 3",
                                 "QUADBLOW_SEED=9");
  REQUIRE(both.exit_code == 0);
  CHECK(nlohmann::json::parse(both.out).at("seed").get<std::uint64_t>() == 3);

  // without either source some seed is still resolved and echoed
  const CmdResult entropy = run_cli("search-blowup --input " + doubling_map_path().string());
  REQUIRE(entropy.exit_code == 0);
  CHECK(entropy.err.find("resolved seed:") != std::string::npos);
}
