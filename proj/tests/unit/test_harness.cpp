#include <doctest.h>

#include <filesystem>
#include <json.hpp>

#include "hypospec/artifacts.hpp"
#include "hypospec/error.hpp"
#include "hypospec/hypospec.h"
#include "hypospec/pipeline.hpp"
#include "hypospec/registry.hpp"

using namespace hypospec;
using namespace hypospec::harness;
namespace fs = std::filesystem;

namespace {

std::string temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hypospec_test_" + name);
  fs::remove_all(p);
  return p.string();
}

}  // namespace

TEST_CASE("registry content") {
  const auto listing = registry_listing();
  for (const char* id : {"torus2-elliptic", "torus3-elliptic", "heisenberg-nilmanifold", "grushin-torus2",
                         "martinet-torus3", "dirichlet-box2", "psi-mixed"}) {
    CHECK(listing.find(id) != std::string::npos);
  }
  CHECK(find_scenario("heisenberg-nilmanifold").expected_Q_L == 4);
  CHECK(find_scenario("heisenberg-nilmanifold").expected_tau_L == 2);
  CHECK(find_scenario("torus3-elliptic").expected_Q_L == 3);
  CHECK(find_scenario("martinet-torus3").expected_tau_L == 3);
  CHECK_THROWS_AS(find_scenario("nope"), ConfigError);
}

TEST_CASE("registry entries pass the audit with their expected Q_L and tau_L") {
  for (const auto& def : registry()) {
    RunConfig rc = default_config(def.id);
    rc.use_cache = false;
    rc.output = temp_dir("audit_" + def.id);
    Pipeline p(rc);
    const auto& a = p.audit();
    INFO(def.id);
    CHECK(a.failures.empty());
    CHECK(a.Q_L == def.expected_Q_L);
    CHECK(a.tau_L == def.expected_tau_L);
    CHECK(p.theory().kind == def.kind);
  }
}

TEST_CASE("configuration validation") {
  CHECK_THROWS_AS(parse_config(R"j({"scenario": "torus2-elliptic", "resolutoin": [64]})j"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"j({"scenario": "torus2-elliptic", "trace": {"probes": 4}})j"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"j({"scenario": "torus2-elliptic", "checks": ["nonsense"]})j"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"j({"resolution": [64]})j"), ConfigError);
  CHECK_THROWS_AS(parse_config("{not json"), Error);
  const auto rc = parse_config(R"j({"scenario": "torus2-elliptic", "resolution": [64], "seed": 9})j");
  CHECK(rc.resolution == std::vector<int>{64});
  CHECK(rc.seed == 9);
  CHECK(rc.hash() == parse_config(R"j({"seed": 9, "resolution": [64], "scenario": "torus2-elliptic"})j").hash());
  CHECK(rc.hash() != parse_config(R"j({"scenario": "torus2-elliptic", "resolution": [64], "seed": 10})j").hash());
}

TEST_CASE("inline scenario blocks") {
  const auto rc = parse_config(R"j({
    "scenario": {
      "id": "inline-grushin",
      "chart": {"kind": "torus", "dim": 2, "lengths": ["2*pi", "2*pi"]},
      "fields": ["X1 = d/dx", "X2 = sin(x)*d/dy"],
      "potential": "cos(y)",
      "expected": {"Q_L": 3, "tau_L": 2, "coefficient": "zero-measure"}
    },
    "resolution": [32]
  })j");
  CHECK(rc.scenario.id == "inline-grushin");
  CHECK(rc.scenario.scenario.fields.size() == 2);
  CHECK_THROWS_AS(parse_config(R"j({"scenario": {"id": "x", "chart": {"kind": "torus", "dim": 2, "lengths": [1, 1]},
      "fields": ["X1 = exp(x)*d/dx"]}})j"),
                  ConfigError);
  CHECK_THROWS(parse_config(R"j({"scenario": {"id": "x", "chart": {"kind": "torus", "dim": 2, "lengths": [1, 1]},
      "fields": ["X1 = d/dx"], "colour": 1}})j"));
}

TEST_CASE("torus pipeline at N = 64 passes and reruns from the cache") {
  RunConfig rc = parse_config(R"j({"scenario": "torus2-elliptic", "resolution": [64],
                                  "checks": ["audit_expectation", "counting_exponent", "counting_coefficient",
                                             "trace_exponent", "karamata", "uniform_bound"]})j");
  rc.output = temp_dir("t2_64");
  std::vector<std::string> log1, log2;
  {
    Pipeline p(rc, [&](const std::string& m) { log1.push_back(m); });
    CHECK(p.run_stage("verify") == 0);
  }
  for (const char* f : {"audit.json", "counts.csv", "trace.csv", "verdict.json", "manifest.json"}) {
    CHECK(fs::exists(fs::path(rc.output) / f));
  }
  const std::string first = read_file(rc.output + "/verdict.json");
  {
    Pipeline p(rc, [&](const std::string& m) { log2.push_back(m); });
    CHECK(p.run_stage("verify") == 0);
  }
  CHECK(read_file(rc.output + "/verdict.json") == first);
  bool hit = false;
  for (const auto& m : log2) hit = hit || m.find("cache hit") != std::string::npos;
  CHECK(hit);
  const auto manifest = nlohmann::json::parse(read_file(rc.output + "/manifest.json"));
  CHECK(manifest.at("config_hash") == hex64(rc.hash()));
  CHECK(manifest.at("seed") == rc.seed);
  CHECK(manifest.at("versions").contains("hypospec"));
  // The manifest carries the full configuration it was produced from.
  CHECK(parse_config(R"j({"scenario": "torus2-elliptic"})j").hash() != rc.hash());
  RunConfig again = rc;
  CHECK(nlohmann::json::parse(again.canonical()) == manifest.at("config"));
}

TEST_CASE("stage artifacts") {
  RunConfig rc = parse_config(R"j({"scenario": "grushin-torus2", "resolution": [16],
                                  "ball": {"paths": 500}})j");
  rc.output = temp_dir("stages");
  rc.use_cache = false;
  Pipeline p(rc);
  CHECK(p.run_stage("audit") == 0);
  CHECK(p.run_stage("assemble") == 0);
  CHECK(p.run_stage("ball") == 0);
  CHECK_THROWS_AS(p.run_stage("dance"), ConfigError);
  const std::string trip = read_file(rc.output + "/pencil.txt");
  CHECK(!trip.empty());
  const auto header = nlohmann::json::parse(read_file(rc.output + "/pencil.json"));
  CHECK(header.at("dim") == 256);
  CHECK(read_file(rc.output + "/audit.csv").rfind("x1,x2,tau,Q,lambda_min_deg", 0) == 0);
  CHECK(fs::exists(rc.output + "/cloud.csv"));
}

TEST_CASE("C interface") {
  CHECK(std::string(hs_version()) == kVersion);
  hs_config* cfg = nullptr;
  CHECK(hs_config_from_string(R"j({"scenario": "torus2-elliptic", "bogus": 1})j", &cfg) == HS_CONFIG_ERROR);
  CHECK(std::string(hs_last_error()).find("bogus") != std::string::npos);
  CHECK(hs_config_for_scenario("torus2-elliptic", &cfg) == HS_OK);
  char* hash = nullptr;
  CHECK(hs_config_hash(cfg, &hash) == HS_OK);
  CHECK(std::string(hash).size() == 16);
  hs_string_free(hash);
  hs_config_free(cfg);

  const int64_t rows[] = {0, 1, 2}, cols[] = {0, 1, 2};
  const double vals[] = {1, 2, 3}, w[] = {1, 1, 1};
  hs_pencil* p = nullptr;
  REQUIRE(hs_pencil_from_triplets(3, 3, rows, cols, vals, w, &p) == HS_OK);
  long count = -1;
  CHECK(hs_pencil_count_below(p, 2.5, &count) == HS_OK);
  CHECK(count == 2);
  CHECK(hs_pencil_count_below(nullptr, 2.5, &count) == HS_INVALID_ARGUMENT);
  hs_pencil_free(p);
  const int64_t bad_rows[] = {5};
  CHECK(hs_pencil_from_triplets(3, 1, bad_rows, cols, vals, w, &p) == HS_DIMENSION_ERROR);
}
