// Command-line front end. Talks to the library through the C interface only.
#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <json.hpp>
#include <string>

#include "hypospec/hypospec.h"

namespace {

struct Options {
  std::string config;
  std::string scenario;
  std::string out;
  long long seed = -1;
  int workers = -1;
  bool no_cache = false;
  bool quiet = false;
};

void log_line(const char* msg, void* user) {
  if (!*static_cast<bool*>(user)) std::fprintf(stderr, "[hypospec] %s\n", msg);
}

int fail(const char* what) {
  std::fprintf(stderr, "hypospec: %s: %s\n", what, hs_last_error());
  return 2;
}

void print_verdict(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  for (const auto& c : j.at("checks")) {
    const std::string measured = c.at("measured").is_null() ? "null" : c.at("measured").dump();
    std::printf("%-40s %s  measured=%s expected=%s%s%s\n", c.at("name").get<std::string>().c_str(),
                c.at("pass").get<bool>() ? "PASS" : "FAIL", measured.c_str(), c.at("expected").dump().c_str(),
                c.value("note", std::string()).empty() ? "" : "  ", c.value("note", std::string()).c_str());
  }
  const auto& overall = j.at("overall");
  const bool pass = overall.is_boolean() ? overall.get<bool>() : overall == "pass";
  std::printf("overall: %s\n", pass ? "PASS" : "FAIL");
}

int run(const std::string& stage, const Options& o) {
  hs_config* cfg = nullptr;
  hs_status st;
  if (!o.config.empty()) {
    st = hs_config_load(o.config.c_str(), &cfg);
  } else if (!o.scenario.empty()) {
    st = hs_config_for_scenario(o.scenario.c_str(), &cfg);
  } else {
    std::fprintf(stderr, "hypospec: %s needs --config or --scenario\n", stage.c_str());
    return 2;
  }
  if (st != HS_OK) return fail("configuration");
  if (o.seed >= 0) hs_config_set_seed(cfg, static_cast<uint64_t>(o.seed));
  if (o.workers >= 0) hs_config_set_workers(cfg, o.workers);
  if (!o.out.empty()) hs_config_set_output(cfg, o.out.c_str());
  if (o.no_cache) hs_config_set_cache(cfg, 0);

  bool quiet = o.quiet;
  hs_run* r = nullptr;
  if (hs_run_create(cfg, log_line, &quiet, &r) != HS_OK) {
    hs_config_free(cfg);
    return fail("run");
  }
  int code = 0;
  st = hs_run_stage(r, stage.c_str(), &code);
  if (st != HS_OK) {
    code = fail(stage.c_str());
  } else if (stage == "verify") {
    char* text = nullptr;
    if (hs_run_verdict(r, &text) == HS_OK) {
      print_verdict(text);
      hs_string_free(text);
    }
  }
  hs_run_free(r);
  hs_config_free(cfg);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral asymptotics of hypoelliptic operators"};
  app.set_version_flag("--version", hs_version());
  app.require_subcommand(1);
  Options o;
  app.add_option("--config", o.config, "Run configuration (JSON)")->check(CLI::ExistingFile);
  app.add_option("--scenario", o.scenario, "Registry scenario id, used when no --config is given");
  app.add_option("--seed", o.seed, "Seed overriding the configuration")->check(CLI::NonNegativeNumber);
  app.add_option("--workers", o.workers, "Worker threads, 0 for all cores")->check(CLI::NonNegativeNumber);
  app.add_option("--out", o.out, "Output directory");
  app.add_flag("--no-cache", o.no_cache, "Ignore and do not write the result cache");
  app.add_flag("-q,--quiet", o.quiet, "Suppress progress messages");

  const char* stages[][2] = {{"audit", "Bracket-generation audit: Q_L, tau_L, F_k masses"},
                             {"assemble", "Export the operator pencil"},
                             {"spectrum", "Lowest eigenvalues and the counting curve"},
                             {"trace", "Heat-trace window, trace rows and heat-kernel diagonal probes"},
                             {"ball", "Monte-Carlo control balls and the doubling exponent"},
                             {"fit", "Power-law fits and the Karamata cross-check"},
                             {"verify", "Full verification; exit 0 iff every check passes"}};
  std::string chosen;
  for (auto& s : stages) {
    auto* sub = app.add_subcommand(s[0], s[1]);
    const std::string name = s[0];
    sub->callback([&chosen, name] { chosen = name; });
    sub->fallthrough();
  }
  auto* list = app.add_subcommand("list", "List registry scenarios");
  list->callback([&chosen] { chosen = "list"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  if (chosen == "list") {
    char* text = nullptr;
    if (hs_registry_listing(&text) != HS_OK) return fail("list");
    std::fputs(text, stdout);
    hs_string_free(text);
    return 0;
  }
  return run(chosen, o);
}
