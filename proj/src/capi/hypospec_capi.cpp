#include "hypospec/hypospec.h"

#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <optional>
#include <string>

#include "hypospec/error.hpp"
#include "hypospec/pipeline.hpp"
#include "hypospec/registry.hpp"
#include "hypospec/spectral.hpp"

using namespace hypospec;

struct hs_config {
  harness::RunConfig cfg;
};

struct hs_run {
  std::unique_ptr<harness::Pipeline> pipeline;
  std::optional<asymptotics::Verdict> verdict;
  hs_log_fn log = nullptr;
  void* user = nullptr;
};

struct hs_pencil {
  std::unique_ptr<spectral::SpectralEngine> engine;
};

namespace {

thread_local std::string g_last_error;

template <typename F>
hs_status guard(F&& f) {
  try {
    g_last_error.clear();
    f();
    return HS_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return static_cast<hs_status>(static_cast<int>(e.code()));
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return HS_INTERNAL_ERROR;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return HS_INTERNAL_ERROR;
  } catch (...) {
    g_last_error = "unknown failure";
    return HS_INTERNAL_ERROR;
  }
}

char* dup(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

void need(const void* p, const char* what) {
  if (!p) throw Error(ErrorCode::kInvalidArgument, std::string("null ") + what);
}

}  // namespace

extern "C" {

const char* hs_version(void) { return harness::kVersion; }
const char* hs_last_error(void) { return g_last_error.c_str(); }
void hs_string_free(char* s) { std::free(s); }

hs_status hs_registry_listing(char** out) {
  return guard([&] {
    need(out, "output");
    *out = dup(harness::registry_listing());
  });
}

const char* hs_stage_names(void) { return "audit,assemble,spectrum,trace,ball,fit,verify"; }

hs_status hs_config_load(const char* path, hs_config** out) {
  return guard([&] {
    need(path, "path");
    need(out, "output");
    *out = new hs_config{harness::load_config(path)};
  });
}

hs_status hs_config_from_string(const char* json_text, hs_config** out) {
  return guard([&] {
    need(json_text, "text");
    need(out, "output");
    *out = new hs_config{harness::parse_config(json_text)};
  });
}

hs_status hs_config_for_scenario(const char* scenario_id, hs_config** out) {
  return guard([&] {
    need(scenario_id, "scenario id");
    need(out, "output");
    *out = new hs_config{harness::default_config(scenario_id)};
  });
}

hs_status hs_config_set_seed(hs_config* cfg, uint64_t seed) {
  return guard([&] {
    need(cfg, "config");
    cfg->cfg.seed = seed;
  });
}

hs_status hs_config_set_workers(hs_config* cfg, int workers) {
  return guard([&] {
    need(cfg, "config");
    if (workers < 0) throw ConfigError("workers must be nonnegative");
    cfg->cfg.workers = workers;
  });
}

hs_status hs_config_set_output(hs_config* cfg, const char* dir) {
  return guard([&] {
    need(cfg, "config");
    need(dir, "directory");
    cfg->cfg.output = dir;
  });
}

hs_status hs_config_set_cache(hs_config* cfg, int enabled) {
  return guard([&] {
    need(cfg, "config");
    cfg->cfg.use_cache = enabled != 0;
  });
}

hs_status hs_config_hash(const hs_config* cfg, char** out) {
  return guard([&] {
    need(cfg, "config");
    need(out, "output");
    *out = dup(harness::hex64(cfg->cfg.hash()));
  });
}

hs_status hs_config_canonical(const hs_config* cfg, char** out) {
  return guard([&] {
    need(cfg, "config");
    need(out, "output");
    *out = dup(cfg->cfg.canonical());
  });
}

void hs_config_free(hs_config* cfg) { delete cfg; }

hs_status hs_run_create(const hs_config* cfg, hs_log_fn log, void* user, hs_run** out) {
  return guard([&] {
    need(cfg, "config");
    need(out, "output");
    auto run = std::make_unique<hs_run>();
    run->log = log;
    run->user = user;
    harness::Logger logger;
    if (log) logger = [log, user](const std::string& m) { log(m.c_str(), user); };
    run->pipeline = std::make_unique<harness::Pipeline>(cfg->cfg, logger);
    *out = run.release();
  });
}

hs_status hs_run_stage(hs_run* run, const char* stage, int* exit_code) {
  return guard([&] {
    need(run, "run");
    need(stage, "stage");
    need(exit_code, "exit code");
    *exit_code = run->pipeline->run_stage(stage);
    if (run->pipeline->last_verdict()) run->verdict = run->pipeline->last_verdict();
  });
}

hs_status hs_run_verdict(hs_run* run, char** out) {
  return guard([&] {
    need(run, "run");
    need(out, "output");
    if (!run->verdict) run->verdict = run->pipeline->verify();
    *out = dup(asymptotics::verdict_to_json(*run->verdict));
  });
}

hs_status hs_run_fits(hs_run* run, char** out) {
  return guard([&] {
    need(run, "run");
    need(out, "output");
    const auto& c = run->pipeline->counting();
    const auto& t = run->pipeline->trace();
    *out = dup("{\"counting\":" + harness::fit_json_text(c.fit) + ",\"trace\":" + harness::fit_json_text(t.fit) + "}");
  });
}

void hs_run_free(hs_run* run) { delete run; }

hs_status hs_pencil_from_triplets(size_t n, size_t nnz, const int64_t* rows, const int64_t* cols,
                                  const double* values, const double* w, hs_pencil** out) {
  return guard([&] {
    need(out, "output");
    need(w, "mass");
    if (nnz > 0) {
      need(rows, "rows");
      need(cols, "cols");
      need(values, "values");
    }
    if (n == 0) throw DimensionError("empty pencil");
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(nnz);
    for (size_t i = 0; i < nnz; ++i) {
      if (rows[i] < 0 || cols[i] < 0 || static_cast<size_t>(rows[i]) >= n || static_cast<size_t>(cols[i]) >= n) {
        throw DimensionError("triplet index out of range");
      }
      trip.emplace_back(rows[i], cols[i], values[i]);
    }
    assembly::SparseMatrix S(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    S.setFromTriplets(trip.begin(), trip.end());
    Eigen::VectorXd W = Eigen::Map<const Eigen::VectorXd>(w, static_cast<Eigen::Index>(n));
    *out = new hs_pencil{std::make_unique<spectral::SpectralEngine>(assembly::make_pencil(std::move(S), std::move(W)))};
  });
}

hs_status hs_pencil_from_config(const hs_config* cfg, hs_pencil** out) {
  return guard([&] {
    need(cfg, "config");
    need(out, "output");
    auto p = assembly::assemble_operator(cfg->cfg.scenario.scenario, cfg->cfg.resolution);
    *out = new hs_pencil{std::make_unique<spectral::SpectralEngine>(std::move(p))};
  });
}

hs_status hs_pencil_dim(const hs_pencil* p, size_t* out) {
  return guard([&] {
    need(p, "pencil");
    need(out, "output");
    *out = p->engine->pencil().dim();
  });
}

hs_status hs_pencil_count_below(const hs_pencil* p, double lambda, long* out) {
  return guard([&] {
    need(p, "pencil");
    need(out, "output");
    *out = p->engine->count_below(lambda).count;
  });
}

hs_status hs_pencil_lowest_eigs(const hs_pencil* p, int k, uint64_t seed, double* values) {
  return guard([&] {
    need(p, "pencil");
    need(values, "values");
    const auto s = p->engine->lowest_eigs(k, seed);
    std::copy(s.eigenvalues.begin(), s.eigenvalues.end(), values);
  });
}

hs_status hs_pencil_trace(const hs_pencil* p, const double* ts, size_t nt, int probes, uint64_t seed,
                          double* values, double* stderrs) {
  return guard([&] {
    need(p, "pencil");
    need(ts, "times");
    need(values, "values");
    spectral::StochasticOptions opt;
    opt.probes = probes;
    opt.seed = seed;
    const auto rows = p->engine->stochastic_trace(std::vector<double>(ts, ts + nt), opt);
    for (size_t i = 0; i < nt; ++i) {
      values[i] = rows[i].value;
      if (stderrs) stderrs[i] = rows[i].stderr_;
    }
  });
}

void hs_pencil_free(hs_pencil* p) { delete p; }

}  // extern "C"
