#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hypospec/artifacts.hpp"
#include "hypospec/asymptotics.hpp"
#include "hypospec/ccball.hpp"
#include "hypospec/config.hpp"
#include "hypospec/filtration.hpp"
#include "hypospec/spectral.hpp"

namespace hypospec::harness {

inline constexpr const char* kVersion = "0.1.0";

/// Eigensolves for eigsum traces are skipped above this many unknowns.
inline constexpr std::size_t kEigsumDimCap = 40000;

struct CountingData {
  std::vector<spectral::CountResult> curve;  // ascending lambda
  long dim = 0;
  double min_count = 0.0;
  double max_count = 0.0;
  int factorizations = 0;
  std::optional<asymptotics::PowerFit> fit;
  std::string note;
};

struct TraceData {
  double t_min = 0.0;
  double t_max = 0.0;
  bool window_empty = false;
  std::string note;
  std::vector<spectral::TraceEstimate> scan;    // locates t_max
  std::vector<spectral::TraceEstimate> window;  // fitted rows
  std::vector<spectral::TraceEstimate> crosscheck;  // stochastic and eigsum at shared t
  std::string fit_method;
  std::optional<asymptotics::PowerFit> fit;  // in u = 1 / t
};

struct DiagData {
  std::vector<spectral::DiagProbe> probes;
  std::vector<double> times;
  std::vector<std::size_t> nodes;
  std::string note;
};

struct BallData {
  ccball::DoublingReport doubling;
  ccball::LambdaRatio lambda;
  ccball::BallCloud cloud;  // at the largest delta
};

/// Lazily evaluated stages of one configured run. Heavy results go through
/// the content-hash cache under the output directory.
class Pipeline {
 public:
  Pipeline(RunConfig config, Logger log = {});
  ~Pipeline();

  const RunConfig& config() const noexcept { return cfg_; }

  const filtration::AuditReport& audit();
  const assembly::OperatorPencil& pencil();
  const spectral::SpectralEngine& engine();
  const CountingData& counting();
  const TraceData& trace();
  const DiagData& diag();
  const spectral::Spectrum& spectrum();
  const BallData& ball();
  asymptotics::TheoryCoefficient theory();
  asymptotics::Verdict verify();

  /// Runs a CLI stage, writes its artifacts and the manifest. Returns the
  /// process exit status: for verify, 0 iff the verdict passes.
  int run_stage(const std::string& stage);

  /// Verdict of the last verify stage, if any.
  const std::optional<asymptotics::Verdict>& last_verdict() const noexcept { return last_verdict_; }

  ArtifactWriter& writer() noexcept { return writer_; }
  ResultCache& cache() noexcept { return cache_; }

 private:
  struct State;

  std::string cached(const std::string& label, const std::string& params, const std::function<std::string()>& f);
  void write_manifest(const std::string& stage);
  void log(const std::string& msg) const;
  void check_potential(asymptotics::Verdict& v);
  void check_dirichlet(asymptotics::Verdict& v);

  RunConfig cfg_;
  Logger log_;
  ArtifactWriter writer_;
  ResultCache cache_;
  std::unique_ptr<State> st_;
  std::optional<asymptotics::Verdict> last_verdict_;
};

/// Stages accepted by run_stage, in pipeline order.
const std::vector<std::string>& stage_names();

/// JSON object of a fit, or null.
std::string fit_json_text(const std::optional<asymptotics::PowerFit>& f);

/// Geometric grid of `count` points on [lo, hi].
std::vector<double> geometric_grid(double lo, double hi, int count);

}  // namespace hypospec::harness
