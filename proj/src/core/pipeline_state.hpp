#pragma once

#include <optional>

#include "hypospec/pipeline.hpp"

namespace hypospec::harness {

struct Pipeline::State {
  std::optional<filtration::AuditReport> audit;
  std::optional<assembly::Grid> grid;
  std::optional<assembly::OperatorPencil> pencil;
  std::unique_ptr<spectral::SpectralEngine> engine;
  std::optional<CountingData> counting;
  std::optional<TraceData> trace;
  std::optional<DiagData> diag;
  std::optional<spectral::Spectrum> spectrum;
  std::optional<BallData> ball;
};

// JSON round trips for cached stage results.
std::string counting_to_json(const CountingData& d);
CountingData counting_from_json(const std::string& s);
std::string trace_to_json(const TraceData& d);
TraceData trace_from_json(const std::string& s);
std::string diag_to_json(const DiagData& d);
DiagData diag_from_json(const std::string& s);
std::string spectrum_to_json(const spectral::Spectrum& s);
spectral::Spectrum spectrum_from_json(const std::string& s);

}  // namespace hypospec::harness
