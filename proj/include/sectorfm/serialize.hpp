#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "sectorfm/diagnostics.hpp"
#include "sectorfm/em.hpp"
#include "sectorfm/model.hpp"

namespace sectorfm {

using Json = nlohmann::ordered_json;

/// A fitted (or ground-truth) model together with the universe its rows
/// refer to; the unit of model files on disk.
struct ModelArtifact {
  FactorModel model;
  std::vector<std::string> stock_ids;
};

/// Model files are JSON with explicit dimensions and row-major value arrays;
/// doubles round-trip exactly, so save/load reproduces lambda, psi and the
/// mask bit for bit.
void save_model(const std::string& path, const ModelArtifact& artifact);
ModelArtifact load_model(const std::string& path);

/// CSV with columns iteration,loglik,expected_loglik.
void write_trace_csv(const std::string& path, const FitTrace& trace);

/// FNV-1a 64-bit digest of a file's bytes, as 16 hex characters.
std::string file_digest_hex(const std::string& path);

/// Reproducibility record written next to every fit output.
struct RunManifest {
  std::string command;
  std::string tool_version;
  std::uint64_t seed = 0;
  Json flags;  // resolved flag values
  std::vector<std::pair<std::string, std::string>> inputs;  // (path, digest)
  double duration_seconds = 0.0;
  double final_loglik = 0.0;
  int iterations_run = 0;
  bool converged_by_tol = false;
};

void write_manifest(const std::string& path, const RunManifest& manifest);

/// Parses a manifest and checks the required fields; throws DataError if the
/// file is not a valid manifest.
RunManifest read_manifest(const std::string& path);

Json reports_to_json(const std::vector<FactorReport>& reports,
                     double threshold);
std::string reports_to_text(const std::vector<FactorReport>& reports,
                            double threshold);

/// Per-factor plot data: stock_id,sector_code,loading over the factor's
/// masked support (including sub-threshold components).
void write_plot_csv(const std::string& path, const FactorModel& model,
                    const std::vector<std::string>& stock_ids,
                    const SectorMap& sectors, Index factor);

}  // namespace sectorfm
