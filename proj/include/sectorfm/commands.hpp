#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "sectorfm/pipeline.hpp"
#include "sectorfm/synth.hpp"

namespace sectorfm {

/// Resolved flags of `fit`.
struct FitOptions {
  std::string price_file;
  std::string sector_file;
  std::string out_dir = "fit_out";
  int m = 13;
  int iterations = 100;
  std::optional<double> tol;
  std::uint64_t seed = 0;
  bool standard = false;  // all-true mask instead of the sector mask
  IngestOptions::OnMissing on_missing = IngestOptions::OnMissing::kDrop;
  bool demean_returns = true;
  bool drop_unclassified = false;
};

struct FitOutputs {
  std::string model_path;
  std::string trace_path;
  std::string manifest_path;
  double final_loglik = 0.0;
  int iterations_run = 0;
};

/// Pipeline + engine: load prices and sectors, compute and (by default)
/// demean log returns, fit, and write model.json / trace.csv / manifest.json
/// into out_dir. Identical inputs and seed produce byte-identical model
/// files for any thread count.
FitOutputs cmd_fit(const FitOptions& options);

struct SimulateOptions {
  SynthSpec spec;
  std::string out_dir = "sim_out";
};

struct SimulateOutputs {
  std::string price_path;
  std::string sector_path;
  std::string truth_model_path;
};

/// Draws a ground-truth model and panel and writes prices.csv / sectors.csv
/// in the pipeline's formats (prices reconstructed as 100 * exp(cumulative
/// returns)) plus truth_model.json.
SimulateOutputs cmd_simulate(const SimulateOptions& options);

struct ReportOptions {
  std::string model_file;
  std::string sector_file;
  std::string out_dir = "report_out";
  double threshold = 0.10;
};

struct ReportOutputs {
  std::string json_path;
  std::string text_path;
  int n_factors = 0;
};

/// Per-factor diagnostics of a saved model: report.json, report.txt and one
/// plot_factor_<k>.csv per factor.
ReportOutputs cmd_report(const ReportOptions& options);

}  // namespace sectorfm
