#include "sectorfm/commands.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "sectorfm/em.hpp"
#include "sectorfm/serialize.hpp"
#include "sectorfm/version.hpp"

namespace sectorfm {

namespace fs = std::filesystem;

namespace {

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir);
}

ReturnsPanel keep_rows(const ReturnsPanel& panel,
                       const std::vector<Index>& rows) {
  ReturnsPanel out;
  out.dates = panel.dates;
  out.demeaned = panel.demeaned;
  out.values.resize(static_cast<Index>(rows.size()), panel.p());
  for (std::size_t j = 0; j < rows.size(); ++j) {
    out.stock_ids.push_back(
        panel.stock_ids[static_cast<std::size_t>(rows[j])]);
    out.values.row(static_cast<Index>(j)) = panel.values.row(rows[j]);
  }
  return out;
}

}  // namespace

FitOutputs cmd_fit(const FitOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  ensure_dir(options.out_dir);

  IngestOptions ingest;
  ingest.on_missing = options.on_missing;
  PriceLoadResult loaded = load_prices(options.price_file, ingest);
  for (const auto& dropped : loaded.dropped) {
    std::cerr << "fit: dropped stock " << dropped << "\n";
  }
  ReturnsPanel panel = compute_log_returns(loaded.table);

  SectorLoadResult sectors = load_sectors(options.sector_file,
                                          panel.stock_ids);
  if (sectors.defaulted_to_unclassified > 0) {
    std::cerr << "fit: " << sectors.defaulted_to_unclassified
              << " stock(s) absent from the sector file, treated as "
                 "UNCLASSIFIED\n";
  }
  if (options.drop_unclassified) {
    std::vector<Index> keep;
    for (Index j = 0; j < panel.n(); ++j) {
      const auto& id = panel.stock_ids[static_cast<std::size_t>(j)];
      if (sectors.sectors.code_of(id) != kUnclassified) keep.push_back(j);
    }
    if (keep.empty()) {
      throw DataError("fit: every stock is unclassified, nothing to fit");
    }
    if (static_cast<Index>(keep.size()) != panel.n()) {
      std::cerr << "fit: dropped "
                << (panel.n() - static_cast<Index>(keep.size()))
                << " unclassified stock(s)\n";
      panel = keep_rows(panel, keep);
    }
  }
  if (options.demean_returns) panel = demean(panel);

  const LoadingMask mask =
      options.standard
          ? all_true_mask(panel.n(), options.m)
          : build_mask(sectors.sectors, panel.stock_ids, options.m);
  FitConfig config;
  config.max_iterations = options.iterations;
  config.rel_tol = options.tol;
  config.seed = options.seed;
  auto [model, trace] = fit(panel, mask, config);

  FitOutputs outputs;
  outputs.model_path = join(options.out_dir, "model.json");
  outputs.trace_path = join(options.out_dir, "trace.csv");
  outputs.manifest_path = join(options.out_dir, "manifest.json");
  save_model(outputs.model_path, {model, panel.stock_ids});
  write_trace_csv(outputs.trace_path, trace);
  outputs.final_loglik =
      trace.loglik_per_iter.empty() ? 0.0 : trace.loglik_per_iter.back();
  outputs.iterations_run = trace.iterations_run;

  RunManifest manifest;
  manifest.command = "fit";
  manifest.tool_version = kVersion;
  manifest.seed = options.seed;
  manifest.flags = Json{
      {"m", options.m},
      {"iters", options.iterations},
      {"tol", options.tol ? Json(*options.tol) : Json(nullptr)},
      {"standard", options.standard},
      {"on_missing",
       options.on_missing == IngestOptions::OnMissing::kDrop ? "drop"
                                                             : "error"},
      {"demean", options.demean_returns ? "on" : "off"},
      {"unclassified", options.drop_unclassified ? "drop" : "keep"},
      {"out", options.out_dir}};
  manifest.inputs = {
      {options.price_file, file_digest_hex(options.price_file)},
      {options.sector_file, file_digest_hex(options.sector_file)}};
  manifest.duration_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  manifest.final_loglik = outputs.final_loglik;
  manifest.iterations_run = trace.iterations_run;
  manifest.converged_by_tol = trace.converged_by_tol;
  write_manifest(outputs.manifest_path, manifest);
  return outputs;
}

SimulateOutputs cmd_simulate(const SimulateOptions& options) {
  ensure_dir(options.out_dir);
  const SynthModel truth = sample_model(options.spec);
  const ReturnsPanel panel = sample_panel(truth.model, truth.stock_ids,
                                          options.spec.p, options.spec.seed);
  const PriceTable prices = prices_from_returns(panel);

  SimulateOutputs outputs;
  outputs.price_path = join(options.out_dir, "prices.csv");
  outputs.sector_path = join(options.out_dir, "sectors.csv");
  outputs.truth_model_path = join(options.out_dir, "truth_model.json");
  write_prices_csv(outputs.price_path, prices);
  write_sectors_csv(outputs.sector_path, truth.sectors, truth.stock_ids);
  save_model(outputs.truth_model_path, {truth.model, truth.stock_ids});
  return outputs;
}

ReportOutputs cmd_report(const ReportOptions& options) {
  ensure_dir(options.out_dir);
  const ModelArtifact artifact = load_model(options.model_file);
  const SectorLoadResult sectors =
      load_sectors(options.sector_file, artifact.stock_ids);
  const std::vector<FactorReport> reports =
      full_report(artifact.model, artifact.stock_ids, sectors.sectors,
                  options.threshold);

  ReportOutputs outputs;
  outputs.json_path = join(options.out_dir, "report.json");
  outputs.text_path = join(options.out_dir, "report.txt");
  outputs.n_factors = static_cast<int>(reports.size());
  {
    std::ofstream file(outputs.json_path);
    if (!file) throw DataError("cannot write " + outputs.json_path);
    file << reports_to_json(reports, options.threshold).dump(2) << '\n';
  }
  {
    std::ofstream file(outputs.text_path);
    if (!file) throw DataError("cannot write " + outputs.text_path);
    file << reports_to_text(reports, options.threshold);
  }
  for (Index k = 0; k < artifact.model.m(); ++k) {
    char name[40];
    std::snprintf(name, sizeof(name), "plot_factor_%02d.csv",
                  static_cast<int>(k) + 1);
    write_plot_csv(join(options.out_dir, name), artifact.model,
                   artifact.stock_ids, sectors.sectors, k);
  }
  return outputs;
}

}  // namespace sectorfm
