#include <CLI11.hpp>

#include <array>
#include <iostream>
#include <string>
#include <vector>

#include "sectorfm/commands.hpp"
#include "sectorfm/errors.hpp"
#include "sectorfm/version.hpp"

namespace {

// Exit codes: 0 ok, 2 invalid flags/usage, 3 data or parse error,
// 4 numerical failure.
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

}  // namespace

int main(int argc, char** argv) {
  using namespace sectorfm;

  CLI::App app{"Sector-constrained Gaussian factor models for daily stock "
               "log returns"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  // fit ----------------------------------------------------------------
  FitOptions fit_opts;
  std::string on_missing = "drop";
  std::string demean_flag = "on";
  std::string unclassified = "keep";
  double tol_value = 0.0;
  auto* fit_cmd = app.add_subcommand(
      "fit", "Fit a factor model to a price and a sector file");
  fit_cmd->add_option("prices", fit_opts.price_file, "Price CSV")
      ->required()
      ->check(CLI::ExistingFile);
  fit_cmd->add_option("sectors", fit_opts.sector_file, "Sector CSV")
      ->required()
      ->check(CLI::ExistingFile);
  fit_cmd->add_option("--out", fit_opts.out_dir, "Output directory")
      ->capture_default_str();
  fit_cmd->add_option("--m", fit_opts.m, "Number of factors (>= 12)")
      ->check(CLI::Range(12, 1000))
      ->capture_default_str();
  fit_cmd->add_option("--iters", fit_opts.iterations, "EM iterations")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  auto* tol_opt =
      fit_cmd->add_option("--tol", tol_value,
                          "Optional early stop on relative log-likelihood "
                          "change")
          ->check(CLI::PositiveNumber);
  fit_cmd->add_option("--seed", fit_opts.seed, "Initialization seed")
      ->capture_default_str();
  fit_cmd->add_flag("--standard", fit_opts.standard,
                    "Fit the classic all-true-mask model");
  fit_cmd->add_option("--on-missing", on_missing,
                      "Stocks with missing/non-positive prices: drop|error")
      ->check(CLI::IsMember({"drop", "error"}))
      ->capture_default_str();
  fit_cmd->add_option("--demean", demean_flag, "Demean returns: on|off")
      ->check(CLI::IsMember({"on", "off"}))
      ->capture_default_str();
  fit_cmd->add_option("--unclassified", unclassified,
                      "Stocks outside the 11 sectors: keep|drop")
      ->check(CLI::IsMember({"keep", "drop"}))
      ->capture_default_str();

  // simulate -----------------------------------------------------------
  SimulateOptions sim_opts;
  std::vector<int> per_sector;
  std::vector<double> sector_loading{0.5, 1.0};
  std::vector<double> psi_range{0.2, 0.5};
  auto* sim_cmd = app.add_subcommand(
      "simulate", "Write synthetic price and sector files from a known model");
  sim_cmd->add_option("--out", sim_opts.out_dir, "Output directory")
      ->capture_default_str();
  sim_cmd->add_option("--per-sector", per_sector,
                      "Stocks per sector, 11 comma-separated counts")
      ->delimiter(',')
      ->expected(11);
  sim_cmd->add_option("--unclassified", sim_opts.spec.n_unclassified,
                      "Unclassified stocks")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  sim_cmd->add_option("--m", sim_opts.spec.m, "Number of factors (>= 12)")
      ->check(CLI::Range(12, 1000))
      ->capture_default_str();
  sim_cmd->add_option("--days", sim_opts.spec.p, "Days to sample (>= 2)")
      ->check(CLI::Range(2, 10000000))
      ->capture_default_str();
  sim_cmd->add_option("--sector-loading", sector_loading,
                      "Sector loading magnitude range lo,hi")
      ->delimiter(',')
      ->expected(2);
  sim_cmd->add_option("--market-scale", sim_opts.spec.market_loading_scale,
                      "Stddev scale of market loadings")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sim_cmd->add_option("--psi", psi_range, "Unique variance range lo,hi")
      ->delimiter(',')
      ->expected(2);
  sim_cmd->add_flag("--coherent,!--no-coherent",
                    sim_opts.spec.sector_sign_coherent,
                    "One shared sign per sector column (default on)");
  sim_cmd->add_option("--seed", sim_opts.spec.seed, "Generator seed")
      ->capture_default_str();

  // report ---------------------------------------------------------------
  ReportOptions report_opts;
  auto* report_cmd = app.add_subcommand(
      "report", "Factor interpretability reports for a saved model");
  report_cmd->add_option("model", report_opts.model_file, "Model JSON")
      ->required()
      ->check(CLI::ExistingFile);
  report_cmd->add_option("sectors", report_opts.sector_file, "Sector CSV")
      ->required()
      ->check(CLI::ExistingFile);
  report_cmd->add_option("--out", report_opts.out_dir, "Output directory")
      ->capture_default_str();
  report_cmd
      ->add_option("--threshold", report_opts.threshold,
                   "Component selection threshold in (0, 1]")
      ->check(CLI::Range(1e-12, 1.0))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*fit_cmd) {
      if (*tol_opt) fit_opts.tol = tol_value;
      fit_opts.on_missing = on_missing == "drop"
                                ? IngestOptions::OnMissing::kDrop
                                : IngestOptions::OnMissing::kError;
      fit_opts.demean_returns = demean_flag == "on";
      fit_opts.drop_unclassified = unclassified == "drop";
      const FitOutputs out = cmd_fit(fit_opts);
      std::cout << "wrote " << out.model_path << "\nwrote " << out.trace_path
                << "\nwrote " << out.manifest_path << "\nfinal loglik "
                << out.final_loglik << " after " << out.iterations_run
                << " iteration(s)\n";
    } else if (*sim_cmd) {
      if (!per_sector.empty()) {
        std::copy(per_sector.begin(), per_sector.end(),
                  sim_opts.spec.n_per_sector.begin());
      } else {
        sim_opts.spec.n_per_sector.fill(2);  // small default universe
      }
      sim_opts.spec.sector_loading_range = {sector_loading[0],
                                            sector_loading[1]};
      sim_opts.spec.psi_range = {psi_range[0], psi_range[1]};
      const SimulateOutputs out = cmd_simulate(sim_opts);
      std::cout << "wrote " << out.price_path << "\nwrote " << out.sector_path
                << "\nwrote " << out.truth_model_path << "\n";
    } else if (*report_cmd) {
      const ReportOutputs out = cmd_report(report_opts);
      std::cout << "wrote " << out.json_path << "\nwrote " << out.text_path
                << " (" << out.n_factors << " factors)\n";
    }
  } catch (const NumericalError& err) {
    std::cerr << "numerical error: " << err.what() << "\n";
    return kExitNumerical;
  } catch (const DataError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitData;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitData;
  }
  return 0;
}
