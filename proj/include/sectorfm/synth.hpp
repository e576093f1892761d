#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sectorfm/model.hpp"
#include "sectorfm/pipeline.hpp"

namespace sectorfm {

/// Recipe for a ground-truth model and panel at desk scale.
struct SynthSpec {
  std::array<int, kNumSectors> n_per_sector{};  // stocks per sector code 1..11
  int n_unclassified = 0;
  int m = 13;
  int p = 500;  // days sampled by the simulate command
  std::pair<double, double> sector_loading_range{0.5, 1.0};
  double market_loading_scale = 0.3;
  std::pair<double, double> psi_range{0.2, 0.5};
  /// When true every nonzero entry of a sector column shares one sign (the
  /// sign itself is drawn per column).
  bool sector_sign_coherent = true;
  std::uint64_t seed = 0;
};

/// Ground truth bundle: the model plus the universe it is defined over.
struct SynthModel {
  std::vector<std::string> stock_ids;
  SectorMap sectors;
  FactorModel model;
};

void validate(const SynthSpec& spec);

/// Deterministic synthetic universe: "S<code>_<k>" per sector in code order,
/// then "UNC_<k>"; zero-padded so lexicographic order equals build order.
std::vector<std::string> synth_stock_ids(const SynthSpec& spec);

/// Draws a ground-truth model. Sector loadings are uniform over
/// sector_loading_range (one shared sign per column when coherent, otherwise
/// an independent sign per entry); market loadings are
/// N(0, market_loading_scale^2); psi is uniform over psi_range. Loadings come
/// from the kLoadings stream (sector columns in code order, then market
/// columns, rows ascending), psi from kUniqueVariances. Bit-identical per
/// seed.
SynthModel sample_model(const SynthSpec& spec);

/// Samples p days of returns X_i = Lambda F_i + eps_i with F_i ~ N(0, I) and
/// eps_i ~ N(0, diag(psi)); factors come from the kFactors stream and noise
/// from kNoise, both day by day. Dates run daily from 2000-01-04. The panel
/// is not demeaned.
ReturnsPanel sample_panel(const FactorModel& model,
                          const std::vector<std::string>& stock_ids, int p,
                          std::uint64_t seed);

/// Price table whose log returns reproduce the panel: a base price of 100 on
/// the day before the first return date, then 100 * exp(cumulative returns).
PriceTable prices_from_returns(const ReturnsPanel& panel);

}  // namespace sectorfm
