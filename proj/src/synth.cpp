#include "sectorfm/synth.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

#include "sectorfm/rng.hpp"

namespace sectorfm {

namespace {

int total_stocks(const SynthSpec& spec) {
  return std::accumulate(spec.n_per_sector.begin(), spec.n_per_sector.end(),
                         spec.n_unclassified);
}

std::string padded_id(const char* prefix, int k) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%s_%04d", prefix, k);
  return buf;
}

}  // namespace

void validate(const SynthSpec& spec) {
  for (int c : spec.n_per_sector) {
    if (c < 0) throw DataError("synth spec: negative sector count");
  }
  if (spec.n_unclassified < 0) {
    throw DataError("synth spec: negative unclassified count");
  }
  if (total_stocks(spec) < 1) {
    throw DataError("synth spec: at least one stock required");
  }
  if (spec.m < 12) throw DataError("synth spec: m must be at least 12");
  if (spec.p < 2) throw DataError("synth spec: p must be at least 2");
  if (spec.sector_loading_range.first <= 0.0 ||
      spec.sector_loading_range.first > spec.sector_loading_range.second) {
    throw DataError("synth spec: sector loading range must be 0 < lo <= hi");
  }
  if (spec.psi_range.first <= 0.0 ||
      spec.psi_range.first > spec.psi_range.second) {
    throw DataError("synth spec: psi range must be 0 < lo <= hi");
  }
  if (spec.market_loading_scale <= 0.0) {
    throw DataError("synth spec: market loading scale must be positive");
  }
}

std::vector<std::string> synth_stock_ids(const SynthSpec& spec) {
  std::vector<std::string> ids;
  ids.reserve(static_cast<std::size_t>(total_stocks(spec)));
  for (int code = 1; code <= kNumSectors; ++code) {
    char prefix[8];
    std::snprintf(prefix, sizeof(prefix), "S%02d", code);
    for (int k = 1; k <= spec.n_per_sector[static_cast<std::size_t>(code - 1)];
         ++k) {
      ids.push_back(padded_id(prefix, k));
    }
  }
  for (int k = 1; k <= spec.n_unclassified; ++k) {
    ids.push_back(padded_id("UNC", k));
  }
  return ids;
}

SynthModel sample_model(const SynthSpec& spec) {
  validate(spec);
  SynthModel out;
  out.stock_ids = synth_stock_ids(spec);
  {
    std::size_t pos = 0;
    for (int code = 1; code <= kNumSectors; ++code) {
      for (int k = 0; k < spec.n_per_sector[static_cast<std::size_t>(code - 1)];
           ++k) {
        out.sectors.assignments[out.stock_ids[pos++]] = code;
      }
    }
    for (int k = 0; k < spec.n_unclassified; ++k) {
      out.sectors.assignments[out.stock_ids[pos++]] = kUnclassified;
    }
  }

  const Index n = static_cast<Index>(out.stock_ids.size());
  const int m = spec.m;
  LoadingMask mask = build_mask(out.sectors, out.stock_ids, m);

  RandomStream r_lambda(spec.seed, RngStream::kLoadings);
  Matrix lambda = Matrix::Zero(n, m);
  const auto [lo, hi] = spec.sector_loading_range;
  for (int k = 0; k < kNumSectors; ++k) {
    std::vector<Index> rows;
    for (Index j = 0; j < n; ++j) {
      if (mask.pattern(j, k)) rows.push_back(j);
    }
    if (rows.empty()) continue;
    const double column_sign =
        spec.sector_sign_coherent ? r_lambda.sign() : 0.0;
    for (Index j : rows) {
      const double sign =
          spec.sector_sign_coherent ? column_sign : r_lambda.sign();
      lambda(j, k) = sign * r_lambda.uniform(lo, hi);
    }
  }
  for (int k = kNumSectors; k < m; ++k) {
    for (Index j = 0; j < n; ++j) {
      lambda(j, k) = spec.market_loading_scale * r_lambda.normal();
    }
  }

  RandomStream r_psi(spec.seed, RngStream::kUniqueVariances);
  Vector psi(n);
  for (Index j = 0; j < n; ++j) {
    psi(j) = std::max(r_psi.uniform(spec.psi_range.first,
                                    spec.psi_range.second),
                      kPsiFloor);
  }

  out.model.lambda = std::move(lambda);
  out.model.psi = std::move(psi);
  out.model.mask = std::move(mask);
  out.model.factor_labels = sector_factor_labels(m);
  validate(out.model);
  return out;
}

ReturnsPanel sample_panel(const FactorModel& model,
                          const std::vector<std::string>& stock_ids, int p,
                          std::uint64_t seed) {
  if (p < 2) throw DataError("sample_panel: p must be at least 2");
  const Index n = model.n();
  const Index m = model.m();
  if (static_cast<Index>(stock_ids.size()) != n) {
    throw DataError("sample_panel: stock id count does not match model");
  }
  RandomStream r_factors(seed, RngStream::kFactors);
  RandomStream r_noise(seed, RngStream::kNoise);
  Matrix factors(m, p);
  for (Index i = 0; i < p; ++i) {
    for (Index k = 0; k < m; ++k) factors(k, i) = r_factors.normal();
  }
  Matrix noise(n, p);
  for (Index i = 0; i < p; ++i) {
    for (Index j = 0; j < n; ++j) noise(j, i) = r_noise.normal();
  }
  ReturnsPanel panel;
  panel.stock_ids = stock_ids;
  panel.dates = sequential_dates("2000-01-04", p);
  panel.values = model.lambda * factors +
                 model.psi.cwiseSqrt().asDiagonal() * noise;
  panel.demeaned = false;
  return panel;
}

PriceTable prices_from_returns(const ReturnsPanel& panel) {
  if (panel.dates.empty()) {
    throw DataError("prices_from_returns: empty panel");
  }
  PriceTable prices;
  prices.stock_ids = panel.stock_ids;
  prices.dates.push_back(iso_date_offset(panel.dates.front(), -1));
  prices.dates.insert(prices.dates.end(), panel.dates.begin(),
                      panel.dates.end());
  const Index n = panel.n();
  const Index p = panel.p();
  prices.close_prices.resize(n, p + 1);
  for (Index j = 0; j < n; ++j) {
    double cum = 0.0;
    prices.close_prices(j, 0) = 100.0;
    for (Index i = 0; i < p; ++i) {
      cum += panel.values(j, i);
      prices.close_prices(j, i + 1) = 100.0 * std::exp(cum);
    }
  }
  return prices;
}

}  // namespace sectorfm
