#include "sectorfm/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sectorfm {

std::vector<Component> threshold_components(
    const Vector& column, const std::vector<std::string>& stock_ids,
    double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw DataError("threshold_components: threshold must be in (0, 1]");
  }
  if (column.size() != static_cast<Index>(stock_ids.size())) {
    throw DataError("threshold_components: column/id size mismatch");
  }
  const double max_abs = column.cwiseAbs().maxCoeff();
  if (max_abs == 0.0) {
    throw DataError("threshold_components: column is all zero");
  }
  const double cut = threshold * max_abs;
  std::vector<Component> selected;
  for (Index j = 0; j < column.size(); ++j) {
    if (std::abs(column(j)) >= cut) {
      selected.push_back({stock_ids[static_cast<std::size_t>(j)], column(j)});
    }
  }
  std::sort(selected.begin(), selected.end(),
            [](const Component& a, const Component& b) {
              const double fa = std::abs(a.loading);
              const double fb = std::abs(b.loading);
              if (fa != fb) return fa > fb;
              return a.stock_id < b.stock_id;
            });
  return selected;
}

std::map<int, int> sector_histogram(const std::vector<Component>& selected,
                                    const SectorMap& sectors) {
  std::map<int, int> hist;
  for (const auto& comp : selected) {
    ++hist[sectors.code_of(comp.stock_id)];
  }
  return hist;
}

std::pair<double, int> sign_coherence(const std::vector<Component>& selected) {
  int pos = 0;
  int neg = 0;
  for (const auto& comp : selected) {
    if (comp.loading > 0.0) ++pos;
    if (comp.loading < 0.0) ++neg;
  }
  if (pos + neg == 0) {
    throw DataError("sign_coherence: empty or all-zero selection");
  }
  const double coherence =
      static_cast<double>(std::max(pos, neg)) / static_cast<double>(pos + neg);
  const int dominant = pos > neg ? 1 : (neg > pos ? -1 : 0);
  return {coherence, dominant};
}

std::vector<FactorReport> full_report(const FactorModel& model,
                                      const std::vector<std::string>& stock_ids,
                                      const SectorMap& sectors,
                                      double threshold) {
  validate(model);
  if (static_cast<Index>(stock_ids.size()) != model.n()) {
    throw DataError("full_report: stock id count does not match model");
  }
  std::vector<FactorReport> reports;
  for (Index k = 0; k < model.m(); ++k) {
    FactorReport report;
    report.factor_index = static_cast<int>(k) + 1;
    report.label = model.factor_labels[static_cast<std::size_t>(k)];

    std::vector<std::string> support_ids;
    std::vector<double> support_vals;
    for (Index j = 0; j < model.n(); ++j) {
      if (!model.mask.pattern(j, k)) continue;
      support_ids.push_back(stock_ids[static_cast<std::size_t>(j)]);
      support_vals.push_back(model.lambda(j, k));
    }
    const bool all_zero = std::all_of(support_vals.begin(),
                                      support_vals.end(),
                                      [](double v) { return v == 0.0; });
    if (support_ids.empty() || all_zero) {
      // Empty sector or unfitted column: nothing to threshold.
      report.sign_coherence = std::numeric_limits<double>::quiet_NaN();
      reports.push_back(std::move(report));
      continue;
    }
    Vector column = Eigen::Map<const Vector>(
        support_vals.data(), static_cast<Index>(support_vals.size()));
    report.selected = threshold_components(column, support_ids, threshold);
    report.sector_histogram = sector_histogram(report.selected, sectors);
    std::tie(report.sign_coherence, report.dominant_sign) =
        sign_coherence(report.selected);
    reports.push_back(std::move(report));
  }
  return reports;
}

}  // namespace sectorfm
