#pragma once

#include <map>
#include <string>
#include <vector>

#include "sectorfm/model.hpp"

namespace sectorfm {

/// One retained factor component.
struct Component {
  std::string stock_id;
  double loading = 0.0;
};

/// Interpretability summary of one factor column.
///
/// sign_coherence is the share of the selected nonzero components carrying
/// the majority sign (0.5..1); it is this library's operationalization of
/// "components move in tandem" and is NaN when nothing was selected.
/// dominant_sign is +1/-1, or 0 on an exact tie or empty selection.
struct FactorReport {
  int factor_index = 0;  // 1-based column index
  std::string label;
  std::vector<Component> selected;    // descending |loading|
  std::map<int, int> sector_histogram;  // code (0 = UNCLASSIFIED) -> count
  double sign_coherence = 0.0;
  int dominant_sign = 0;
};

/// Entries with |loading| >= threshold * max|loading| of the column, in
/// descending |loading| order with ties broken by stock id. Requires
/// 0 < threshold <= 1 and a column that is not all zero.
std::vector<Component> threshold_components(
    const Vector& column, const std::vector<std::string>& stock_ids,
    double threshold = 0.10);

/// Counts of selected components per sector code (only observed codes
/// appear). Throws on stocks unknown to the map.
std::map<int, int> sector_histogram(const std::vector<Component>& selected,
                                    const SectorMap& sectors);

/// (coherence, dominant sign) over the nonzero selected components; exact
/// zeros are excluded from the counts. Throws on an empty or all-zero
/// selection.
std::pair<double, int> sign_coherence(const std::vector<Component>& selected);

/// One report per factor column. Sector factors are thresholded over their
/// masked support; market columns (and every column of an all-true mask)
/// report over all stocks. A column that is all zero on its support yields
/// an empty report instead of an error.
std::vector<FactorReport> full_report(const FactorModel& model,
                                      const std::vector<std::string>& stock_ids,
                                      const SectorMap& sectors,
                                      double threshold = 0.10);

}  // namespace sectorfm
