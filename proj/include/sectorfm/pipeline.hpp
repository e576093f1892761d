#pragma once

#include <string>
#include <vector>

#include "sectorfm/model.hpp"

namespace sectorfm {

/// Daily close prices: n stocks over p+1 dates, all entries positive.
struct PriceTable {
  std::vector<std::string> stock_ids;
  std::vector<std::string> dates;  // ISO-8601, strictly increasing
  Matrix close_prices;             // n x (p+1)
};

struct IngestOptions {
  enum class OnMissing { kDrop, kError };
  OnMissing on_missing = OnMissing::kDrop;
};

struct PriceLoadResult {
  PriceTable table;
  /// Symbols removed because of a missing or non-positive price, with the
  /// offending date: "SYM (missing at 2001-02-03)".
  std::vector<std::string> dropped;
};

struct SectorLoadResult {
  SectorMap sectors;
  /// Stocks of the universe absent from the file, defaulted to UNCLASSIFIED.
  int defaulted_to_unclassified = 0;
};

/// Reads a price CSV (header "date,SYM1,SYM2,..."; one row per date; empty
/// cell = missing). Stocks with any missing or non-positive price are dropped
/// or cause an error per options.on_missing. Surviving stocks are ordered by
/// symbol. Throws DataError on malformed input, non-increasing dates, or when
/// no stock survives.
PriceLoadResult load_prices(const std::string& path,
                            const IngestOptions& options);

/// values[j][i] = ln(close[j][i+1] / close[j][i]); the returned panel has one
/// column fewer than the price table and is not demeaned. Return i carries
/// the date of its later close. Requires at least 2 dates.
ReturnsPanel compute_log_returns(const PriceTable& prices);

/// Subtracts each row's mean; the result has demeaned = true. Idempotent.
ReturnsPanel demean(const ReturnsPanel& panel);

/// Reads a sector CSV ("symbol,sector_code" with codes 1..11 or the word
/// UNCLASSIFIED; an optional header line is tolerated) and produces a total
/// map over `universe`. Universe stocks absent from the file map to
/// UNCLASSIFIED and are counted in the result. Conflicting duplicate
/// assignments are an error; symbols outside the universe are ignored.
SectorLoadResult load_sectors(const std::string& path,
                              const std::vector<std::string>& universe);

void write_prices_csv(const std::string& path, const PriceTable& prices);
void write_sectors_csv(const std::string& path, const SectorMap& sectors,
                       const std::vector<std::string>& stock_ids);

/// ISO date arithmetic on the Gregorian calendar.
std::string iso_date_offset(const std::string& iso_date, int days);
std::vector<std::string> sequential_dates(const std::string& start_iso,
                                          int count);

}  // namespace sectorfm
