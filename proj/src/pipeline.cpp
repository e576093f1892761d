#include "sectorfm/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace sectorfm {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(trim(cell));
      cell.clear();
    } else {
      cell.push_back(ch);
    }
  }
  cells.push_back(trim(cell));
  return cells;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

double parse_number(const std::string& cell, const std::string& where) {
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (end == cell.c_str() || *end != '\0' || !std::isfinite(v)) {
    throw DataError("unparsable number '" + cell + "' at " + where);
  }
  return v;
}

std::string format_price(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

PriceLoadResult load_prices(const std::string& path,
                            const IngestOptions& options) {
  std::ifstream file(path);
  if (!file) throw DataError("cannot open price file: " + path);

  std::string line;
  if (!std::getline(file, line)) {
    throw DataError("price file is empty: " + path);
  }
  auto header = split_line(line);
  if (header.size() < 2 || lower(header[0]) != "date") {
    throw DataError("price file " + path +
                    ": header must be 'date,SYM1,SYM2,...'");
  }
  std::vector<std::string> symbols(header.begin() + 1, header.end());
  {
    auto sorted = symbols;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw DataError("price file " + path + ": duplicate stock column");
    }
  }

  std::vector<std::string> dates;
  std::vector<std::vector<double>> rows;  // one entry per date
  std::size_t line_no = 1;
  while (std::getline(file, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != symbols.size() + 1) {
      throw DataError("price file " + path + " line " +
                      std::to_string(line_no) + ": expected " +
                      std::to_string(symbols.size() + 1) + " cells, got " +
                      std::to_string(cells.size()));
    }
    if (!dates.empty() && !(dates.back() < cells[0])) {
      throw DataError("price file " + path + " line " +
                      std::to_string(line_no) +
                      ": dates not strictly increasing at " + cells[0]);
    }
    dates.push_back(cells[0]);
    std::vector<double> row(symbols.size());
    for (std::size_t j = 0; j < symbols.size(); ++j) {
      const std::string& cell = cells[j + 1];
      row[j] = cell.empty()
                   ? kMissing
                   : parse_number(cell, path + " line " +
                                            std::to_string(line_no) +
                                            ", column " + symbols[j]);
    }
    rows.push_back(std::move(row));
  }
  if (dates.empty()) throw DataError("price file has no data rows: " + path);

  // Scan each stock for missing or non-positive prices.
  std::vector<bool> keep(symbols.size(), true);
  PriceLoadResult result;
  for (std::size_t j = 0; j < symbols.size(); ++j) {
    for (std::size_t i = 0; i < dates.size(); ++i) {
      const double v = rows[i][j];
      const bool missing = std::isnan(v);
      if (!missing && v > 0.0) continue;
      const std::string reason =
          std::string(missing ? "missing" : "non-positive") + " at " +
          dates[i];
      if (options.on_missing == IngestOptions::OnMissing::kError) {
        throw DataError("price file " + path + ": stock " + symbols[j] +
                        " has a " + reason + " price");
      }
      keep[j] = false;
      result.dropped.push_back(symbols[j] + " (" + reason + ")");
      break;
    }
  }

  std::vector<std::size_t> kept_cols;
  for (std::size_t j = 0; j < symbols.size(); ++j) {
    if (keep[j]) kept_cols.push_back(j);
  }
  if (kept_cols.empty()) {
    throw DataError("price file " + path + ": every stock was dropped");
  }
  // Order surviving stocks by symbol so the panel layout does not depend on
  // the file's column order.
  std::sort(kept_cols.begin(), kept_cols.end(),
            [&](std::size_t a, std::size_t b) {
              return symbols[a] < symbols[b];
            });

  PriceTable& table = result.table;
  table.dates = dates;
  table.close_prices.resize(static_cast<Index>(kept_cols.size()),
                            static_cast<Index>(dates.size()));
  for (std::size_t jj = 0; jj < kept_cols.size(); ++jj) {
    table.stock_ids.push_back(symbols[kept_cols[jj]]);
    for (std::size_t i = 0; i < dates.size(); ++i) {
      table.close_prices(static_cast<Index>(jj), static_cast<Index>(i)) =
          rows[i][kept_cols[jj]];
    }
  }
  return result;
}

ReturnsPanel compute_log_returns(const PriceTable& prices) {
  const Index n = prices.close_prices.rows();
  const Index cols = prices.close_prices.cols();
  if (cols < 2) {
    throw DataError("compute_log_returns: need at least 2 dates, got " +
                    std::to_string(cols));
  }
  ReturnsPanel panel;
  panel.stock_ids = prices.stock_ids;
  panel.dates.assign(prices.dates.begin() + 1, prices.dates.end());
  panel.values.resize(n, cols - 1);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i + 1 < cols; ++i) {
      panel.values(j, i) =
          std::log(prices.close_prices(j, i + 1) / prices.close_prices(j, i));
    }
  }
  panel.demeaned = false;
  return panel;
}

ReturnsPanel demean(const ReturnsPanel& panel) {
  ReturnsPanel out = panel;
  for (Index j = 0; j < out.values.rows(); ++j) {
    out.values.row(j).array() -= out.values.row(j).mean();
  }
  out.demeaned = true;
  return out;
}

SectorLoadResult load_sectors(const std::string& path,
                              const std::vector<std::string>& universe) {
  std::ifstream file(path);
  if (!file) throw DataError("cannot open sector file: " + path);

  std::map<std::string, int> from_file;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(file, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_line(line);
    if (line_no == 1 && cells.size() == 2 && lower(cells[0]) == "symbol" &&
        lower(cells[1]) == "sector_code") {
      continue;  // optional header
    }
    if (cells.size() != 2 || cells[0].empty()) {
      throw DataError("sector file " + path + " line " +
                      std::to_string(line_no) +
                      ": expected 'symbol,sector_code'");
    }
    int code = kUnclassified;
    if (cells[1] != "UNCLASSIFIED") {
      char* end = nullptr;
      const long v = std::strtol(cells[1].c_str(), &end, 10);
      if (end == cells[1].c_str() || *end != '\0' || v < 1 ||
          v > kNumSectors) {
        throw DataError("sector file " + path + " line " +
                        std::to_string(line_no) + ": sector code '" +
                        cells[1] + "' is not 1..11 or UNCLASSIFIED");
      }
      code = static_cast<int>(v);
    }
    auto [it, inserted] = from_file.emplace(cells[0], code);
    if (!inserted && it->second != code) {
      throw DataError("sector file " + path + ": conflicting assignments for " +
                      cells[0] + " (" + sector_name(it->second) + " vs " +
                      sector_name(code) + ")");
    }
  }

  SectorLoadResult result;
  for (const auto& id : universe) {
    auto it = from_file.find(id);
    if (it == from_file.end()) {
      result.sectors.assignments[id] = kUnclassified;
      ++result.defaulted_to_unclassified;
    } else {
      result.sectors.assignments[id] = it->second;
    }
  }
  return result;
}

void write_prices_csv(const std::string& path, const PriceTable& prices) {
  std::ofstream file(path);
  if (!file) throw DataError("cannot write price file: " + path);
  file << "date";
  for (const auto& id : prices.stock_ids) file << ',' << id;
  file << '\n';
  for (Index i = 0; i < prices.close_prices.cols(); ++i) {
    file << prices.dates[static_cast<std::size_t>(i)];
    for (Index j = 0; j < prices.close_prices.rows(); ++j) {
      file << ',' << format_price(prices.close_prices(j, i));
    }
    file << '\n';
  }
}

void write_sectors_csv(const std::string& path, const SectorMap& sectors,
                       const std::vector<std::string>& stock_ids) {
  std::ofstream file(path);
  if (!file) throw DataError("cannot write sector file: " + path);
  for (const auto& id : stock_ids) {
    const int code = sectors.code_of(id);
    if (code == kUnclassified) {
      file << id << ",UNCLASSIFIED\n";
    } else {
      file << id << ',' << code << '\n';
    }
  }
}

std::string iso_date_offset(const std::string& iso_date, int days) {
  int y = 0, mo = 0, d = 0;
  if (std::sscanf(iso_date.c_str(), "%d-%d-%d", &y, &mo, &d) != 3) {
    throw DataError("invalid ISO date: " + iso_date);
  }
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) throw DataError("invalid ISO date: " + iso_date);
  const year_month_day shifted{sys_days{ymd} + std::chrono::days{days}};
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", int(shifted.year()),
                unsigned(shifted.month()), unsigned(shifted.day()));
  return buf;
}

std::vector<std::string> sequential_dates(const std::string& start_iso,
                                          int count) {
  std::vector<std::string> dates;
  dates.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    dates.push_back(iso_date_offset(start_iso, i));
  }
  return dates;
}

}  // namespace sectorfm
