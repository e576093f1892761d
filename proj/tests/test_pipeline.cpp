#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "sectorfm/pipeline.hpp"
#include "test_support.hpp"

using namespace sectorfm;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("sectorfm_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name, const std::string& content) {
    const auto p = (path / name).string();
    std::ofstream out(p);
    out << content;
    return p;
  }
  static inline int counter = 0;
};

}  // namespace

TEST_CASE("load_prices: complete 3x4 table parses with sorted stocks") {
  TempDir dir;
  const auto path = dir.file("p.csv",
                             "date,MSB,AAA,KOZ\n"
                             "2001-01-01,10,20,30\n"
                             "2001-01-02,11,21,31\n"
                             "2001-01-03,12,22,32\n"
                             "2001-01-04,13,23,33\n");
  const auto result = load_prices(path, {});
  CHECK(result.dropped.empty());
  CHECK(result.table.stock_ids == std::vector<std::string>{"AAA", "KOZ", "MSB"});
  CHECK(result.table.dates.size() == 4);
  CHECK(result.table.close_prices.rows() == 3);
  CHECK(result.table.close_prices.cols() == 4);
  CHECK(result.table.close_prices(0, 1) == 21.0);  // AAA on day 2
  CHECK(result.table.close_prices(2, 3) == 13.0);  // MSB on day 4
}

TEST_CASE("load_prices: missing cell drops the stock and reports it") {
  TempDir dir;
  const auto path = dir.file("p.csv",
                             "date,AAA,BBB,CCC\n"
                             "2001-01-01,10,20,30\n"
                             "2001-01-02,11,,31\n"
                             "2001-01-03,12,22,32\n");
  const auto result = load_prices(path, {});
  CHECK(result.table.stock_ids == std::vector<std::string>{"AAA", "CCC"});
  REQUIRE(result.dropped.size() == 1);
  CHECK(result.dropped[0].find("BBB") != std::string::npos);
  CHECK(result.dropped[0].find("2001-01-02") != std::string::npos);
  // Surviving rows keep their exact values.
  CHECK(result.table.close_prices(0, 0) == 10.0);
  CHECK(result.table.close_prices(1, 2) == 32.0);
}

TEST_CASE("load_prices: zero price with on_missing=error names the cell") {
  TempDir dir;
  const auto path = dir.file("p.csv",
                             "date,AAA,BBB\n"
                             "2001-01-01,10,20\n"
                             "2001-01-02,0,21\n");
  IngestOptions options;
  options.on_missing = IngestOptions::OnMissing::kError;
  CHECK_THROWS_WITH_AS(load_prices(path, options),
                       doctest::Contains("AAA"), DataError);
  // The same file under drop keeps going.
  const auto result = load_prices(path, {});
  CHECK(result.table.stock_ids == std::vector<std::string>{"BBB"});
}

TEST_CASE("load_prices: malformed inputs are rejected with context") {
  TempDir dir;
  CHECK_THROWS_AS(load_prices(dir.file("a.csv", ""), {}), DataError);
  CHECK_THROWS_AS(
      load_prices(dir.file("b.csv", "sym,AAA\n2001-01-01,3\n"), {}),
      DataError);
  CHECK_THROWS_AS(
      load_prices(dir.file("c.csv", "date,AAA\n2001-01-01,3,4\n"), {}),
      DataError);
  CHECK_THROWS_AS(
      load_prices(dir.file("d.csv", "date,AAA\n2001-01-01,xyz\n"), {}),
      DataError);
  CHECK_THROWS_AS(
      load_prices(dir.file("e.csv",
                           "date,AAA\n2001-01-02,3\n2001-01-01,4\n"),
                  {}),
      DataError);
  CHECK_THROWS_AS(load_prices(dir.file("f.csv", "date,AAA\n"), {}), DataError);
  CHECK_THROWS_AS(
      load_prices(dir.file("g.csv", "date,AAA,AAA\n2001-01-01,3,4\n"), {}),
      DataError);
  // every stock dropped
  CHECK_THROWS_AS(
      load_prices(dir.file("h.csv", "date,AAA\n2001-01-01,\n"), {}),
      DataError);
}

TEST_CASE("compute_log_returns: flat, e-fold and hand-computed ratios") {
  PriceTable prices;
  prices.stock_ids = {"AAA"};
  prices.dates = {"2001-01-01", "2001-01-02"};
  prices.close_prices.resize(1, 2);

  prices.close_prices << 100.0, 100.0;
  CHECK(compute_log_returns(prices).values(0, 0) == 0.0);

  prices.close_prices << 100.0, 100.0 * std::exp(1.0);
  CHECK(compute_log_returns(prices).values(0, 0) ==
        doctest::Approx(1.0).epsilon(1e-15));

  PriceTable three;
  three.stock_ids = {"AAA"};
  three.dates = {"2001-01-01", "2001-01-02", "2001-01-03"};
  three.close_prices.resize(1, 3);
  three.close_prices << 50.0, 55.0, 44.0;
  const auto panel = compute_log_returns(three);
  CHECK(panel.p() == 2);
  CHECK(panel.dates == std::vector<std::string>{"2001-01-02", "2001-01-03"});
  CHECK(panel.values(0, 0) == doctest::Approx(std::log(1.1)).epsilon(1e-15));
  CHECK(panel.values(0, 1) == doctest::Approx(std::log(0.8)).epsilon(1e-15));
  CHECK_FALSE(panel.demeaned);

  PriceTable one;
  one.stock_ids = {"AAA"};
  one.dates = {"2001-01-01"};
  one.close_prices = Matrix::Constant(1, 1, 5.0);
  CHECK_THROWS_AS(compute_log_returns(one), DataError);
}

TEST_CASE("returns round trip: cumulative sums recover log price ratios") {
  std::mt19937_64 rng(55);
  PriceTable prices;
  prices.stock_ids = {"AAA", "BBB"};
  prices.dates = sequential_dates("2001-01-01", 40);
  prices.close_prices.resize(2, 40);
  std::uniform_real_distribution<double> unif(20.0, 200.0);
  for (Index j = 0; j < 2; ++j) {
    for (Index i = 0; i < 40; ++i) prices.close_prices(j, i) = unif(rng);
  }
  const auto panel = compute_log_returns(prices);
  for (Index j = 0; j < 2; ++j) {
    double cum = 0.0;
    for (Index i = 0; i < panel.p(); ++i) {
      cum += panel.values(j, i);
      const double expected =
          std::log(prices.close_prices(j, i + 1) / prices.close_prices(j, 0));
      CHECK(std::abs(cum - expected) < 1e-12);
    }
  }
}

TEST_CASE("demean: centered rows unchanged, means removed, idempotent") {
  Matrix values(2, 2);
  values << 1.0, -1.0, 2.0, 4.0;
  auto panel = testsup::make_panel(values);
  const auto centered = demean(panel);
  CHECK(centered.demeaned);
  CHECK(centered.values(0, 0) == 1.0);
  CHECK(centered.values(0, 1) == -1.0);
  CHECK(centered.values(1, 0) == -1.0);
  CHECK(centered.values(1, 1) == 1.0);

  std::mt19937_64 rng(60);
  auto random_panel = testsup::make_panel(testsup::random_values(5, 30, rng));
  const auto once = demean(random_panel);
  for (Index j = 0; j < once.n(); ++j) {
    CHECK(std::abs(once.values.row(j).mean()) <= 1e-12);
  }
  const auto twice = demean(once);
  CHECK(testsup::rel_frobenius(twice.values, once.values) < 1e-14);
  validate(once);
}

TEST_CASE("load_sectors: named examples and defaulting") {
  TempDir dir;
  const auto path = dir.file("s.csv", "MS,1\nGOOG,8\n");
  const auto result = load_sectors(path, {"GOOG", "MS"});
  CHECK(result.sectors.code_of("MS") == 1);
  CHECK(sector_name(result.sectors.code_of("MS")) == "FINANCE");
  CHECK(result.sectors.code_of("GOOG") == 8);
  CHECK(sector_name(result.sectors.code_of("GOOG")) == "TECHNOLOGY");
  CHECK(result.defaulted_to_unclassified == 0);

  const auto empty = dir.file("empty.csv", "");
  const auto defaulted = load_sectors(empty, {"XYZ"});
  CHECK(defaulted.sectors.code_of("XYZ") == kUnclassified);
  CHECK(defaulted.defaulted_to_unclassified == 1);
}

TEST_CASE("load_sectors: header tolerated, conflicts and junk rejected") {
  TempDir dir;
  const auto with_header =
      dir.file("h.csv", "symbol,sector_code\nAAA,4\nBBB,UNCLASSIFIED\n");
  const auto result = load_sectors(with_header, {"AAA", "BBB"});
  CHECK(result.sectors.code_of("AAA") == 4);
  CHECK(result.sectors.code_of("BBB") == kUnclassified);

  CHECK_THROWS_AS(
      load_sectors(dir.file("dup.csv", "AAA,4\nAAA,5\n"), {"AAA"}),
      DataError);
  // duplicate but consistent is fine
  CHECK_NOTHROW(
      load_sectors(dir.file("dup2.csv", "AAA,4\nAAA,4\n"), {"AAA"}));
  CHECK_THROWS_AS(
      load_sectors(dir.file("bad1.csv", "AAA,12\n"), {"AAA"}), DataError);
  CHECK_THROWS_AS(
      load_sectors(dir.file("bad2.csv", "AAA,0\n"), {"AAA"}), DataError);
  CHECK_THROWS_AS(
      load_sectors(dir.file("bad3.csv", "AAA,finance\n"), {"AAA"}),
      DataError);
  CHECK_THROWS_AS(
      load_sectors(dir.file("bad4.csv", "AAA\n"), {"AAA"}), DataError);
}

TEST_CASE("price and sector writers round-trip through the loaders") {
  TempDir dir;
  std::mt19937_64 rng(70);
  PriceTable prices;
  prices.stock_ids = {"AAA", "BBB", "CCC"};
  prices.dates = sequential_dates("2003-05-29", 25);
  prices.close_prices.resize(3, 25);
  std::uniform_real_distribution<double> unif(1.0, 300.0);
  for (Index j = 0; j < 3; ++j) {
    for (Index i = 0; i < 25; ++i) prices.close_prices(j, i) = unif(rng);
  }
  const auto price_path = (dir.path / "prices.csv").string();
  write_prices_csv(price_path, prices);
  const auto loaded = load_prices(price_path, {});
  CHECK(loaded.table.stock_ids == prices.stock_ids);
  CHECK(loaded.table.dates == prices.dates);
  CHECK(loaded.table.close_prices == prices.close_prices);  // %.17g round trip

  SectorMap sectors;
  sectors.assignments = {{"AAA", 7}, {"BBB", kUnclassified}, {"CCC", 11}};
  const auto sector_path = (dir.path / "sectors.csv").string();
  write_sectors_csv(sector_path, sectors, prices.stock_ids);
  const auto reloaded = load_sectors(sector_path, prices.stock_ids);
  CHECK(reloaded.sectors.assignments == sectors.assignments);
  CHECK(reloaded.defaulted_to_unclassified == 0);
}

TEST_CASE("iso date arithmetic crosses month and year boundaries") {
  CHECK(iso_date_offset("2000-01-03", 1) == "2000-01-04");
  CHECK(iso_date_offset("2000-01-04", -1) == "2000-01-03");
  CHECK(iso_date_offset("1999-12-31", 1) == "2000-01-01");
  CHECK(iso_date_offset("2000-02-28", 1) == "2000-02-29");  // leap year
  CHECK_THROWS_AS(iso_date_offset("not-a-date", 1), DataError);
  const auto dates = sequential_dates("2000-12-30", 4);
  CHECK(dates == std::vector<std::string>{"2000-12-30", "2000-12-31",
                                          "2001-01-01", "2001-01-02"});
}
