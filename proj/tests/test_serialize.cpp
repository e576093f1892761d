#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "sectorfm/em.hpp"
#include "sectorfm/serialize.hpp"
#include "sectorfm/synth.hpp"
#include "test_support.hpp"

using namespace sectorfm;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("sectorfm_ser_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string at(const std::string& name) { return (path / name).string(); }
  static inline int counter = 0;
};

std::string slurp(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(file),
          std::istreambuf_iterator<char>()};
}

ModelArtifact fitted_artifact(std::uint64_t seed) {
  SynthSpec spec;
  spec.n_per_sector = {3, 0, 2, 0, 0, 0, 4, 0, 0, 0, 0};
  spec.n_unclassified = 1;
  spec.m = 13;
  spec.seed = seed;
  const auto synth = sample_model(spec);
  auto panel = demean(sample_panel(synth.model, synth.stock_ids, 300, seed));
  FitConfig config;
  config.max_iterations = 40;
  config.seed = seed;
  auto [model, trace] = fit(panel, synth.model.mask, config);
  return {std::move(model), synth.stock_ids};
}

}  // namespace

TEST_CASE("model save/load round-trips lambda, psi and mask exactly") {
  TempDir dir;
  const auto artifact = fitted_artifact(5);
  const auto path = dir.at("model.json");
  save_model(path, artifact);
  const auto loaded = load_model(path);
  CHECK(loaded.model.lambda == artifact.model.lambda);  // bitwise
  CHECK(loaded.model.psi == artifact.model.psi);
  CHECK((loaded.model.mask.pattern == artifact.model.mask.pattern).all());
  CHECK(loaded.model.mask.sector_structured ==
        artifact.model.mask.sector_structured);
  CHECK(loaded.stock_ids == artifact.stock_ids);
  CHECK(loaded.model.factor_labels == artifact.model.factor_labels);

  // saving the reloaded artifact reproduces the file byte for byte
  const auto path2 = dir.at("model2.json");
  save_model(path2, loaded);
  CHECK(slurp(path) == slurp(path2));
}

TEST_CASE("load_model rejects corrupted files") {
  TempDir dir;
  const auto artifact = fitted_artifact(6);
  const auto path = dir.at("model.json");
  save_model(path, artifact);

  CHECK_THROWS_AS(load_model(dir.at("missing.json")), DataError);

  {
    std::ofstream bad(dir.at("bad1.json"));
    bad << "{ not json";
  }
  CHECK_THROWS_AS(load_model(dir.at("bad1.json")), DataError);

  {
    Json j = Json::parse(slurp(path));
    j["lambda"].erase(0);  // size mismatch
    std::ofstream bad(dir.at("bad2.json"));
    bad << j.dump();
  }
  CHECK_THROWS_AS(load_model(dir.at("bad2.json")), DataError);

  {
    Json j = Json::parse(slurp(path));
    j["format"] = "something-else";
    std::ofstream bad(dir.at("bad3.json"));
    bad << j.dump();
  }
  CHECK_THROWS_AS(load_model(dir.at("bad3.json")), DataError);

  {
    // nonzero loading outside the mask breaks model validation
    Json j = Json::parse(slurp(path));
    bool patched = false;
    for (std::size_t i = 0; i < j["mask"].size() && !patched; ++i) {
      if (j["mask"][i].get<int>() == 0) {
        j["lambda"][i] = 0.25;
        patched = true;
      }
    }
    REQUIRE(patched);
    std::ofstream bad(dir.at("bad4.json"));
    bad << j.dump();
  }
  CHECK_THROWS_AS(load_model(dir.at("bad4.json")), DataError);
}

TEST_CASE("trace CSV lists one row per iteration with both series") {
  TempDir dir;
  FitTrace trace;
  trace.loglik_per_iter = {-10.5, -9.25, -9.0};
  trace.expected_loglik_per_iter = {-5.0, -4.5, -4.25};
  trace.iterations_run = 3;
  const auto path = dir.at("trace.csv");
  write_trace_csv(path, trace);
  const auto text = slurp(path);
  CHECK(text == "iteration,loglik,expected_loglik\n"
                "1,-10.5,-5\n"
                "2,-9.25,-4.5\n"
                "3,-9,-4.25\n");
}

TEST_CASE("file digest is stable and content-sensitive") {
  TempDir dir;
  const auto a = dir.at("a.txt");
  {
    std::ofstream out(a);
    out << "hello";
  }
  const auto d1 = file_digest_hex(a);
  CHECK(d1.size() == 16);
  CHECK(d1 == file_digest_hex(a));
  {
    std::ofstream out(a);
    out << "hellp";
  }
  CHECK(d1 != file_digest_hex(a));
  CHECK_THROWS_AS(file_digest_hex(dir.at("none.txt")), DataError);
}

TEST_CASE("manifest writes and reads back all required fields") {
  TempDir dir;
  RunManifest manifest;
  manifest.command = "fit";
  manifest.tool_version = "0.1.0";
  manifest.seed = 42;
  manifest.flags = Json{{"m", 13}, {"iters", 100}};
  manifest.inputs = {{"prices.csv", "0123456789abcdef"}};
  manifest.duration_seconds = 1.5;
  manifest.final_loglik = -123.0;
  manifest.iterations_run = 100;
  const auto path = dir.at("manifest.json");
  write_manifest(path, manifest);
  const auto loaded = read_manifest(path);
  CHECK(loaded.command == "fit");
  CHECK(loaded.seed == 42);
  CHECK(loaded.flags["m"] == 13);
  CHECK(loaded.inputs == manifest.inputs);
  CHECK(loaded.final_loglik == -123.0);
  CHECK(loaded.iterations_run == 100);

  {
    Json j = Json::parse(slurp(path));
    j.erase("seed");
    std::ofstream bad(dir.at("bad.json"));
    bad << j.dump();
  }
  CHECK_THROWS_AS(read_manifest(dir.at("bad.json")), DataError);
}

TEST_CASE("report serialization carries the metric definition and null "
          "coherence for empty factors") {
  const auto artifact = fitted_artifact(9);
  SectorLoadResult sectors;
  SynthSpec spec;
  spec.n_per_sector = {3, 0, 2, 0, 0, 0, 4, 0, 0, 0, 0};
  spec.n_unclassified = 1;
  spec.m = 13;
  spec.seed = 9;
  const auto synth = sample_model(spec);
  const auto reports =
      full_report(artifact.model, artifact.stock_ids, synth.sectors, 0.10);
  const Json j = reports_to_json(reports, 0.10);
  CHECK(j["format"] == "sectorfm-report");
  CHECK(j["threshold"] == 0.10);
  CHECK(j["sign_coherence_definition"].is_string());
  REQUIRE(j["factors"].size() == 13);
  CHECK(j["factors"][1]["sign_coherence"].is_null());  // empty HEALTH CARE
  CHECK(j["factors"][0]["label"] == "FINANCE");
  CHECK(j["factors"][0]["sign_coherence"].is_number());

  const auto text = reports_to_text(reports, 0.10);
  CHECK(text.find("FINANCE") != std::string::npos);
  CHECK(text.find("MKT2") != std::string::npos);
}

TEST_CASE("plot CSV exports the masked support with sector codes") {
  TempDir dir;
  const auto artifact = fitted_artifact(11);
  SynthSpec spec;
  spec.n_per_sector = {3, 0, 2, 0, 0, 0, 4, 0, 0, 0, 0};
  spec.n_unclassified = 1;
  spec.m = 13;
  spec.seed = 11;
  const auto synth = sample_model(spec);
  const auto path = dir.at("plot.csv");
  // factor 0 = FINANCE: three members
  write_plot_csv(path, artifact.model, artifact.stock_ids, synth.sectors, 0);
  const auto text = slurp(path);
  CHECK(text.rfind("stock_id,sector_code,loading\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);  // header + 3 rows
  // market factor: all stocks, including the UNCLASSIFIED row
  write_plot_csv(path, artifact.model, artifact.stock_ids, synth.sectors, 12);
  const auto market = slurp(path);
  CHECK(std::count(market.begin(), market.end(), '\n') == 11);
  CHECK(market.find("UNCLASSIFIED") != std::string::npos);
}
