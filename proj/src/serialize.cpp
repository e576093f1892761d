#include "sectorfm/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace sectorfm {

namespace {

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Json load_json(const std::string& path, const char* what) {
  std::ifstream file(path);
  if (!file) {
    throw DataError(std::string("cannot open ") + what + ": " + path);
  }
  try {
    return Json::parse(file);
  } catch (const nlohmann::json::exception& err) {
    throw DataError(std::string("malformed ") + what + " " + path + ": " +
                    err.what());
  }
}

void dump_json(const std::string& path, const Json& j, const char* what) {
  std::ofstream file(path);
  if (!file) {
    throw DataError(std::string("cannot write ") + what + ": " + path);
  }
  file << j.dump(2) << '\n';
}

const Json& require(const Json& j, const char* key, const std::string& path) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw DataError("file " + path + " is missing required field '" + key +
                    "'");
  }
  return *it;
}

}  // namespace

void save_model(const std::string& path, const ModelArtifact& artifact) {
  const FactorModel& model = artifact.model;
  validate(model);
  if (static_cast<Index>(artifact.stock_ids.size()) != model.n()) {
    throw DataError("save_model: stock id count does not match model");
  }
  const Index n = model.n();
  const Index m = model.m();
  Json j;
  j["format"] = "sectorfm-model";
  j["version"] = 1;
  j["n"] = n;
  j["m"] = m;
  j["n_sector_factors"] = model.mask.n_sector_factors;
  j["n_market_factors"] = model.mask.n_market_factors;
  j["sector_structured"] = model.mask.sector_structured;
  j["stock_ids"] = artifact.stock_ids;
  j["factor_labels"] = model.factor_labels;
  Json lambda = Json::array();
  Json mask = Json::array();
  for (Index jr = 0; jr < n; ++jr) {
    for (Index k = 0; k < m; ++k) {
      lambda.push_back(model.lambda(jr, k));
      mask.push_back(model.mask.pattern(jr, k) ? 1 : 0);
    }
  }
  j["lambda"] = std::move(lambda);
  Json psi = Json::array();
  for (Index jr = 0; jr < n; ++jr) psi.push_back(model.psi(jr));
  j["psi"] = std::move(psi);
  j["mask"] = std::move(mask);
  dump_json(path, j, "model file");
}

ModelArtifact load_model(const std::string& path) {
  const Json j = load_json(path, "model file");
  if (require(j, "format", path) != "sectorfm-model") {
    throw DataError("file " + path + " is not a sectorfm model");
  }
  if (require(j, "version", path).get<int>() != 1) {
    throw DataError("model file " + path + ": unsupported version");
  }
  const Index n = require(j, "n", path).get<Index>();
  const Index m = require(j, "m", path).get<Index>();
  ModelArtifact artifact;
  artifact.stock_ids =
      require(j, "stock_ids", path).get<std::vector<std::string>>();
  FactorModel& model = artifact.model;
  model.factor_labels =
      require(j, "factor_labels", path).get<std::vector<std::string>>();
  const auto& lambda = require(j, "lambda", path);
  const auto& psi = require(j, "psi", path);
  const auto& mask = require(j, "mask", path);
  if (static_cast<Index>(lambda.size()) != n * m ||
      static_cast<Index>(mask.size()) != n * m ||
      static_cast<Index>(psi.size()) != n) {
    throw DataError("model file " + path + ": array sizes do not match n, m");
  }
  model.lambda.resize(n, m);
  model.mask.pattern.resize(n, m);
  for (Index jr = 0; jr < n; ++jr) {
    for (Index k = 0; k < m; ++k) {
      const std::size_t flat = static_cast<std::size_t>(jr * m + k);
      model.lambda(jr, k) = lambda[flat].get<double>();
      model.mask.pattern(jr, k) = mask[flat].get<int>() != 0;
    }
  }
  model.psi.resize(n);
  for (Index jr = 0; jr < n; ++jr) {
    model.psi(jr) = psi[static_cast<std::size_t>(jr)].get<double>();
  }
  model.mask.n_sector_factors =
      require(j, "n_sector_factors", path).get<int>();
  model.mask.n_market_factors =
      require(j, "n_market_factors", path).get<int>();
  model.mask.sector_structured =
      require(j, "sector_structured", path).get<bool>();
  validate(model);
  if (static_cast<Index>(artifact.stock_ids.size()) != n) {
    throw DataError("model file " + path + ": stock id count mismatch");
  }
  return artifact;
}

void write_trace_csv(const std::string& path, const FitTrace& trace) {
  std::ofstream file(path);
  if (!file) throw DataError("cannot write trace file: " + path);
  file << "iteration,loglik,expected_loglik\n";
  for (std::size_t i = 0; i < trace.loglik_per_iter.size(); ++i) {
    file << (i + 1) << ',' << format_value(trace.loglik_per_iter[i]) << ','
         << format_value(trace.expected_loglik_per_iter[i]) << '\n';
  }
}

std::string file_digest_hex(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw DataError("cannot open file for digest: " + path);
  std::uint64_t hash = 0xcbf29ce484222325ull;
  char buf[4096];
  while (file.read(buf, sizeof(buf)) || file.gcount() > 0) {
    const std::streamsize got = file.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 0x100000001b3ull;
    }
    if (got < static_cast<std::streamsize>(sizeof(buf))) break;
  }
  char out[17];
  std::snprintf(out, sizeof(out), "%016llx",
                static_cast<unsigned long long>(hash));
  return out;
}

void write_manifest(const std::string& path, const RunManifest& manifest) {
  Json j;
  j["format"] = "sectorfm-manifest";
  j["command"] = manifest.command;
  j["tool_version"] = manifest.tool_version;
  j["seed"] = manifest.seed;
  j["flags"] = manifest.flags;
  Json inputs = Json::array();
  for (const auto& [in_path, digest] : manifest.inputs) {
    inputs.push_back(Json{{"path", in_path}, {"fnv1a64", digest}});
  }
  j["inputs"] = std::move(inputs);
  j["duration_seconds"] = manifest.duration_seconds;
  j["final_loglik"] = manifest.final_loglik;
  j["iterations_run"] = manifest.iterations_run;
  j["converged_by_tol"] = manifest.converged_by_tol;
  dump_json(path, j, "manifest");
}

RunManifest read_manifest(const std::string& path) {
  const Json j = load_json(path, "manifest");
  if (require(j, "format", path) != "sectorfm-manifest") {
    throw DataError("file " + path + " is not a sectorfm manifest");
  }
  RunManifest manifest;
  manifest.command = require(j, "command", path).get<std::string>();
  manifest.tool_version = require(j, "tool_version", path).get<std::string>();
  manifest.seed = require(j, "seed", path).get<std::uint64_t>();
  manifest.flags = require(j, "flags", path);
  for (const auto& input : require(j, "inputs", path)) {
    manifest.inputs.emplace_back(input.at("path").get<std::string>(),
                                 input.at("fnv1a64").get<std::string>());
  }
  manifest.duration_seconds =
      require(j, "duration_seconds", path).get<double>();
  manifest.final_loglik = require(j, "final_loglik", path).get<double>();
  manifest.iterations_run = require(j, "iterations_run", path).get<int>();
  manifest.converged_by_tol =
      require(j, "converged_by_tol", path).get<bool>();
  return manifest;
}

Json reports_to_json(const std::vector<FactorReport>& reports,
                     double threshold) {
  Json root;
  root["format"] = "sectorfm-report";
  root["threshold"] = threshold;
  root["sign_coherence_definition"] =
      "share of thresholded nonzero components carrying the majority sign";
  Json factors = Json::array();
  for (const auto& report : reports) {
    Json f;
    f["factor_index"] = report.factor_index;
    f["label"] = report.label;
    f["n_selected"] = report.selected.size();
    if (std::isnan(report.sign_coherence)) {
      f["sign_coherence"] = nullptr;
    } else {
      f["sign_coherence"] = report.sign_coherence;
    }
    f["dominant_sign"] = report.dominant_sign > 0
                             ? "+"
                             : (report.dominant_sign < 0 ? "-" : "none");
    Json hist = Json::object();
    for (const auto& [code, count] : report.sector_histogram) {
      hist[sector_name(code)] = count;
    }
    f["sector_histogram"] = std::move(hist);
    Json comps = Json::array();
    for (const auto& comp : report.selected) {
      comps.push_back(
          Json{{"stock_id", comp.stock_id}, {"loading", comp.loading}});
    }
    f["components"] = std::move(comps);
    factors.push_back(std::move(f));
  }
  root["factors"] = std::move(factors);
  return root;
}

std::string reports_to_text(const std::vector<FactorReport>& reports,
                            double threshold) {
  std::ostringstream out;
  out << "factor reports (threshold " << threshold
      << " of max |loading|; sign coherence = share of selected components "
         "carrying the majority sign)\n\n";
  char line[160];
  std::snprintf(line, sizeof(line), "%-6s  %-22s  %8s  %9s  %4s  %s\n",
                "factor", "label", "selected", "coherence", "sign",
                "sector counts");
  out << line;
  for (const auto& report : reports) {
    std::string hist;
    for (const auto& [code, count] : report.sector_histogram) {
      if (!hist.empty()) hist += ", ";
      hist += sector_name(code) + ":" + std::to_string(count);
    }
    std::string coherence = "-";
    if (!std::isnan(report.sign_coherence)) {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "%.3f", report.sign_coherence);
      coherence = buf;
    }
    const char* sign = report.dominant_sign > 0
                           ? "+"
                           : (report.dominant_sign < 0 ? "-" : "none");
    std::snprintf(line, sizeof(line), "%-6d  %-22s  %8zu  %9s  %4s  %s\n",
                  report.factor_index, report.label.c_str(),
                  report.selected.size(), coherence.c_str(), sign,
                  hist.c_str());
    out << line;
  }
  return out.str();
}

void write_plot_csv(const std::string& path, const FactorModel& model,
                    const std::vector<std::string>& stock_ids,
                    const SectorMap& sectors, Index factor) {
  if (factor < 0 || factor >= model.m()) {
    throw DataError("write_plot_csv: factor index out of range");
  }
  std::ofstream file(path);
  if (!file) throw DataError("cannot write plot file: " + path);
  file << "stock_id,sector_code,loading\n";
  for (Index j = 0; j < model.n(); ++j) {
    if (!model.mask.pattern(j, factor)) continue;
    const std::string& id = stock_ids[static_cast<std::size_t>(j)];
    const int code = sectors.code_of(id);
    file << id << ',';
    if (code == kUnclassified) {
      file << "UNCLASSIFIED";
    } else {
      file << code;
    }
    file << ',' << format_value(model.lambda(j, factor)) << '\n';
  }
}

}  // namespace sectorfm
