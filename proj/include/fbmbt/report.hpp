#pragma once

// Persistence: per-replication CSV, versioned JSON summary, and the reload
// path used for round-trip checks. Files are written to a temporary sibling
// and renamed, so a failed write leaves nothing behind.

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fbmbt/experiment.hpp"

namespace fbmbt {

inline constexpr int kSchemaVersion = 1;

/// Shortest text that reads back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

struct SummaryRow {
  int n = 0;
  std::size_t count = 0;
  double mean = 0.0;
  double var = 0.0;
  double var_ci_low = 0.0;
  double var_ci_high = 0.0;
  std::optional<double> target;
  std::string target_provenance;
  std::optional<double> ks_stat;
  std::optional<double> ks_p;
  std::optional<double> mse;
  std::optional<double> corr;
  std::optional<double> max_value;
  double gap = 0.0;
  std::optional<bool> within_tolerance;
  bool degenerate = false;
  int span_retries = 0;
  bool operator==(const SummaryRow&) const = default;
};

struct SummaryDocument {
  int schema_version = kSchemaVersion;
  std::string part;
  double hurst = 0.0;
  int r = 1;
  std::string weight;
  double horizon = 1.0;
  std::vector<int> levels;
  std::size_t replications = 0;
  std::uint64_t master_seed = 0;
  std::string mode;
  double span_multiplier = 0.0;
  std::vector<SummaryRow> summary;
  std::vector<ConstantRow> constants;
  bool passed = false;
  std::string verdict;
  bool operator==(const SummaryDocument&) const = default;
};

namespace detail {

template <class T>
nlohmann::json opt_json(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

template <class T>
std::optional<T> opt_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

inline void write_atomically(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw std::runtime_error("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing: " + std::strerror(errno));
    out << content;
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp, ec);
      throw std::runtime_error("write failed for " + tmp.string());
    }
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw std::runtime_error("cannot move output into place at " + path.string() + ": " + ec.message());
  }
}

}  // namespace detail

inline SummaryDocument summary_document(const EnsembleResult& res) {
  const auto& c = res.config;
  SummaryDocument d;
  d.part = std::string(part_name(c.part));
  d.hurst = c.hurst;
  d.r = c.r;
  d.weight = c.weight;
  d.horizon = c.horizon;
  d.levels = c.levels;
  d.replications = c.replications;
  d.master_seed = c.master_seed;
  d.mode = std::string(mode_name(c.mode));
  d.span_multiplier = c.span_multiplier;
  for (const auto& s : res.summary) {
    SummaryRow row;
    row.n = s.level;
    row.count = s.stats.count;
    row.mean = s.stats.mean;
    row.var = s.stats.variance;
    row.var_ci_low = s.stats.var_ci_low;
    row.var_ci_high = s.stats.var_ci_high;
    row.target = s.target;
    row.target_provenance = s.target_provenance;
    if (s.stats.ks) {
      row.ks_stat = s.stats.ks->statistic;
      row.ks_p = s.stats.ks->p_value;
    }
    row.mse = s.mse;
    row.corr = s.correlation;
    row.max_value = s.max_value;
    row.gap = s.gap;
    row.within_tolerance = s.within_tolerance;
    row.degenerate = s.stats.degenerate;
    row.span_retries = s.span_retries;
    d.summary.push_back(std::move(row));
  }
  d.constants = res.constants;
  d.passed = res.passed;
  d.verdict = res.verdict;
  return d;
}

inline nlohmann::json to_json(const SummaryDocument& d) {
  using nlohmann::json;
  json j;
  j["schema_version"] = d.schema_version;
  j["config"] = {{"part", d.part},
                 {"H", d.hurst},
                 {"r", d.r},
                 {"f", d.weight},
                 {"t", d.horizon},
                 {"levels", d.levels},
                 {"replications", d.replications},
                 {"seed", d.master_seed},
                 {"mode", d.mode},
                 {"span_multiplier", d.span_multiplier}};
  json rows = json::array();
  for (const auto& s : d.summary) {
    rows.push_back({{"n", s.n},
                    {"count", s.count},
                    {"mean", s.mean},
                    {"var", s.var},
                    {"var_ci", {s.var_ci_low, s.var_ci_high}},
                    {"target", detail::opt_json(s.target)},
                    {"target_provenance", s.target_provenance},
                    {"ks_stat", detail::opt_json(s.ks_stat)},
                    {"ks_p", detail::opt_json(s.ks_p)},
                    {"mse", detail::opt_json(s.mse)},
                    {"corr", detail::opt_json(s.corr)},
                    {"max", detail::opt_json(s.max_value)},
                    {"gap", s.gap},
                    {"within_tolerance", detail::opt_json(s.within_tolerance)},
                    {"degenerate", s.degenerate},
                    {"span_retries", s.span_retries}});
  }
  j["summary"] = std::move(rows);
  json consts = json::array();
  for (const auto& c : d.constants) consts.push_back({{"name", c.name}, {"index", c.index}, {"value", detail::opt_json(c.value)}, {"status", c.status}});
  j["constants"] = std::move(consts);
  j["passed"] = d.passed;
  j["verdict"] = d.verdict;
  return j;
}

inline SummaryDocument summary_from_json(const nlohmann::json& j) {
  SummaryDocument d;
  d.schema_version = j.at("schema_version").get<int>();
  if (d.schema_version != kSchemaVersion) {
    throw std::runtime_error("unsupported summary schema_version " + std::to_string(d.schema_version));
  }
  const auto& c = j.at("config");
  d.part = c.at("part").get<std::string>();
  d.hurst = c.at("H").get<double>();
  d.r = c.at("r").get<int>();
  d.weight = c.at("f").get<std::string>();
  d.horizon = c.at("t").get<double>();
  d.levels = c.at("levels").get<std::vector<int>>();
  d.replications = c.at("replications").get<std::size_t>();
  d.master_seed = c.at("seed").get<std::uint64_t>();
  d.mode = c.at("mode").get<std::string>();
  d.span_multiplier = c.at("span_multiplier").get<double>();
  for (const auto& s : j.at("summary")) {
    SummaryRow row;
    row.n = s.at("n").get<int>();
    row.count = s.at("count").get<std::size_t>();
    row.mean = s.at("mean").get<double>();
    row.var = s.at("var").get<double>();
    row.var_ci_low = s.at("var_ci").at(0).get<double>();
    row.var_ci_high = s.at("var_ci").at(1).get<double>();
    row.target = detail::opt_from<double>(s, "target");
    row.target_provenance = s.at("target_provenance").get<std::string>();
    row.ks_stat = detail::opt_from<double>(s, "ks_stat");
    row.ks_p = detail::opt_from<double>(s, "ks_p");
    row.mse = detail::opt_from<double>(s, "mse");
    row.corr = detail::opt_from<double>(s, "corr");
    row.max_value = detail::opt_from<double>(s, "max");
    row.gap = s.at("gap").get<double>();
    row.within_tolerance = detail::opt_from<bool>(s, "within_tolerance");
    row.degenerate = s.at("degenerate").get<bool>();
    row.span_retries = s.at("span_retries").get<int>();
    d.summary.push_back(std::move(row));
  }
  for (const auto& c2 : j.at("constants")) {
    d.constants.push_back({c2.at("name").get<std::string>(), c2.at("index").get<int>(), detail::opt_from<double>(c2, "value"),
                           c2.value("status", std::string{})});
  }
  d.passed = j.at("passed").get<bool>();
  d.verdict = j.at("verdict").get<std::string>();
  return d;
}

/// part,H,r,f,t,n,rep,value; one line per replication.
inline std::string values_csv(const EnsembleResult& res) {
  const auto& c = res.config;
  std::ostringstream os;
  os << "part,H,r,f,t,n,rep,value\n";
  const std::string prefix = std::string(part_name(c.part)) + "," + format_double(c.hurst) + "," + std::to_string(c.r) +
                             "," + c.weight + "," + format_double(c.horizon) + ",";
  for (const auto& v : res.values) {
    os << prefix << v.level << ',' << v.rep << ',' << format_double(v.value) << '\n';
  }
  return os.str();
}

inline std::string constants_csv(const std::vector<ConstantRow>& rows) {
  std::ostringstream os;
  os << "name,index,value,status\n";
  for (const auto& r : rows) {
    os << r.name << ',' << r.index << ',' << (r.value ? format_double(*r.value) : "") << ',' << r.status << '\n';
  }
  return os.str();
}

/// File stem for a result: <part>_H<h>_r<r>_<f>.
inline std::string output_stem(const ExperimentConfig& c) {
  std::ostringstream os;
  os << part_name(c.part) << "_H" << format_double(c.hurst) << "_r" << c.r << "_" << c.weight;
  return os.str();
}

/// Writes the result in the requested format under dir; returns the path.
inline std::filesystem::path report(const EnsembleResult& res, const std::filesystem::path& dir, OutputFormat format) {
  const bool is_constants = res.config.part == TheoremPart::kConstants;
  if (is_constants ? res.constants.empty() : (res.values.empty() || res.summary.empty())) {
    throw std::invalid_argument("report: empty replication set, nothing written");
  }
  const std::filesystem::path path = dir / (output_stem(res.config) + (format == OutputFormat::kCsv ? ".csv" : ".json"));
  if (format == OutputFormat::kCsv) {
    detail::write_atomically(path, is_constants ? constants_csv(res.constants) : values_csv(res));
  } else {
    detail::write_atomically(path, to_json(summary_document(res)).dump(2) + "\n");
  }
  return path;
}

inline SummaryDocument load_summary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string() + ": " + std::strerror(errno));
  try {
    return summary_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed summary " + path.string() + ": " + e.what());
  }
}

}  // namespace fbmbt
