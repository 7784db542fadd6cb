#pragma once

// Subcommand implementations. Each run computes its full payload in memory,
// then writes every output file in one pass, so a failed run leaves no
// partial output. Outputs depend only on the result-affecting config keys;
// wall time is reported to the caller but never written.

#include "sievekit/birkhoff.hpp"
#include "sievekit/cantor.hpp"
#include "sievekit/cli/config.hpp"
#include "sievekit/dimension.hpp"
#include "sievekit/dynamics.hpp"
#include "sievekit/regularity.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace sievekit::cli {

inline constexpr const char *kToolVersion = "1.0.0";
inline constexpr const char *kOutDirEnv = "SIEVEKIT_OUT_DIR";

struct OutputFile {
  std::string name;
  std::string content;
};

struct RunRecord {
  std::string command;
  std::string config_hash;
  std::string tool_version = kToolVersion;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
  nlohmann::json payload;
  std::vector<OutputFile> files;
  std::vector<std::string> warnings;
  std::string summary_line;
};

namespace detail {

class CsvWriter {
public:
  CsvWriter(const ExperimentConfig &c, const std::string &hash) {
    out_ << "# sievekit " << kToolVersion << "\n";
    out_ << "# command = " << c.command << "\n";
    out_ << "# config_hash = " << hash << "\n";
  }
  void meta(const std::string &key, const std::string &value) {
    out_ << "# " << key << " = " << value << "\n";
  }
  void row(const std::vector<std::string> &cells) {
    for (std::size_t i = 0; i < cells.size(); ++i)
      out_ << (i ? "," : "") << cells[i];
    out_ << "\n";
  }
  std::string str() const { return out_.str(); }

private:
  std::ostringstream out_;
};

inline std::string num(double v) { return format_double(v); }
inline std::string num(std::uint64_t v) { return std::to_string(v); }

inline std::string json_text(const nlohmann::json &j) { return j.dump(2) + "\n"; }

inline nlohmann::json header(const ExperimentConfig &c, const std::string &hash) {
  return {{"tool", "sievekit"},
          {"version", kToolVersion},
          {"command", c.command},
          {"config_hash", hash}};
}

inline PointCloud read_cloud_csv(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw InputError("cannot read point cloud '" + path + "'");
  PointCloud cloud;
  cloud.provenance = path;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line.front() == '#')
      continue;
    if (!have_header) {
      cloud.dim = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
      if (cloud.dim > 3)
        throw InputError("point cloud has more than 3 columns");
      have_header = true;
      continue;
    }
    std::array<double, 3> pt{0, 0, 0};
    std::istringstream cells(line);
    std::string cell;
    std::size_t k = 0;
    while (std::getline(cells, cell, ',')) {
      if (k >= cloud.dim)
        throw InputError("point cloud row has too many columns");
      pt[k++] = parse_double("point", trim(cell));
    }
    if (k != cloud.dim)
      throw InputError("point cloud row has too few columns");
    cloud.points.push_back(pt);
  }
  cloud.check();
  return cloud;
}

inline std::string cloud_csv(const PointCloud &cloud, const ExperimentConfig &c,
                             const std::string &hash) {
  CsvWriter csv(c, hash);
  csv.meta("provenance", cloud.provenance);
  static const char *names[] = {"x", "p", "h"};
  std::vector<std::string> head(names, names + cloud.dim);
  csv.row(head);
  for (const auto &pt : cloud.points) {
    std::vector<std::string> cells;
    for (std::size_t k = 0; k < cloud.dim; ++k)
      cells.push_back(num(pt[k]));
    csv.row(cells);
  }
  return csv.str();
}

inline std::string series_csv(const BoxCountSeries &s, const ExperimentConfig &c,
                              const std::string &hash) {
  CsvWriter csv(c, hash);
  csv.row({"epsilon", "count", "log_inv_eps", "log_count"});
  for (const auto &e : s.entries)
    csv.row({num(e.epsilon), num(e.count), num(e.log_inv_eps), num(e.log_count)});
  return csv.str();
}

inline nlohmann::json fit_json(const FitResult &f) {
  return {{"slope", f.slope},
          {"intercept", f.intercept},
          {"residual_rms", f.residual_rms},
          {"range", {f.begin, f.end}}};
}

inline FitResult fit_with(const BoxCountSeries &s, const ExperimentConfig &c, bool exact_series) {
  if (c.fit == "auto")
    return exact_series ? fit_dimension(s, 0, s.entries.size()) : fit_dimension(s);
  const auto r = parse_range("fit", c.fit);
  return fit_dimension(s, static_cast<std::size_t>(r.lo), static_cast<std::size_t>(r.hi) + 1);
}

template <Scalar T> std::string scalar_text(const T &v) {
  if constexpr (is_exact_v<T>)
    return to_string(v);
  else
    return num(v);
}

template <Scalar T> void run_cantor_impl(const ExperimentConfig &c, RunRecord &rec) {
  const auto seq = c.deletion_sequence<T>();
  CsvWriter csv(c, rec.config_hash);
  csv.meta("sequence", c.sequence_label());
  csv.meta("mode", c.exact ? "exact" : "float");
  csv.row({"n", "p_n", "lambda_n", "survivor_measure"});
  const auto ps = seq.prefix(c.depth);
  T lambda(1), survivor(1);
  csv.row({"0", "", scalar_text(lambda), scalar_text(survivor)});
  for (std::size_t n = 1; n <= c.depth; ++n) {
    const T &p = ps[n - 1];
    lambda *= (T(1) - p) / 2;
    survivor *= T(1) - p;
    csv.row({std::to_string(n), scalar_text(p), scalar_text(lambda), scalar_text(survivor)});
  }
  rec.files.push_back({"cantor.csv", csv.str()});

  if (c.dump_intervals) {
    CsvWriter iv(c, rec.config_hash);
    iv.meta("rank", std::to_string(c.depth));
    iv.row({"address", "left", "right"});
    for_each_interval(seq, c.depth, [&](const RankInterval<T> &r) {
      iv.row({r.address.empty() ? "-" : r.address, scalar_text(r.left), scalar_text(r.right)});
    });
    rec.files.push_back({"intervals.csv", iv.str()});
  }

  rec.payload["sequence"] = c.sequence_label();
  rec.payload["depth"] = c.depth;
  rec.payload["lambda_n"] = to_double(lambda);
  rec.payload["survivor_measure"] = to_double(survivor);
  if constexpr (is_exact_v<T>) {
    rec.payload["lambda_n_exact"] = to_string(lambda);
    rec.payload["survivor_measure_exact"] = to_string(survivor);
  }
  if (c.sequence == "qorbit") {
    const auto report = check_class_P(c.p0, std::max<std::size_t>(c.depth, 1));
    rec.payload["bracket_n0"] = report.n0;
    rec.payload["bracket_violations"] = report.violations;
  }
  nlohmann::json doc = header(c, rec.config_hash);
  doc.update(rec.payload);
  rec.files.push_back({"summary.json", json_text(doc)});
  rec.payload = doc;
  rec.summary_line = "lambda_" + std::to_string(c.depth) + " = " + scalar_text(lambda) +
                     ", survivor measure = " + scalar_text(survivor);
}

inline void run_cantor(const ExperimentConfig &c, RunRecord &rec) {
  if (c.exact)
    run_cantor_impl<Rational>(c, rec);
  else
    run_cantor_impl<double>(c, rec);
}

inline void run_regularity(const ExperimentConfig &c, RunRecord &rec) {
  const auto seq = c.deletion_sequence<Rational>();
  nlohmann::json results = nlohmann::json::array();
  double best = 0.0;
  bool any = false;
  for (double g : c.gamma) {
    auto res = certify(seq, g, c.rank_max);
    nlohmann::json entry{{"gamma", g}};
    if (auto *cert = std::get_if<RegularityCertificate>(&res)) {
      const auto issues = validate_certificate(seq, *cert);
      entry["status"] = "certified";
      entry["certificate"] = *cert;
      entry["validated"] = issues.empty();
      entry["issues"] = issues;
      const auto bound = dimension_lower_bound(*cert);
      entry["lower_bound"] = {{"dim_h_at_least", bound.gamma},
                              {"gamma_volume_floor", bound.gamma_volume_floor},
                              {"below_scale", bound.scale}};
      if (issues.empty()) {
        best = std::max(best, bound.gamma);
        any = true;
      }
    } else {
      entry["status"] = "failure";
      entry["reason"] = std::get<CertifyFailure>(res).reason;
    }
    results.push_back(entry);
  }
  nlohmann::json doc = header(c, rec.config_hash);
  doc["sequence"] = c.sequence_label();
  doc["rank_max"] = c.rank_max;
  doc["results"] = results;
  doc["best_lower_bound"] = any ? nlohmann::json(best) : nlohmann::json(nullptr);
  rec.files.push_back({"certificates.json", json_text(doc)});
  rec.payload = doc;
  rec.summary_line = any ? "best certified lower bound: dim_H >= " + num(best)
                         : "no gamma certified";
}

template <Scalar T> void run_survival_impl(const ExperimentConfig &c, RunRecord &rec) {
  const MapKind map = c.command == "return-map" ? MapKind::Return : MapKind::Sieve;
  const double p0 = to_double(c.p0);
  const auto est = survivor_fraction_mc<T>(map, p0, c.depth, c.samples, c.seed, c.parallelism);
  const auto seq = DeletionSequence<Rational>::q_orbit(c.p0);
  const auto alive = est.alive_after();

  CsvWriter table(c, rec.config_hash);
  table.meta("map", c.command);
  table.meta("p0", to_string(c.p0));
  table.meta("seed", std::to_string(c.seed));
  table.row({"depth", "alive", "fraction", "std_error", "expected"});
  for (std::size_t k = 0; k <= c.depth; ++k) {
    const double f = static_cast<double>(alive[k]) / static_cast<double>(est.samples);
    const double se = std::sqrt(f * (1.0 - f) / static_cast<double>(est.samples));
    table.row({std::to_string(k), num(alive[k]), num(f), num(se),
               num(to_double(survivor_measure(seq, k)))});
  }
  rec.files.push_back({"survival.csv", table.str()});

  CsvWriter hist(c, rec.config_hash);
  hist.row({"step", "count"});
  for (std::size_t t = 1; t <= c.depth; ++t)
    hist.row({std::to_string(t), num(est.escape_histogram[t])});
  rec.files.push_back({"escape_times.csv", hist.str()});

  const Rational expected = survivor_measure(seq, c.depth);
  nlohmann::json doc = header(c, rec.config_hash);
  doc["p0"] = to_string(c.p0);
  doc["depth"] = c.depth;
  doc["samples"] = est.samples;
  doc["seed"] = c.seed;
  doc["survivors"] = est.survivors;
  doc["fraction"] = est.fraction();
  doc["std_error"] = est.std_error();
  doc["expected"] = to_double(expected);
  doc["expected_exact"] = to_string(expected);
  rec.files.push_back({"summary.json", json_text(doc)});
  rec.payload = doc;
  rec.summary_line = "surviving fraction at depth " + std::to_string(c.depth) + ": " +
                     num(est.fraction()) + " +- " + num(est.std_error()) + " (expected " +
                     num(to_double(expected)) + ")";
}

inline void run_survival(const ExperimentConfig &c, RunRecord &rec) {
  if (c.exact)
    run_survival_impl<Rational>(c, rec);
  else
    run_survival_impl<double>(c, rec);
}

inline void run_birkhoff(const ExperimentConfig &c, RunRecord &rec) {
  const MapKind map = c.map == "return" ? MapKind::Return : MapKind::Sieve;
  const double p0 = to_double(c.p0);
  TestFunction phi;
  phi.d0 = c.d0;
  const auto basin =
      basin_fraction_mc(map, phi, c.tau, p0, c.depth, c.samples, c.seed, c.parallelism);

  SamplingPlan plan;
  plan.levels = c.levels <= 1 ? std::vector<double>{p0} : level_grid(0.0, p0, c.levels);
  plan.x_grid = c.x_grid;
  plan.h_grid = map == MapKind::Return ? c.h_samples : 1;
  if (c.alpha >= 1.0)
    rec.warnings.push_back("alpha >= 1: phi <= 1, so the nontypical cloud is empty");
  const auto cloud = sample_nontypical(map, phi, c.alpha, c.depth, plan, c.seed, c.parallelism);
  rec.files.push_back({"nontypical.csv", cloud_csv(cloud, c, rec.config_hash)});

  // The trace starts at h = 1/2 on the return map; h never affects phi.
  const auto trace =
      map == MapKind::Sieve
          ? time_average(phi, std::optional{SieveState<double>{c.x0, p0}}, c.depth)
          : time_average(phi, std::optional{ReturnState<double>{c.x0, p0, 0.5}}, c.depth);
  CsvWriter tr(c, rec.config_hash);
  tr.meta("x0", num(c.x0));
  tr.meta("escaped_step", trace.escaped_step ? std::to_string(*trace.escaped_step) : "none");
  tr.row({"n", "phi_n"});
  for (std::size_t n = 1; n <= trace.partial.size(); ++n)
    tr.row({std::to_string(n), num(trace.partial[n - 1])});
  rec.files.push_back({"trace.csv", tr.str()});

  nlohmann::json doc = header(c, rec.config_hash);
  doc["map"] = c.map;
  doc["p0"] = to_string(c.p0);
  doc["N"] = c.depth;
  doc["tau"] = c.tau;
  doc["alpha"] = c.alpha;
  doc["d0"] = c.d0;
  doc["samples"] = basin.samples;
  doc["seed"] = c.seed;
  doc["space_average"] = space_average(phi);
  doc["basin_fraction"] = basin.fraction();
  doc["nontypical_points"] = cloud.size();
  doc["warnings"] = rec.warnings;
  rec.files.push_back({"summary.json", json_text(doc)});
  rec.payload = doc;
  rec.summary_line = "basin fraction at N=" + std::to_string(c.depth) + ", tau=" + num(c.tau) +
                     ": " + num(basin.fraction()) + "; nontypical points: " +
                     std::to_string(cloud.size());
}

inline void run_dimension(const ExperimentConfig &c, RunRecord &rec) {
  nlohmann::json doc = header(c, rec.config_hash);
  doc["source"] = c.source;
  BoxCountSeries series;
  if (c.source == "exact") {
    const auto seq = c.deletion_sequence<Rational>();
    series = exact_series(seq, c.rank_lo, c.depth);
    series.fit = fit_with(series, c, true);
    doc["sequence"] = c.sequence_label();
    if (c.depth >= 1)
      doc["effective_dimension"] = effective_dimension(seq, c.depth);
  } else if (c.source == "intervals") {
    const auto seq = c.deletion_sequence<double>();
    const auto ivs = enumerate_intervals(seq, c.depth);
    series = grid_series(ivs, c.octaves.lo, c.octaves.hi);
    series.fit = fit_with(series, c, false);
    doc["sequence"] = c.sequence_label();
  } else {
    PointCloud cloud;
    if (c.source == "cloud") {
      cloud = read_cloud_csv(c.input);
      if (cloud.empty())
        throw InputError("point cloud '" + c.input + "' is empty");
    } else {
      const auto levels = level_grid(0.0, to_double(c.p0), c.levels);
      cloud = survivor_cloud(levels, c.x_grid, c.depth, c.parallelism);
      if (cloud.empty())
        throw InputError("survivor cloud is empty; refine x_grid or lower depth");
    }
    if (c.source == "product") {
      auto base = grid_series(cloud, c.octaves.lo, c.octaves.hi);
      base.fit = fit_with(base, c, false);
      rec.files.push_back({"series_2d.csv", series_csv(base, c, rec.config_hash)});
      doc["fit_2d"] = fit_json(base.fit);
      cloud = product_cloud(cloud, c.h_samples);
      series = grid_series(cloud, c.octaves.lo, c.octaves.hi);
      series.fit = fit_with(series, c, false);
      doc["slope_difference"] = series.fit.slope - base.fit.slope;
    } else {
      series = grid_series(cloud, c.octaves.lo, c.octaves.hi);
      series.fit = fit_with(series, c, false);
    }
    doc["points"] = cloud.size();
    doc["dim"] = cloud.dim;
  }
  doc["fit"] = fit_json(series.fit);
  rec.files.push_back({"series.csv", series_csv(series, c, rec.config_hash)});
  rec.files.push_back({"fit.json", json_text(doc)});
  rec.payload = doc;
  rec.summary_line = "fitted slope: " + num(series.fit.slope);
}

inline void write_files(const std::filesystem::path &dir, const std::vector<OutputFile> &files) {
  std::filesystem::create_directories(dir);
  for (const auto &f : files) {
    std::ofstream out(dir / f.name, std::ios::binary);
    if (!out)
      throw std::runtime_error("cannot write " + (dir / f.name).string());
    out << f.content;
  }
}

} // namespace detail

/// Runs one validated config. Files are written only when `write` is set.
inline RunRecord run(const ExperimentConfig &c, bool write = true) {
  const auto start = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.command = c.command;
  rec.config_hash = config_hash(c);
  rec.seed = c.seed;
  if (c.command == "cantor")
    detail::run_cantor(c, rec);
  else if (c.command == "regularity")
    detail::run_regularity(c, rec);
  else if (c.command == "sieve" || c.command == "return-map")
    detail::run_survival(c, rec);
  else if (c.command == "birkhoff")
    detail::run_birkhoff(c, rec);
  else if (c.command == "dimension")
    detail::run_dimension(c, rec);
  else
    throw InputError("unknown command '" + c.command + "'");

  nlohmann::json record{{"command", c.command},
                        {"config_hash", rec.config_hash},
                        {"tool_version", rec.tool_version},
                        {"seed", c.seed},
                        {"config", to_key_values(c)},
                        {"outputs", nlohmann::json::array()}};
  record["config"].erase("out");
  record["config"].erase("parallelism");
  for (const auto &f : rec.files)
    record["outputs"].push_back(f.name);
  rec.files.push_back({"run.json", detail::json_text(record)});

  if (write)
    detail::write_files(c.out, rec.files);
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

} // namespace sievekit::cli
