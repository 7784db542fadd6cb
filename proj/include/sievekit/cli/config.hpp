#pragma once

// Experiment configuration: a flat key = value document with per-command
// defaults, file loading, flag overrides and canonical serialization.

#include "sievekit/cantor.hpp"
#include "sievekit/numeric.hpp"

#include <charconv>
#include <cstdio>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace sievekit::cli {

inline const std::vector<std::string> &commands() {
  static const std::vector<std::string> names{"cantor",    "regularity", "sieve",
                                              "return-map", "birkhoff",  "dimension"};
  return names;
}

/// Documented keys, in canonical order, with a one-line description.
inline const std::vector<std::pair<std::string, std::string>> &config_schema() {
  static const std::vector<std::pair<std::string, std::string>> keys{
      {"alpha", "nontypicality threshold in (0, 1); >= 1 yields an empty cloud"},
      {"d0", "test-function cutoff distance"},
      {"depth", "rank / orbit depth N"},
      {"dump_intervals", "cantor: also write rank-depth intervals (true|false)"},
      {"fit", "dimension: fit range 'lo:hi' over series entries, or 'auto'"},
      {"gamma", "comma-separated gamma grid for regularity"},
      {"h_samples", "dimension/birkhoff: h values per base point"},
      {"input", "dimension: point-cloud CSV for source=cloud"},
      {"levels", "number of p0 levels in [0, p0] for cloud sampling"},
      {"map", "birkhoff: sieve | return"},
      {"mode", "exact | float"},
      {"octaves", "dyadic eps ladder 'lo:hi' (eps = 2^-k)"},
      {"out", "output directory"},
      {"p0", "q-orbit start, constant proportion (rational text)"},
      {"parallelism", "worker threads"},
      {"proportions", "explicit deletion proportions, comma-separated"},
      {"rank_lo", "dimension: first rank of the exact series"},
      {"rank_max", "regularity: deepest checked rank"},
      {"samples", "Monte Carlo sample count"},
      {"seed", "RNG seed (u64)"},
      {"sequence", "qorbit | constant | explicit"},
      {"source", "dimension: exact | intervals | cloud | survivors | product"},
      {"tau", "birkhoff: basin tolerance"},
      {"x0", "birkhoff: start x of the written trace"},
      {"x_grid", "x resolution per level for grid sampling"},
  };
  return keys;
}

/// Keys that do not affect results and are excluded from the config hash.
inline bool is_runtime_key(const std::string &key) {
  return key == "out" || key == "parallelism";
}

using KeyValues = std::map<std::string, std::string>;

inline KeyValues default_values(const std::string &command) {
  KeyValues kv{
      {"alpha", "0.5"},         {"d0", "0.4"},          {"depth", "10"},
      {"dump_intervals", "false"}, {"fit", "auto"},      {"gamma", "0.5,0.75,0.9,0.95,0.99"},
      {"h_samples", "64"},      {"input", ""},          {"levels", "1"},
      {"map", "sieve"},         {"mode", "float"},      {"octaves", "0:8"},
      {"out", "."},             {"p0", "1/2"},          {"parallelism", "1"},
      {"proportions", ""},      {"rank_lo", "4"},       {"rank_max", "10000"},
      {"samples", "100000"},    {"seed", "42"},         {"sequence", "qorbit"},
      {"source", "exact"},      {"tau", "0.3"},         {"x0", "0"},
      {"x_grid", "2048"},
  };
  if (command == "sieve" || command == "return-map") {
    kv["depth"] = "9";
    kv["samples"] = "1000000";
  } else if (command == "birkhoff") {
    kv["depth"] = "999";
  } else if (command == "dimension") {
    kv["depth"] = "20";
  }
  return kv;
}

inline std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos)
    return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

/// Parses flat `key = value` text; '#' starts a comment line.
inline KeyValues parse_key_values(const std::string &text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line.front() == '#')
      continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InputError("config line " + std::to_string(lineno) + ": expected key = value");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

inline KeyValues load_key_values(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw InputError("cannot read config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_key_values(buf.str());
}

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

struct OctaveRange {
  int lo = 0;
  int hi = 0;
  bool operator==(const OctaveRange &) const = default;
};

/// Validated, typed configuration.
struct ExperimentConfig {
  std::string command;
  std::string sequence = "qorbit";
  Rational p0{1, 2};
  std::vector<Rational> proportions;
  std::size_t depth = 10;
  std::uint64_t samples = 100000;
  std::uint64_t seed = 42;
  std::vector<double> gamma;
  OctaveRange octaves{0, 8};
  std::string fit = "auto";
  std::string out = ".";
  bool exact = false;
  unsigned parallelism = 1;
  double tau = 0.3;
  double alpha = 0.5;
  double d0 = 0.4;
  std::size_t levels = 1;
  std::size_t x_grid = 2048;
  std::size_t h_samples = 64;
  std::string source = "exact";
  std::string input;
  std::size_t rank_max = 10000;
  std::size_t rank_lo = 4;
  bool dump_intervals = false;
  double x0 = 0.0;
  std::string map = "sieve";

  bool operator==(const ExperimentConfig &) const = default;

  template <Scalar T> DeletionSequence<T> deletion_sequence() const {
    auto conv = [](const Rational &r) {
      if constexpr (is_exact_v<T>)
        return r;
      else
        return to_double(r);
    };
    if (sequence == "constant")
      return DeletionSequence<T>::constant(conv(p0));
    if (sequence == "explicit") {
      std::vector<T> ps;
      for (const auto &r : proportions)
        ps.push_back(conv(r));
      return DeletionSequence<T>::explicit_list(std::move(ps));
    }
    return DeletionSequence<T>::q_orbit(conv(p0));
  }

  std::string sequence_label() const {
    if (sequence == "explicit")
      return "explicit(" + std::to_string(proportions.size()) + " terms)";
    return sequence + "(" + to_string(p0) + ")";
  }
};

namespace detail {

inline std::uint64_t parse_u64(const std::string &key, const std::string &v) {
  std::uint64_t out = 0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw InputError(key + ": expected a non-negative integer, got '" + v + "'");
  return out;
}

inline double parse_double(const std::string &key, const std::string &v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size())
      throw std::invalid_argument(v);
    return d;
  } catch (const std::exception &) {
    // Accept rational text such as 1/3.
    try {
      return to_double(parse_rational(v));
    } catch (const InputError &) {
      throw InputError(key + ": expected a number, got '" + v + "'");
    }
  }
}

inline std::vector<std::string> split_list(const std::string &v) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ','))
    if (auto t = trim(item); !t.empty())
      out.push_back(t);
  return out;
}

inline OctaveRange parse_range(const std::string &key, const std::string &v) {
  const auto colon = v.find(':');
  if (colon == std::string::npos)
    throw InputError(key + ": expected 'lo:hi', got '" + v + "'");
  OctaveRange r;
  r.lo = static_cast<int>(parse_u64(key, trim(v.substr(0, colon))));
  r.hi = static_cast<int>(parse_u64(key, trim(v.substr(colon + 1))));
  if (r.lo > r.hi)
    throw InputError(key + ": empty range '" + v + "'");
  return r;
}

inline std::string join_rationals(const std::vector<Rational> &v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out += (i ? "," : "") + to_string(v[i]);
  return out;
}

inline std::string join_doubles(const std::vector<double> &v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out += (i ? "," : "") + format_double(v[i]);
  return out;
}

} // namespace detail

/// Validates every key against the module preconditions and builds the
/// typed config. Throws InputError before any work is done.
inline ExperimentConfig build_config(const std::string &command, const KeyValues &kv) {
  using namespace detail;
  bool known_command = false;
  for (const auto &c : commands())
    known_command |= c == command;
  if (!known_command)
    throw InputError("unknown command '" + command + "'");
  std::set<std::string> known;
  for (const auto &[k, _] : config_schema())
    known.insert(k);
  for (const auto &[k, _] : kv)
    if (!known.count(k))
      throw InputError("unknown config key '" + k + "'");

  KeyValues v = default_values(command);
  for (const auto &[k, val] : kv)
    v[k] = val;

  ExperimentConfig c;
  c.command = command;
  c.sequence = v["sequence"];
  if (c.sequence != "qorbit" && c.sequence != "constant" && c.sequence != "explicit")
    throw InputError("sequence must be qorbit, constant or explicit");
  c.p0 = parse_rational(v["p0"]);
  for (const auto &item : split_list(v["proportions"]))
    c.proportions.push_back(parse_rational(item));
  c.depth = parse_u64("depth", v["depth"]);
  c.samples = parse_u64("samples", v["samples"]);
  c.seed = parse_u64("seed", v["seed"]);
  for (const auto &item : split_list(v["gamma"]))
    c.gamma.push_back(parse_double("gamma", item));
  c.octaves = parse_range("octaves", v["octaves"]);
  c.fit = v["fit"];
  c.out = v["out"];
  if (v["mode"] != "exact" && v["mode"] != "float")
    throw InputError("mode must be exact or float");
  c.exact = v["mode"] == "exact";
  c.parallelism = static_cast<unsigned>(parse_u64("parallelism", v["parallelism"]));
  c.tau = parse_double("tau", v["tau"]);
  c.alpha = parse_double("alpha", v["alpha"]);
  c.d0 = parse_double("d0", v["d0"]);
  c.levels = parse_u64("levels", v["levels"]);
  c.x_grid = parse_u64("x_grid", v["x_grid"]);
  c.h_samples = parse_u64("h_samples", v["h_samples"]);
  c.source = v["source"];
  c.input = v["input"];
  c.rank_max = parse_u64("rank_max", v["rank_max"]);
  c.rank_lo = parse_u64("rank_lo", v["rank_lo"]);
  if (v["dump_intervals"] != "true" && v["dump_intervals"] != "false")
    throw InputError("dump_intervals must be true or false");
  c.dump_intervals = v["dump_intervals"] == "true";
  c.x0 = parse_double("x0", v["x0"]);
  c.map = v["map"];

  // Module preconditions.
  if (c.parallelism == 0)
    throw InputError("parallelism must be at least 1");
  if (c.sequence == "qorbit" && !(c.p0 > 0 && c.p0 <= 1))
    throw InputError("p0 must lie in (0, 1] for a q-orbit");
  if (c.sequence == "constant" && !(c.p0 > 0 && c.p0 < 1))
    throw InputError("constant proportion must lie in (0, 1)");
  if (c.sequence == "explicit") {
    if (c.proportions.empty())
      throw InputError("explicit sequence needs proportions");
    for (const auto &p : c.proportions)
      if (!(p > 0 && p < 1))
        throw InputError("explicit proportions must lie in (0, 1)");
  }
  if (c.fit != "auto")
    parse_range("fit", c.fit);

  if (command == "cantor") {
    if (c.sequence == "explicit" && c.depth > c.proportions.size())
      throw InputError("explicit sequence has " + std::to_string(c.proportions.size()) +
                       " terms but depth " + std::to_string(c.depth) + " was requested");
    if (c.dump_intervals && c.depth > 20)
      throw InputError("dump_intervals supports depth <= 20");
  } else if (command == "regularity") {
    if (c.gamma.empty())
      throw InputError("gamma grid is empty");
    for (double g : c.gamma)
      if (!(g > 0.0 && g < 1.0))
        throw InputError("gamma values must lie in (0, 1), got " + format_double(g));
    if (c.rank_max == 0)
      throw InputError("rank_max must be positive");
    if (c.sequence == "explicit" && c.rank_max > c.proportions.size())
      throw InputError("rank_max exceeds the explicit sequence length");
  } else if (command == "sieve" || command == "return-map" || command == "birkhoff") {
    if (c.samples == 0)
      throw InputError("samples must be at least 1");
    if (c.depth == 0)
      throw InputError("depth must be at least 1");
    if (c.sequence != "qorbit")
      throw InputError(command + " runs on a q-orbit level; set sequence = qorbit");
    const bool return_map =
        command == "return-map" || (command == "birkhoff" && c.map == "return");
    if (command == "birkhoff" && c.map != "sieve" && c.map != "return")
      throw InputError("map must be sieve or return");
    if (return_map && c.p0 * 2 > 1)
      throw InputError("return-map levels must satisfy p0 <= 1/2");
    if (command == "birkhoff") {
      if (!(c.tau >= 0.0))
        throw InputError("tau must be non-negative");
      if (!(c.alpha > 0.0))
        throw InputError("alpha must be positive");
      if (!(c.d0 > 0.0))
        throw InputError("d0 must be positive");
      if (c.levels == 0 || c.x_grid == 0)
        throw InputError("levels and x_grid must be positive");
      if (!(c.x0 >= 0.0 && c.x0 <= 1.0))
        throw InputError("x0 must lie in [0, 1]");
    }
  } else if (command == "dimension") {
    static const std::set<std::string> sources{"exact", "intervals", "cloud", "survivors",
                                               "product"};
    if (!sources.count(c.source))
      throw InputError("source must be one of exact, intervals, cloud, survivors, product");
    if (c.source == "exact") {
      if (c.depth > 63 || c.rank_lo > c.depth)
        throw InputError("exact series needs rank_lo <= depth <= 63");
      if (c.rank_lo == 0 && c.depth == 0)
        throw InputError("exact series needs at least one positive rank");
    }
    if (c.source == "intervals" && c.depth > 24)
      throw InputError("interval box counting supports depth <= 24");
    if (c.source == "cloud" && c.input.empty())
      throw InputError("source = cloud needs input = <csv path>");
    if ((c.source == "survivors" || c.source == "product")) {
      if (c.depth == 0 || c.levels == 0 || c.x_grid == 0)
        throw InputError("survivor clouds need positive depth, levels and x_grid");
      if (c.p0 * 2 > 1 && c.source == "product")
        throw InputError("product clouds use return-map levels, p0 <= 1/2");
      if (c.h_samples == 0)
        throw InputError("h_samples must be positive");
    }
    if (c.octaves.hi > 30)
      throw InputError("octaves above 30 are not supported");
    if (c.sequence == "explicit" && c.depth > c.proportions.size() &&
        (c.source == "exact" || c.source == "intervals"))
      throw InputError("explicit sequence shorter than depth");
  }
  return c;
}

/// Canonical key = value text for a config (sorted keys, one per line).
inline KeyValues to_key_values(const ExperimentConfig &c) {
  using namespace detail;
  return KeyValues{
      {"alpha", format_double(c.alpha)},
      {"d0", format_double(c.d0)},
      {"depth", std::to_string(c.depth)},
      {"dump_intervals", c.dump_intervals ? "true" : "false"},
      {"fit", c.fit},
      {"gamma", join_doubles(c.gamma)},
      {"h_samples", std::to_string(c.h_samples)},
      {"input", c.input},
      {"levels", std::to_string(c.levels)},
      {"map", c.map},
      {"mode", c.exact ? "exact" : "float"},
      {"octaves", std::to_string(c.octaves.lo) + ":" + std::to_string(c.octaves.hi)},
      {"out", c.out},
      {"p0", to_string(c.p0)},
      {"parallelism", std::to_string(c.parallelism)},
      {"proportions", join_rationals(c.proportions)},
      {"rank_lo", std::to_string(c.rank_lo)},
      {"rank_max", std::to_string(c.rank_max)},
      {"samples", std::to_string(c.samples)},
      {"seed", std::to_string(c.seed)},
      {"sequence", c.sequence},
      {"source", c.source},
      {"tau", format_double(c.tau)},
      {"x0", format_double(c.x0)},
      {"x_grid", std::to_string(c.x_grid)},
  };
}

inline std::string serialize(const ExperimentConfig &c, bool include_runtime = true) {
  std::string text = "# command = " + c.command + "\n";
  for (const auto &[k, v] : to_key_values(c))
    if (include_runtime || !is_runtime_key(k))
      text += k + " = " + v + "\n";
  return text;
}

/// FNV-1a over the canonical text of result-affecting keys.
inline std::string config_hash(const ExperimentConfig &c) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : serialize(c, false)) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

} // namespace sievekit::cli
