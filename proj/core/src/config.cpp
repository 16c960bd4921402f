#include <algorithm>
#include <cctype>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include "crowdlab/config.hpp"
#include "crowdlab/error.hpp"
#include "crowdlab/simulate.hpp"
#include "tsv.hpp"

namespace crowdlab {
namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool parse_bool(const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw Error("bad boolean value: " + v);
}

long parse_long(const std::string& v) {
  std::size_t pos = 0;
  long out;
  try {
    out = std::stol(v, &pos);
  } catch (const std::exception&) {
    throw Error("bad integer value: " + v);
  }
  if (pos != v.size()) throw Error("bad integer value: " + v);
  return out;
}

double parse_real(const std::string& v) {
  std::size_t pos = 0;
  double out;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw Error("bad numeric value: " + v);
  }
  if (pos != v.size()) throw Error("bad numeric value: " + v);
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"corpus", [](RunConfig& c, const std::string& v) { c.corpus = v; }},
      {"test_corpus", [](RunConfig& c, const std::string& v) { c.test_corpus = v; }},
      {"out_dir", [](RunConfig& c, const std::string& v) { c.out_dir = v; }},
      {"seed",
       [](RunConfig& c, const std::string& v) {
         const long s = parse_long(v);
         if (s < 0) throw Error("seed must be non-negative");
         c.seed = static_cast<std::uint64_t>(s);
       }},
      {"groups", [](RunConfig& c, const std::string& v) { c.groups = v; }},
      {"ranges", [](RunConfig& c, const std::string& v) { c.ranges = v; }},
      {"clusters",
       [](RunConfig& c, const std::string& v) { c.clusters = static_cast<int>(parse_long(v)); }},
      {"select_clusters",
       [](RunConfig& c, const std::string& v) {
         const auto colon = v.find(':');
         if (colon == std::string::npos) throw Error("select_clusters wants min:max, got " + v);
         c.select_min = static_cast<int>(parse_long(v.substr(0, colon)));
         c.select_max = static_cast<int>(parse_long(v.substr(colon + 1)));
         c.clusters = 0;
       }},
      {"burn_in",
       [](RunConfig& c, const std::string& v) { c.burn_in = static_cast<int>(parse_long(v)); }},
      {"samples",
       [](RunConfig& c, const std::string& v) { c.samples = static_cast<int>(parse_long(v)); }},
      {"thin",
       [](RunConfig& c, const std::string& v) { c.thin = static_cast<int>(parse_long(v)); }},
      {"mh_steps",
       [](RunConfig& c, const std::string& v) { c.mh_steps = static_cast<int>(parse_long(v)); }},
      {"corrected_mh",
       [](RunConfig& c, const std::string& v) { c.corrected_mh = parse_bool(v); }},
      {"lambda", [](RunConfig& c, const std::string& v) { c.lambda = parse_real(v); }},
      {"alpha_diag", [](RunConfig& c, const std::string& v) { c.alpha_diag = parse_real(v); }},
      {"alpha_off", [](RunConfig& c, const std::string& v) { c.alpha_off = parse_real(v); }},
      {"eps_nu", [](RunConfig& c, const std::string& v) { c.eps_nu = parse_real(v); }},
      {"eps_gamma", [](RunConfig& c, const std::string& v) { c.eps_gamma = parse_real(v); }},
      {"p", [](RunConfig& c, const std::string& v) { c.flag_fraction = parse_real(v); }},
      {"normalize", [](RunConfig& c, const std::string& v) { c.normalize = parse_bool(v); }},
      {"mode", [](RunConfig& c, const std::string& v) { c.mode = v; }},
      {"l2", [](RunConfig& c, const std::string& v) { c.l2 = parse_real(v); }},
      {"max_epochs",
       [](RunConfig& c, const std::string& v) { c.max_epochs = static_cast<int>(parse_long(v)); }},
      {"grad_tolerance",
       [](RunConfig& c, const std::string& v) { c.grad_tolerance = parse_real(v); }},
      {"transitions",
       [](RunConfig& c, const std::string& v) { c.transitions = parse_bool(v); }},
  };
  return table;
}

void apply(RunConfig& config, const std::string& key, const std::string& value) {
  const auto& table = setters();
  const auto it = table.find(key);
  if (it == table.end()) throw Error("unknown config key: " + key);
  it->second(config, value);
}

}  // namespace

std::string RunConfig::canonical() const {
  std::ostringstream out;
  out.precision(17);
  // out_dir is deliberately absent: where a run lands does not change what
  // the run is, and manifests of identical runs should match byte for byte.
  out << "corpus=" << corpus << '\n'
      << "test_corpus=" << test_corpus << '\n'
      << "seed=" << (seed ? std::to_string(*seed) : std::string("unset")) << '\n'
      << "groups=" << groups << '\n'
      << "ranges=" << ranges << '\n'
      << "clusters=" << clusters << '\n'
      << "select_clusters=" << select_min << ':' << select_max << '\n'
      << "burn_in=" << burn_in << '\n'
      << "samples=" << samples << '\n'
      << "thin=" << thin << '\n'
      << "mh_steps=" << mh_steps << '\n'
      << "corrected_mh=" << (corrected_mh ? 1 : 0) << '\n'
      << "lambda=" << lambda << '\n'
      << "alpha_diag=" << alpha_diag << '\n'
      << "alpha_off=" << alpha_off << '\n'
      << "eps_nu=" << eps_nu << '\n'
      << "eps_gamma=" << eps_gamma << '\n'
      << "p=" << flag_fraction << '\n'
      << "normalize=" << (normalize ? 1 : 0) << '\n'
      << "mode=" << mode << '\n'
      << "l2=" << l2 << '\n'
      << "max_epochs=" << max_epochs << '\n'
      << "grad_tolerance=" << grad_tolerance << '\n'
      << "transitions=" << (transitions ? 1 : 0) << '\n';
  return out.str();
}

RunConfig parse_run_config(const std::string& text, const std::string& path) {
  RunConfig config;
  const auto all = tsv::lines(text);
  for (std::size_t i = 0; i < all.size(); ++i) {
    std::string line = all[i];
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(path, i + 1, "expected key = value");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(path, i + 1, "empty key");
    try {
      apply(config, key, value);
    } catch (const Error& e) {
      throw ParseError(path, i + 1, e.what());
    }
  }
  return config;
}

RunConfig load_run_config(const std::string& path) {
  return parse_run_config(tsv::read_file(path), path);
}

void apply_config_override(RunConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw Error("override wants key=value, got: " + assignment);
  apply(config, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void validate_run_config(const RunConfig& config) {
  if (config.corpus.empty()) throw Error("config needs a corpus path");
  if (!config.seed) throw Error("config needs a seed");
  if (!std::filesystem::exists(config.corpus))
    throw Error("corpus file does not exist: " + config.corpus);
  if (!config.test_corpus.empty() && !std::filesystem::exists(config.test_corpus))
    throw Error("test corpus file does not exist: " + config.test_corpus);
  if (config.out_dir.empty()) throw Error("config needs an output directory");

  parse_group_counts(config.groups);
  const auto ranges = parse_precision_ranges(config.ranges);
  if (parse_group_counts(config.groups).size() != ranges.size())
    throw Error("annotator groups and precision ranges differ in count");

  if (config.clusters < 0) throw Error("clusters must be positive or 0 for selection");
  if (config.clusters == 0 && (config.select_min < 1 || config.select_max < config.select_min))
    throw Error("bad cluster selection range");
  if (config.burn_in < 0 || config.samples <= 0 || config.thin <= 0 || config.mh_steps < 0)
    throw Error("bad chain schedule");
  if (config.lambda <= 0 || config.alpha_diag <= 0 || config.alpha_off <= 0 ||
      config.eps_nu <= 0 || config.eps_gamma <= 0)
    throw Error("hyperparameters must be positive");
  if (config.flag_fraction < 0 || config.flag_fraction > 1)
    throw Error("flag fraction must lie in [0, 1]");
  if (config.mode != "cost" && config.mode != "cll")
    throw Error("mode must be cost or cll, got: " + config.mode);
  if (config.l2 < 0) throw Error("l2 strength must be non-negative");
  if (config.max_epochs <= 0 || config.grad_tolerance <= 0)
    throw Error("bad optimizer settings");
}

}  // namespace crowdlab
