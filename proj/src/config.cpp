#include "mheat/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "mheat/parallel.hpp"

namespace mheat {

namespace {

constexpr const char* kKindNames[] = {"simulate", "gradient", "kato",       "coupling",
                                      "bochner",  "schrodinger", "report-all"};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& v, int line) {
  double out = 0.0;
  const char* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("not a number: '" + v + "'", line);
  return out;
}

std::int64_t to_int(const std::string& v, int line) {
  std::int64_t out = 0;
  const char* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("not an integer: '" + v + "'", line);
  return out;
}

std::vector<double> to_list(const std::string& v, int line) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(trim(item), line));
  if (out.empty()) throw ConfigError("empty list", line);
  return out;
}

std::string one_of(const std::string& v, std::initializer_list<const char*> allowed, int line) {
  for (const char* a : allowed)
    if (v == a) return v;
  std::string msg = "'" + v + "' is not one of";
  for (const char* a : allowed) msg += std::string(" ") + a;
  throw ConfigError(msg, line);
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, int)>;

const std::map<std::string, std::map<std::string, Setter>>& schema() {
  static const std::map<std::string, std::map<std::string, Setter>> s = {
      {"manifold",
       {
           {"kind",
            [](ExperimentConfig& c, const std::string& v, int l) {
              c.manifold.kind = one_of(v, {"euclidean", "sphere", "hyperbolic", "model"}, l);
            }},
           {"dim", [](ExperimentConfig& c, const std::string& v, int l) { c.manifold.dim = static_cast<int>(to_int(v, l)); }},
           {"radius", [](ExperimentConfig& c, const std::string& v, int l) { c.manifold.radius = to_double(v, l); }},
           {"scale", [](ExperimentConfig& c, const std::string& v, int l) { c.manifold.scale = to_double(v, l); }},
           {"psi",
            [](ExperimentConfig& c, const std::string& v, int l) {
              c.manifold.psi = one_of(v, {"linear", "sinh", "sin", "power"}, l);
            }},
           {"psi_coefficient", [](ExperimentConfig& c, const std::string& v, int l) { c.manifold.psi_coefficient = to_double(v, l); }},
           {"psi_exponent", [](ExperimentConfig& c, const std::string& v, int l) { c.manifold.psi_exponent = to_double(v, l); }},
           {"weight",
            [](ExperimentConfig& c, const std::string& v, int l) {
              c.manifold.weight = one_of(v, {"none", "quadratic"}, l);
            }},
           {"weight_strength", [](ExperimentConfig& c, const std::string& v, int l) { c.manifold.weight_strength = to_double(v, l); }},
       }},
      {"experiment",
       {
           {"kind",
            [](ExperimentConfig& c, const std::string& v, int l) {
              try {
                c.experiment.kind = parse_experiment_kind(v);
              } catch (const ConfigError& e) {
                throw ConfigError(e.reason(), l);
              }
            }},
           {"point", [](ExperimentConfig& c, const std::string& v, int l) { c.experiment.point = to_list(v, l); }},
           {"point_y", [](ExperimentConfig& c, const std::string& v, int l) { c.experiment.point_y = to_list(v, l); }},
           {"function",
            [](ExperimentConfig& c, const std::string& v, int l) {
              c.experiment.function =
                  one_of(v, {"auto", "sine", "gaussian", "tanh", "bump", "linear", "exp_linear"}, l);
            }},
           {"k", [](ExperimentConfig& c, const std::string& v, int l) { c.experiment.k = to_double(v, l); }},
           {"potential",
            [](ExperimentConfig& c, const std::string& v, int l) {
              c.experiment.potential = one_of(v, {"constant", "indicator", "inverse_radius"}, l);
            }},
           {"delta", [](ExperimentConfig& c, const std::string& v, int l) { c.experiment.delta = to_double(v, l); }},
           {"p", [](ExperimentConfig& c, const std::string& v, int l) { c.experiment.p = to_double(v, l); }},
           {"times", [](ExperimentConfig& c, const std::string& v, int l) { c.experiment.times = to_list(v, l); }},
       }},
      {"numeric",
       {
           {"dt", [](ExperimentConfig& c, const std::string& v, int l) { c.numeric.dt = to_double(v, l); }},
           {"T", [](ExperimentConfig& c, const std::string& v, int l) { c.numeric.horizon = to_double(v, l); }},
           {"N", [](ExperimentConfig& c, const std::string& v, int l) { c.numeric.paths = to_int(v, l); }},
           {"seed",
            [](ExperimentConfig& c, const std::string& v, int l) {
              const auto s = to_int(v, l);
              if (s < 0) throw ConfigError("seed must be nonnegative", l);
              c.numeric.seed = static_cast<std::uint64_t>(s);
            }},
           {"anchors", [](ExperimentConfig& c, const std::string& v, int l) { c.numeric.anchors = static_cast<int>(to_int(v, l)); }},
           {"pairs", [](ExperimentConfig& c, const std::string& v, int l) { c.numeric.pairs = static_cast<int>(to_int(v, l)); }},
           {"grid", [](ExperimentConfig& c, const std::string& v, int l) { c.numeric.grid = static_cast<int>(to_int(v, l)); }},
           {"h", [](ExperimentConfig& c, const std::string& v, int l) { c.numeric.h = to_double(v, l); }},
           {"workers", [](ExperimentConfig& c, const std::string& v, int l) { c.numeric.workers = static_cast<int>(to_int(v, l)); }},
       }},
      {"output",
       {
           {"directory", [](ExperimentConfig& c, const std::string& v, int) { c.output.directory = v; }},
           {"formats",
            [](ExperimentConfig& c, const std::string& v, int l) {
              c.output.csv = c.output.json = false;
              std::stringstream ss(v);
              std::string item;
              while (std::getline(ss, item, ',')) {
                const std::string f = one_of(trim(item), {"csv", "json"}, l);
                (f == "csv" ? c.output.csv : c.output.json) = true;
              }
            }},
       }},
  };
  return s;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
  return s;
}

}  // namespace

const char* to_string(ExperimentKind k) { return kKindNames[static_cast<int>(k)]; }

ExperimentKind parse_experiment_kind(const std::string& name) {
  for (int i = 0; i < static_cast<int>(std::size(kKindNames)); ++i)
    if (name == kKindNames[i]) return static_cast<ExperimentKind>(i);
  throw ConfigError("unknown experiment kind '" + name + "'");
}

SimConfig ExperimentConfig::sim() const {
  SimConfig s;
  s.dt = numeric.dt;
  s.horizon = numeric.horizon;
  s.seed = numeric.seed;
  s.n_paths = numeric.paths;
  s.workers = resolve_workers(numeric.workers);
  return s;
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string raw, section;
  std::set<std::string> seen;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError("malformed section header", line);
      section = trim(s.substr(1, s.size() - 2));
      if (!schema().count(section)) throw ConfigError("unknown section [" + section + "]", line);
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key = value", line);
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (section.empty()) throw ConfigError("key '" + key + "' outside of a section", line);
    const auto& keys = schema().at(section);
    const auto it = keys.find(key);
    if (it == keys.end()) throw ConfigError("unknown key '" + key + "' in [" + section + "]", line);
    if (!seen.insert(section + "." + key).second) throw ConfigError("duplicate key '" + key + "'", line);
    if (value.empty()) throw ConfigError("missing value for '" + key + "'", line);
    it->second(cfg, value, line);
  }
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

void validate(const ExperimentConfig& cfg) {
  const auto& m = cfg.manifold;
  if (m.dim < 1 || m.dim > kMaxDim) throw ConfigError("dim must be in [1, " + std::to_string(kMaxDim) + "]");
  if ((m.kind == "sphere" || m.kind == "hyperbolic" || m.kind == "model") && m.dim < 2)
    throw ConfigError(m.kind + " needs dim >= 2");
  if (!(m.radius > 0.0) || !(m.scale > 0.0)) throw ConfigError("radius and scale must be positive");
  if (m.kind == "model" && m.psi == "power" && !(m.psi_coefficient > 0.0))
    throw ConfigError("psi_coefficient must be positive");
  const auto& e = cfg.experiment;
  for (const auto* pt : {&e.point, &e.point_y})
    if (*pt && static_cast<int>((*pt)->size()) != m.dim)
      throw ConfigError("point has " + std::to_string((*pt)->size()) + " coordinates, expected " +
                        std::to_string(m.dim));
  if (!(e.delta > 1.0)) throw ConfigError("delta must exceed 1");
  if (!(e.p > 1.0)) throw ConfigError("p must exceed 1");
  for (double t : e.times)
    if (!(t > 0.0) || t > cfg.numeric.horizon) throw ConfigError("times must lie in (0, T]");
  const auto& n = cfg.numeric;
  if (n.anchors < 1 || n.pairs < 1 || n.grid < 2) throw ConfigError("anchors, pairs >= 1 and grid >= 2 required");
  if (!(n.h > 0.0)) throw ConfigError("h must be positive");
  if (n.workers < 0) throw ConfigError("workers must be nonnegative");
  if (!(n.horizon > 0.0)) throw ConfigError("T must be positive");
  if (cfg.output.directory.empty()) throw ConfigError("output directory is empty");
  if (!cfg.output.csv && !cfg.output.json) throw ConfigError("no output format selected");
  SimConfig s;
  s.dt = n.dt;
  s.horizon = n.horizon;
  s.n_paths = n.paths;
  validate(s);
}

std::string canonical_text(const ExperimentConfig& c) {
  std::ostringstream o;
  const auto& m = c.manifold;
  o << "[manifold]\nkind = " << m.kind << "\ndim = " << m.dim << "\nradius = " << fmt(m.radius)
    << "\nscale = " << fmt(m.scale) << "\npsi = " << m.psi << "\npsi_coefficient = " << fmt(m.psi_coefficient)
    << "\npsi_exponent = " << fmt(m.psi_exponent) << "\nweight = " << m.weight
    << "\nweight_strength = " << fmt(m.weight_strength) << "\n";
  const auto& e = c.experiment;
  o << "[experiment]\nkind = " << to_string(e.kind) << "\n";
  if (e.point) o << "point = " << fmt_list(*e.point) << "\n";
  if (e.point_y) o << "point_y = " << fmt_list(*e.point_y) << "\n";
  o << "function = " << e.function << "\n";
  if (e.k) o << "k = " << fmt(*e.k) << "\n";
  o << "potential = " << e.potential << "\ndelta = " << fmt(e.delta) << "\np = " << fmt(e.p) << "\n";
  if (!e.times.empty()) o << "times = " << fmt_list(e.times) << "\n";
  const auto& n = c.numeric;
  o << "[numeric]\ndt = " << fmt(n.dt) << "\nT = " << fmt(n.horizon) << "\nN = " << n.paths
    << "\nseed = " << n.seed << "\nanchors = " << n.anchors << "\npairs = " << n.pairs
    << "\ngrid = " << n.grid << "\nh = " << fmt(n.h) << "\n";
  o << "[output]\ndirectory = " << c.output.directory << "\nformats = ";
  o << (c.output.csv ? (c.output.json ? "csv, json" : "csv") : "json") << "\n";
  return o.str();
}

std::string config_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  // Only the sections that determine results: no output block, no workers.
  const std::string text = canonical_text(cfg);
  for (unsigned char ch : text.substr(0, text.find("[output]"))) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace mheat
