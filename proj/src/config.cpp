#include "selfstab/config.hpp"

#include "selfstab/flow.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace selfstab {

namespace {

enum class Kind { kText, kExpr, kInt, kCount, kSeed, kReal, kPositive, kBool, kPoint, kList, kWords, kPath };

struct KeySpec {
  const char* key;
  const char* fallback;  // nullptr: no default (required or kind-specific)
  Kind kind;
  bool auto_ok = false;
};

struct SectionSpec {
  const char* name;
  std::vector<KeySpec> keys;
};

// clang-format off
const std::vector<SectionSpec>& schema() {
  static const std::vector<SectionSpec> s = {
    {"scenario", {
      {"name", "auto", Kind::kText, true},
      {"seed", "1", Kind::kSeed},
      {"workers", "1", Kind::kCount},
      {"summary_output", "summary.csv", Kind::kPath},
    }},
    {"model", {
      {"dim", nullptr, Kind::kInt},
      {"potential", nullptr, Kind::kExpr},
      {"drift1", nullptr, Kind::kExpr},
      {"drift2", nullptr, Kind::kExpr},
      {"drift3", nullptr, Kind::kExpr},
      {"phi", "0", Kind::kText},
      {"growth_order", "auto", Kind::kInt, true},
      {"weight_order", "auto", Kind::kInt, true},
    }},
    {"domain", {
      {"kind", nullptr, Kind::kText},
      {"lower", nullptr, Kind::kReal},
      {"upper", nullptr, Kind::kReal},
      {"center", nullptr, Kind::kPoint},
      {"radius", nullptr, Kind::kPositive},
      {"semi_axes", nullptr, Kind::kPoint},
      {"level", nullptr, Kind::kExpr},
      {"boundary_points", nullptr, Kind::kText},
      {"box_lo", nullptr, Kind::kPoint},
      {"box_hi", nullptr, Kind::kPoint},
    }},
    {"equilibrium", {
      {"x_stable", "auto", Kind::kPoint, true},
      {"guess", "auto", Kind::kPoint, true},
      {"tol", "1e-10", Kind::kPositive},
    }},
    {"constants", {
      {"box_lo", "auto", Kind::kPoint, true},
      {"box_hi", "auto", Kind::kPoint, true},
      {"r0", "1", Kind::kPositive},
      {"samples", "4096", Kind::kCount},
      {"output", "model_report.json", Kind::kPath},
    }},
    {"stability", {
      {"boundary_points", "64", Kind::kCount},
      {"interior_points", "64", Kind::kCount},
      {"horizon", "20", Kind::kPositive},
      {"dt", "1e-3", Kind::kPositive},
      {"tol", "1e-2", Kind::kPositive},
      {"output", "stability.json", Kind::kPath},
    }},
    {"flow", {
      {"x0", "auto", Kind::kPoint, true},
      {"horizon", "10", Kind::kPositive},
      {"dt", "1e-3", Kind::kPositive},
      {"relaxed", "false", Kind::kBool},
      {"output", "flow.csv", Kind::kPath},
    }},
    {"drift", {
      {"x0", "auto", Kind::kPoint, true},
      {"epsilon", "0.1", Kind::kReal},
      {"horizon", "2", Kind::kPositive},
      {"particles", "10000", Kind::kCount},
      {"field_dt", "0.01", Kind::kPositive},
      {"euler_dt", "1e-3", Kind::kPositive},
      {"nodes", "61", Kind::kCount},
      {"tol", "1e-5", Kind::kPositive},
      {"max_iter", "50", Kind::kCount},
      {"fresh_noise", "false", Kind::kBool},
      {"output", "drift_field.txt", Kind::kPath},
      {"log_output", "drift_log.csv", Kind::kPath},
    }},
    {"simulate", {
      {"mode", "classical", Kind::kText},
      {"x0", "auto", Kind::kPoint, true},
      {"epsilon", "0.1", Kind::kReal},
      {"horizon", "10", Kind::kPositive},
      {"dt", "1e-3", Kind::kPositive},
      {"trials", "1", Kind::kCount},
      {"particles", "100", Kind::kCount},
      {"offset", "0", Kind::kReal},
      {"drift_table", "auto", Kind::kPath, true},
      {"output", "paths.csv", Kind::kPath},
    }},
    {"action", {
      {"variant", "limiting", Kind::kText},
      {"y", "auto", Kind::kPoint, true},
      {"z", "auto", Kind::kPoint, true},
      {"horizon", "4", Kind::kPositive},
      {"nodes", "200", Kind::kCount},
      {"minimize", "true", Kind::kBool},
      {"multistart", "3", Kind::kInt},
      {"output", "action_path.csv", Kind::kPath},
    }},
    {"quasipotential", {
      {"variants", "classical limiting", Kind::kWords},
      {"y", "auto", Kind::kPoint, true},
      {"closed_form", "auto", Kind::kBool, true},
      {"numeric", "true", Kind::kBool},
      {"t_min", "0.25", Kind::kPositive},
      {"t_max", "50", Kind::kPositive},
      {"t_count", "12", Kind::kCount},
      {"nodes", "200", Kind::kCount},
      {"multistart", "3", Kind::kInt},
      {"golden_iterations", "16", Kind::kInt},
      {"scan", "360", Kind::kCount},
      {"numeric_scan", "16", Kind::kCount},
      {"output", "quasipotential.csv", Kind::kPath},
    }},
    {"exit", {
      {"modes", "classical limiting", Kind::kWords},
      {"epsilons", "0.3", Kind::kList},
      {"trials", "200", Kind::kCount},
      {"dt", "0.01", Kind::kPositive},
      {"max_horizon", "auto", Kind::kPositive, true},
      {"horizon_cap", "2000", Kind::kPositive},
      {"particles", "500", Kind::kCount},
      {"x0", "auto", Kind::kPoint, true},
      {"bins", "36", Kind::kCount},
      {"neighborhood_radius", "auto", Kind::kPositive, true},
      {"window_eta", "auto", Kind::kPositive, true},
      {"output", "exits.csv", Kind::kPath},
      {"summary_output", "exit_summary.csv", Kind::kPath},
    }},
    {"kramers", {
      {"mode", "classical", Kind::kText},
      {"epsilons", "0.25 0.3 0.35 0.4", Kind::kList},
      {"trials", "400", Kind::kCount},
      {"dt", "0.01", Kind::kPositive},
      {"max_horizon", "auto", Kind::kPositive, true},
      {"horizon_cap", "1e5", Kind::kPositive},
      {"x0", "auto", Kind::kPoint, true},
      {"input", "auto", Kind::kPath, true},
      {"output", "kramers.csv", Kind::kPath},
      {"fit_output", "kramers_fit.json", Kind::kPath},
    }},
  };
  return s;
}
// clang-format on

const SectionSpec* find_section(std::string_view name) {
  for (const auto& s : schema()) {
    if (name == s.name) return &s;
  }
  return nullptr;
}

const KeySpec* find_key(const SectionSpec& section, std::string_view key) {
  for (const auto& k : section.keys) {
    if (key == k.key) return &k;
  }
  return nullptr;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::string unquote(std::string s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

bool parse_number(std::string_view text, double& out) {
  const auto t = trim(text);
  if (t.empty()) return false;
  const char* begin = t.data();
  if (*begin == '+') ++begin;
  const auto [end, ec] = std::from_chars(begin, t.data() + t.size(), out);
  return ec == std::errc() && end == t.data() + t.size() && std::isfinite(out);
}

std::vector<std::string> words(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

std::vector<double> numbers(const std::string& path, std::string_view text) {
  std::vector<double> out;
  for (const auto& w : words(text)) {
    double v = 0.0;
    if (!parse_number(w, v)) throw ConfigError(path, "expected a number, got '" + w + "'");
    out.push_back(v);
  }
  return out;
}

void check_value(const std::string& path, const KeySpec& spec, const std::string& value) {
  if (spec.auto_ok && value == "auto") return;
  double v = 0.0;
  switch (spec.kind) {
    case Kind::kText:
    case Kind::kExpr:
    case Kind::kPath:
      if (value.empty()) throw ConfigError(path, "value must not be empty");
      return;
    case Kind::kInt:
    case Kind::kCount:
    case Kind::kSeed:
      if (!parse_number(value, v) || v != std::floor(v)) throw ConfigError(path, "expected an integer, got '" + value + "'");
      if (spec.kind == Kind::kCount && v < 1) throw ConfigError(path, "must be at least 1");
      if (spec.kind == Kind::kSeed && v < 0) throw ConfigError(path, "seed must be nonnegative");
      return;
    case Kind::kReal:
    case Kind::kPositive:
      if (!parse_number(value, v)) throw ConfigError(path, "expected a number, got '" + value + "'");
      if (spec.kind == Kind::kPositive && !(v > 0)) throw ConfigError(path, "must be positive");
      return;
    case Kind::kBool:
      if (value != "true" && value != "false") throw ConfigError(path, "expected true or false, got '" + value + "'");
      return;
    case Kind::kPoint:
    case Kind::kList:
      if (numbers(path, value).empty()) throw ConfigError(path, "expected whitespace-separated numbers");
      return;
    case Kind::kWords:
      if (words(value).empty()) throw ConfigError(path, "expected at least one word");
      return;
  }
}

expr::Expression parse_expression(const std::string& path, const std::string& text, int dim) {
  try {
    return dim > 0 ? expr::parse(text, dim) : expr::parse_profile(text);
  } catch (const expr::SyntaxError& e) {
    throw ConfigError(path, e.what());
  }
}

const char* const kPaper51 = R"(; One-dimensional asymmetric well: the exit side switches under self-stabilization.
[scenario]
name = paper-5.1
seed = 51

[model]
dim = 1
potential = x1^2 + 0.45*x1^3*(smoothstep(-2, -1.6, x1) - smoothstep(1.2, 1.5, x1))
phi = 2.5*u

[domain]
kind = interval
lower = -1.4
upper = 1

[equilibrium]
x_stable = 0

[constants]
box_lo = -3
box_hi = 3
; U is concave near its barrier at x = -1.48; convexity holds beyond |x| = 2.
r0 = 2.05

[flow]
x0 = 0.9

[action]
z = 1

[exit]
modes = classical limiting
epsilons = 0.3
trials = 200
horizon_cap = 2000

[kramers]
epsilons = 0.25 0.3 0.35 0.4
trials = 400
)";

const char* const kPaper52 = R"(; Planar quadratic potential on an elliptic domain.
[scenario]
name = paper-5.2
seed = 52

[model]
dim = 2
potential = 6*x1^2 + 0.5*x2^2
phi = 4*u

[domain]
kind = ellipse
center = 0 0
semi_axes = 1 2

[equilibrium]
x_stable = 0 0

[constants]
box_lo = -3 -3
box_hi = 3 3

[flow]
x0 = 0.5 1.5

[action]
z = 1 0

[exit]
modes = classical limiting
epsilons = 1 2
trials = 200
horizon_cap = 1e4

[kramers]
epsilons = 0.8 1 1.25 1.5
trials = 200
)";

}  // namespace

ScenarioConfig ScenarioConfig::parse(std::string_view text, std::string origin) {
  boost::property_tree::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("", origin + ": line " + std::to_string(e.line()) + ": " + e.message());
  }
  ScenarioConfig c;
  c.origin_ = std::move(origin);
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError(section, "key outside of any section");
    }
    const SectionSpec* spec = find_section(section);
    if (!spec) throw ConfigError(section, "unknown section");
    auto& values = c.values_[section];
    for (const auto& [key, node] : body) {
      if (!find_key(*spec, key)) throw ConfigError(section + "." + key, "unknown key");
      values[key] = unquote(trim(node.data()));
    }
  }
  if (!c.values_.count("model")) throw ConfigError("model", "missing section");
  if (!c.values_.count("domain")) throw ConfigError("domain", "missing section");
  c.validate_and_build();
  return c;
}

ScenarioConfig ScenarioConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  auto c = parse(buffer.str(), path.string());
  if (c.values_["scenario"]["name"] == "auto") c.values_["scenario"]["name"] = path.stem().string();
  return c;
}

std::vector<std::string> ScenarioConfig::builtin_names() { return {"paper-5.1", "paper-5.2"}; }

std::string ScenarioConfig::builtin_text(std::string_view name) {
  if (name == "paper-5.1") return kPaper51;
  if (name == "paper-5.2") return kPaper52;
  throw ConfigError("", "unknown built-in scenario '" + std::string(name) + "' (expected paper-5.1 or paper-5.2)");
}

ScenarioConfig ScenarioConfig::builtin(std::string_view name) {
  return parse(builtin_text(name), "builtin:" + std::string(name));
}

void ScenarioConfig::set(std::string_view assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string_view::npos || dot == std::string_view::npos || dot > eq) {
    throw ConfigError("", "override must look like section.key=value, got '" + std::string(assignment) + "'");
  }
  const std::string section = trim(assignment.substr(0, dot));
  const std::string key = trim(assignment.substr(dot + 1, eq - dot - 1));
  const SectionSpec* spec = find_section(section);
  if (!spec) throw ConfigError(section, "unknown section");
  if (!find_key(*spec, key)) throw ConfigError(section + "." + key, "unknown key");
  values_[section][key] = unquote(trim(assignment.substr(eq + 1)));
  x_stable_.reset();
  validate_and_build();
}

void ScenarioConfig::validate_and_build() {
  // Defaults first, so the resolved config lists every key.
  for (const auto& section : schema()) {
    auto& values = values_[section.name];
    for (const auto& k : section.keys) {
      if (!values.count(k.key) && k.fallback) values[k.key] = k.fallback;
    }
    for (const auto& [key, value] : values) {
      check_value(std::string(section.name) + "." + key, *find_key(section, key), value);
    }
  }
  auto& scenario = values_["scenario"];
  if (scenario["name"] == "auto" && origin_.starts_with("builtin:")) scenario["name"] = origin_.substr(8);

  auto& m = values_["model"];
  if (!m.count("dim")) throw ConfigError("model.dim", "required key missing");
  const int dim = get_int("model", "dim");
  if (dim < 1 || dim > kMaxDim) throw ConfigError("model.dim", "must be between 1 and " + std::to_string(kMaxDim));
  for (int c = dim + 1; c <= 3; ++c) {
    if (m.count("drift" + std::to_string(c))) {
      throw ConfigError("model.drift" + std::to_string(c), "component beyond dim " + std::to_string(dim));
    }
  }
  int n_drift = 0;
  for (int c = 1; c <= dim; ++c) n_drift += static_cast<int>(m.count("drift" + std::to_string(c)));
  const bool has_potential = m.count("potential") > 0;
  if (has_potential == (n_drift > 0)) {
    throw ConfigError("model.potential", "give either potential or drift1..drift" + std::to_string(dim));
  }
  if (!has_potential && n_drift != dim) {
    throw ConfigError("model.drift" + std::to_string(n_drift + 1), "missing drift component");
  }
  RadialProfile profile;
  const std::string& phi = m["phi"];
  try {
    profile = phi.starts_with("poly:") ? RadialProfile::from_description(phi)
                                       : RadialProfile::from_expression(parse_expression("model.phi", phi, 0));
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("model.phi", e.what());
  }
  int growth = 1;
  if (m["growth_order"] != "auto") {
    growth = get_int("model", "growth_order");
  } else if (profile.is_polynomial()) {
    growth = std::max(1, static_cast<int>(profile.coefficients().size()) - 1);
  }
  std::optional<int> weight;
  if (m["weight_order"] != "auto") weight = get_int("model", "weight_order");
  try {
    if (has_potential) {
      model_ = ModelSpec::gradient(dim, parse_expression("model.potential", m["potential"], dim), profile, growth, weight);
    } else {
      std::vector<expr::Expression> components;
      for (int c = 1; c <= dim; ++c) {
        const std::string key = "drift" + std::to_string(c);
        components.push_back(parse_expression("model." + key, m[key], dim));
      }
      model_ = ModelSpec::from_drift(dim, std::move(components), profile, growth, weight);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("model", e.what());
  }

  auto& d = values_["domain"];
  if (!d.count("kind")) throw ConfigError("domain.kind", "required key missing");
  const std::string kind = d["kind"];
  auto require = [&](const char* key) {
    if (!d.count(key)) throw ConfigError(std::string("domain.") + key, "required for kind = " + kind);
  };
  auto only = [&](std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : d) {
      if (key == "kind") continue;
      if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
        throw ConfigError("domain." + key, "not used by kind = " + kind);
      }
    }
  };
  try {
    if (kind == "interval") {
      only({"lower", "upper"});
      require("lower");
      require("upper");
      if (dim != 1) throw ConfigError("domain.kind", "interval needs dim = 1");
      domain_ = Domain::interval(get_double("domain", "lower"), get_double("domain", "upper"));
    } else if (kind == "ball") {
      only({"center", "radius"});
      require("radius");
      const Vec center = d.count("center") ? get_point("domain", "center") : Vec::Zero(dim);
      domain_ = Domain::ball(center, get_double("domain", "radius"));
    } else if (kind == "ellipse") {
      only({"center", "semi_axes"});
      require("semi_axes");
      const Vec center = d.count("center") ? get_point("domain", "center") : Vec::Zero(dim);
      domain_ = Domain::ellipse(center, get_point("domain", "semi_axes"));
    } else if (kind == "implicit") {
      only({"level", "boundary_points", "box_lo", "box_hi"});
      for (const char* key : {"level", "boundary_points", "box_lo", "box_hi"}) require(key);
      std::vector<Vec> points;
      std::string_view rest = d["boundary_points"];
      while (!rest.empty()) {
        const auto semi = rest.find(';');
        const auto list = numbers("domain.boundary_points", rest.substr(0, semi));
        if (!list.empty()) {
          if (static_cast<int>(list.size()) != dim) {
            throw ConfigError("domain.boundary_points", "each point needs " + std::to_string(dim) + " coordinates");
          }
          Vec p(dim);
          for (int c = 0; c < dim; ++c) p(c) = list[c];
          points.push_back(p);
        }
        rest = semi == std::string_view::npos ? std::string_view{} : rest.substr(semi + 1);
      }
      domain_ = Domain::implicit(parse_expression("domain.level", d["level"], dim), std::move(points),
                                 Box{get_point("domain", "box_lo"), get_point("domain", "box_hi")});
    } else {
      throw ConfigError("domain.kind", "expected interval, ball, ellipse or implicit, got '" + kind + "'");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("domain", e.what());
  }
  if (domain_->dim() != dim) throw ConfigError("domain", "dimension does not match model.dim");

  // Point-valued keys must match the dimension.
  for (const auto& section : schema()) {
    if (std::string_view(section.name) == "domain") continue;
    for (const auto& k : section.keys) {
      if (k.kind != Kind::kPoint) continue;
      auto it = values_[section.name].find(k.key);
      if (it == values_[section.name].end() || it->second == "auto") continue;
      get_point(section.name, k.key);
    }
  }
  for (const auto& w : get_words("quasipotential", "variants")) {
    if (w != "classical" && w != "limiting") {
      throw ConfigError("quasipotential.variants", "expected classical and/or limiting, got '" + w + "'");
    }
  }
  for (const auto& w : get_words("exit", "modes")) {
    if (w != "classical" && w != "limiting" && w != "particle") {
      throw ConfigError("exit.modes", "expected classical, limiting or particle, got '" + w + "'");
    }
  }
  for (const char* section : {"kramers"}) {
    const auto& mode = get(section, "mode");
    if (mode != "classical" && mode != "limiting" && mode != "particle") {
      throw ConfigError(std::string(section) + ".mode", "expected classical, limiting or particle, got '" + mode + "'");
    }
  }
  const auto& variant = get("action", "variant");
  if (variant != "classical" && variant != "limiting" && variant != "tracking") {
    throw ConfigError("action.variant", "expected classical, limiting or tracking, got '" + variant + "'");
  }
  const auto& sim_mode = get("simulate", "mode");
  if (sim_mode != "classical" && sim_mode != "particle" && sim_mode != "frozen" && sim_mode != "limiting" &&
      sim_mode != "tracking") {
    throw ConfigError("simulate.mode", "expected classical, particle, frozen, limiting or tracking, got '" + sim_mode + "'");
  }
  for (const char* section : {"exit", "kramers"}) {
    for (double eps : get_list(section, "epsilons")) {
      if (!(eps > 0)) throw ConfigError(std::string(section) + ".epsilons", "noise levels must be positive");
    }
  }
  if (get_double("quasipotential", "t_max") < get_double("quasipotential", "t_min")) {
    throw ConfigError("quasipotential.t_max", "must be at least t_min");
  }
}

std::string ScenarioConfig::resolved_text() const {
  std::ostringstream out;
  out << "; resolved from " << origin_ << "\n";
  bool first = true;
  for (const auto& section : schema()) {
    const auto it = values_.find(section.name);
    if (it == values_.end()) continue;
    out << (first ? "" : "\n") << '[' << section.name << "]\n";
    first = false;
    for (const auto& k : section.keys) {
      const auto v = it->second.find(k.key);
      if (v != it->second.end()) out << k.key << " = " << v->second << '\n';
    }
  }
  return out.str();
}

const std::string& ScenarioConfig::get(const std::string& section, const std::string& key) const {
  const auto s = values_.find(section);
  if (s != values_.end()) {
    const auto k = s->second.find(key);
    if (k != s->second.end()) return k->second;
  }
  throw ConfigError(section + "." + key, "not set");
}

bool ScenarioConfig::is_auto(const std::string& section, const std::string& key) const {
  const auto s = values_.find(section);
  if (s == values_.end()) return false;
  const auto k = s->second.find(key);
  return k != s->second.end() && k->second == "auto";
}

double ScenarioConfig::get_double(const std::string& section, const std::string& key) const {
  double v = 0.0;
  const auto& text = get(section, key);
  if (!parse_number(text, v)) throw ConfigError(section + "." + key, "expected a number, got '" + text + "'");
  return v;
}

int ScenarioConfig::get_int(const std::string& section, const std::string& key) const {
  const double v = get_double(section, key);
  if (v != std::floor(v) || std::abs(v) > 2e9) throw ConfigError(section + "." + key, "expected an integer");
  return static_cast<int>(v);
}

std::uint64_t ScenarioConfig::get_seed(const std::string& section, const std::string& key) const {
  const auto& text = get(section, key);
  std::uint64_t v = 0;
  const auto t = trim(text);
  const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || end != t.data() + t.size()) {
    throw ConfigError(section + "." + key, "expected a nonnegative integer seed, got '" + text + "'");
  }
  return v;
}

bool ScenarioConfig::get_bool(const std::string& section, const std::string& key) const {
  const auto& text = get(section, key);
  if (text == "true") return true;
  if (text == "false") return false;
  throw ConfigError(section + "." + key, "expected true or false, got '" + text + "'");
}

std::vector<double> ScenarioConfig::get_list(const std::string& section, const std::string& key) const {
  return numbers(section + "." + key, get(section, key));
}

Vec ScenarioConfig::get_point(const std::string& section, const std::string& key) const {
  const auto list = get_list(section, key);
  const int dim = model_ ? model_->dim() : static_cast<int>(list.size());
  if (static_cast<int>(list.size()) != dim) {
    throw ConfigError(section + "." + key, "expected " + std::to_string(dim) + " coordinates, got " +
                                               std::to_string(list.size()));
  }
  Vec p(dim);
  for (int c = 0; c < dim; ++c) p(c) = list[c];
  return p;
}

std::vector<std::string> ScenarioConfig::get_words(const std::string& section, const std::string& key) const {
  return words(get(section, key));
}

Vec ScenarioConfig::x_stable() const {
  if (x_stable_) return *x_stable_;
  if (!is_auto("equilibrium", "x_stable")) {
    x_stable_ = get_point("equilibrium", "x_stable");
  } else {
    const Vec guess = is_auto("equilibrium", "guess") ? domain_->center() : get_point("equilibrium", "guess");
    EquilibriumOptions options;
    options.tol = get_double("equilibrium", "tol");
    x_stable_ = find_equilibrium(*model_, guess, options).point;
  }
  return *x_stable_;
}

Vec ScenarioConfig::point_or_stable(const std::string& section, const std::string& key) const {
  return is_auto(section, key) ? x_stable() : get_point(section, key);
}

Box ScenarioConfig::constants_box() const {
  const Box bounds = domain_->bounding_box();
  const Vec center = bounds.center();
  Box box{center + 2.0 * (bounds.lo - center), center + 2.0 * (bounds.hi - center)};
  if (!is_auto("constants", "box_lo")) box.lo = get_point("constants", "box_lo");
  if (!is_auto("constants", "box_hi")) box.hi = get_point("constants", "box_hi");
  if (!((box.hi.array() > box.lo.array()).all())) throw ConfigError("constants.box_hi", "must exceed box_lo in every coordinate");
  return box;
}

}  // namespace selfstab
