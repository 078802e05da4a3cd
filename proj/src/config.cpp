#include "viscoflow/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "viscoflow/errors.hpp"
#include "viscoflow/presets.hpp"

namespace viscoflow {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool parse_double(const std::string& s, double& out) {
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && p == end && std::isfinite(out);
}

bool parse_int(const std::string& s, long& out) {
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && p == end;
}

bool parse_list(const std::string& s, std::vector<double>& out) {
  out.clear();
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double v;
    if (!parse_double(trim(item), v)) return false;
    out.push_back(v);
  }
  return !out.empty();
}

std::string fmt(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::string fmt_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
  return s;
}

using Setter = std::function<bool(ExperimentConfig&, const std::string&)>;
using Getter = std::function<std::string(const ExperimentConfig&)>;

struct Key {
  const char* section;
  const char* name;
  Setter set;
  Getter get;
};

template <class M>
Key real_key(const char* sec, const char* name, M member) {
  return {sec, name,
          [member](ExperimentConfig& c, const std::string& v) { return parse_double(v, member(c)); },
          [member](const ExperimentConfig& c) { return fmt(member(const_cast<ExperimentConfig&>(c))); }};
}

template <class M>
Key int_key(const char* sec, const char* name, M member) {
  return {sec, name,
          [member](ExperimentConfig& c, const std::string& v) {
            long x;
            if (!parse_int(v, x)) return false;
            member(c) = static_cast<std::remove_reference_t<decltype(member(c))>>(x);
            return true;
          },
          [member](const ExperimentConfig& c) {
            return std::to_string(member(const_cast<ExperimentConfig&>(c)));
          }};
}

template <class M>
Key string_key(const char* sec, const char* name, M member) {
  return {sec, name,
          [member](ExperimentConfig& c, const std::string& v) {
            member(c) = v;
            return !v.empty();
          },
          [member](const ExperimentConfig& c) { return member(const_cast<ExperimentConfig&>(c)); }};
}

template <class M>
Key list_key(const char* sec, const char* name, M member) {
  return {sec, name,
          [member](ExperimentConfig& c, const std::string& v) { return parse_list(v, member(c)); },
          [member](const ExperimentConfig& c) {
            return fmt_list(member(const_cast<ExperimentConfig&>(c)));
          }};
}

const std::vector<Key>& keys() {
  using C = ExperimentConfig;
  static const std::vector<Key> table = {
      real_key("problem", "sigma", [](C& c) -> double& { return c.problem.sigma; }),
      real_key("problem", "T", [](C& c) -> double& { return c.problem.T; }),
      int_key("problem", "n_el", [](C& c) -> int& { return c.problem.n_el; }),
      int_key("problem", "n_t", [](C& c) -> int& { return c.problem.n_t; }),
      real_key("problem", "rho", [](C& c) -> double& { return c.problem.rho; }),
      string_key("cost", "target", [](C& c) -> std::string& { return c.cost.target; }),
      real_key("cost", "target_scale", [](C& c) -> double& { return c.cost.target_scale; }),
      real_key("cost", "alpha1", [](C& c) -> double& { return c.cost.alpha1; }),
      real_key("cost", "alpha2", [](C& c) -> double& { return c.cost.alpha2; }),
      string_key("cost", "control", [](C& c) -> std::string& { return c.cost.control; }),
      real_key("cost", "control_scale", [](C& c) -> double& { return c.cost.control_scale; }),
      int_key("optimizer", "max_outer", [](C& c) -> int& { return c.optimizer.max_outer; }),
      real_key("optimizer", "opt_tol", [](C& c) -> double& { return c.optimizer.opt_tol; }),
      real_key("optimizer", "armijo_c", [](C& c) -> double& { return c.optimizer.armijo_c; }),
      real_key("optimizer", "shrink", [](C& c) -> double& { return c.optimizer.shrink; }),
      {"optimizer", "prox_center",
       [](C& c, const std::string& v) {
         c.optimizer.prox_center = v;
         return !v.empty();
       },
       [](const C& c) { return c.optimizer.prox_center.value_or("none"); }},
      {"optimizer", "delta",
       [](C& c, const std::string& v) {
         double d;
         if (!parse_double(v, d)) return false;
         c.optimizer.delta = d;
         return true;
       },
       [](const C& c) { return c.optimizer.delta ? fmt(*c.optimizer.delta) : std::string("none"); }},
      list_key("optimizer", "rho_schedule",
               [](C& c) -> std::vector<double>& { return c.optimizer.rho_schedule; }),
      string_key("solve", "solver", [](C& c) -> std::string& { return c.solve.solver; }),
      list_key("sweep", "rho_list", [](C& c) -> std::vector<double>& { return c.sweep.rho_list; }),
      real_key("sweep", "slack", [](C& c) -> double& { return c.sweep.slack; }),
      {"sweep", "parallel",
       [](C& c, const std::string& v) {
         if (v == "true" || v == "1") return c.sweep.parallel = true, true;
         if (v == "false" || v == "0") return c.sweep.parallel = false, true;
         return false;
       },
       [](const C& c) { return std::string(c.sweep.parallel ? "true" : "false"); }},
      list_key("grad_check", "epsilons",
               [](C& c) -> std::vector<double>& { return c.grad_check.epsilons; }),
      int_key("grad_check", "directions", [](C& c) -> int& { return c.grad_check.directions; }),
      int_key("grad_check", "seed", [](C& c) -> unsigned& { return c.grad_check.seed; }),
      real_key("grad_check", "rel_tol", [](C& c) -> double& { return c.grad_check.rel_tol; }),
      real_key("kkt", "eps", [](C& c) -> double& { return c.kkt.eps; }),
      string_key("output", "dir", [](C& c) -> std::string& { return c.output.dir; }),
  };
  return table;
}

const Key* find_key(const std::string& section, const std::string& name) {
  for (const auto& k : keys())
    if (name == k.name && (section.empty() || section == k.section)) return &k;
  return nullptr;
}

bool known_section(const std::string& s) {
  for (const auto& k : keys())
    if (s == k.section) return true;
  return false;
}

bool series_source_ok(const std::string& source) {
  return is_preset(source) || std::filesystem::exists(source);
}

void validate(const ExperimentConfig& c, std::vector<std::string>& errs) {
  auto need = [&](bool ok, const std::string& msg) {
    if (!ok) errs.push_back(msg);
  };
  need(c.problem.sigma > 0.0, "sigma must be positive");
  need(c.problem.T > 0.0, "T must be positive");
  need(c.problem.n_el >= 2, "n_el must be at least 2");
  need(c.problem.n_t >= 1, "n_t must be at least 1");
  need(c.problem.rho > 0.0, "rho must be positive");
  need(series_source_ok(c.cost.target), "target must be sine, pulse, zero or an existing CSV file");
  need(series_source_ok(c.cost.control), "control must be sine, pulse, zero or an existing CSV file");
  need(c.cost.alpha1 >= 0.0, "alpha1 must be non-negative");
  need(c.cost.alpha2 >= 0.0, "alpha2 must be non-negative");
  need(c.optimizer.max_outer >= 0, "max_outer must be non-negative");
  need(c.optimizer.opt_tol > 0.0, "opt_tol must be positive");
  need(c.optimizer.armijo_c > 0.0 && c.optimizer.armijo_c < 1.0, "armijo_c must lie in (0, 1)");
  need(c.optimizer.shrink > 0.0 && c.optimizer.shrink < 1.0, "shrink must lie in (0, 1)");
  if (c.optimizer.delta) need(*c.optimizer.delta > 0.0, "delta must be positive");
  if (c.optimizer.prox_center)
    need(series_source_ok(*c.optimizer.prox_center),
         "prox_center must be sine, pulse, zero or an existing CSV file");
  const auto& s = c.optimizer.rho_schedule;
  bool dec = !s.empty() && s[0] > 0.0;
  for (std::size_t i = 1; i < s.size(); ++i) dec = dec && s[i] > 0.0 && s[i] < s[i - 1];
  need(dec, "rho_schedule must be positive and strictly decreasing");
  need(c.solve.solver == "regularized" || c.solve.solver == "nonsmooth",
       "solver must be regularized or nonsmooth");
  bool rho_ok = !c.sweep.rho_list.empty();
  for (double r : c.sweep.rho_list) rho_ok = rho_ok && r > 0.0;
  need(rho_ok, "rho_list entries must be positive");
  need(c.sweep.slack >= 0.0, "slack must be non-negative");
  bool eps_ok = !c.grad_check.epsilons.empty();
  for (double e : c.grad_check.epsilons) eps_ok = eps_ok && e > 0.0;
  need(eps_ok, "epsilons must be positive");
  need(c.grad_check.directions >= 1, "directions must be at least 1");
  need(c.grad_check.rel_tol > 0.0, "rel_tol must be positive");
  need(c.kkt.eps > 0.0 && c.kkt.eps < 0.5, "eps must lie in (0, 0.5)");
}

}  // namespace

ExperimentConfig parse_config_string(std::string_view text) {
  ExperimentConfig cfg;
  std::vector<std::string> errs;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  for (int lineno = 1; std::getline(in, raw); ++lineno) {
    std::string line = raw;
    if (const auto c = line.find_first_of("#;"); c != std::string::npos) line.erase(c);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        errs.push_back("line " + std::to_string(lineno) + ": malformed section header");
        continue;
      }
      section = trim(line.substr(1, line.size() - 2));
      if (!known_section(section)) errs.push_back("unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      errs.push_back("line " + std::to_string(lineno) + ": expected key = value");
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const Key* k = find_key(known_section(section) ? section : std::string(), key);
    if (!k) {
      errs.push_back("unknown key '" + key + "'");
      continue;
    }
    if (!k->set(cfg, value))
      errs.push_back("invalid value '" + value + "' for key '" + key + "'");
  }
  validate(cfg, errs);
  if (!errs.empty()) throw ConfigError(std::move(errs));
  return cfg;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError({"cannot read config file '" + path.string() + "'"});
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_string(ss.str());
}

std::vector<std::pair<std::string, std::string>> config_key_values(const ExperimentConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& k : keys()) out.emplace_back(std::string(k.section) + "." + k.name, k.get(cfg));
  return out;
}

ProblemConfig make_problem(const ExperimentConfig& c) {
  return ProblemConfig(c.problem.sigma, Mesh(c.problem.n_el), TimeGrid(c.problem.T, c.problem.n_t),
                       SmoothingParam(c.problem.rho));
}

CostConfig make_cost(const ExperimentConfig& c, const ProblemConfig& p) {
  CostConfig cost;
  cost.z_d = load_series(c.cost.target, c.cost.target_scale, p.mesh, p.grid);
  cost.z_T = cost.z_d.back();
  cost.alpha1 = c.cost.alpha1;
  cost.alpha2 = c.cost.alpha2;
  return cost;
}

TimeSeries make_control(const ExperimentConfig& c, const ProblemConfig& p) {
  return load_series(c.cost.control, c.cost.control_scale, p.mesh, p.grid);
}

OptimizeOptions make_optimize_options(const ExperimentConfig& c, const ProblemConfig& p) {
  OptimizeOptions o;
  o.max_outer = c.optimizer.max_outer;
  o.opt_tol = c.optimizer.opt_tol;
  o.armijo_c = c.optimizer.armijo_c;
  o.shrink = c.optimizer.shrink;
  o.delta = c.optimizer.delta;
  if (c.optimizer.prox_center) o.prox_center = load_series(*c.optimizer.prox_center, 1.0, p.mesh, p.grid);
  o.rho_schedule = c.optimizer.rho_schedule;
  o.kkt_eps = c.kkt.eps;
  return o;
}

}  // namespace viscoflow
