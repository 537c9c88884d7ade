#include <morpde/config.hpp>

#include <morpde/grid.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <utility>

namespace morpde {

namespace {

// ---------------------------------------------------------------------------
// Raw INI scanning
// ---------------------------------------------------------------------------

struct RawEntry {
  std::string section;
  std::string key;
  std::string value;
  int line = 0;
};

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail_line(int line, const std::string& message) {
  throw config_error("line " + std::to_string(line) + ": " + message);
}

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> table = {
      {"problem",
       {"dim", "x1_lo", "x1_hi", "x2_lo", "x2_hi", "nodes1", "nodes2", "horizon",
        "steps", "dt"}},
      {"operator",
       {"family", "exponent", "p_minus", "p_plus", "p", "q", "weight",
        "weight_sup", "delta_reg"}},
      {"source", {"f"}},
      {"initial", {"u0"}},
      {"solver",
       {"newton_tol", "max_newton", "max_line_search", "picard_fallback",
        "picard_fallback_after", "max_picard", "theta0", "theta_min",
        "theta_ratio", "init"}},
      {"verify",
       {"j_list", "eps_list", "k_list", "node_counts", "step_counts",
        "diagnostics", "exact", "seed"}},
      {"output", {"dir", "csv", "json"}},
  };
  return table;
}

std::vector<RawEntry> scan(const std::string& text) {
  std::vector<RawEntry> entries;
  std::set<std::pair<std::string, std::string>> seen;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = trim(raw);
    if (s.empty() || s[0] == '#') continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail_line(line, "expected ']' closing the section header");
      std::string name = trim(s.substr(1, s.size() - 2));
      if (!known_keys().count(name)) fail_line(line, "unknown section '[" + name + "]'");
      section = name;
      continue;
    }
    std::size_t eq = s.find('=');
    if (eq == std::string::npos) {
      fail_line(line, "expected 'key = value' or a section header");
    }
    RawEntry e;
    e.section = section;
    e.key = trim(s.substr(0, eq));
    e.value = trim(s.substr(eq + 1));
    e.line = line;
    if (section.empty()) fail_line(line, "key '" + e.key + "' appears before any section");
    if (e.key.empty()) fail_line(line, "missing key before '='");
    if (e.value.empty()) fail_line(line, "missing value for key '" + e.key + "'");
    if (!known_keys().at(section).count(e.key)) {
      fail_line(line, "unknown key '" + e.key + "' in section [" + section + "]");
    }
    if (!seen.insert({section, e.key}).second) {
      fail_line(line, "duplicate key '" + e.key + "' in section [" + section + "]");
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

// ---------------------------------------------------------------------------
// Typed value parsing
// ---------------------------------------------------------------------------

double to_double(const RawEntry& e) {
  const std::string v = trim(e.value);
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    fail_line(e.line, "key '" + e.key + "': expected a number, got '" + e.value + "'");
  }
  return out;
}

long long to_ll(const RawEntry& e) {
  const std::string v = trim(e.value);
  long long out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    fail_line(e.line, "key '" + e.key + "': expected an integer, got '" + e.value + "'");
  }
  return out;
}

int to_int(const RawEntry& e) { return static_cast<int>(to_ll(e)); }

bool to_bool(const RawEntry& e) {
  if (e.value == "true") return true;
  if (e.value == "false") return false;
  fail_line(e.line, "key '" + e.key + "': expected true or false, got '" + e.value + "'");
}

std::vector<std::string> split_list(const RawEntry& e) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(e.value);
  while (std::getline(in, item, ',')) {
    std::string v = trim(item);
    if (v.empty()) fail_line(e.line, "key '" + e.key + "': empty list item");
    parts.push_back(std::move(v));
  }
  if (parts.empty()) fail_line(e.line, "key '" + e.key + "': empty list");
  return parts;
}

std::vector<int> to_int_list(const RawEntry& e) {
  std::vector<int> out;
  for (const auto& p : split_list(e)) {
    RawEntry item{e.section, e.key, p, e.line};
    out.push_back(to_int(item));
  }
  return out;
}

std::vector<double> to_double_list(const RawEntry& e) {
  std::vector<double> out;
  for (const auto& p : split_list(e)) {
    RawEntry item{e.section, e.key, p, e.line};
    out.push_back(to_double(item));
  }
  return out;
}

Expression to_expression(const RawEntry& e, int dim) {
  try {
    return parse_expression(e.value, dim);
  } catch (const config_error& err) {
    fail_line(e.line, "key '" + e.key + "': " + err.what());
  }
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// parse_config
// ---------------------------------------------------------------------------

RunConfig parse_config(const std::string& text) {
  std::vector<RawEntry> entries = scan(text);
  RunConfig cfg;

  bool saw_steps = false;
  const RawEntry* dt_entry = nullptr;
  bool saw_p_minus = false, saw_p_plus = false, saw_p = false, saw_q = false;
  bool saw_weight_sup = false;

  // Pass 1: scalars (so dim and horizon are final before expressions parse).
  for (const RawEntry& e : entries) {
    const std::string id = e.section + "." + e.key;
    if (id == "problem.dim") {
      cfg.dim = to_int(e);
      if (cfg.dim != 1 && cfg.dim != 2) fail_line(e.line, "key 'dim': must be 1 or 2");
    } else if (id == "problem.x1_lo") cfg.x1_lo = to_double(e);
    else if (id == "problem.x1_hi") cfg.x1_hi = to_double(e);
    else if (id == "problem.x2_lo") cfg.x2_lo = to_double(e);
    else if (id == "problem.x2_hi") cfg.x2_hi = to_double(e);
    else if (id == "problem.nodes1") cfg.nodes1 = to_int(e);
    else if (id == "problem.nodes2") cfg.nodes2 = to_int(e);
    else if (id == "problem.horizon") cfg.horizon = to_double(e);
    else if (id == "problem.steps") { cfg.steps = to_int(e); saw_steps = true; }
    else if (id == "problem.dt") dt_entry = &e;
    else if (id == "operator.family") {
      cfg.family = e.value;
      if (cfg.family != "variable_exponent" && cfg.family != "double_phase" &&
          cfg.family != "antimonotone") {
        fail_line(e.line, "key 'family': unknown operator family '" + e.value + "'");
      }
    } else if (id == "operator.p_minus") { cfg.p_minus = to_double(e); saw_p_minus = true; }
    else if (id == "operator.p_plus") { cfg.p_plus = to_double(e); saw_p_plus = true; }
    else if (id == "operator.p") { cfg.p = to_double(e); saw_p = true; }
    else if (id == "operator.q") { cfg.q = to_double(e); saw_q = true; }
    else if (id == "operator.weight_sup") { cfg.weight_sup = to_double(e); saw_weight_sup = true; }
    else if (id == "operator.delta_reg") cfg.delta_reg = to_double(e);
    else if (id == "solver.newton_tol") cfg.solver.newton_tol = to_double(e);
    else if (id == "solver.max_newton") cfg.solver.max_newton = to_int(e);
    else if (id == "solver.max_line_search") cfg.solver.max_line_search = to_int(e);
    else if (id == "solver.picard_fallback") cfg.solver.picard_fallback = to_bool(e);
    else if (id == "solver.picard_fallback_after") cfg.solver.picard_fallback_after = to_int(e);
    else if (id == "solver.max_picard") cfg.solver.max_picard = to_int(e);
    else if (id == "solver.theta0") cfg.solver.theta0 = to_double(e);
    else if (id == "solver.theta_min") cfg.solver.theta_min = to_double(e);
    else if (id == "solver.theta_ratio") cfg.solver.theta_ratio = to_double(e);
    else if (id == "solver.init") {
      if (e.value == "previous_level") cfg.solver.init = SolverConfig::Init::PreviousLevel;
      else if (e.value == "zero") cfg.solver.init = SolverConfig::Init::Zero;
      else fail_line(e.line, "key 'init': expected previous_level or zero, got '" + e.value + "'");
    } else if (id == "verify.j_list") cfg.j_list = to_int_list(e);
    else if (id == "verify.eps_list") cfg.eps_list = to_double_list(e);
    else if (id == "verify.k_list") cfg.k_list = to_double_list(e);
    else if (id == "verify.node_counts") cfg.node_counts = to_int_list(e);
    else if (id == "verify.step_counts") cfg.step_counts = to_int_list(e);
    else if (id == "verify.diagnostics") {
      cfg.diagnostics = split_list(e);
      for (const auto& d : cfg.diagnostics) {
        if (d != "global_energy" && d != "local_energy" && d != "approximation") {
          fail_line(e.line, "key 'diagnostics': unknown diagnostic '" + d + "'");
        }
      }
    } else if (id == "verify.seed") {
      long long s = to_ll(e);
      if (s < 0) fail_line(e.line, "key 'seed': must be nonnegative");
      cfg.seed = static_cast<unsigned long>(s);
    } else if (id == "output.dir") cfg.out_dir = e.value;
    else if (id == "output.csv") cfg.write_csv = to_bool(e);
    else if (id == "output.json") cfg.write_json = to_bool(e);
    // Expression-valued keys are handled in pass 2.
  }

  if (cfg.horizon <= 0.0) throw config_error("horizon must be positive");
  if (dt_entry) {
    if (saw_steps) fail_line(dt_entry->line, "give either 'steps' or 'dt', not both");
    double dt = to_double(*dt_entry);
    if (dt <= 0.0) fail_line(dt_entry->line, "key 'dt': must be positive");
    double ratio = cfg.horizon / dt;
    double rounded = std::round(ratio);
    if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * rounded) {
      fail_line(dt_entry->line, "key 'dt': must divide the horizon evenly");
    }
    cfg.steps = static_cast<int>(rounded);
  }

  // Pass 2: expressions, now that dim is final.
  for (const RawEntry& e : entries) {
    const std::string id = e.section + "." + e.key;
    if (id == "operator.exponent") cfg.exponent = to_expression(e, cfg.dim);
    else if (id == "operator.weight") cfg.weight = to_expression(e, cfg.dim);
    else if (id == "source.f") cfg.source = to_expression(e, cfg.dim);
    else if (id == "initial.u0") cfg.initial = to_expression(e, cfg.dim);
    else if (id == "verify.exact") cfg.exact = to_expression(e, cfg.dim);
  }

  // Structural validation.
  if (cfg.nodes1 < 2) throw config_error("nodes1 must be at least 2");
  if (cfg.dim == 2 && cfg.nodes2 < 2) throw config_error("nodes2 must be at least 2");
  if (cfg.x1_hi <= cfg.x1_lo) throw config_error("x1_hi must exceed x1_lo");
  if (cfg.dim == 2 && cfg.x2_hi <= cfg.x2_lo) throw config_error("x2_hi must exceed x2_lo");
  if (cfg.steps < 1) throw config_error("steps must be at least 1");

  if (cfg.family == "variable_exponent") {
    if (cfg.exponent.empty())
      throw config_error("operator family 'variable_exponent' requires key 'exponent' in [operator]");
    if (!saw_p_minus || !saw_p_plus)
      throw config_error("operator family 'variable_exponent' requires keys 'p_minus' and 'p_plus' in [operator]");
    if (saw_p || saw_q || !cfg.weight.empty() || saw_weight_sup)
      throw config_error("keys 'p', 'q', 'weight', 'weight_sup' do not apply to family 'variable_exponent'");
  } else if (cfg.family == "double_phase") {
    if (!saw_p || !saw_q || cfg.weight.empty() || !saw_weight_sup)
      throw config_error("operator family 'double_phase' requires keys 'p', 'q', 'weight', 'weight_sup' in [operator]");
    if (!cfg.exponent.empty() || saw_p_minus || saw_p_plus)
      throw config_error("keys 'exponent', 'p_minus', 'p_plus' do not apply to family 'double_phase'");
  } else {  // antimonotone
    if (!cfg.exponent.empty() || !cfg.weight.empty() || saw_p || saw_q ||
        saw_p_minus || saw_p_plus || saw_weight_sup)
      throw config_error("operator family 'antimonotone' takes no parameters");
  }

  for (double b : collected_breakpoints(cfg)) {
    if (!(b > 0.0 && b < cfg.horizon)) {
      throw config_error("breakpoint " + format_double(b) + " outside (0, " +
                         format_double(cfg.horizon) + ")");
    }
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// print_config / equality
// ---------------------------------------------------------------------------

namespace {

void emit(std::string& out, const std::string& key, const std::string& value) {
  out += key;
  out += " = ";
  out += value;
  out += '\n';
}

void emit(std::string& out, const std::string& key, double v) {
  emit(out, key, format_double(v));
}

void emit(std::string& out, const std::string& key, int v) {
  emit(out, key, std::to_string(v));
}

void emit_bool(std::string& out, const std::string& key, bool v) {
  emit(out, key, std::string(v ? "true" : "false"));
}

template <class T, class Fmt>
void emit_list(std::string& out, const std::string& key, const std::vector<T>& v, Fmt fmt) {
  std::string joined;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) joined += ", ";
    joined += fmt(v[i]);
  }
  emit(out, key, joined);
}

}  // namespace

std::string print_config(const RunConfig& cfg) {
  std::string out;
  out += "[problem]\n";
  emit(out, "dim", cfg.dim);
  emit(out, "x1_lo", cfg.x1_lo);
  emit(out, "x1_hi", cfg.x1_hi);
  emit(out, "nodes1", cfg.nodes1);
  if (cfg.dim == 2) {
    emit(out, "x2_lo", cfg.x2_lo);
    emit(out, "x2_hi", cfg.x2_hi);
    emit(out, "nodes2", cfg.nodes2);
  }
  emit(out, "horizon", cfg.horizon);
  emit(out, "steps", cfg.steps);

  out += "\n[operator]\n";
  emit(out, "family", cfg.family);
  if (cfg.family == "variable_exponent") {
    emit(out, "exponent", cfg.exponent.text());
    emit(out, "p_minus", cfg.p_minus);
    emit(out, "p_plus", cfg.p_plus);
    emit(out, "delta_reg", cfg.delta_reg);
  } else if (cfg.family == "double_phase") {
    emit(out, "p", cfg.p);
    emit(out, "q", cfg.q);
    emit(out, "weight", cfg.weight.text());
    emit(out, "weight_sup", cfg.weight_sup);
    emit(out, "delta_reg", cfg.delta_reg);
  }

  if (!cfg.source.empty()) {
    out += "\n[source]\n";
    emit(out, "f", cfg.source.text());
  }
  if (!cfg.initial.empty()) {
    out += "\n[initial]\n";
    emit(out, "u0", cfg.initial.text());
  }

  out += "\n[solver]\n";
  emit(out, "newton_tol", cfg.solver.newton_tol);
  emit(out, "max_newton", cfg.solver.max_newton);
  emit(out, "max_line_search", cfg.solver.max_line_search);
  emit_bool(out, "picard_fallback", cfg.solver.picard_fallback);
  emit(out, "picard_fallback_after", cfg.solver.picard_fallback_after);
  emit(out, "max_picard", cfg.solver.max_picard);
  emit(out, "theta0", cfg.solver.theta0);
  emit(out, "theta_min", cfg.solver.theta_min);
  emit(out, "theta_ratio", cfg.solver.theta_ratio);
  emit(out, "init", std::string(cfg.solver.init == SolverConfig::Init::PreviousLevel
                                    ? "previous_level"
                                    : "zero"));

  out += "\n[verify]\n";
  emit_list(out, "j_list", cfg.j_list, [](int v) { return std::to_string(v); });
  emit_list(out, "eps_list", cfg.eps_list, format_double);
  emit_list(out, "k_list", cfg.k_list, format_double);
  emit_list(out, "node_counts", cfg.node_counts, [](int v) { return std::to_string(v); });
  emit_list(out, "step_counts", cfg.step_counts, [](int v) { return std::to_string(v); });
  emit_list(out, "diagnostics", cfg.diagnostics, [](const std::string& s) { return s; });
  if (!cfg.exact.empty()) emit(out, "exact", cfg.exact.text());
  emit(out, "seed", std::to_string(cfg.seed));

  out += "\n[output]\n";
  emit(out, "dir", cfg.out_dir);
  emit_bool(out, "csv", cfg.write_csv);
  emit_bool(out, "json", cfg.write_json);
  return out;
}

bool operator==(const RunConfig& a, const RunConfig& b) {
  return print_config(a) == print_config(b);
}

// ---------------------------------------------------------------------------
// Library-object builders
// ---------------------------------------------------------------------------

std::vector<double> collected_breakpoints(const RunConfig& cfg) {
  std::vector<double> bps;
  for (const Expression* e : {&cfg.exponent, &cfg.weight, &cfg.source, &cfg.initial}) {
    if (e->empty()) continue;
    bps.insert(bps.end(), e->time_breakpoints().begin(), e->time_breakpoints().end());
  }
  std::sort(bps.begin(), bps.end());
  bps.erase(std::unique(bps.begin(), bps.end()), bps.end());
  return bps;
}

MonotoneOperator make_operator(const RunConfig& cfg) {
  if (cfg.family == "variable_exponent") {
    if (cfg.exponent.empty()) {
      throw config_error("operator family 'variable_exponent' requires an exponent");
    }
    VariableExponentOptions opt;
    opt.p_minus = cfg.p_minus;
    opt.p_plus = cfg.p_plus;
    opt.dim = cfg.dim;
    opt.breakpoints = cfg.exponent.time_breakpoints();
    return op_variable_exponent(cfg.exponent.map(), opt, cfg.delta_reg);
  }
  if (cfg.family == "double_phase") {
    if (cfg.weight.empty()) {
      throw config_error("operator family 'double_phase' requires a weight");
    }
    return op_double_phase(cfg.p, cfg.q, cfg.weight.map(), cfg.weight_sup, cfg.dim,
                           cfg.weight.time_breakpoints(), cfg.delta_reg);
  }
  if (cfg.family == "antimonotone") return op_antimonotone(cfg.dim);
  throw config_error("unknown operator family '" + cfg.family + "'");
}

ProblemSpec make_problem_resized(const RunConfig& cfg, int nodes1, int steps) {
  if (cfg.initial.empty()) {
    throw config_error("section [initial] with key 'u0' is required to solve");
  }
  std::vector<Axis> axes;
  axes.push_back({nodes1, cfg.x1_lo, cfg.x1_hi});
  if (cfg.dim == 2) axes.push_back({nodes1 == cfg.nodes1 ? cfg.nodes2 : nodes1,
                                    cfg.x2_lo, cfg.x2_hi});
  ProblemSpec spec;
  spec.grid = SpaceTimeGrid::create(std::move(axes), cfg.horizon, steps,
                                    collected_breakpoints(cfg));
  spec.op = make_operator(cfg);
  if (!cfg.source.empty()) spec.source = cfg.source.map();
  Expression init = cfg.initial;
  spec.initial = [init](const VecD& x) { return init(0.0, x); };
  return spec;
}

ProblemSpec make_problem(const RunConfig& cfg) {
  return make_problem_resized(cfg, cfg.nodes1, cfg.steps);
}

}  // namespace morpde
