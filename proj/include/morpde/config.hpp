#pragma once

#include <morpde/expression.hpp>
#include <morpde/operators.hpp>
#include <morpde/solver.hpp>

#include <string>
#include <vector>

namespace morpde {

/// Complete description of one run, parsed from an INI-style text:
///
///   [problem]   dim, x1_lo, x1_hi, x2_lo, x2_hi, nodes1, nodes2, horizon,
///               steps (or dt, which must divide the horizon evenly)
///   [operator]  family = variable_exponent | double_phase | antimonotone,
///               exponent, p_minus, p_plus        (variable_exponent)
///               p, q, weight, weight_sup          (double_phase)
///               delta_reg                        (any family)
///   [source]    f  = expression of (t, x1[, x2])          (optional)
///   [initial]   u0 = expression of (x1[, x2]); t is evaluated as 0
///   [solver]    newton_tol, max_newton, max_line_search, picard_fallback,
///               picard_fallback_after, max_picard, theta0, theta_min,
///               theta_ratio, init = previous_level | zero
///   [verify]    j_list, eps_list, k_list, node_counts, step_counts,
///               diagnostics, exact, seed
///   [output]    dir, csv, json
///
/// Lines are `key = value`; `#` starts a full-line comment; sections may
/// appear in any order, each at most once. Every key is optional unless the
/// chosen operator family requires it. Unknown sections, unknown keys,
/// duplicates, and type mismatches raise config_error naming the line.
struct RunConfig {
  // [problem]
  int dim = 1;
  double x1_lo = 0.0, x1_hi = 1.0;
  double x2_lo = 0.0, x2_hi = 1.0;
  int nodes1 = 65, nodes2 = 65;
  double horizon = 1.0;
  int steps = 16;

  // [operator]
  std::string family = "variable_exponent";
  Expression exponent;  // variable_exponent only
  double p_minus = 0.0, p_plus = 0.0;
  double p = 0.0, q = 0.0;  // double_phase only
  Expression weight;
  double weight_sup = 0.0;
  double delta_reg = 1e-8;

  // [source] / [initial]
  Expression source;   // empty means f = 0
  Expression initial;  // required by subcommands that solve

  // [solver]
  SolverConfig solver;

  // [verify]
  std::vector<int> j_list = {4, 8, 16, 32};
  std::vector<double> eps_list = {0.125, 0.0625, 0.03125};
  std::vector<double> k_list = {2.0};
  std::vector<int> node_counts = {33, 65, 129};
  std::vector<int> step_counts = {64, 128, 256};
  std::vector<std::string> diagnostics = {"global_energy", "local_energy",
                                          "approximation"};
  Expression exact;  // reference solution; required by convergence-study
  unsigned long seed = 42;

  // [output]
  std::string out_dir = "out";
  bool write_csv = true;
  bool write_json = true;
};

/// Parses a configuration text. Collects the union of time breakpoints from
/// the problem-defining expressions (operator exponent and weight, source,
/// initial) and validates each lies strictly inside (0, horizon).
RunConfig parse_config(const std::string& text);

/// Canonical rendering: fixed section and key order, canonical expression
/// text, 17-digit numerals, family-specific keys only. parse_config of the
/// result reproduces an equal RunConfig.
std::string print_config(const RunConfig& cfg);

/// Equality of canonical forms.
bool operator==(const RunConfig& a, const RunConfig& b);
inline bool operator!=(const RunConfig& a, const RunConfig& b) { return !(a == b); }

/// Union of time breakpoints registered by the config's expressions,
/// sorted, deduplicated, each strictly inside (0, horizon).
std::vector<double> collected_breakpoints(const RunConfig& cfg);

/// Builds the flux operator the config describes (validates family fields).
MonotoneOperator make_operator(const RunConfig& cfg);

/// Builds the full problem: grid (with expression breakpoints as mandatory
/// time nodes), operator, source, and initial data. Requires `initial`.
ProblemSpec make_problem(const RunConfig& cfg);

/// Same problem on a different resolution; used by convergence studies.
ProblemSpec make_problem_resized(const RunConfig& cfg, int nodes1, int steps);

}  // namespace morpde
