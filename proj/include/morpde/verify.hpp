#pragma once

#include <functional>
#include <string>
#include <vector>

#include "morpde/solver.hpp"

namespace morpde {

/// Truncation at height k: clamp(s, -k, k).
double truncate_scalar(double s, double k);

/// Primitive of the truncation, G_k(s) = integral of T_k from 0 to s:
/// s^2/2 for |s| <= k and k|s| - k^2/2 beyond.
double truncation_primitive(double s, double k);

/// Pointwise truncation of a scalar field. Requires k > 0 and arity 1.
DiscreteField truncate(const DiscreteField& f, double k);

/// Smooth spatial cutoff with an analytically known gradient.
struct Cutoff {
  std::string name;
  std::function<double(const VecD&)> value;
  std::function<VecD(const VecD&)> gradient;
  double grad_bound = 0.0;  // sup 1-norm bound used by the decay estimates
};

/// psi identically 1 with zero gradient (turns localized reports global).
Cutoff unit_cutoff(int dim);

/// Member j of the boundary cutoff family: a quintic polynomial ramp of
/// dist(x, boundary) that vanishes within distance 1/(2j) of the boundary and
/// equals 1 beyond distance 1/j; |grad| <= 3.75 j. Throws config_error when
/// the ramp is narrower than the largest mesh width.
Cutoff boundary_cutoff(const SpaceTimeGrid& g, int j);

/// Cutoff supported on the middle half of the box (in each axis' relative
/// coordinate: 0 outside [1/4, 3/4], 1 on [3/8, 5/8], quintic ramps between).
Cutoff interior_plateau_cutoff(const SpaceTimeGrid& g);

/// How a level field is read outside [0, T] when mollifying in time: the
/// solution keeps its initial level before t = 0 and vanishes after T; flux
/// and source data vanish on both sides.
enum class TimeExtension { InitialThenZero, ZeroBothSides };

/// Discrete spatial convolution of a node-staggered scalar field with the
/// normalized bump kernel exp(-1/(1 - r^2)) dilated to radius eps. Output is
/// zero at nodes closer than eps to the boundary (the restricted domain);
/// elsewhere the stencil never leaves the grid. Requires eps >= 2 mesh widths
/// (else config_error: under-resolved).
DiscreteField mollify_space(const DiscreteField& f, double eps);

/// Discrete time convolution: for each level, a q-point midpoint rule over
/// (t - eps, t + eps) of the linear-in-time interpolant, extended per `ext`.
/// Kernel weights are the same normalized bump.
DiscreteField mollify_time(const DiscreteField& f, double eps, TimeExtension ext,
                           int q = 16);

/// Modular-approximation diagnostic: distance between the discrete gradient
/// of the twice-smoothed truncated localization (T_k(u^eps) psi)^eps and the
/// gradient of T_k(u) psi, at scales lambda = 1 and 1/2, over a decreasing
/// eps list.
struct DiagnosticCurve {
  std::vector<double> eps;
  std::vector<double> distance_full;  // lambda = 1
  std::vector<double> distance_half;  // lambda = 1/2
  bool trend_ok = false;              // final <= first on both curves
};
DiagnosticCurve approximation_diagnostic(const Solution& sol, const NFunction& M,
                                         double k, const Cutoff& psi,
                                         const std::vector<double>& eps_list);

/// One time node of an energy report: both sides of the identity and their
/// gap. Time sums follow the scheme: interval m contributes dt_m times the
/// level m+1 state paired with the interval's stored flux and the midpoint
/// source sample.
struct EnergyReport {
  double t = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;  // lhs - rhs
};

struct EnergySeries {
  std::vector<EnergyReport> nodes;   // one entry per time node (node 0 is trivial)
  std::string relation;              // "equality expected" or "inequality expected"
  double scale = 0.0;                // data scale the tolerances are relative to
  double max_abs_residual = 0.0;
  bool direction_ok = false;         // lhs - rhs <= 1e-8 * scale at all nodes
};

/// Global energy report: lhs = 1/2 integral of u(t)^2 - u0^2, rhs = minus the
/// flux dissipation plus the source work, accumulated over m < n. `isotropic`
/// selects the expected relation label.
EnergySeries global_energy_series(const Solution& sol, const ScalarMap& f,
                                  bool isotropic);

/// Localized, truncated energy report: lhs = integral of psi (G_k(u(t)) -
/// G_k(u0)), rhs pairs the stored flux with grad_h(T_k(u) psi) and the source
/// with T_k(u) psi. Consistent with the global report when psi = 1 and k
/// exceeds the solution's range.
EnergySeries local_energy_series(const Solution& sol, const ScalarMap& f,
                                 const Cutoff& psi, double k);

/// Boundary modular decay: modular of grad(psi_j) u / C_u over the cylinder
/// for each j, with C_u = c_scale * luxemburg_norm(M, grad_h u).
struct DecayCurve {
  std::vector<int> j;
  std::vector<double> value;
  double c_u = 0.0;
  bool decreasing = false;
  double last_over_first = 0.0;
};
DecayCurve boundary_modular_decay(const Solution& sol, const NFunction& M,
                                  const std::vector<int>& j_list,
                                  double c_scale = 1.0);

/// Two solves of the same problem from different Newton starts and cascade
/// origins (theta0 and theta0/10), compared in L2(L2) and sup norm, plus the
/// monotone pairing of the pair.
struct UniquenessReport {
  double l2l2_diff = 0.0;
  double sup_diff = 0.0;
  double monotone_pairing = 0.0;
};
UniquenessReport uniqueness_probe(const ProblemSpec& spec, const SolverConfig& cfg);

/// Convergence-order study against a known exact solution: sup-norm errors at
/// the final time over a node list (at the finest step count) and a step list
/// (at the finest node count). Orders are measured on consecutive error
/// differences, which cancels the error floor shared by all runs (the fixed
/// counterpart resolution and the theta_min bias).
struct OrderStudy {
  std::vector<int> node_counts;
  std::vector<double> h_errors;
  std::vector<int> step_counts;
  std::vector<double> dt_errors;
  double spatial_order = 0.0;
  double temporal_order = 0.0;
};
OrderStudy convergence_study(
    const std::function<ProblemSpec(int nodes, int steps)>& make_problem,
    const SolverConfig& cfg,
    const std::function<double(double, const VecD&)>& exact,
    const std::vector<int>& node_counts, const std::vector<int>& step_counts);

}  // namespace morpde
