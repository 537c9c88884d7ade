#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "morpde/grid.hpp"
#include "morpde/nfunction.hpp"

namespace morpde {

/// Flux law A(t, x, xi) governed by an N-function: the data of the
/// coercivity/growth inequality M(xi) + M*(A) <= c A.xi + h together with the
/// maps needed by the implicit solver (Jacobian, Picard coefficient).
struct MonotoneOperator {
  std::string name;
  NFunction governing;
  double coercivity_c = 1.0;
  ScalarMap bound_h;  // (t, x) -> nonnegative, bounded
  std::function<VecD(double, const VecD&, const VecD&)> eval;
  std::function<MatD(double, const VecD&, const VecD&)> jacobian;
  /// Radial factor a with A(t,x,xi) = a(t,x,|xi|) xi, used by the Picard
  /// fallback; smoothed near 0 where the exact factor is singular.
  std::function<double(double, const VecD&, double)> radial_coefficient;
  std::vector<double> breakpoints;
};

/// Variable-exponent flux |xi|^{p(t,x)-2} xi. Exponents below 2 use the
/// delta-smoothed magnitude sqrt(|xi|^2 + delta^2) so the flux and Jacobian
/// stay finite at xi = 0; exponents >= 2 are exact (flux 0 at 0).
MonotoneOperator op_variable_exponent(ScalarMap p, VariableExponentOptions opt,
                                      double delta_reg = 1e-8);

/// Double-phase flux |xi|^{p-2} xi + weight(t,x) |xi|^{q-2} xi.
MonotoneOperator op_double_phase(double p, double q, ScalarMap weight,
                                 double weight_sup, int dim = 1,
                                 std::vector<double> breakpoints = {},
                                 double delta_reg = 1e-8);

/// Deliberately broken flux A = -xi: violates monotonicity and the
/// coercivity inequality; exists to prove the checkers can fail.
MonotoneOperator op_antimonotone(int dim = 1);

/// Base flux plus theta * grad m(|xi|) for a Young function m dominating the
/// governing N-function. theta = 0 is allowed only as a diagnostic identity
/// (the regularized solve requires theta > 0).
struct RegularizedOperator {
  MonotoneOperator base;
  double theta = 1e-2;
  YoungFunction m;

  VecD eval(double t, const VecD& x, const VecD& xi) const;
  MatD jacobian(double t, const VecD& x, const VecD& xi) const;
  double radial_coefficient(double t, const VecD& x, double r) const;
};

/// Builds the regularization with m = the family's certified dominating
/// Young function. Requires theta in [0, 1].
RegularizedOperator regularize(const MonotoneOperator& A, double theta);

struct OperatorSampleSpec {
  double t_lo = 0.0, t_hi = 1.0;
  VecD x_lo = vec1(0.0), x_hi = vec1(1.0);
  int point_samples = 100000;  // coercivity/growth and zero-at-zero sweeps
  int pair_samples = 100000;   // monotonicity pairs
  double xi_amplitude = 10.0;
  std::vector<double> ball_radii = {1.0, 10.0, 100.0};
  double tol_coercivity = 1e-10;  // relative slack floor
  double tol_monotone = 1e-12;    // absolute pairing floor
  std::uint64_t seed = 42;
};

struct BallBound {
  double radius;
  double max_flux_norm;
};

/// Sampled verdicts on the structural assumptions: the coercivity/growth
/// inequality (via the numerically conjugated N-function), monotone pairings
/// on random pairs, vanishing at xi = 0, and flux bounds on centered balls.
struct AssumptionReport {
  PropertyCheck coercivity_growth;  // worst = most negative slack
  PropertyCheck monotonicity;       // worst = most negative pairing
  PropertyCheck zero_at_zero;       // worst = largest |A(t,x,0)|
  std::vector<BallBound> ball_bounds;
  bool all_pass() const {
    return coercivity_growth.pass && monotonicity.pass && zero_at_zero.pass;
  }
};

AssumptionReport check_assumptions(const MonotoneOperator& A,
                                   const OperatorSampleSpec& spec);

/// Monotonicity/zero/ball checks only, for an arbitrary flux map (used to
/// confirm the regularized operator inherits monotonicity).
AssumptionReport check_monotonicity(
    const std::function<VecD(double, const VecD&, const VecD&)>& flux, int dim,
    const OperatorSampleSpec& spec);

struct ProbeEntry {
  std::string name;  // "<eta>/<cutoff>"
  double value;
};

/// Result of testing whether a field alpha can be identified with
/// A(t, x, xi): the dictionary pairing integrals (all nonnegative when alpha
/// is consistent), their minimum, and the direct pointwise residual.
struct IdentificationProbeReport {
  double min_pairing = 0.0;
  std::string argmin;
  double residual_max = 0.0;
  double residual_l2 = 0.0;
  std::vector<ProbeEntry> pairings;
};

/// Evaluates integral of (alpha - A(t,x,eta)) . (xi - eta) psi over the
/// cylinder for a dictionary of bounded fields eta (constants, scalings of
/// xi, seeded smooth fields, and a sign-targeted perturbation of xi) and
/// polynomial cutoffs psi. alpha and xi must share shape; extra smooth
/// dictionary entries are controlled by eta_samples, cutoffs by psi_samples.
IdentificationProbeReport monotonicity_identification_probe(
    const DiscreteField& alpha, const DiscreteField& xi,
    const MonotoneOperator& A, int eta_samples = 4, int psi_samples = 2);

}  // namespace morpde
