#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "morpde/common.hpp"
#include "morpde/young.hpp"

namespace morpde {

/// Scalar coefficient field on the space-time cylinder.
using ScalarMap = std::function<double(double t, const VecD& x)>;

/// A generalized N-function M(t, x, xi): even and convex in xi, vanishing only
/// at xi = 0, sandwiched between two Young functions of |xi| uniformly in
/// (t, x). Measurability in t is not assumed: jumps across declared time
/// breakpoints are allowed and tracked by the grid.
struct NFunction {
  std::string name;
  int dim = 1;
  bool isotropic = true;
  std::function<double(double t, const VecD& x, const VecD& xi)> eval;

  /// Radial profile r -> M(t, x, r e) for isotropic families (any unit e),
  /// with optional derivative in r; used by the fast conjugate path.
  std::function<double(double t, const VecD& x, double r)> radial;
  std::function<double(double t, const VecD& x, double r)> radial_derivative;

  YoungFunction lower_bound;  // m1(|xi|) <= M
  YoungFunction upper_bound;  // M <= m2(|xi|)

  /// Young function dominating M (M(t,x,xi) <= dominating(|xi|)), certified at
  /// construction; drives the regularization term of the solver.
  YoungFunction dominating;

  /// Time discontinuity locations the grid must honor.
  std::vector<double> breakpoints;

  std::map<std::string, double> params;

  double operator()(double t, const VecD& x, const VecD& xi) const { return eval(t, x, xi); }
};

/// M(t,x,xi) = |xi|^{p(t,x)} with 1 < p_minus <= p(t,x) <= p_plus < inf.
/// Bounds: lower = common-tangent envelope of min(s^{p-}, s^{p+}),
/// upper = max(s^{p-}, s^{p+}). The dominating function starts from
/// s^{p+}/p+ + s^{min(2, p-)} and is rescaled by the certified power of two.
struct VariableExponentOptions {
  double p_minus;
  double p_plus;
  int dim = 1;
  std::vector<double> breakpoints = {};
};
NFunction nfunction_variable_exponent(ScalarMap exponent, const VariableExponentOptions& opt);

/// M(t,x,xi) = |xi|^p + a(t,x) |xi|^q with 0 <= a <= weight_sup, q >= p > 1.
NFunction nfunction_double_phase(double p, double q, ScalarMap weight, double weight_sup,
                                 int dim = 1, std::vector<double> breakpoints = {});

/// M*(t,x,eta) = sup_xi (xi . eta - M(t,x,xi)).
///
/// Isotropic families reduce to a one-dimensional conjugate at |eta| through
/// the radial profile. Anisotropic families run multi-start coordinate ascent
/// (8*dim seeded restarts over a box scaled by the radial maximizer); the
/// result is the best certified value, always a valid lower bound for the
/// supremum, and ascent_error (carrying that bound) is raised when the sweep
/// improvement fails to contract.
double conjugate_nfunction(const NFunction& M, double t, const VecD& x, const VecD& eta,
                           unsigned long seed = 42);

/// Sampling plan for N-function property checks.
struct NFunctionSampleSpec {
  double t_lo = 0.0, t_hi = 1.0;
  VecD x_lo = vec1(0.0), x_hi = vec1(1.0);
  int t_count = 5;
  int x_count = 8;        // per axis
  int dir_count = 8;      // xi directions
  int radius_count = 12;  // log-spaced radii in [r_min, r_max]
  double r_min = 1e-3, r_max = 1e3;
  int random_pairs = 200;  // convexity probes
  double tol = 1e-9;
  unsigned long seed = 42;
};

/// Checks symmetry M(xi) = M(-xi), segment convexity in xi, the Young
/// sandwich, and a uniform superlinearity proxy.
YoungPropertyReport check_nfunction_properties(const NFunction& M, const NFunctionSampleSpec& spec);

/// Plan for the cube-infimum ratio diagnostic: for tiles Q of edge delta,
/// M_Q(t, r) = min over sampled x in (5Q) ∩ Omega of M(t, x, r e), its grid
/// biconjugate M_Q** (lower convex hull on the radial grid), and the ratio
/// M(t, x, xi) / M_Q**(t, |xi|) maximized over x in Q and |xi| <= radius_scale/delta.
struct ThetaConditionSpec {
  std::vector<double> deltas = {0.25, 0.125, 0.0625};  // first entry: default delta0 = 1/4
  double radius_scale = 1.0;                           // default xi0 = 1
  int samples_per_edge = 16;
  int radial_count = 48;
  std::vector<double> t_samples = {0.0};
};

struct ThetaConditionReport {
  struct PerDelta {
    double delta = 0.0;
    double max_ratio = 0.0;
    double argmax_t = 0.0;
    double argmax_radius = 0.0;
    VecD argmax_x;
  };
  std::vector<PerDelta> per_delta;
  /// Heuristic boundedness flag: the ratio curve does not blow up along the
  /// delta list (last <= 1.5 * max(first, 1)).
  bool bounded = false;
};

/// Runs the cube-infimum ratio diagnostic over an axis-aligned box domain.
/// Requires an isotropic family; a vanishing infimum envelope at positive
/// radius raises invariant_error naming the cube.
ThetaConditionReport check_theta_condition(const NFunction& M, const VecD& box_lo,
                                           const VecD& box_hi, const ThetaConditionSpec& spec);

}  // namespace morpde
