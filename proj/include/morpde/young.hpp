#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "morpde/common.hpp"

namespace morpde {

/// A Young function m: [0,inf) -> [0,inf): convex, m(0) = 0, positive away
/// from zero, superlinear at infinity and sublinear at zero (m(s)/s monotone).
/// Derivatives are optional; numeric routines fall back to finite differences
/// or derivative-free searches when they are absent.
struct YoungFunction {
  std::string name;
  std::function<double(double)> eval;
  std::function<double(double)> derivative;         // m'(s), optional
  std::function<double(double)> second_derivative;  // m''(s), optional
  std::map<std::string, double> params;

  double operator()(double s) const { return eval(s); }
  bool has_derivative() const { return static_cast<bool>(derivative); }
};

/// m(s) = s^p / p (p > 1).
YoungFunction young_power(double p);

/// m(s) = a * s^p + b * s^q (a, b >= 0, p, q > 1).
YoungFunction young_power_sum(double a, double p, double b, double q);

/// m(s) = c * s^p (c > 0, p > 1).
YoungFunction young_power_scaled(double c, double p);

/// rho * m, for rescaling a certified dominating function.
YoungFunction young_scale(const YoungFunction& m, double rho);

/// m(s) = s. Not superlinear: a deliberate anti-example whose conjugate is
/// infinite beyond slope 1 and whose property report fails superlinearity.
YoungFunction young_linear();

/// Result of a conjugate evaluation: the value m*(s) and the argmax t* of
/// t -> s*t - m(t), which by convex duality is the derivative (m*)'(s).
struct ConjugateResult {
  double value = 0.0;
  double argmax = 0.0;
};

/// Convex conjugate m*(s) = sup_{t>=0} (s*t - m(t)).
///
/// When m has a derivative the supremum is located by monotone bisection on
/// m'(t) = s (residual tolerance 1e-12, bracket grown by doubling); otherwise
/// by golden-section search on a bracket grown by doubling until the objective
/// decreases. Bracket expansion past the overflow guard raises growth_error.
ConjugateResult conjugate_detail(const YoungFunction& m, double s);
double conjugate(const YoungFunction& m, double s);

/// The conjugate as a YoungFunction. Its derivative is the argmax map
/// t*(s), which equals (m*)'(s) wherever m is strictly convex.
YoungFunction conjugate_function(const YoungFunction& m);

/// Biconjugate m**(s): conjugate applied twice. Fixed point (= m) whenever m
/// is convex and finite.
double biconjugate(const YoungFunction& m, double s);

/// grad_xi m(|xi|) = m'(|xi|) * xi / |xi|, with value 0 at xi = 0.
/// Uses a central finite difference when m has no stored derivative.
VecD gradient(const YoungFunction& m, const VecD& xi);

/// Radial second-derivative data for flux Jacobians:
/// D grad m (xi) = a(r) I + b(r) xi xi^T / r^2 with a = m'(r)/r, b = m''(r) - m'(r)/r.
/// The radius is floored at delta to keep the matrix finite at xi = 0.
MatD gradient_jacobian(const YoungFunction& m, const VecD& xi, double delta);

/// Sampling plan for the scalar property checks.
struct SampleSpec {
  double s_min = 1e-3;
  double s_max = 1e3;
  int count = 64;            // log-spaced samples in [s_min, s_max]
  int random_pairs = 200;    // extra midpoint-convexity probes
  double tol = 1e-9;         // absolute slack scaled by local magnitude
  unsigned long seed = 42;
};

struct PropertyCheck {
  std::string property;
  bool pass = false;
  double worst = 0.0;  // most violating margin observed (<= 0 means clean)
  double tol = 0.0;
};

struct YoungPropertyReport {
  std::string name;
  std::vector<PropertyCheck> checks;
  bool all_pass() const;
};

/// Checks: value at zero, positivity, midpoint convexity, monotonicity of
/// m(s)/s, and a superlinearity proxy (ratio at s_min strictly below ratio at
/// s_max).
YoungPropertyReport check_young_properties(const YoungFunction& m, const SampleSpec& spec = {});

/// Lower convex hull values of samples (r_i, g_i) with r strictly increasing:
/// the discrete biconjugate, i.e. the biconjugate of the piecewise-linear
/// interpolant evaluated at the nodes. Hull vertices keep their exact sample
/// values, so convex inputs are returned unchanged.
std::vector<double> grid_biconjugate(const std::vector<double>& r, const std::vector<double>& g);

/// Discrete Legendre transform of samples (r_i, g_i): values of
/// sup_i (s_j * r_i - g_i) on the dual grid s_j. Applying it twice recovers
/// grid_biconjugate up to the dual-grid resolution; exposed for cross-checks.
std::vector<double> grid_conjugate(const std::vector<double>& r, const std::vector<double>& g,
                                   const std::vector<double>& s);

/// Convex minorant of s -> min(s^p_low, s^p_high) built from the common
/// tangent to the two branches: equals s^p_high on [0,a], the tangent segment
/// on [a,b], and s^p_low on [b,inf). A Young function that sits below
/// s^p(t,x) for every exponent p(t,x) in [p_low, p_high].
YoungFunction young_power_envelope(double p_low, double p_high);

}  // namespace morpde
