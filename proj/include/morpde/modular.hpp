#pragma once

#include <vector>

#include "morpde/grid.hpp"
#include "morpde/nfunction.hpp"

namespace morpde {

/// Quadrature approximation of the modular integral of M(t, x, xi/lambda)
/// over the space-time cylinder: midpoint rule per space-time cell, summed
/// pairwise for run-to-run determinism. Requires arity == M.dim == grid dim
/// and lambda > 0.
double modular(const NFunction& M, const DiscreteField& xi, double lambda = 1.0);

/// Same quadrature with the pointwise convex conjugate M*(t, x, eta/lambda)
/// as integrand (evaluated numerically through conjugate_nfunction).
double modular_conjugate(const NFunction& M, const DiscreteField& eta,
                         double lambda = 1.0);

/// inf{lambda > 0 : modular(M, xi, lambda) <= 1} by bracketing bisection with
/// relative tolerance 1e-10; 0 for the zero field. The returned lambda always
/// satisfies modular(M, xi, lambda) <= 1.
double luxemburg_norm(const NFunction& M, const DiscreteField& xi);

/// Luxemburg norm with respect to the conjugate integrand M*.
double luxemburg_norm_conjugate(const NFunction& M, const DiscreteField& eta);

/// Quadrature of the pointwise dot product xi . eta over the cylinder.
double pairing_integral(const DiscreteField& xi, const DiscreteField& eta);

/// Modular of the difference xi - eta at scale lambda: the functional whose
/// decay along a sequence is modular convergence.
double modular_distance(const NFunction& M, const DiscreteField& xi,
                        const DiscreteField& eta, double lambda = 1.0);

/// Both generalized Hoelder bounds on the duality pairing: the integral form
/// (modular + conjugate modular) and the norm-product form with factor 2.
struct InequalityReport {
  double lhs = 0.0;                // |integral of xi . eta|
  double rhs_integral = 0.0;       // modular(M, xi) + conjugate modular of eta
  double rhs_norm_product = 0.0;   // 2 ||xi|| * ||eta||_conjugate
  double slack_integral = 0.0;
  double slack_norm_product = 0.0;
  bool pass_integral = false;
  bool pass_norm_product = false;
  bool pass() const { return pass_integral && pass_norm_product; }
};

InequalityReport holder_check(const NFunction& M, const DiscreteField& xi,
                              const DiscreteField& eta);

/// One point of the equi-integrability tail curve: quadrature mass of |xi|
/// restricted to the `fraction` of the cylinder (by measure) where |xi| is
/// largest.
struct TailPoint {
  double fraction;
  double mass;
};

/// Tail curve over decreasing fractions; mass decreases with the fraction.
std::vector<TailPoint> equiintegrability_tail(
    const DiscreteField& xi,
    std::vector<double> fractions = {0.5, 0.25, 0.1, 0.05, 0.02, 0.01});

}  // namespace morpde
