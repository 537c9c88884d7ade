#include "morpde/modular.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace morpde {

namespace {

constexpr int kMaxBisect = 200;
constexpr double kNormRelTol = 1e-10;

// Midpoint-rule quadrature over all space-time cells of a pointwise integrand
// evaluated on the cell-averaged field value. Deterministic: contributions go
// into fixed slots and are combined by a pairwise tree sum.
template <class F>
double quadrature(const DiscreteField& xi, F&& integrand) {
  const SpaceTimeGrid& g = xi.grid();
  const int nt = g.time_intervals();
  const int nc = g.cell_count();
  const double vol = g.cell_volume();
  std::vector<double> contrib(static_cast<std::size_t>(nt) * static_cast<std::size_t>(nc));
  parallel_for(contrib.size(), [&](std::size_t idx) {
    const int n = static_cast<int>(idx) / nc;
    const int c = static_cast<int>(idx) % nc;
    const double t = g.time_mid(n);
    const VecD x = g.cell_center(c);
    contrib[idx] = g.dt(n) * vol * integrand(t, x, cell_value(xi, n, c));
  });
  return tree_sum(contrib);
}

void require_modular_shape(const NFunction& M, const DiscreteField& xi) {
  if (xi.grid().dim() != M.dim || xi.arity() != M.dim)
    throw invariant_error("modular needs field arity == growth-law dimension == grid dimension");
}

bool is_zero_field(const DiscreteField& xi) {
  for (double v : xi.data())
    if (v != 0.0) return false;
  return true;
}

// Shared bracketing bisection for both Luxemburg norms.
double luxemburg_generic(const DiscreteField& xi,
                         const std::function<double(double)>& modular_at) {
  if (is_zero_field(xi)) return 0.0;
  double hi = 1.0;
  int guard = 0;
  while (modular_at(hi) > 1.0) {
    hi *= 2.0;
    if (++guard > 400) throw growth_error("Luxemburg bracket expansion diverged");
  }
  double lo = hi * 0.5;
  if (hi == 1.0) {
    while (modular_at(lo) <= 1.0) {
      hi = lo;
      lo *= 0.5;
      if (++guard > 800) return 0.0;  // modular stays <= 1 at all scales
    }
  }
  for (int it = 0; it < kMaxBisect && (hi - lo) > kNormRelTol * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (modular_at(mid) <= 1.0 ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace

double modular(const NFunction& M, const DiscreteField& xi, double lambda) {
  require_modular_shape(M, xi);
  if (!(lambda > 0.0)) throw config_error("modular scale lambda must be positive");
  return quadrature(xi, [&](double t, const VecD& x, const VecD& v) {
    return M.eval(t, x, VecD(v / lambda));
  });
}

double modular_conjugate(const NFunction& M, const DiscreteField& eta, double lambda) {
  require_modular_shape(M, eta);
  if (!(lambda > 0.0)) throw config_error("modular scale lambda must be positive");
  return quadrature(eta, [&](double t, const VecD& x, const VecD& v) {
    return conjugate_nfunction(M, t, x, VecD(v / lambda));
  });
}

double luxemburg_norm(const NFunction& M, const DiscreteField& xi) {
  require_modular_shape(M, xi);
  return luxemburg_generic(xi, [&](double lam) { return modular(M, xi, lam); });
}

double luxemburg_norm_conjugate(const NFunction& M, const DiscreteField& eta) {
  require_modular_shape(M, eta);
  return luxemburg_generic(
      eta, [&](double lam) { return modular_conjugate(M, eta, lam); });
}

double pairing_integral(const DiscreteField& xi, const DiscreteField& eta) {
  if (!xi.same_shape(eta))
    throw invariant_error("pairing needs fields of identical shape");
  const SpaceTimeGrid& g = xi.grid();
  const int nt = g.time_intervals();
  const int nc = g.cell_count();
  const double vol = g.cell_volume();
  std::vector<double> contrib(static_cast<std::size_t>(nt) * static_cast<std::size_t>(nc));
  parallel_for(contrib.size(), [&](std::size_t idx) {
    const int n = static_cast<int>(idx) / nc;
    const int c = static_cast<int>(idx) % nc;
    contrib[idx] = g.dt(n) * vol * cell_value(xi, n, c).dot(cell_value(eta, n, c));
  });
  return tree_sum(contrib);
}

double modular_distance(const NFunction& M, const DiscreteField& xi,
                        const DiscreteField& eta, double lambda) {
  return modular(M, field_difference(xi, eta), lambda);
}

InequalityReport holder_check(const NFunction& M, const DiscreteField& xi,
                              const DiscreteField& eta) {
  InequalityReport rep;
  rep.lhs = std::abs(pairing_integral(xi, eta));
  rep.rhs_integral = modular(M, xi, 1.0) + modular_conjugate(M, eta, 1.0);
  rep.rhs_norm_product =
      2.0 * luxemburg_norm(M, xi) * luxemburg_norm_conjugate(M, eta);
  rep.slack_integral = rep.rhs_integral - rep.lhs;
  rep.slack_norm_product = rep.rhs_norm_product - rep.lhs;
  const auto ok = [&](double rhs) { return rep.lhs <= rhs + 1e-10 * (1.0 + std::abs(rhs)); };
  rep.pass_integral = ok(rep.rhs_integral);
  rep.pass_norm_product = ok(rep.rhs_norm_product);
  return rep;
}

std::vector<TailPoint> equiintegrability_tail(const DiscreteField& xi,
                                              std::vector<double> fractions) {
  const SpaceTimeGrid& g = xi.grid();
  const int nt = g.time_intervals();
  const int nc = g.cell_count();
  const double vol = g.cell_volume();

  struct Cell {
    double magnitude;
    double measure;
  };
  std::vector<Cell> cells(static_cast<std::size_t>(nt) * static_cast<std::size_t>(nc));
  for (int n = 0; n < nt; ++n)
    for (int c = 0; c < nc; ++c)
      cells[static_cast<std::size_t>(n) * static_cast<std::size_t>(nc) + static_cast<std::size_t>(c)] =
          {cell_value(xi, n, c).norm(), g.dt(n) * vol};
  std::stable_sort(cells.begin(), cells.end(),
                   [](const Cell& a, const Cell& b) { return a.magnitude > b.magnitude; });

  const double total = g.quadrature_measure();
  std::vector<TailPoint> curve;
  curve.reserve(fractions.size());
  for (double frac : fractions) {
    if (!(frac > 0.0) || frac > 1.0)
      throw config_error("tail fraction must lie in (0, 1]");
    double taken = 0.0, mass = 0.0;
    for (const Cell& cell : cells) {
      if (taken >= frac * total) break;
      taken += cell.measure;
      mass += cell.magnitude * cell.measure;
    }
    curve.push_back({frac, mass});
  }
  return curve;
}

}  // namespace morpde
