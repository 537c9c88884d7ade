#include "morpde/operators.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace morpde {

namespace {

constexpr double kZeroRadius2 = 1e-280;  // below this |xi|^2 counts as 0

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Flux, Jacobian, and radial factor of the single power term |xi|^{p-2} xi
// with delta-smoothing below exponent 2.
double power_radial(double p, double delta, double r2) {
  if (p >= 2.0) {
    if (r2 <= kZeroRadius2) return p == 2.0 ? 1.0 : 0.0;
    return std::pow(r2, 0.5 * (p - 2.0));
  }
  return std::pow(r2 + delta * delta, 0.5 * (p - 2.0));
}

VecD power_flux(double p, double delta, const VecD& xi) {
  const double r2 = xi.squaredNorm();
  if (p >= 2.0 && r2 <= kZeroRadius2) return VecD::Zero(xi.size());
  return VecD(power_radial(p, delta, r2) * xi);
}

MatD power_jacobian(double p, double delta, const VecD& xi) {
  const int d = static_cast<int>(xi.size());
  const double r2 = xi.squaredNorm();
  const MatD id = MatD::Identity(d, d);
  if (p >= 2.0 && r2 <= kZeroRadius2) return MatD((p == 2.0 ? 1.0 : 0.0) * id);
  const double s2 = p >= 2.0 ? r2 : r2 + delta * delta;
  const double a = std::pow(s2, 0.5 * (p - 2.0));
  const double b = (p - 2.0) * std::pow(s2, 0.5 * (p - 4.0));
  return MatD(a * id + b * (xi * xi.transpose()));
}

}  // namespace

MonotoneOperator op_variable_exponent(ScalarMap p, VariableExponentOptions opt,
                                      double delta_reg) {
  MonotoneOperator A;
  A.name = "variable_exponent";
  A.governing = nfunction_variable_exponent(p, opt);
  A.coercivity_c = opt.p_plus;
  A.bound_h = [](double, const VecD&) { return 0.0; };
  A.breakpoints = opt.breakpoints;
  A.eval = [p, delta_reg](double t, const VecD& x, const VecD& xi) {
    return power_flux(p(t, x), delta_reg, xi);
  };
  A.jacobian = [p, delta_reg](double t, const VecD& x, const VecD& xi) {
    return power_jacobian(p(t, x), delta_reg, xi);
  };
  A.radial_coefficient = [p, delta_reg](double t, const VecD& x, double r) {
    return power_radial(p(t, x), delta_reg, r * r);
  };
  return A;
}

MonotoneOperator op_double_phase(double p, double q, ScalarMap weight,
                                 double weight_sup, int dim,
                                 std::vector<double> breakpoints, double delta_reg) {
  MonotoneOperator A;
  A.name = "double_phase";
  A.governing = nfunction_double_phase(p, q, weight, weight_sup, dim, breakpoints);
  A.coercivity_c = q;
  A.bound_h = [](double, const VecD&) { return 0.0; };
  A.breakpoints = std::move(breakpoints);
  A.eval = [p, q, weight, delta_reg](double t, const VecD& x, const VecD& xi) {
    return VecD(power_flux(p, delta_reg, xi) + weight(t, x) * power_flux(q, delta_reg, xi));
  };
  A.jacobian = [p, q, weight, delta_reg](double t, const VecD& x, const VecD& xi) {
    return MatD(power_jacobian(p, delta_reg, xi) +
                weight(t, x) * power_jacobian(q, delta_reg, xi));
  };
  A.radial_coefficient = [p, q, weight, delta_reg](double t, const VecD& x, double r) {
    return power_radial(p, delta_reg, r * r) +
           weight(t, x) * power_radial(q, delta_reg, r * r);
  };
  return A;
}

MonotoneOperator op_antimonotone(int dim) {
  MonotoneOperator A;
  A.name = "antimonotone";
  VariableExponentOptions opt;
  opt.p_minus = 2.0;
  opt.p_plus = 2.0;
  opt.dim = dim;
  A.governing =
      nfunction_variable_exponent([](double, const VecD&) { return 2.0; }, opt);
  A.coercivity_c = 2.0;
  A.bound_h = [](double, const VecD&) { return 0.0; };
  A.eval = [](double, const VecD&, const VecD& xi) { return VecD(-xi); };
  A.jacobian = [](double, const VecD&, const VecD& xi) {
    const int d = static_cast<int>(xi.size());
    return MatD(-MatD::Identity(d, d));
  };
  A.radial_coefficient = [](double, const VecD&, double) { return -1.0; };
  return A;
}

VecD RegularizedOperator::eval(double t, const VecD& x, const VecD& xi) const {
  return VecD(base.eval(t, x, xi) + theta * gradient(m, xi));
}

MatD RegularizedOperator::jacobian(double t, const VecD& x, const VecD& xi) const {
  return MatD(base.jacobian(t, x, xi) + theta * gradient_jacobian(m, xi, 1e-8));
}

double RegularizedOperator::radial_coefficient(double t, const VecD& x,
                                               double r) const {
  const double smoothed = std::sqrt(r * r + 1e-16);
  return base.radial_coefficient(t, x, r) + theta * m.derivative(smoothed) / smoothed;
}

RegularizedOperator regularize(const MonotoneOperator& A, double theta) {
  if (!(theta >= 0.0) || theta > 1.0)
    throw config_error("regularization strength must lie in [0, 1]");
  RegularizedOperator R;
  R.base = A;
  R.theta = theta;
  R.m = A.governing.dominating;
  return R;
}

namespace {

struct SamplePoint {
  double t;
  VecD x;
};

SamplePoint random_point(std::mt19937_64& rng, const OperatorSampleSpec& spec, int dim) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  SamplePoint p;
  p.t = spec.t_lo + (spec.t_hi - spec.t_lo) * u01(rng);
  p.x = VecD(dim);
  for (int k = 0; k < dim; ++k) {
    const double lo = k < spec.x_lo.size() ? spec.x_lo(k) : 0.0;
    const double hi = k < spec.x_hi.size() ? spec.x_hi(k) : 1.0;
    p.x(k) = lo + (hi - lo) * u01(rng);
  }
  return p;
}

VecD random_xi(std::mt19937_64& rng, double amplitude, int dim) {
  std::uniform_real_distribution<double> comp(-amplitude, amplitude);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  VecD xi(dim);
  for (int k = 0; k < dim; ++k) xi(k) = comp(rng);
  if (u01(rng) < 0.25) xi *= 1e-3;  // probe the near-origin regime too
  return xi;
}

using FluxFn = std::function<VecD(double, const VecD&, const VecD&)>;

// Monotone pairings, vanishing at zero, and nested ball bounds; shared by the
// plain and regularized checkers. Fills everything except coercivity_growth.
void monotone_core(const FluxFn& flux, int dim, const OperatorSampleSpec& spec,
                   AssumptionReport& rep) {
  // Monotonicity over random pairs (deterministic per-index seeding).
  std::vector<double> pairing(static_cast<std::size_t>(spec.pair_samples));
  parallel_for(pairing.size(), [&](std::size_t i) {
    std::mt19937_64 rng(splitmix64(spec.seed ^ (0xa3u + (static_cast<std::uint64_t>(i) << 1))));
    const SamplePoint p = random_point(rng, spec, dim);
    const VecD xi = random_xi(rng, spec.xi_amplitude, dim);
    const VecD eta = random_xi(rng, spec.xi_amplitude, dim);
    pairing[i] = (flux(p.t, p.x, xi) - flux(p.t, p.x, eta)).dot(VecD(xi - eta));
  });
  double worst_pair = 0.0;
  for (double v : pairing) worst_pair = std::min(worst_pair, v);
  rep.monotonicity = {"monotone_pairing", worst_pair >= -spec.tol_monotone,
                      worst_pair, spec.tol_monotone};

  // Vanishing at xi = 0.
  double worst_zero = 0.0;
  {
    std::mt19937_64 rng(splitmix64(spec.seed ^ 0x5eedULL));
    const int count = std::max(16, spec.point_samples / 100);
    for (int i = 0; i < count; ++i) {
      const SamplePoint p = random_point(rng, spec, dim);
      worst_zero = std::max(worst_zero, flux(p.t, p.x, VecD(VecD::Zero(dim))).norm());
    }
  }
  rep.zero_at_zero = {"zero_at_zero", worst_zero <= 1e-14, worst_zero, 1e-14};

  // Ball bounds from one nested sample stream: radius uniform in the largest
  // ball, so smaller balls use subsets and the bound is nondecreasing in K.
  std::vector<double> radii = spec.ball_radii;
  std::sort(radii.begin(), radii.end());
  if (!radii.empty()) {
    const double k_max = radii.back();
    const int count = std::max(64, spec.point_samples / 10);
    std::vector<double> r_of(static_cast<std::size_t>(count));
    std::vector<double> norm_of(static_cast<std::size_t>(count));
    parallel_for(r_of.size(), [&](std::size_t i) {
      std::mt19937_64 rng(splitmix64(spec.seed ^ (0xba11ULL + (static_cast<std::uint64_t>(i) << 1))));
      std::uniform_real_distribution<double> u01(0.0, 1.0);
      const SamplePoint p = random_point(rng, spec, dim);
      VecD dir(dim);
      std::normal_distribution<double> gauss(0.0, 1.0);
      for (int k = 0; k < dim; ++k) dir(k) = gauss(rng);
      const double dn = dir.norm();
      if (dn > 0.0) dir /= dn;
      const double r = k_max * u01(rng);
      r_of[i] = r;
      norm_of[i] = flux(p.t, p.x, VecD(r * dir)).norm();
    });
    for (double K : radii) {
      double m = 0.0;
      for (std::size_t i = 0; i < r_of.size(); ++i)
        if (r_of[i] <= K) m = std::max(m, norm_of[i]);
      rep.ball_bounds.push_back({K, m});
    }
  }
}

}  // namespace

AssumptionReport check_assumptions(const MonotoneOperator& A,
                                   const OperatorSampleSpec& spec) {
  const int dim = A.governing.dim;
  AssumptionReport rep;
  monotone_core(A.eval, dim, spec, rep);

  // Coercivity/growth: slack of c A.xi + h - M(xi) - M*(A(xi)), relative floor.
  std::vector<double> slack(static_cast<std::size_t>(spec.point_samples));
  parallel_for(slack.size(), [&](std::size_t i) {
    std::mt19937_64 rng(splitmix64(spec.seed ^ (0xc0e2ULL + (static_cast<std::uint64_t>(i) << 1))));
    const SamplePoint p = random_point(rng, spec, dim);
    const VecD xi = random_xi(rng, spec.xi_amplitude, dim);
    const VecD a = A.eval(p.t, p.x, xi);
    const double rhs = A.coercivity_c * a.dot(xi) + A.bound_h(p.t, p.x);
    const double lhs = A.governing.eval(p.t, p.x, xi) + conjugate_nfunction(A.governing, p.t, p.x, a);
    slack[i] = (rhs - lhs) / (1.0 + std::abs(rhs));
  });
  double worst = 0.0;
  for (double v : slack) worst = std::min(worst, v);
  rep.coercivity_growth = {"coercivity_growth", worst >= -spec.tol_coercivity,
                           worst, spec.tol_coercivity};
  return rep;
}

AssumptionReport check_monotonicity(const FluxFn& flux, int dim,
                                    const OperatorSampleSpec& spec) {
  AssumptionReport rep;
  monotone_core(flux, dim, spec, rep);
  rep.coercivity_growth = {"coercivity_growth", true, 0.0, spec.tol_coercivity};
  return rep;
}

IdentificationProbeReport monotonicity_identification_probe(
    const DiscreteField& alpha, const DiscreteField& xi,
    const MonotoneOperator& A, int eta_samples, int psi_samples) {
  if (!alpha.same_shape(xi))
    throw invariant_error("identification probe needs alpha and xi of identical shape");
  if (xi.arity() != xi.grid().dim() || A.governing.dim != xi.arity())
    throw invariant_error("identification probe needs d-vector fields matching the flux dimension");
  const SpaceTimeGrid& g = xi.grid();
  const auto grid_ptr = xi.grid_ptr();

  IdentificationProbeReport rep;

  // Direct pointwise residual at the stored sample points.
  {
    std::vector<double> sq;
    sq.reserve(static_cast<std::size_t>(xi.time_count()) * static_cast<std::size_t>(xi.space_count()));
    for (int n = 0; n < xi.time_count(); ++n)
      for (int i = 0; i < xi.space_count(); ++i) {
        const double r =
            (alpha.vec_at(n, i) - A.eval(xi.t_at(n), xi.x_at(i), xi.vec_at(n, i))).norm();
        rep.residual_max = std::max(rep.residual_max, r);
        sq.push_back(r * r);
      }
    rep.residual_l2 = std::sqrt(tree_sum(sq) / static_cast<double>(std::max<std::size_t>(sq.size(), 1)));
  }

  // Dictionary of bounded test fields.
  std::vector<std::pair<std::string, DiscreteField>> etas;
  etas.emplace_back("eta=xi", xi);
  for (int k = 0; k < g.dim(); ++k) {
    for (double s : {1.0, -1.0}) {
      DiscreteField e(grid_ptr, xi.space_stagger(), xi.time_stagger(), xi.arity());
      for (int n = 0; n < e.time_count(); ++n)
        for (int i = 0; i < e.space_count(); ++i) e.at(n, i, k) = s;
      etas.emplace_back((s > 0 ? "const+e" : "const-e") + std::to_string(k + 1), std::move(e));
    }
  }
  etas.emplace_back("xi*0.9", field_scale(xi, 0.9));
  etas.emplace_back("xi*1.1", field_scale(xi, 1.1));
  {
    // Sign-targeted perturbations: the entries that turn a pointwise
    // inconsistency of alpha into a negative pairing once the step is small
    // enough for the linearization error to lose to the inconsistency.
    double max_xi = 0.0;
    for (double v : xi.data()) max_xi = std::max(max_xi, std::abs(v));
    for (double scale : {1e-1, 1e-2, 1e-3}) {
      const double eps = scale * (1.0 + max_xi);
      DiscreteField e = xi;
      for (int n = 0; n < e.time_count(); ++n)
        for (int i = 0; i < e.space_count(); ++i) {
          const VecD d = VecD(alpha.vec_at(n, i) -
                              A.eval(xi.t_at(n), xi.x_at(i), xi.vec_at(n, i)));
          for (int k = 0; k < e.arity(); ++k)
            e.at(n, i, k) += eps * (d(k) > 0.0 ? 1.0 : (d(k) < 0.0 ? -1.0 : 0.0));
        }
      etas.emplace_back("targeted(" + std::to_string(scale) + ")", std::move(e));
    }
  }
  for (int s = 0; s < eta_samples; ++s) {
    std::mt19937_64 rng(splitmix64(0xe7a5ULL + static_cast<std::uint64_t>(s)));
    std::uniform_real_distribution<double> coef(-3.0, 3.0);
    const double a = coef(rng), b = coef(rng), c = coef(rng), d0 = coef(rng);
    etas.emplace_back(
        "smooth" + std::to_string(s),
        DiscreteField::sample(grid_ptr, xi.space_stagger(), xi.time_stagger(), xi.arity(),
                              [&, a, b, c, d0](double t, const VecD& x) {
                                VecD v(xi.arity());
                                for (int k = 0; k < xi.arity(); ++k)
                                  v(k) = std::sin(a * t + b * x(0) + c + k) *
                                         std::cos(d0 * x(x.size() - 1));
                                return v;
                              }));
  }

  // Cutoffs: constant one, then a polynomial interior bump.
  std::vector<std::pair<std::string, std::function<double(const VecD&)>>> psis;
  psis.emplace_back("one", [](const VecD&) { return 1.0; });
  if (psi_samples > 1)
    psis.emplace_back("bump", [&g](const VecD& x) {
      double v = 1.0;
      for (int k = 0; k < g.dim(); ++k) {
        const double s = (x(k) - g.axis(k).lo) / g.axis(k).length();
        v *= 4.0 * s * (1.0 - s);
      }
      return v;
    });

  const int nt = g.time_intervals();
  const int nc = g.cell_count();
  const double vol = g.cell_volume();
  bool first = true;
  for (const auto& [ename, eta] : etas) {
    for (const auto& [pname, psi] : psis) {
      std::vector<double> contrib(static_cast<std::size_t>(nt) * static_cast<std::size_t>(nc));
      parallel_for(contrib.size(), [&](std::size_t idx) {
        const int n = static_cast<int>(idx) / nc;
        const int c = static_cast<int>(idx) % nc;
        const double t = g.time_mid(n);
        const VecD x = g.cell_center(c);
        const VecD ev = cell_value(eta, n, c);
        const VecD diff = VecD(cell_value(alpha, n, c) - A.eval(t, x, ev));
        const VecD gap = VecD(cell_value(xi, n, c) - ev);
        contrib[idx] = g.dt(n) * vol * psi(x) * diff.dot(gap);
      });
      const double value = tree_sum(contrib);
      const std::string name = ename + "/" + pname;
      rep.pairings.push_back({name, value});
      if (first || value < rep.min_pairing) {
        rep.min_pairing = value;
        rep.argmin = name;
        first = false;
      }
    }
  }
  return rep;
}

}  // namespace morpde
