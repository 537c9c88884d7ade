#include "morpde/nfunction.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>

namespace morpde {

namespace {

/// max(s^p_low, s^p_high): convex upper envelope of a variable-exponent range.
YoungFunction young_power_max(double p_low, double p_high) {
  YoungFunction m;
  m.name = "power_max";
  m.params = {{"p_low", p_low}, {"p_high", p_high}};
  m.eval = [=](double s) { return std::max(std::pow(s, p_low), std::pow(s, p_high)); };
  m.derivative = [=](double s) {
    return s <= 1.0 ? p_low * std::pow(s, p_low - 1.0) : p_high * std::pow(s, p_high - 1.0);
  };
  return m;
}

/// Certifies dominating(s) >= sup over the family of M-profiles at radius s on
/// a log grid, rescaling by the next power of two when the base fails.
YoungFunction certify_dominating(const YoungFunction& base,
                                 const std::function<double(double)>& family_sup) {
  double worst = 1.0;
  for (int i = 0; i <= 160; ++i) {
    const double s = std::pow(10.0, -4.0 + 8.0 * i / 160.0);
    const double need = family_sup(s);
    const double have = base.eval(s);
    if (need > 0.0 && have > 0.0) worst = std::max(worst, need / have);
  }
  if (worst <= 1.0) return base;
  const double rho = std::pow(2.0, std::ceil(std::log2(worst)));
  return young_scale(base, rho);
}

double golden_line_max(const std::function<double(double)>& f, double a, double b) {
  const double invphi = 0.6180339887498949;
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 120 && (b - a) > 1e-12 * (1.0 + std::abs(a) + std::abs(b)); ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = f(x1);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

NFunction nfunction_variable_exponent(ScalarMap exponent, const VariableExponentOptions& opt) {
  if (!(opt.p_minus > 1.0) || !(opt.p_plus >= opt.p_minus))
    throw error("variable exponent family: need 1 < p_minus <= p_plus");
  if (opt.dim != 1 && opt.dim != 2) throw error("variable exponent family: dim must be 1 or 2");

  NFunction M;
  M.name = "variable_exponent";
  M.dim = opt.dim;
  M.isotropic = true;
  M.breakpoints = opt.breakpoints;
  M.params = {{"p_minus", opt.p_minus}, {"p_plus", opt.p_plus}};

  ScalarMap p = std::move(exponent);
  M.eval = [p](double t, const VecD& x, const VecD& xi) {
    const double r = xi.norm();
    return r == 0.0 ? 0.0 : std::pow(r, p(t, x));
  };
  M.radial = [p](double t, const VecD& x, double r) {
    return r == 0.0 ? 0.0 : std::pow(r, p(t, x));
  };
  M.radial_derivative = [p](double t, const VecD& x, double r) {
    const double pe = p(t, x);
    return pe * std::pow(r, pe - 1.0);
  };

  M.lower_bound = young_power_envelope(opt.p_minus, opt.p_plus);
  M.upper_bound = young_power_max(opt.p_minus, opt.p_plus);

  const double q = std::min(2.0, opt.p_minus);
  const YoungFunction base = young_power_sum(1.0 / opt.p_plus, opt.p_plus, 1.0, q);
  const double pm = opt.p_minus, pp = opt.p_plus;
  M.dominating = certify_dominating(base, [pm, pp](double s) {
    // sup over p in [p-, p+] of s^p.
    return std::max(std::pow(s, pm), std::pow(s, pp));
  });
  return M;
}

NFunction nfunction_double_phase(double p, double q, ScalarMap weight, double weight_sup,
                                 int dim, std::vector<double> breakpoints) {
  if (!(p > 1.0) || !(q >= p)) throw error("double phase family: need 1 < p <= q");
  if (weight_sup < 0.0) throw error("double phase family: weight bound must be nonnegative");
  if (dim != 1 && dim != 2) throw error("double phase family: dim must be 1 or 2");

  NFunction M;
  M.name = "double_phase";
  M.dim = dim;
  M.isotropic = true;
  M.breakpoints = std::move(breakpoints);
  M.params = {{"p", p}, {"q", q}, {"weight_sup", weight_sup}};

  ScalarMap a = std::move(weight);
  M.eval = [a, p, q](double t, const VecD& x, const VecD& xi) {
    const double r = xi.norm();
    return r == 0.0 ? 0.0 : std::pow(r, p) + a(t, x) * std::pow(r, q);
  };
  M.radial = [a, p, q](double t, const VecD& x, double r) {
    return r == 0.0 ? 0.0 : std::pow(r, p) + a(t, x) * std::pow(r, q);
  };
  M.radial_derivative = [a, p, q](double t, const VecD& x, double r) {
    return p * std::pow(r, p - 1.0) + a(t, x) * q * std::pow(r, q - 1.0);
  };

  M.lower_bound = young_power_scaled(1.0, p);
  const double cap = std::max(weight_sup, 1e-12);
  M.upper_bound = young_power_sum(1.0, p, cap, q);
  M.dominating = certify_dominating(young_power_sum(1.0, p, cap, q), [p, q, cap](double s) {
    return std::pow(s, p) + cap * std::pow(s, q);
  });
  return M;
}

double conjugate_nfunction(const NFunction& M, double t, const VecD& x, const VecD& eta,
                           unsigned long seed) {
  if (static_cast<int>(eta.size()) != M.dim)
    throw error("conjugate_nfunction: direction dimension mismatch");
  const double s = eta.norm();
  if (s == 0.0) return 0.0;

  if (M.isotropic) {
    YoungFunction radial;
    radial.name = M.name + "_radial";
    if (M.radial) {
      radial.eval = [&](double r) { return M.radial(t, x, r); };
    } else {
      radial.eval = [&](double r) {
        VecD e = VecD::Zero(M.dim);
        e(0) = r;
        return M.eval(t, x, e);
      };
    }
    if (M.radial_derivative)
      radial.derivative = [&](double r) { return M.radial_derivative(t, x, r); };
    return conjugate(radial, s);
  }

  // Anisotropic path: maximize the concave g(xi) = xi . eta - M(t, x, xi) by
  // coordinate ascent with seeded multi-start.
  const int d = M.dim;
  auto g = [&](const VecD& xi) { return xi.dot(eta) - M.eval(t, x, xi); };

  // Radial probe along eta to size the search box.
  const VecD dir = eta / s;
  auto g_radial = [&](double r) { return g(r * dir); };
  double r_hi = 1.0, v_prev = 0.0, r_prev = 0.0;
  double v_cur = g_radial(r_hi);
  while (v_cur >= v_prev) {
    r_prev = r_hi;
    v_prev = v_cur;
    r_hi *= 2.0;
    if (r_hi > 1e120) throw growth_error("conjugate_nfunction: growth mismatch along eta");
    v_cur = g_radial(r_hi);
  }
  const double box = std::max(r_prev, 1.0);

  auto ascend = [&](VecD xi) {
    double val = g(xi);
    for (int sweep = 0; sweep < 80; ++sweep) {
      const double before = val;
      for (int k = 0; k < d; ++k) {
        auto line = [&](double tau) {
          VecD y = xi;
          y(k) = tau;
          return g(y);
        };
        // Expand a bracket around the current coordinate (g concave per line).
        double step = std::max(0.25 * box, 1e-8);
        double lo = xi(k) - step, hi = xi(k) + step;
        while (line(lo) > line(xi(k)) && step < 1e100) {
          step *= 2.0;
          lo = xi(k) - step;
        }
        step = std::max(0.25 * box, 1e-8);
        while (line(hi) > line(xi(k)) && step < 1e100) {
          step *= 2.0;
          hi = xi(k) + step;
        }
        xi(k) = golden_line_max(line, lo, hi);
      }
      val = g(xi);
      if (val - before <= 1e-12 * (1.0 + std::abs(val))) return std::make_pair(val, true);
    }
    return std::make_pair(val, false);
  };

  double best = std::max(0.0, v_prev);  // g(0) = 0 is always feasible
  bool certified = false;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-2.0, 2.0);
  for (int restart = 0; restart < 8 * d + 1; ++restart) {
    VecD xi0 = VecD::Zero(d);
    if (restart == 0) {
      xi0 = r_prev * dir;
    } else {
      for (int k = 0; k < d; ++k) xi0(k) = box * uni(rng);
    }
    const auto [val, ok] = ascend(xi0);
    if (val > best) {
      best = val;
      certified = ok;
    } else if (val == best && ok) {
      certified = true;
    }
  }
  if (!certified && best > 0.0)
    throw ascent_error("conjugate_nfunction: coordinate ascent did not certify convergence",
                       best);
  return best;
}

YoungPropertyReport check_nfunction_properties(const NFunction& M,
                                               const NFunctionSampleSpec& spec) {
  YoungPropertyReport report;
  report.name = M.name;
  const int d = M.dim;

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  // Sample lattices.
  std::vector<double> ts(spec.t_count);
  for (int i = 0; i < spec.t_count; ++i)
    ts[i] = spec.t_lo + (spec.t_hi - spec.t_lo) * (i + 0.5) / spec.t_count;
  std::vector<VecD> xs;
  if (d == 1) {
    for (int i = 0; i < spec.x_count; ++i)
      xs.push_back(vec1(spec.x_lo(0) + (spec.x_hi(0) - spec.x_lo(0)) * (i + 0.5) / spec.x_count));
  } else {
    for (int i = 0; i < spec.x_count; ++i)
      for (int j = 0; j < spec.x_count; ++j)
        xs.push_back(
            vec2(spec.x_lo(0) + (spec.x_hi(0) - spec.x_lo(0)) * (i + 0.5) / spec.x_count,
                 spec.x_lo(1) + (spec.x_hi(1) - spec.x_lo(1)) * (j + 0.5) / spec.x_count));
  }
  std::vector<VecD> dirs;
  for (int i = 0; i < spec.dir_count; ++i) {
    VecD v = VecD::Zero(d);
    for (int k = 0; k < d; ++k) v(k) = gauss(rng);
    if (v.norm() < 1e-12) v(0) = 1.0;
    dirs.push_back(v / v.norm());
  }
  std::vector<double> radii(spec.radius_count);
  for (int i = 0; i < spec.radius_count; ++i)
    radii[i] = spec.r_min * std::pow(spec.r_max / spec.r_min,
                                     spec.radius_count == 1 ? 0.0 : double(i) / (spec.radius_count - 1));

  // Symmetry.
  {
    PropertyCheck c{"symmetry", true, 0.0, spec.tol};
    for (double t : ts)
      for (const VecD& x : xs)
        for (const VecD& e : dirs)
          for (double r : radii) {
            const VecD xi = r * e;
            const double a = M.eval(t, x, xi), b = M.eval(t, x, (-xi).eval());
            const double margin = std::abs(a - b) - spec.tol * (1.0 + std::abs(a));
            if (margin > c.worst) c.worst = margin;
          }
    c.pass = c.worst <= 0.0;
    report.checks.push_back(c);
  }

  // Zero at origin.
  {
    PropertyCheck c{"zero_at_origin", true, 0.0, spec.tol};
    for (double t : ts)
      for (const VecD& x : xs) {
        const double v = std::abs(M.eval(t, x, VecD::Zero(d)));
        if (v - spec.tol > c.worst) c.worst = v - spec.tol;
      }
    c.pass = c.worst <= 0.0;
    report.checks.push_back(c);
  }

  // Midpoint convexity along random segments.
  {
    PropertyCheck c{"midpoint_convexity", true, 0.0, spec.tol};
    for (int i = 0; i < spec.random_pairs; ++i) {
      const double t = ts[i % ts.size()];
      const VecD& x = xs[(i * 7) % xs.size()];
      VecD a = VecD::Zero(d), b = VecD::Zero(d);
      for (int k = 0; k < d; ++k) {
        a(k) = gauss(rng) * std::pow(10.0, -2.0 + 4.0 * uni(rng));
        b(k) = gauss(rng) * std::pow(10.0, -2.0 + 4.0 * uni(rng));
      }
      const double lhs = M.eval(t, x, (0.5 * (a + b)).eval());
      const double rhs = 0.5 * (M.eval(t, x, a) + M.eval(t, x, b));
      const double margin = lhs - rhs - spec.tol * (1.0 + std::abs(rhs));
      if (margin > c.worst) c.worst = margin;
    }
    c.pass = c.worst <= 0.0;
    report.checks.push_back(c);
  }

  // Young sandwich.
  {
    PropertyCheck lo{"sandwich_lower", true, 0.0, spec.tol};
    PropertyCheck hi{"sandwich_upper", true, 0.0, spec.tol};
    for (double t : ts)
      for (const VecD& x : xs)
        for (const VecD& e : dirs)
          for (double r : radii) {
            const double v = M.eval(t, x, (r * e).eval());
            const double lo_margin = M.lower_bound.eval(r) - v - spec.tol * (1.0 + std::abs(v));
            const double hi_margin = v - M.upper_bound.eval(r) - spec.tol * (1.0 + std::abs(v));
            if (lo_margin > lo.worst) lo.worst = lo_margin;
            if (hi_margin > hi.worst) hi.worst = hi_margin;
          }
    lo.pass = lo.worst <= 0.0;
    hi.pass = hi.worst <= 0.0;
    report.checks.push_back(lo);
    report.checks.push_back(hi);
  }

  // Superlinearity proxy, uniform in (t, x): the largest small-radius ratio
  // must stay below the smallest large-radius ratio.
  {
    PropertyCheck c{"superlinear_growth", true, 0.0, 0.0};
    double worst_small = 0.0, best_large = std::numeric_limits<double>::infinity();
    for (double t : ts)
      for (const VecD& x : xs)
        for (const VecD& e : dirs) {
          worst_small =
              std::max(worst_small, M.eval(t, x, (spec.r_min * e).eval()) / spec.r_min);
          best_large = std::min(best_large, M.eval(t, x, (spec.r_max * e).eval()) / spec.r_max);
        }
    c.pass = worst_small < best_large;
    c.worst = c.pass ? 0.0 : worst_small - best_large;
    report.checks.push_back(c);
  }

  return report;
}

ThetaConditionReport check_theta_condition(const NFunction& M, const VecD& box_lo,
                                           const VecD& box_hi, const ThetaConditionSpec& spec) {
  if (!M.isotropic)
    throw error("check_theta_condition: requires an isotropic family");
  const int d = M.dim;
  if (static_cast<int>(box_lo.size()) != d || static_cast<int>(box_hi.size()) != d)
    throw error("check_theta_condition: box dimension mismatch");
  if (spec.t_samples.empty()) throw error("check_theta_condition: need at least one time sample");

  auto radial_eval = [&](double t, const VecD& x, double r) {
    if (M.radial) return M.radial(t, x, r);
    VecD e = VecD::Zero(d);
    e(0) = r;
    return M.eval(t, x, e);
  };

  ThetaConditionReport report;

  for (double delta : spec.deltas) {
    ThetaConditionReport::PerDelta entry;
    entry.delta = delta;
    entry.argmax_x = VecD::Zero(d);
    const double r_max = spec.radius_scale / delta;

    // Radial grid: 0 plus log-spaced points up to r_max.
    std::vector<double> radii{0.0};
    const int n_r = std::max(spec.radial_count, 8);
    for (int i = 0; i < n_r; ++i)
      radii.push_back(r_max * std::pow(1e-4, 1.0 - double(i) / (n_r - 1)));

    std::array<int, 2> tiles{1, 1};
    for (int k = 0; k < d; ++k)
      tiles[k] = std::max(1, static_cast<int>(std::ceil((box_hi(k) - box_lo(k)) / delta)));

    const int tile_count = d == 1 ? tiles[0] : tiles[0] * tiles[1];
    for (int tile = 0; tile < tile_count; ++tile) {
      const int ti = d == 1 ? tile : tile % tiles[0];
      const int tj = d == 1 ? 0 : tile / tiles[0];

      // Sample lattice helper over an axis-aligned window clipped to the box.
      auto window_samples = [&](double lo0, double hi0, double lo1, double hi1, int per_edge) {
        std::vector<VecD> out;
        const double a0 = std::max(lo0, box_lo(0)), b0 = std::min(hi0, box_hi(0));
        if (d == 1) {
          for (int i = 0; i < per_edge; ++i)
            out.push_back(vec1(a0 + (b0 - a0) * (i + 0.5) / per_edge));
        } else {
          const double a1 = std::max(lo1, box_lo(1)), b1 = std::min(hi1, box_hi(1));
          for (int i = 0; i < per_edge; ++i)
            for (int j = 0; j < per_edge; ++j)
              out.push_back(vec2(a0 + (b0 - a0) * (i + 0.5) / per_edge,
                                 a1 + (b1 - a1) * (j + 0.5) / per_edge));
        }
        return out;
      };

      const double q_lo0 = box_lo(0) + ti * delta;
      const double q_hi0 = std::min(q_lo0 + delta, box_hi(0));
      const double q_lo1 = d == 2 ? box_lo(1) + tj * delta : 0.0;
      const double q_hi1 = d == 2 ? std::min(q_lo1 + delta, box_hi(1)) : 0.0;
      const double c0 = 0.5 * (q_lo0 + q_hi0), c1 = d == 2 ? 0.5 * (q_lo1 + q_hi1) : 0.0;

      const std::vector<VecD> q_samples =
          window_samples(q_lo0, q_hi0, q_lo1, q_hi1, spec.samples_per_edge);
      const std::vector<VecD> wide_samples =
          window_samples(c0 - 2.5 * delta, c0 + 2.5 * delta, c1 - 2.5 * delta, c1 + 2.5 * delta,
                         5 * spec.samples_per_edge);

      for (double t : spec.t_samples) {
        // Cube infimum profile on the radial grid.
        std::vector<double> g(radii.size(), std::numeric_limits<double>::infinity());
        for (std::size_t i = 0; i < radii.size(); ++i) {
          for (const VecD& x : wide_samples) {
            const double v = radial_eval(t, x, radii[i]);
            if (v < g[i]) g[i] = v;
          }
        }
        const std::vector<double> env = grid_biconjugate(radii, g);
        for (std::size_t i = 1; i < radii.size(); ++i)
          if (!(env[i] > 0.0))
            throw invariant_error("check_theta_condition: degenerate infimum envelope in tile " +
                                  std::to_string(tile) + " at radius " +
                                  std::to_string(radii[i]));

        for (const VecD& x : q_samples) {
          for (std::size_t i = 1; i < radii.size(); ++i) {
            const double num = radial_eval(t, x, radii[i]);
            const double ratio = num / env[i];
            if (ratio > entry.max_ratio) {
              entry.max_ratio = ratio;
              entry.argmax_t = t;
              entry.argmax_radius = radii[i];
              entry.argmax_x = x;
            }
          }
        }
      }
    }
    report.per_delta.push_back(entry);
  }

  if (!report.per_delta.empty()) {
    const double first = report.per_delta.front().max_ratio;
    const double last = report.per_delta.back().max_ratio;
    report.bounded = last <= 1.5 * std::max(first, 1.0);
  }
  return report;
}

}  // namespace morpde
