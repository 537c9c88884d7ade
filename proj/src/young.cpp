#include "morpde/young.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace morpde {

namespace {

constexpr double kOverflowGuard = 1e120;  // bracket cap before growth_error
constexpr double kDerivativeTol = 1e-12;  // residual tolerance on m'(t) = s

double golden_max(const std::function<double(double)>& f, double lo, double hi) {
  // Golden-section search for the maximum of a unimodal f on [lo, hi].
  const double invphi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 200 && (b - a) > 1e-13 * (1.0 + b); ++it) {
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

YoungFunction young_power(double p) {
  if (!(p > 1.0)) throw error("young_power: exponent must exceed 1");
  YoungFunction m;
  m.name = "power";
  m.params = {{"p", p}};
  m.eval = [p](double s) { return std::pow(s, p) / p; };
  m.derivative = [p](double s) { return std::pow(s, p - 1.0); };
  m.second_derivative = [p](double s) { return (p - 1.0) * std::pow(s, p - 2.0); };
  return m;
}

YoungFunction young_power_scaled(double c, double p) {
  if (!(p > 1.0) || !(c > 0.0)) throw error("young_power_scaled: need c > 0, p > 1");
  YoungFunction m;
  m.name = "power_scaled";
  m.params = {{"c", c}, {"p", p}};
  m.eval = [c, p](double s) { return c * std::pow(s, p); };
  m.derivative = [c, p](double s) { return c * p * std::pow(s, p - 1.0); };
  m.second_derivative = [c, p](double s) { return c * p * (p - 1.0) * std::pow(s, p - 2.0); };
  return m;
}

YoungFunction young_power_sum(double a, double p, double b, double q) {
  if (!(p > 1.0) || !(q > 1.0)) throw error("young_power_sum: exponents must exceed 1");
  if (a < 0.0 || b < 0.0 || a + b == 0.0)
    throw error("young_power_sum: coefficients must be nonnegative, not both zero");
  YoungFunction m;
  m.name = "power_sum";
  m.params = {{"a", a}, {"p", p}, {"b", b}, {"q", q}};
  m.eval = [=](double s) { return a * std::pow(s, p) + b * std::pow(s, q); };
  m.derivative = [=](double s) {
    return a * p * std::pow(s, p - 1.0) + b * q * std::pow(s, q - 1.0);
  };
  m.second_derivative = [=](double s) {
    return a * p * (p - 1.0) * std::pow(s, p - 2.0) + b * q * (q - 1.0) * std::pow(s, q - 2.0);
  };
  return m;
}

YoungFunction young_scale(const YoungFunction& m, double rho) {
  if (!(rho > 0.0)) throw error("young_scale: factor must be positive");
  YoungFunction out;
  out.name = m.name + "_scaled";
  out.params = m.params;
  out.params["scale"] = rho * (out.params.count("scale") ? out.params["scale"] : 1.0);
  auto ev = m.eval;
  out.eval = [ev, rho](double s) { return rho * ev(s); };
  if (m.derivative) {
    auto d = m.derivative;
    out.derivative = [d, rho](double s) { return rho * d(s); };
  }
  if (m.second_derivative) {
    auto d2 = m.second_derivative;
    out.second_derivative = [d2, rho](double s) { return rho * d2(s); };
  }
  return out;
}

YoungFunction young_linear() {
  YoungFunction m;
  m.name = "linear";
  m.eval = [](double s) { return s; };
  m.derivative = [](double) { return 1.0; };
  m.second_derivative = [](double) { return 0.0; };
  return m;
}

ConjugateResult conjugate_detail(const YoungFunction& m, double s) {
  if (s < 0.0) throw error("conjugate: argument must be nonnegative");
  if (s == 0.0) return {0.0, 0.0};

  if (m.has_derivative()) {
    // Locate t* with m'(t*) = s. m' is nondecreasing (m convex).
    if (m.derivative(0.0) >= s) return {0.0, 0.0};  // supremum attained at the corner t = 0
    double lo = 0.0, hi = 1.0;
    while (m.derivative(hi) < s) {
      lo = hi;
      hi *= 2.0;
      if (hi > kOverflowGuard)
        throw growth_error("conjugate: derivative never reaches slope " + std::to_string(s) +
                           " (growth mismatch)");
    }
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double r = m.derivative(mid) - s;
      if (std::abs(r) <= kDerivativeTol * (1.0 + std::abs(s))) {
        return {s * mid - m.eval(mid), mid};
      }
      (r < 0.0 ? lo : hi) = mid;
      if (hi - lo <= 1e-15 * (1.0 + hi)) break;
    }
    const double t = 0.5 * (lo + hi);
    return {s * t - m.eval(t), t};
  }

  // Derivative-free path: grow the bracket until the objective decreases,
  // then refine with golden-section search.
  auto obj = [&](double t) { return s * t - m.eval(t); };
  double t_prev = 0.0, v_prev = 0.0;
  double t_cur = 1.0;
  double v_cur = obj(t_cur);
  while (v_cur >= v_prev) {
    t_prev = t_cur;
    v_prev = v_cur;
    t_cur *= 2.0;
    if (t_cur > kOverflowGuard)
      throw growth_error("conjugate: objective keeps increasing (growth mismatch)");
    v_cur = obj(t_cur);
  }
  // Maximum lies in [t_prev / 2, t_cur] (or [0, t_cur] early on).
  const double lo = t_prev > 1.0 ? t_prev * 0.25 : 0.0;
  const double t = golden_max(obj, lo, t_cur);
  const double v = obj(t);
  return {std::max(v, 0.0), t};
}

double conjugate(const YoungFunction& m, double s) { return conjugate_detail(m, s).value; }

YoungFunction conjugate_function(const YoungFunction& m) {
  YoungFunction out;
  out.name = m.name + "_conjugate";
  out.params = m.params;
  // Copy m by value into the closures: the result must outlive the argument.
  YoungFunction base = m;
  out.eval = [base](double s) { return conjugate_detail(base, s).value; };
  out.derivative = [base](double s) { return conjugate_detail(base, s).argmax; };
  return out;
}

double biconjugate(const YoungFunction& m, double s) {
  return conjugate(conjugate_function(m), s);
}

VecD gradient(const YoungFunction& m, const VecD& xi) {
  const double r = xi.norm();
  VecD g = VecD::Zero(xi.size());
  if (r == 0.0) return g;
  double slope;
  if (m.has_derivative()) {
    slope = m.derivative(r);
  } else {
    const double h = 1e-6 * (1.0 + r);
    const double lo = std::max(r - h, 0.0);
    slope = (m.eval(r + h) - m.eval(lo)) / (r + h - lo);
  }
  g = (slope / r) * xi;
  return g;
}

MatD gradient_jacobian(const YoungFunction& m, const VecD& xi, double delta) {
  const int d = static_cast<int>(xi.size());
  const double r = std::max(xi.norm(), delta);
  double d1, d2;
  if (m.derivative) {
    d1 = m.derivative(r);
  } else {
    const double h = 1e-6 * (1.0 + r);
    d1 = (m.eval(r + h) - m.eval(std::max(r - h, 0.0))) / (2.0 * h);
  }
  if (m.second_derivative) {
    d2 = m.second_derivative(r);
  } else {
    const double h = 1e-5 * (1.0 + r);
    const double lo = std::max(r - h, 0.0);
    double s_hi, s_lo;
    if (m.derivative) {
      s_hi = m.derivative(r + h);
      s_lo = m.derivative(lo);
    } else {
      const double hh = 1e-6 * (1.0 + r);
      s_hi = (m.eval(r + h + hh) - m.eval(r + h - hh)) / (2.0 * hh);
      s_lo = (m.eval(lo + hh) - m.eval(std::max(lo - hh, 0.0))) / (2.0 * hh);
    }
    d2 = (s_hi - s_lo) / (r + h - lo);
  }
  MatD J = MatD::Identity(d, d) * (d1 / r);
  if (xi.norm() > 0.0) {
    const VecD u = xi / xi.norm();
    J += (d2 - d1 / r) * (u * u.transpose());
  } else {
    J = MatD::Identity(d, d) * d2;
  }
  return J;
}

bool YoungPropertyReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const PropertyCheck& c) { return c.pass; });
}

YoungPropertyReport check_young_properties(const YoungFunction& m, const SampleSpec& spec) {
  YoungPropertyReport report;
  report.name = m.name;

  std::vector<double> s(spec.count);
  const double log_lo = std::log(spec.s_min), log_hi = std::log(spec.s_max);
  for (int i = 0; i < spec.count; ++i)
    s[i] = std::exp(log_lo + (log_hi - log_lo) * i / (spec.count - 1));

  // Value at zero and positivity away from zero.
  {
    PropertyCheck c{"zero_at_origin", true, std::abs(m.eval(0.0)), spec.tol};
    c.pass = c.worst <= spec.tol;
    report.checks.push_back(c);

    PropertyCheck pos{"positive_away_from_zero", true, 0.0, 0.0};
    for (double v : s)
      if (!(m.eval(v) > 0.0)) {
        pos.pass = false;
        pos.worst = std::min(pos.worst, m.eval(v));
      }
    report.checks.push_back(pos);
  }

  // Midpoint convexity on consecutive grid pairs and seeded random pairs.
  {
    PropertyCheck c{"midpoint_convexity", true, 0.0, spec.tol};
    auto probe = [&](double a, double b) {
      const double lhs = m.eval(0.5 * (a + b));
      const double rhs = 0.5 * (m.eval(a) + m.eval(b));
      const double margin = lhs - rhs - spec.tol * (1.0 + std::abs(rhs));
      if (margin > c.worst) c.worst = margin;
    };
    for (std::size_t i = 0; i + 1 < s.size(); ++i) probe(s[i], s[i + 1]);
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int i = 0; i < spec.random_pairs; ++i) {
      const double a = spec.s_min * std::pow(spec.s_max / spec.s_min, uni(rng));
      const double b = spec.s_min * std::pow(spec.s_max / spec.s_min, uni(rng));
      probe(a, b);
    }
    c.pass = c.worst <= 0.0;
    report.checks.push_back(c);
  }

  // m(s)/s nondecreasing along the grid.
  {
    PropertyCheck c{"ratio_monotone", true, 0.0, spec.tol};
    double prev = m.eval(s[0]) / s[0];
    for (std::size_t i = 1; i < s.size(); ++i) {
      const double cur = m.eval(s[i]) / s[i];
      const double drop = prev - cur - spec.tol * (1.0 + std::abs(prev));
      if (drop > c.worst) c.worst = drop;
      prev = cur;
    }
    c.pass = c.worst <= 0.0;
    report.checks.push_back(c);
  }

  // Superlinearity proxy: ratio must grow strictly across the sample range.
  {
    PropertyCheck c{"superlinear_growth", true, 0.0, 0.0};
    const double r_lo = m.eval(spec.s_min) / spec.s_min;
    const double r_hi = m.eval(spec.s_max) / spec.s_max;
    c.pass = r_lo < r_hi;
    c.worst = c.pass ? 0.0 : r_lo - r_hi;
    report.checks.push_back(c);
  }

  return report;
}

std::vector<double> grid_biconjugate(const std::vector<double>& r, const std::vector<double>& g) {
  const std::size_t n = r.size();
  if (g.size() != n || n < 2) throw error("grid_biconjugate: need matching grids of size >= 2");
  for (std::size_t i = 1; i < n; ++i)
    if (!(r[i] > r[i - 1])) throw error("grid_biconjugate: abscissae must be increasing");

  // Lower convex hull by monotone chain; hull vertices keep exact values.
  std::vector<std::size_t> hull;
  for (std::size_t i = 0; i < n; ++i) {
    while (hull.size() >= 2) {
      const std::size_t a = hull[hull.size() - 2], b = hull[hull.size() - 1];
      // Drop b if it lies on or above segment (a, i).
      const double cross =
          (r[b] - r[a]) * (g[i] - g[a]) - (g[b] - g[a]) * (r[i] - r[a]);
      if (cross <= 0.0)
        hull.pop_back();
      else
        break;
    }
    hull.push_back(i);
  }

  std::vector<double> env(n);
  std::size_t seg = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (seg + 1 < hull.size() && r[hull[seg + 1]] < r[i]) ++seg;
    if (hull[seg] == i || r[hull[seg]] == r[i]) {
      env[i] = g[hull[seg]];
    } else if (seg + 1 < hull.size()) {
      const std::size_t a = hull[seg], b = hull[seg + 1];
      if (r[i] == r[b]) {
        env[i] = g[b];
      } else {
        const double w = (r[i] - r[a]) / (r[b] - r[a]);
        env[i] = g[a] + w * (g[b] - g[a]);
      }
    } else {
      env[i] = g[hull[seg]];
    }
  }
  return env;
}

std::vector<double> grid_conjugate(const std::vector<double>& r, const std::vector<double>& g,
                                   const std::vector<double>& s) {
  const std::size_t n = r.size();
  if (g.size() != n) throw error("grid_conjugate: value/abscissa size mismatch");
  std::vector<double> out(s.size());
  for (std::size_t j = 0; j < s.size(); ++j) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) best = std::max(best, s[j] * r[i] - g[i]);
    out[j] = best;
  }
  return out;
}

YoungFunction young_power_envelope(double p_low, double p_high) {
  if (!(p_low > 1.0) || !(p_high >= p_low))
    throw error("young_power_envelope: need 1 < p_low <= p_high");
  if (p_high - p_low < 1e-12) return young_power_scaled(1.0, p_low);

  // Common tangent to s^p_high (tangency a <= 1) and s^p_low (tangency b >= 1):
  // slope k with equal intercepts (p_high-1) a^p_high = (p_low-1) b^p_low,
  // where a = (k/p_high)^{1/(p_high-1)}, b = (k/p_low)^{1/(p_low-1)}.
  auto intercept_gap = [&](double k) {
    const double a = std::pow(k / p_high, 1.0 / (p_high - 1.0));
    const double b = std::pow(k / p_low, 1.0 / (p_low - 1.0));
    return (p_high - 1.0) * std::pow(a, p_high) - (p_low - 1.0) * std::pow(b, p_low);
  };
  double k_lo = p_low, k_hi = p_high;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (k_lo + k_hi);
    (intercept_gap(mid) > 0.0 ? k_lo : k_hi) = mid;
  }
  const double k = 0.5 * (k_lo + k_hi);
  const double a = std::pow(k / p_high, 1.0 / (p_high - 1.0));
  const double b = std::pow(k / p_low, 1.0 / (p_low - 1.0));
  const double ya = std::pow(a, p_high);

  YoungFunction m;
  m.name = "power_envelope";
  m.params = {{"p_low", p_low}, {"p_high", p_high}, {"a", a}, {"b", b}, {"k", k}};
  m.eval = [=](double s) {
    if (s <= a) return std::pow(s, p_high);
    if (s >= b) return std::pow(s, p_low);
    return ya + k * (s - a);
  };
  m.derivative = [=](double s) {
    if (s <= a) return p_high * std::pow(s, p_high - 1.0);
    if (s >= b) return p_low * std::pow(s, p_low - 1.0);
    return k;
  };
  return m;
}

}  // namespace morpde
