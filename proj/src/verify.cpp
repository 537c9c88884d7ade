#include "morpde/verify.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <utility>

namespace morpde {

namespace {

/// Quintic smoothstep: 0 below 0, 1 above 1, 6s^5 - 15s^4 + 10s^3 between.
/// C^2 across both ends; the derivative peaks at 15/8 in the middle.
double smoothstep5(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  return ((6.0 * s - 15.0) * s + 10.0) * s * s * s;
}

double smoothstep5_derivative(double s) {
  if (s <= 0.0 || s >= 1.0) return 0.0;
  const double t = 1.0 - s;
  return 30.0 * s * s * t * t;
}

double bump_weight(double r2) {
  return r2 < 1.0 ? std::exp(-1.0 / (1.0 - r2)) : 0.0;
}

/// Average of a nodal level over the corners of cell c.
double cell_average(const SpaceTimeGrid& g, const DiscreteField& u, int level, int c) {
  if (g.dim() == 1) return 0.5 * (u.at(level, c) + u.at(level, c + 1));
  const int cx = c % g.axis(0).cells();
  const int cy = c / g.axis(0).cells();
  return 0.25 * (u.at(level, g.node_index(cx, cy)) + u.at(level, g.node_index(cx + 1, cy)) +
                 u.at(level, g.node_index(cx, cy + 1)) +
                 u.at(level, g.node_index(cx + 1, cy + 1)));
}

std::vector<double> cutoff_at_nodes(const SpaceTimeGrid& g, const Cutoff& psi) {
  if (!psi.value) throw config_error("cutoff has no value map");
  std::vector<double> out(static_cast<std::size_t>(g.node_count()));
  for (int i = 0; i < g.node_count(); ++i)
    out[static_cast<std::size_t>(i)] = psi.value(g.node_position(i));
  return out;
}

/// Assembles an energy series from per-node left sides and per-interval
/// right-side contributions (rhs is their running prefix sum).
EnergySeries assemble_series(const SpaceTimeGrid& g, const std::vector<double>& lhs,
                             const std::vector<double>& contrib, double base_scale,
                             std::string relation) {
  EnergySeries out;
  out.relation = std::move(relation);
  const int levels = g.time_levels();
  out.nodes.resize(static_cast<std::size_t>(levels));
  double run = 0.0;
  double scale = base_scale;
  double worst = 0.0;
  for (int n = 0; n < levels; ++n) {
    if (n > 0) run += contrib[static_cast<std::size_t>(n) - 1];
    EnergyReport& e = out.nodes[static_cast<std::size_t>(n)];
    e.t = g.time_node(n);
    e.lhs = lhs[static_cast<std::size_t>(n)];
    e.rhs = run;
    e.residual = e.lhs - e.rhs;
    scale = std::max({scale, std::abs(e.lhs), std::abs(e.rhs)});
    worst = std::max(worst, std::abs(e.residual));
  }
  out.scale = scale;
  out.max_abs_residual = worst;
  out.direction_ok = true;
  for (const EnergyReport& e : out.nodes)
    if (!(e.residual <= 1e-8 * scale)) out.direction_ok = false;
  return out;
}

}  // namespace

double truncate_scalar(double s, double k) { return std::clamp(s, -k, k); }

double truncation_primitive(double s, double k) {
  const double a = std::abs(s);
  if (a <= k) return 0.5 * s * s;
  return k * a - 0.5 * k * k;
}

DiscreteField truncate(const DiscreteField& f, double k) {
  if (!(k > 0.0)) throw config_error("truncation height must be positive");
  if (f.arity() != 1) throw config_error("truncation expects a scalar field");
  DiscreteField out = f;
  for (double& v : out.data()) v = truncate_scalar(v, k);
  return out;
}

Cutoff unit_cutoff(int dim) {
  if (dim != 1 && dim != 2) throw config_error("cutoff dimension must be 1 or 2");
  Cutoff c;
  c.name = "unit";
  c.value = [](const VecD&) { return 1.0; };
  c.gradient = [dim](const VecD&) { return VecD(VecD::Zero(dim)); };
  c.grad_bound = 0.0;
  return c;
}

Cutoff boundary_cutoff(const SpaceTimeGrid& g, int j) {
  if (j < 1) throw config_error("boundary cutoff index must be at least 1");
  const int dim = g.dim();
  double hmax = 0.0;
  std::vector<double> lo(static_cast<std::size_t>(dim)), hi(static_cast<std::size_t>(dim));
  for (int a = 0; a < dim; ++a) {
    hmax = std::max(hmax, g.axis(a).h());
    lo[static_cast<std::size_t>(a)] = g.axis(a).lo;
    hi[static_cast<std::size_t>(a)] = g.axis(a).hi;
  }
  const double half = 1.0 / (2.0 * j);
  if (!(half >= hmax - 1e-12))
    throw config_error("boundary cutoff under-resolved: the ramp needs at least one mesh width");
  const double twoj = 2.0 * j;
  Cutoff c;
  c.name = "boundary_j" + std::to_string(j);
  c.grad_bound = 3.75 * j;  // max slope of the quintic ramp, 15/8, times 2j
  c.value = [dim, lo, hi, half, twoj](const VecD& x) {
    double d = std::numeric_limits<double>::infinity();
    for (int a = 0; a < dim; ++a) {
      d = std::min(d, x[a] - lo[static_cast<std::size_t>(a)]);
      d = std::min(d, hi[static_cast<std::size_t>(a)] - x[a]);
    }
    return smoothstep5((d - half) * twoj);
  };
  c.gradient = [dim, lo, hi, half, twoj](const VecD& x) {
    double d = std::numeric_limits<double>::infinity();
    int best = 0;
    double sign = 1.0;
    for (int a = 0; a < dim; ++a) {
      const double dlo = x[a] - lo[static_cast<std::size_t>(a)];
      const double dhi = hi[static_cast<std::size_t>(a)] - x[a];
      if (dlo < d) { d = dlo; best = a; sign = 1.0; }
      if (dhi < d) { d = dhi; best = a; sign = -1.0; }
    }
    VecD out = VecD::Zero(dim);
    out[best] = sign * twoj * smoothstep5_derivative((d - half) * twoj);
    return out;
  };
  return c;
}

Cutoff interior_plateau_cutoff(const SpaceTimeGrid& g) {
  const int dim = g.dim();
  std::vector<double> lo(static_cast<std::size_t>(dim)), len(static_cast<std::size_t>(dim));
  for (int a = 0; a < dim; ++a) {
    lo[static_cast<std::size_t>(a)] = g.axis(a).lo;
    len[static_cast<std::size_t>(a)] = g.axis(a).length();
  }
  // Per-axis relative profile: 0 outside (1/4, 3/4), 1 on [3/8, 5/8],
  // quintic ramps of width 1/8 between.
  auto profile = [](double xi) {
    if (xi <= 0.25 || xi >= 0.75) return 0.0;
    if (xi < 0.375) return smoothstep5((xi - 0.25) * 8.0);
    if (xi <= 0.625) return 1.0;
    return smoothstep5((0.75 - xi) * 8.0);
  };
  auto profile_derivative = [](double xi) {
    if (xi <= 0.25 || xi >= 0.75) return 0.0;
    if (xi < 0.375) return 8.0 * smoothstep5_derivative((xi - 0.25) * 8.0);
    if (xi <= 0.625) return 0.0;
    return -8.0 * smoothstep5_derivative((0.75 - xi) * 8.0);
  };
  Cutoff c;
  c.name = "interior_plateau";
  double bound = 0.0;
  for (int a = 0; a < dim; ++a) bound += 15.0 / len[static_cast<std::size_t>(a)];
  c.grad_bound = bound;
  c.value = [dim, lo, len, profile](const VecD& x) {
    double v = 1.0;
    for (int a = 0; a < dim; ++a)
      v *= profile((x[a] - lo[static_cast<std::size_t>(a)]) / len[static_cast<std::size_t>(a)]);
    return v;
  };
  c.gradient = [dim, lo, len, profile, profile_derivative](const VecD& x) {
    std::array<double, 2> vals{1.0, 1.0};
    for (int a = 0; a < dim; ++a)
      vals[static_cast<std::size_t>(a)] =
          profile((x[a] - lo[static_cast<std::size_t>(a)]) / len[static_cast<std::size_t>(a)]);
    VecD out = VecD::Zero(dim);
    for (int a = 0; a < dim; ++a) {
      const double xi = (x[a] - lo[static_cast<std::size_t>(a)]) / len[static_cast<std::size_t>(a)];
      double other = 1.0;
      for (int b = 0; b < dim; ++b)
        if (b != a) other *= vals[static_cast<std::size_t>(b)];
      out[a] = profile_derivative(xi) / len[static_cast<std::size_t>(a)] * other;
    }
    return out;
  };
  return c;
}

DiscreteField mollify_space(const DiscreteField& f, double eps) {
  const SpaceTimeGrid& g = f.grid();
  if (f.space_stagger() != SpaceStagger::Nodes)
    throw config_error("spatial mollifier expects a node-staggered field");
  if (!(eps > 0.0) || !std::isfinite(eps))
    throw config_error("mollifier radius must be positive and finite");
  const int dim = g.dim();
  double hmax = 0.0;
  for (int a = 0; a < dim; ++a) hmax = std::max(hmax, g.axis(a).h());
  if (!(eps >= 2.0 * hmax - 1e-12))
    throw config_error("mollifier radius under-resolved: need at least two mesh widths");

  // Offsets o with |o . h| < eps (strict), normalized bump weights.
  std::array<int, 2> omax{0, 0};
  for (int a = 0; a < dim; ++a) {
    const double h = g.axis(a).h();
    int m = static_cast<int>(std::ceil(eps / h)) - 1;
    while (m > 0 && m * h >= eps) --m;
    omax[static_cast<std::size_t>(a)] = std::max(m, 0);
  }
  struct Offset {
    int ox, oy;
    double w;
  };
  std::vector<Offset> stencil;
  double wsum = 0.0;
  const int oy_lo = dim == 2 ? -omax[1] : 0, oy_hi = dim == 2 ? omax[1] : 0;
  for (int oy = oy_lo; oy <= oy_hi; ++oy) {
    for (int ox = -omax[0]; ox <= omax[0]; ++ox) {
      const double rx = ox * g.axis(0).h() / eps;
      const double ry = dim == 2 ? oy * g.axis(1).h() / eps : 0.0;
      const double w = bump_weight(rx * rx + ry * ry);
      if (w <= 0.0) continue;
      stencil.push_back({ox, oy, w});
      wsum += w;
    }
  }
  for (Offset& s : stencil) s.w /= wsum;

  // Nodes closer than eps to the boundary belong to the restricted domain and
  // are set to zero; everywhere else the stencil stays inside the grid.
  std::array<int, 2> margin{0, 0};
  for (int a = 0; a < dim; ++a) {
    const int m = static_cast<int>(std::ceil(eps * (1.0 - 1e-12) / g.axis(a).h()));
    margin[static_cast<std::size_t>(a)] =
        std::max(m, omax[static_cast<std::size_t>(a)]);
  }

  DiscreteField out(f.grid_ptr(), SpaceStagger::Nodes, f.time_stagger(), f.arity());
  const int nx = g.axis(0).nodes;
  const int ny = dim == 2 ? g.axis(1).nodes : 1;
  const int arity = f.arity();
  for (int n = 0; n < f.time_count(); ++n) {
    for (int iy = 0; iy < ny; ++iy) {
      for (int ix = 0; ix < nx; ++ix) {
        const int i = iy * nx + ix;
        const bool interior =
            ix >= margin[0] && ix <= nx - 1 - margin[0] &&
            (dim == 1 || (iy >= margin[1] && iy <= ny - 1 - margin[1]));
        if (!interior) {
          for (int k = 0; k < arity; ++k) out.at(n, i, k) = 0.0;
          continue;
        }
        for (int k = 0; k < arity; ++k) {
          double acc = 0.0;
          for (const Offset& s : stencil)
            acc += s.w * f.at(n, (iy + s.oy) * nx + (ix + s.ox), k);
          out.at(n, i, k) = acc;
        }
      }
    }
  }
  return out;
}

DiscreteField mollify_time(const DiscreteField& f, double eps, TimeExtension ext, int q) {
  if (!(eps > 0.0) || !std::isfinite(eps))
    throw config_error("mollifier radius must be positive and finite");
  if (q < 1) throw config_error("time mollifier needs at least one quadrature point");
  const SpaceTimeGrid& g = f.grid();
  const double T = g.horizon();

  // Midpoint lattice on (-eps, eps) with normalized bump weights; the lattice
  // never touches the kernel's vanishing endpoints.
  std::vector<double> shift(static_cast<std::size_t>(q)), weight(static_cast<std::size_t>(q));
  double wsum = 0.0;
  for (int k = 0; k < q; ++k) {
    const double s = -eps + (k + 0.5) * (2.0 * eps / q);
    const double r = s / eps;
    shift[static_cast<std::size_t>(k)] = s;
    weight[static_cast<std::size_t>(k)] = bump_weight(r * r);
    wsum += weight[static_cast<std::size_t>(k)];
  }
  for (double& w : weight) w /= wsum;

  const int rows = f.time_count();
  std::vector<double> times(static_cast<std::size_t>(rows));
  for (int n = 0; n < rows; ++n) times[static_cast<std::size_t>(n)] = f.t_at(n);

  const std::size_t row_len =
      static_cast<std::size_t>(f.space_count()) * static_cast<std::size_t>(f.arity());
  DiscreteField out(f.grid_ptr(), f.space_stagger(), f.time_stagger(), f.arity());
  std::vector<double> acc(row_len);
  auto add_row = [&](int row, double scale) {
    const double* src = f.data().data() + static_cast<std::size_t>(row) * row_len;
    for (std::size_t j = 0; j < row_len; ++j) acc[j] += scale * src[j];
  };
  for (int n = 0; n < rows; ++n) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int k = 0; k < q; ++k) {
      const double w = weight[static_cast<std::size_t>(k)];
      const double t = times[static_cast<std::size_t>(n)] + shift[static_cast<std::size_t>(k)];
      if (t > T) continue;  // zero beyond the horizon
      if (t < 0.0) {
        if (ext == TimeExtension::InitialThenZero) add_row(0, w);
        continue;
      }
      if (t <= times.front()) {
        add_row(0, w);
      } else if (t >= times.back()) {
        add_row(rows - 1, w);
      } else {
        const auto it = std::upper_bound(times.begin(), times.end(), t);
        const int hi = static_cast<int>(it - times.begin());
        const int lo = hi - 1;
        const double lam = (t - times[static_cast<std::size_t>(lo)]) /
                           (times[static_cast<std::size_t>(hi)] - times[static_cast<std::size_t>(lo)]);
        add_row(lo, w * (1.0 - lam));
        add_row(hi, w * lam);
      }
    }
    double* dst = out.data().data() + static_cast<std::size_t>(n) * row_len;
    std::copy(acc.begin(), acc.end(), dst);
  }
  return out;
}

DiagnosticCurve approximation_diagnostic(const Solution& sol, const NFunction& M,
                                         double k, const Cutoff& psi,
                                         const std::vector<double>& eps_list) {
  if (!(k > 0.0)) throw config_error("truncation height must be positive");
  if (eps_list.empty()) throw config_error("diagnostic needs at least one radius");
  for (std::size_t i = 0; i + 1 < eps_list.size(); ++i)
    if (!(eps_list[i + 1] < eps_list[i]))
      throw config_error("diagnostic radii must decrease strictly");
  const SpaceTimeGrid& g = *sol.grid;
  if (M.dim != g.dim()) throw config_error("family dimension must match the grid");
  const int nodes = g.node_count();
  const int levels = g.time_levels();
  const int cells = g.cell_count();
  const int dim = g.dim();
  const std::vector<double> psiv = cutoff_at_nodes(g, psi);

  // T_k(field) psi as a nodal scalar field.
  auto localize = [&](const DiscreteField& field) {
    DiscreteField z(sol.grid, SpaceStagger::Nodes, TimeStagger::Levels, 1);
    for (int n = 0; n < levels; ++n)
      for (int i = 0; i < nodes; ++i)
        z.at(n, i) = truncate_scalar(field.at(n, i), k) * psiv[static_cast<std::size_t>(i)];
    return z;
  };
  // Per-level discrete gradients of a nodal scalar field, as cells x levels.
  auto per_level_gradients = [&](const DiscreteField& scalar) {
    DiscreteField grads(sol.grid, SpaceStagger::Cells, TimeStagger::Levels, dim);
    for (int n = 0; n < levels; ++n) {
      const std::span<const double> level(
          scalar.data().data() + static_cast<std::size_t>(n) * static_cast<std::size_t>(nodes),
          static_cast<std::size_t>(nodes));
      const std::vector<VecD> gz = discrete_gradient(g, level);
      for (int c = 0; c < cells; ++c)
        for (int a = 0; a < dim; ++a) grads.at(n, c, a) = gz[static_cast<std::size_t>(c)][a];
    }
    return grads;
  };

  const DiscreteField reference = per_level_gradients(localize(sol.u));
  DiagnosticCurve out;
  for (const double eps : eps_list) {
    const DiscreteField u_eps =
        mollify_time(mollify_space(sol.u, eps), eps, TimeExtension::InitialThenZero);
    const DiscreteField z_eps = mollify_time(mollify_space(localize(u_eps), eps), eps,
                                             TimeExtension::InitialThenZero);
    const DiscreteField smoothed = per_level_gradients(z_eps);
    out.eps.push_back(eps);
    out.distance_full.push_back(modular_distance(M, smoothed, reference, 1.0));
    out.distance_half.push_back(modular_distance(M, smoothed, reference, 0.5));
  }
  out.trend_ok = out.distance_full.back() <= out.distance_full.front() &&
                 out.distance_half.back() <= out.distance_half.front();
  return out;
}

EnergySeries global_energy_series(const Solution& sol, const ScalarMap& f, bool isotropic) {
  const SpaceTimeGrid& g = *sol.grid;
  const std::vector<double> w = nodal_weights(g);
  const int nodes = g.node_count();
  const int levels = g.time_levels();
  const int intervals = g.time_intervals();
  const int cells = g.cell_count();
  const double vol = g.cell_volume();

  std::vector<double> lhs(static_cast<std::size_t>(levels));
  for (int n = 0; n < levels; ++n)
    lhs[static_cast<std::size_t>(n)] =
        tree_sum_map(static_cast<std::size_t>(nodes), [&](std::size_t i) {
          const double a = sol.u.at(n, static_cast<int>(i));
          const double b = sol.u.at(0, static_cast<int>(i));
          return w[i] * 0.5 * (a * a - b * b);
        });

  std::vector<double> contrib(static_cast<std::size_t>(intervals));
  for (int m = 0; m < intervals; ++m) {
    const double dissipation =
        tree_sum_map(static_cast<std::size_t>(cells), [&](std::size_t c) {
          return vol * sol.flux.vec_at(m, static_cast<int>(c))
                           .dot(sol.gradient.vec_at(m, static_cast<int>(c)));
        });
    const double t_mid = g.time_mid(m);
    const double work =
        f ? tree_sum_map(static_cast<std::size_t>(nodes), [&](std::size_t i) {
              return w[i] * f(t_mid, g.node_position(static_cast<int>(i))) *
                     sol.u.at(m + 1, static_cast<int>(i));
            })
          : 0.0;
    contrib[static_cast<std::size_t>(m)] = g.dt(m) * (work - dissipation);
  }

  const double base = tree_sum_map(static_cast<std::size_t>(nodes), [&](std::size_t i) {
    const double b = sol.u.at(0, static_cast<int>(i));
    return w[i] * 0.5 * b * b;
  });
  return assemble_series(g, lhs, contrib, base,
                         isotropic ? "equality expected" : "inequality expected");
}

EnergySeries local_energy_series(const Solution& sol, const ScalarMap& f,
                                 const Cutoff& psi, double k) {
  if (!(k > 0.0)) throw config_error("truncation height must be positive");
  const SpaceTimeGrid& g = *sol.grid;
  const std::vector<double> w = nodal_weights(g);
  const std::vector<double> psiv = cutoff_at_nodes(g, psi);
  const int nodes = g.node_count();
  const int levels = g.time_levels();
  const int intervals = g.time_intervals();
  const int cells = g.cell_count();
  const double vol = g.cell_volume();

  std::vector<double> lhs(static_cast<std::size_t>(levels));
  for (int n = 0; n < levels; ++n)
    lhs[static_cast<std::size_t>(n)] =
        tree_sum_map(static_cast<std::size_t>(nodes), [&](std::size_t i) {
          return w[i] * psiv[i] *
                 (truncation_primitive(sol.u.at(n, static_cast<int>(i)), k) -
                  truncation_primitive(sol.u.at(0, static_cast<int>(i)), k));
        });

  std::vector<double> z(static_cast<std::size_t>(nodes));
  std::vector<double> contrib(static_cast<std::size_t>(intervals));
  for (int m = 0; m < intervals; ++m) {
    for (int i = 0; i < nodes; ++i)
      z[static_cast<std::size_t>(i)] =
          truncate_scalar(sol.u.at(m + 1, i), k) * psiv[static_cast<std::size_t>(i)];
    const std::vector<VecD> gz = discrete_gradient(g, z);
    const double dissipation =
        tree_sum_map(static_cast<std::size_t>(cells), [&](std::size_t c) {
          return vol * sol.flux.vec_at(m, static_cast<int>(c)).dot(gz[c]);
        });
    const double t_mid = g.time_mid(m);
    const double work =
        f ? tree_sum_map(static_cast<std::size_t>(nodes), [&](std::size_t i) {
              return w[i] * f(t_mid, g.node_position(static_cast<int>(i))) * z[i];
            })
          : 0.0;
    contrib[static_cast<std::size_t>(m)] = g.dt(m) * (work - dissipation);
  }

  const double base = tree_sum_map(static_cast<std::size_t>(nodes), [&](std::size_t i) {
    return w[i] * psiv[i] * truncation_primitive(sol.u.at(0, static_cast<int>(i)), k);
  });
  return assemble_series(g, lhs, contrib, base, "inequality expected");
}

DecayCurve boundary_modular_decay(const Solution& sol, const NFunction& M,
                                  const std::vector<int>& j_list, double c_scale) {
  if (j_list.empty()) throw config_error("decay study needs at least one cutoff index");
  if (!(c_scale > 0.0)) throw config_error("normalization scale must be positive");
  const SpaceTimeGrid& g = *sol.grid;
  if (M.dim != g.dim()) throw config_error("family dimension must match the grid");
  const int cells = g.cell_count();
  const int intervals = g.time_intervals();
  const int dim = g.dim();

  DecayCurve out;
  out.c_u = c_scale * luxemburg_norm(M, sol.gradient);
  const double denom = out.c_u > 0.0 ? out.c_u : 1.0;
  for (const int j : j_list) {
    const Cutoff psi = boundary_cutoff(g, j);
    DiscreteField field(sol.grid, SpaceStagger::Cells, TimeStagger::Intervals, dim);
    for (int c = 0; c < cells; ++c) {
      const VecD gp = psi.gradient(g.cell_center(c));
      for (int n = 0; n < intervals; ++n) {
        const double ubar = cell_average(g, sol.u, n + 1, c);
        for (int a = 0; a < dim; ++a) field.at(n, c, a) = gp[a] * ubar / denom;
      }
    }
    out.j.push_back(j);
    out.value.push_back(modular(M, field, 1.0));
  }
  out.decreasing = true;
  for (std::size_t i = 0; i + 1 < out.value.size(); ++i)
    if (!(out.value[i + 1] <= out.value[i] * (1.0 + 1e-12))) out.decreasing = false;
  out.last_over_first = out.value.front() > 0.0 ? out.value.back() / out.value.front() : 0.0;
  return out;
}

UniquenessReport uniqueness_probe(const ProblemSpec& spec, const SolverConfig& cfg) {
  SolverConfig ca = cfg;
  ca.init = SolverConfig::Init::PreviousLevel;
  SolverConfig cb = cfg;
  cb.init = SolverConfig::Init::Zero;
  cb.theta0 = std::max(cfg.theta0 / 10.0, cfg.theta_min);
  const Solution A = solve(spec, ca);
  const Solution B = solve(spec, cb);

  const SpaceTimeGrid& g = *spec.grid;
  const std::vector<double> w = nodal_weights(g);
  const int nodes = g.node_count();
  const int levels = g.time_levels();
  const int intervals = g.time_intervals();
  const int cells = g.cell_count();
  const double vol = g.cell_volume();

  UniquenessReport out;
  out.l2l2_diff = std::sqrt(std::max(
      0.0, tree_sum_map(static_cast<std::size_t>(intervals), [&](std::size_t m) {
        const int mi = static_cast<int>(m);
        return g.dt(mi) * tree_sum_map(static_cast<std::size_t>(nodes), [&](std::size_t i) {
                 const double d =
                     A.u.at(mi + 1, static_cast<int>(i)) - B.u.at(mi + 1, static_cast<int>(i));
                 return w[i] * d * d;
               });
      })));
  for (int n = 0; n < levels; ++n)
    for (int i = 0; i < nodes; ++i)
      out.sup_diff = std::max(out.sup_diff, std::abs(A.u.at(n, i) - B.u.at(n, i)));
  out.monotone_pairing =
      tree_sum_map(static_cast<std::size_t>(intervals), [&](std::size_t m) {
        const int mi = static_cast<int>(m);
        return g.dt(mi) * tree_sum_map(static_cast<std::size_t>(cells), [&](std::size_t c) {
                 const int ci = static_cast<int>(c);
                 const VecD df = A.flux.vec_at(mi, ci) - B.flux.vec_at(mi, ci);
                 const VecD dg = A.gradient.vec_at(mi, ci) - B.gradient.vec_at(mi, ci);
                 return vol * df.dot(dg);
               });
      });
  return out;
}

OrderStudy convergence_study(
    const std::function<ProblemSpec(int nodes, int steps)>& make_problem,
    const SolverConfig& cfg, const std::function<double(double, const VecD&)>& exact,
    const std::vector<int>& node_counts, const std::vector<int>& step_counts) {
  if (!make_problem || !exact)
    throw config_error("convergence study needs a problem factory and an exact solution");
  if (node_counts.size() < 3 || step_counts.size() < 3)
    throw config_error("convergence study needs at least three resolutions per axis");
  for (std::size_t i = 0; i + 1 < node_counts.size(); ++i)
    if (node_counts[i + 1] - 1 != 2 * (node_counts[i] - 1))
      throw config_error("node counts must double the cell count at every refinement");
  for (std::size_t i = 0; i + 1 < step_counts.size(); ++i)
    if (step_counts[i + 1] != 2 * step_counts[i])
      throw config_error("step counts must double at every refinement");

  std::map<std::pair<int, int>, double> cache;
  auto error_at = [&](int nodes, int steps) {
    const auto key = std::make_pair(nodes, steps);
    const auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    const ProblemSpec spec = make_problem(nodes, steps);
    const Solution sol = solve(spec, cfg);
    const SpaceTimeGrid& g = *spec.grid;
    const int last = g.time_levels() - 1;
    const double T = g.horizon();
    double e = 0.0;
    for (int i = 0; i < g.node_count(); ++i)
      e = std::max(e, std::abs(sol.u.at(last, i) - exact(T, g.node_position(i))));
    cache.emplace(key, e);
    return e;
  };

  OrderStudy out;
  out.node_counts = node_counts;
  out.step_counts = step_counts;
  for (const int n : node_counts) out.h_errors.push_back(error_at(n, step_counts.back()));
  for (const int s : step_counts) out.dt_errors.push_back(error_at(node_counts.back(), s));

  // Consecutive error differences cancel the resolution-independent floor
  // (the fixed counterpart resolution, the theta_min bias); the order is the
  // log2 ratio of the last two differences.
  const auto order_from = [](const std::vector<double>& e) {
    const std::size_t n = e.size();
    const double d0 = e[n - 3] - e[n - 2];
    const double d1 = e[n - 2] - e[n - 1];
    if (!(d0 > 0.0) || !(d1 > 0.0)) return 0.0;
    return std::log2(d0 / d1);
  };
  out.spatial_order = order_from(out.h_errors);
  out.temporal_order = order_from(out.dt_errors);
  return out;
}

}  // namespace morpde
