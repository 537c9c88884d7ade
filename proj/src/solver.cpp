#include "morpde/solver.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

namespace morpde {

namespace {

/// Per-cell gradient stencil: grad v |_cell = sum_k coef[k] * v[nodes[k]].
struct CellStencil {
  int count = 0;
  std::array<int, 4> nodes{};
  std::array<VecD, 4> coef{};
};

CellStencil make_stencil(const SpaceTimeGrid& g, int cell) {
  CellStencil st;
  if (g.dim() == 1) {
    const double inv_h = 1.0 / g.axis(0).h();
    st.count = 2;
    st.nodes[0] = cell;
    st.nodes[1] = cell + 1;
    st.coef[0] = vec1(-inv_h);
    st.coef[1] = vec1(inv_h);
  } else {
    const int ncx = g.axis(0).cells();
    const int cx = cell % ncx;
    const int cy = cell / ncx;
    const double gx = 0.5 / g.axis(0).h();
    const double gy = 0.5 / g.axis(1).h();
    st.count = 4;
    st.nodes[0] = g.node_index(cx, cy);
    st.nodes[1] = g.node_index(cx + 1, cy);
    st.nodes[2] = g.node_index(cx, cy + 1);
    st.nodes[3] = g.node_index(cx + 1, cy + 1);
    st.coef[0] = vec2(-gx, -gy);
    st.coef[1] = vec2(gx, -gy);
    st.coef[2] = vec2(-gx, gy);
    st.coef[3] = vec2(gx, gy);
  }
  return st;
}

std::vector<CellStencil> all_stencils(const SpaceTimeGrid& g) {
  std::vector<CellStencil> st(static_cast<std::size_t>(g.cell_count()));
  for (int c = 0; c < g.cell_count(); ++c)
    st[static_cast<std::size_t>(c)] = make_stencil(g, c);
  return st;
}

std::vector<VecD> gradient_from_stencils(const SpaceTimeGrid& g,
                                         const std::vector<CellStencil>& st,
                                         std::span<const double> level) {
  std::vector<VecD> out(st.size());
  for (std::size_t c = 0; c < st.size(); ++c) {
    VecD v = VecD::Zero(g.dim());
    for (int k = 0; k < st[c].count; ++k)
      v += st[c].coef[static_cast<std::size_t>(k)] * level[static_cast<std::size_t>(st[c].nodes[static_cast<std::size_t>(k)])];
    out[c] = v;
  }
  return out;
}

}  // namespace

std::vector<double> theta_schedule(const SolverConfig& cfg) {
  if (!(cfg.theta_min > 0.0) || !(cfg.theta0 >= cfg.theta_min) || !(cfg.theta0 <= 1.0))
    throw config_error("theta schedule requires 0 < theta_min <= theta0 <= 1");
  if (!(cfg.theta_ratio > 1.0))
    throw config_error("theta_ratio must exceed 1");
  std::vector<double> out;
  for (double t = cfg.theta0; t > cfg.theta_min * (1.0 + 1e-12); t /= cfg.theta_ratio)
    out.push_back(t);
  out.push_back(cfg.theta_min);
  return out;
}

std::vector<double> nodal_weights(const SpaceTimeGrid& g) {
  auto axis_w = [](const Axis& a, int i) {
    return (i == 0 || i == a.nodes - 1) ? 0.5 * a.h() : a.h();
  };
  std::vector<double> w(static_cast<std::size_t>(g.node_count()), 0.0);
  if (g.dim() == 1) {
    for (int i = 0; i < g.axis(0).nodes; ++i)
      w[static_cast<std::size_t>(i)] = axis_w(g.axis(0), i);
  } else {
    for (int iy = 0; iy < g.axis(1).nodes; ++iy)
      for (int ix = 0; ix < g.axis(0).nodes; ++ix)
        w[static_cast<std::size_t>(g.node_index(ix, iy))] =
            axis_w(g.axis(0), ix) * axis_w(g.axis(1), iy);
  }
  return w;
}

std::vector<VecD> discrete_gradient(const SpaceTimeGrid& g,
                                    std::span<const double> level) {
  if (static_cast<int>(level.size()) != g.node_count())
    throw invariant_error("discrete_gradient: level size does not match the node count");
  return gradient_from_stencils(g, all_stencils(g), level);
}

std::vector<double> discrete_divergence(const SpaceTimeGrid& g,
                                        const std::vector<VecD>& q) {
  if (static_cast<int>(q.size()) != g.cell_count())
    throw invariant_error("discrete_divergence: field size does not match the cell count");
  const auto st = all_stencils(g);
  const auto w = nodal_weights(g);
  const double vol = g.cell_volume();
  std::vector<double> out(static_cast<std::size_t>(g.node_count()), 0.0);
  for (std::size_t c = 0; c < st.size(); ++c)
    for (int k = 0; k < st[c].count; ++k)
      out[static_cast<std::size_t>(st[c].nodes[static_cast<std::size_t>(k)])] -=
          vol * q[c].dot(st[c].coef[static_cast<std::size_t>(k)]);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] /= w[i];
  return out;
}

StepResult step(const SpaceTimeGrid& g, const std::vector<double>& prev,
                int time_index, const RegularizedOperator& A, const ScalarMap& f,
                const SolverConfig& cfg, const std::vector<double>* initial_guess) {
  const int nn = g.node_count();
  const int nc = g.cell_count();
  if (static_cast<int>(prev.size()) != nn)
    throw invariant_error("step: previous level size does not match the node count");
  if (time_index < 0 || time_index >= g.time_intervals())
    throw config_error("step: time index out of range");
  if (!(cfg.newton_tol > 0.0) || cfg.max_newton < 1 || cfg.max_line_search < 1 ||
      cfg.max_picard < 1 || cfg.picard_fallback_after < 1)
    throw config_error("step: solver limits must be positive");

  const double t_eval = g.time_mid(time_index);  // coefficient sample time
  const double dt = g.dt(time_index);
  const double vol = g.cell_volume();
  const auto w = nodal_weights(g);
  const auto st = all_stencils(g);

  std::vector<int> interior_of(static_cast<std::size_t>(nn), -1);
  std::vector<int> node_of;
  node_of.reserve(static_cast<std::size_t>(nn));
  for (int i = 0; i < nn; ++i) {
    if (!g.boundary_node(i)) {
      interior_of[static_cast<std::size_t>(i)] = static_cast<int>(node_of.size());
      node_of.push_back(i);
    }
  }
  const int m = static_cast<int>(node_of.size());

  std::vector<double> base(prev);
  for (int i = 0; i < nn; ++i)
    if (g.boundary_node(i)) base[static_cast<std::size_t>(i)] = 0.0;

  std::vector<double> fval(static_cast<std::size_t>(nn), 0.0);
  if (f)
    for (int i = 0; i < nn; ++i)
      fval[static_cast<std::size_t>(i)] = f(t_eval, g.node_position(i));
  std::vector<VecD> xc(static_cast<std::size_t>(nc));
  for (int c = 0; c < nc; ++c) xc[static_cast<std::size_t>(c)] = g.cell_center(c);

  // State of the current iterate.
  std::vector<double> u(base);
  if (initial_guess) {
    if (static_cast<int>(initial_guess->size()) != nn)
      throw invariant_error("step: initial guess size does not match the node count");
    u = *initial_guess;
    for (int i = 0; i < nn; ++i)
      if (g.boundary_node(i)) u[static_cast<std::size_t>(i)] = 0.0;
  }

  std::vector<VecD> grad(static_cast<std::size_t>(nc)), acell(static_cast<std::size_t>(nc));
  std::vector<double> F(static_cast<std::size_t>(m), 0.0);

  auto eval_residual = [&](const std::vector<double>& uu, std::vector<VecD>& gr,
                           std::vector<VecD>& ac, std::vector<double>& Fi) -> double {
    gr = gradient_from_stencils(g, st, uu);
    for (int c = 0; c < nc; ++c)
      ac[static_cast<std::size_t>(c)] =
          A.eval(t_eval, xc[static_cast<std::size_t>(c)], gr[static_cast<std::size_t>(c)]);
    std::vector<double> scatter(static_cast<std::size_t>(nn), 0.0);
    for (int c = 0; c < nc; ++c)
      for (int k = 0; k < st[static_cast<std::size_t>(c)].count; ++k)
        scatter[static_cast<std::size_t>(st[static_cast<std::size_t>(c)].nodes[static_cast<std::size_t>(k)])] +=
            vol * ac[static_cast<std::size_t>(c)].dot(st[static_cast<std::size_t>(c)].coef[static_cast<std::size_t>(k)]);
    double res = 0.0;
    for (int j = 0; j < m; ++j) {
      const int i = node_of[static_cast<std::size_t>(j)];
      Fi[static_cast<std::size_t>(j)] =
          w[static_cast<std::size_t>(i)] * (uu[static_cast<std::size_t>(i)] - base[static_cast<std::size_t>(i)]) / dt +
          scatter[static_cast<std::size_t>(i)] -
          w[static_cast<std::size_t>(i)] * fval[static_cast<std::size_t>(i)];
      const double r = std::abs(Fi[static_cast<std::size_t>(j)]) / w[static_cast<std::size_t>(i)];
      if (!(r <= res)) res = r;  // NaN propagates into res
    }
    return res;
  };

  StepDiagnostics diag;
  diag.time_index = time_index;
  double res = m == 0 ? 0.0 : eval_residual(u, grad, acell, F);

  using Sparse = Eigen::SparseMatrix<double>;
  auto factorize = [&](bool newton, Eigen::SparseLU<Sparse>& lu) -> bool {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(nc) * 16 + static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j)
      trips.emplace_back(j, j, w[static_cast<std::size_t>(node_of[static_cast<std::size_t>(j)])] / dt);
    for (int c = 0; c < nc; ++c) {
      const auto& s = st[static_cast<std::size_t>(c)];
      MatD D;
      if (newton) {
        D = A.jacobian(t_eval, xc[static_cast<std::size_t>(c)], grad[static_cast<std::size_t>(c)]);
      } else {
        const double a = A.radial_coefficient(t_eval, xc[static_cast<std::size_t>(c)],
                                              grad[static_cast<std::size_t>(c)].norm());
        D = MatD::Identity(g.dim(), g.dim()) * a;
      }
      for (int ka = 0; ka < s.count; ++ka) {
        const int ia = interior_of[static_cast<std::size_t>(s.nodes[static_cast<std::size_t>(ka)])];
        if (ia < 0) continue;
        for (int kb = 0; kb < s.count; ++kb) {
          const int ib = interior_of[static_cast<std::size_t>(s.nodes[static_cast<std::size_t>(kb)])];
          if (ib < 0) continue;
          trips.emplace_back(ia, ib,
                             vol * s.coef[static_cast<std::size_t>(ka)].dot(D * s.coef[static_cast<std::size_t>(kb)]));
        }
      }
    }
    Sparse J(m, m);
    J.setFromTriplets(trips.begin(), trips.end());
    lu.compute(J);
    return lu.info() == Eigen::Success;
  };

  bool picard_mode = false;
  std::vector<VecD> grad_c(static_cast<std::size_t>(nc)), acell_c(static_cast<std::size_t>(nc));
  std::vector<double> F_c(static_cast<std::size_t>(m), 0.0);
  std::vector<double> ucand(static_cast<std::size_t>(nn), 0.0);

  while (m > 0 && !picard_mode && !(res <= cfg.newton_tol)) {
    if (diag.newton_iters >= cfg.max_newton) {
      if (cfg.picard_fallback) {
        picard_mode = true;
        break;
      }
      throw step_error("Newton iteration limit reached", time_index, res);
    }
    Eigen::SparseLU<Sparse> lu;
    if (!factorize(true, lu)) {
      if (cfg.picard_fallback) {
        picard_mode = true;
        break;
      }
      throw step_error("Newton matrix factorization failed", time_index, res);
    }
    Eigen::VectorXd rhs(m);
    for (int j = 0; j < m; ++j) rhs[j] = -F[static_cast<std::size_t>(j)];
    const Eigen::VectorXd d = lu.solve(rhs);
    ++diag.newton_iters;

    double lambda = 1.0;
    bool accepted = false;
    double best_res = std::numeric_limits<double>::infinity();
    double best_lambda = 0.0;
    for (int ls = 0; ls < cfg.max_line_search; ++ls) {
      ucand = u;
      for (int j = 0; j < m; ++j)
        ucand[static_cast<std::size_t>(node_of[static_cast<std::size_t>(j)])] += lambda * d[j];
      const double rc = eval_residual(ucand, grad_c, acell_c, F_c);
      if (rc <= cfg.newton_tol || rc <= res * (1.0 - 1e-4 * lambda)) {
        accepted = true;
        u.swap(ucand);
        grad.swap(grad_c);
        acell.swap(acell_c);
        F.swap(F_c);
        res = rc;
        break;
      }
      if (rc < best_res) {
        best_res = rc;
        best_lambda = lambda;
      }
      lambda *= 0.5;
    }
    if (accepted) continue;

    ++diag.line_search_failures;
    if (best_res < res) {
      // Sub-Armijo progress: keep the best iterate found and carry on.
      ucand = u;
      for (int j = 0; j < m; ++j)
        ucand[static_cast<std::size_t>(node_of[static_cast<std::size_t>(j)])] += best_lambda * d[j];
      res = eval_residual(ucand, grad, acell, F);
      u.swap(ucand);
    }
    if (diag.line_search_failures >= cfg.picard_fallback_after) {
      if (cfg.picard_fallback) {
        picard_mode = true;
        break;
      }
      throw step_error("line search failed repeatedly", time_index, res);
    }
  }

  if (picard_mode) {
    // Frozen-coefficient fixed-point iteration with Aitken dynamic
    // relaxation: the update direction is r_k = T(u_k) - u_k, and the
    // relaxation factor omega_k = -omega_{k-1} <r_{k-1}, r_k - r_{k-1}> /
    // ||r_k - r_{k-1}||^2 annihilates the dominant slow mode of the map
    // (degenerate fluxes make the plain iteration contract arbitrarily
    // slowly). A residual increase resets omega to 1.
    Eigen::VectorXd r_prev;
    double omega = 1.0;
    double res_prev = res;
    while (!(res <= cfg.newton_tol)) {
      if (diag.picard_iters >= cfg.max_picard)
        throw step_error("Picard fallback did not converge", time_index, res);
      Eigen::SparseLU<Sparse> lu;
      if (!factorize(false, lu))
        throw step_error("Picard matrix factorization failed", time_index, res);
      Eigen::VectorXd rhs(m);
      for (int j = 0; j < m; ++j) {
        const int i = node_of[static_cast<std::size_t>(j)];
        rhs[j] = w[static_cast<std::size_t>(i)] *
                 (base[static_cast<std::size_t>(i)] / dt + fval[static_cast<std::size_t>(i)]);
      }
      const Eigen::VectorXd unew = lu.solve(rhs);
      Eigen::VectorXd r_k(m);
      for (int j = 0; j < m; ++j)
        r_k[j] = unew[j] - u[static_cast<std::size_t>(node_of[static_cast<std::size_t>(j)])];
      if (r_prev.size() == m) {
        const Eigen::VectorXd dr = r_k - r_prev;
        const double den = dr.squaredNorm();
        if (den > 0.0) {
          const double cand = -omega * r_prev.dot(dr) / den;
          omega = std::isfinite(cand) ? std::clamp(cand, 0.05, 200.0) : 1.0;
        }
      }
      for (int j = 0; j < m; ++j)
        u[static_cast<std::size_t>(node_of[static_cast<std::size_t>(j)])] += omega * r_k[j];
      ++diag.picard_iters;
      res = eval_residual(u, grad, acell, F);
      if (!(res <= res_prev)) {
        omega = 1.0;
        r_prev.resize(0);  // restart the acceleration history
      } else {
        r_prev = r_k;
      }
      res_prev = res;
    }
  }
  diag.residual = res;

  // Per-step energy identity: pairing the residual with u itself gives
  //   1/2(||u||^2 - ||prev||^2 + ||u - prev||^2) + dt <A(grad u), grad u>
  //     - dt <f, u> = dt * sum_j u_j F_j,
  // so the left side is bounded by dt * res * ||u||_{L1} up to round-off.
  const double s_time = 0.5 * tree_sum_map(static_cast<std::size_t>(nn), [&](std::size_t i) {
    const double du = u[i] - base[i];
    return w[i] * (u[i] * u[i] - base[i] * base[i] + du * du);
  });
  const double s_flux = tree_sum_map(static_cast<std::size_t>(nc), [&](std::size_t c) {
    return vol * acell[c].dot(grad[c]);
  });
  const double s_source = tree_sum_map(static_cast<std::size_t>(nn), [&](std::size_t i) {
    return w[i] * fval[i] * u[i];
  });
  const double u_l1 = tree_sum_map(static_cast<std::size_t>(nn), [&](std::size_t i) {
    return w[i] * std::abs(u[i]);
  });
  diag.energy_residual = s_time + dt * s_flux - dt * s_source;
  const double allowance = dt * res * u_l1 + 1e-10;
  if (!(std::abs(diag.energy_residual) <= allowance))
    throw invariant_error("per-step energy identity violated at time index " +
                          std::to_string(time_index));

  return StepResult{std::move(u), diag};
}

double theta_term_norm(const Solution& sol, double theta, const YoungFunction& m) {
  const auto& g = *sol.grid;
  const double vol = g.cell_volume();
  const std::size_t nc = static_cast<std::size_t>(g.cell_count());
  return tree_sum_map(static_cast<std::size_t>(g.time_intervals()), [&](std::size_t n) {
    const double dt = g.dt(static_cast<int>(n));
    return dt * tree_sum_map(nc, [&](std::size_t c) {
      const VecD gm = gradient(m, sol.gradient.vec_at(static_cast<int>(n), static_cast<int>(c)));
      return vol * theta * gm.norm();
    });
  });
}

Solution solve(const ProblemSpec& spec, const SolverConfig& cfg) {
  if (!spec.grid) throw config_error("solve: problem has no grid");
  const auto& g = *spec.grid;
  if (spec.op.governing.dim != g.dim())
    throw config_error("solve: operator dimension does not match the grid");
  if (!spec.op.eval) throw config_error("solve: operator has no flux map");

  const int nn = g.node_count();
  const int nc = g.cell_count();
  const int nt = g.time_intervals();
  const double vol = g.cell_volume();
  const auto w = nodal_weights(g);
  const auto st = all_stencils(g);
  std::vector<VecD> xc(static_cast<std::size_t>(nc));
  for (int c = 0; c < nc; ++c) xc[static_cast<std::size_t>(c)] = g.cell_center(c);

  std::vector<double> u0(static_cast<std::size_t>(nn), 0.0);
  if (spec.initial_nodal) {
    if (static_cast<int>(spec.initial_nodal->size()) != nn)
      throw config_error("solve: initial_nodal size does not match the node count");
    u0 = *spec.initial_nodal;
  } else if (spec.initial) {
    for (int i = 0; i < nn; ++i)
      u0[static_cast<std::size_t>(i)] = spec.initial(g.node_position(i));
  }
  for (int i = 0; i < nn; ++i) {
    if (g.boundary_node(i))
      u0[static_cast<std::size_t>(i)] = 0.0;
    else if (!std::isfinite(u0[static_cast<std::size_t>(i)]))
      throw config_error("solve: initial data is not finite");
  }

  const auto thetas = theta_schedule(cfg);
  std::vector<std::vector<double>> traj, prev_traj;
  std::vector<StepDiagnostics> stage_steps;
  Solution sol(spec.grid);
  const std::vector<double> zero(static_cast<std::size_t>(nn), 0.0);

  for (std::size_t s = 0; s < thetas.size(); ++s) {
    const RegularizedOperator R = regularize(spec.op, thetas[s]);
    traj.assign(static_cast<std::size_t>(nt) + 1, {});
    traj[0] = u0;
    stage_steps.clear();
    stage_steps.reserve(static_cast<std::size_t>(nt));
    for (int n = 0; n < nt; ++n) {
      const std::vector<double>* guess = nullptr;
      if (s > 0)
        guess = &prev_traj[static_cast<std::size_t>(n) + 1];
      else if (cfg.init == SolverConfig::Init::Zero)
        guess = &zero;
      StepResult r = step(g, traj[static_cast<std::size_t>(n)], n, R, spec.source, cfg, guess);
      traj[static_cast<std::size_t>(n) + 1] = std::move(r.u);
      stage_steps.push_back(r.diag);
    }

    // Stage trace: gradient/flux fields of this stage and the cascade metrics.
    DiscreteField grad_field(spec.grid, SpaceStagger::Cells, TimeStagger::Intervals, g.dim());
    DiscreteField flux_field(spec.grid, SpaceStagger::Cells, TimeStagger::Intervals, g.dim());
    std::vector<std::vector<VecD>> grads(static_cast<std::size_t>(nt));
    for (int n = 0; n < nt; ++n) {
      grads[static_cast<std::size_t>(n)] =
          gradient_from_stencils(g, st, traj[static_cast<std::size_t>(n) + 1]);
      const double tm = g.time_mid(n);
      for (int c = 0; c < nc; ++c) {
        const VecD& gc = grads[static_cast<std::size_t>(n)][static_cast<std::size_t>(c)];
        const VecD a = spec.op.eval(tm, xc[static_cast<std::size_t>(c)], gc);
        for (int k = 0; k < g.dim(); ++k) {
          grad_field.at(n, c, k) = gc[k];
          flux_field.at(n, c, k) = a[k];
        }
      }
    }

    ThetaStage ts;
    ts.theta = thetas[s];
    for (const auto& d : stage_steps)
      ts.max_newton_iters = std::max(ts.max_newton_iters, d.newton_iters);
    ts.theta_term = tree_sum_map(static_cast<std::size_t>(nt), [&](std::size_t n) {
      return g.dt(static_cast<int>(n)) *
             tree_sum_map(static_cast<std::size_t>(nc), [&](std::size_t c) {
               const VecD gm = gradient(R.m, grads[n][c]);
               return vol * ts.theta * gm.norm();
             });
    });
    // m*(m'(r)) = r m'(r) - m(r): the equality case of the Young inequality,
    // exact for the differentiable dominating function.
    ts.conjugate_theta_term = tree_sum_map(static_cast<std::size_t>(nt), [&](std::size_t n) {
      return g.dt(static_cast<int>(n)) *
             tree_sum_map(static_cast<std::size_t>(nc), [&](std::size_t c) {
               const double r = grads[n][c].norm();
               const double md = gradient(R.m, grads[n][c]).norm();
               return vol * ts.theta * (r * md - R.m(r));
             });
    });
    double sup_l2 = 0.0;
    for (int n = 0; n <= nt; ++n) {
      const auto& lvl = traj[static_cast<std::size_t>(n)];
      const double e2 = tree_sum_map(static_cast<std::size_t>(nn), [&](std::size_t i) {
        return w[i] * lvl[i] * lvl[i];
      });
      sup_l2 = std::max(sup_l2, std::sqrt(std::max(0.0, e2)));
    }
    ts.sup_l2 = sup_l2;
    ts.modular_gradient = modular(spec.op.governing, grad_field, 1.0);
    ts.conjugate_modular_flux = modular_conjugate(spec.op.governing, flux_field, 1.0);
    sol.theta_trace.push_back(ts);

    if (s + 1 == thetas.size()) {
      for (int n = 0; n <= nt; ++n)
        for (int i = 0; i < nn; ++i)
          sol.u.at(n, i) = traj[static_cast<std::size_t>(n)][static_cast<std::size_t>(i)];
      sol.gradient.data() = grad_field.data();
      sol.flux.data() = flux_field.data();
      sol.steps = stage_steps;
      sol.final_theta = thetas[s];
    }
    prev_traj = std::move(traj);
  }
  return sol;
}

}  // namespace morpde
