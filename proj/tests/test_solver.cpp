#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <vector>

#include "morpde/solver.hpp"

using namespace morpde;

namespace {

constexpr double kPi = 3.14159265358979323846;

ScalarMap constant_exponent(double p) {
  return [p](double, const VecD&) { return p; };
}

MonotoneOperator heat_operator(int dim = 1) {
  VariableExponentOptions opt;
  opt.p_minus = 2.0;
  opt.p_plus = 2.0;
  opt.dim = dim;
  return op_variable_exponent(constant_exponent(2.0), opt);
}

/// Discrete eigenvalue of the 1-D three-point Laplacian for the mode
/// sin(pi x) on mesh width h: lambda_h = (4 / h^2) sin^2(pi h / 2).
double discrete_mode_eigenvalue(double h) {
  const double s = std::sin(0.5 * kPi * h);
  return 4.0 * s * s / (h * h);
}

double sup_level_error(const Solution& sol, int level,
                       const std::function<double(const VecD&)>& exact) {
  const auto& g = *sol.grid;
  double e = 0.0;
  for (int i = 0; i < g.node_count(); ++i)
    e = std::max(e, std::abs(sol.u.at(level, i) - exact(g.node_position(i))));
  return e;
}

double weighted_l2(const SpaceTimeGrid& g, const std::vector<double>& w,
                   const Solution& sol, int level) {
  double s = 0.0;
  for (int i = 0; i < g.node_count(); ++i) {
    const double v = sol.u.at(level, i);
    s += w[static_cast<std::size_t>(i)] * v * v;
  }
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("nodal weights integrate the box measure exactly") {
  const auto g1 = SpaceTimeGrid::create({Axis{9, 0.0, 2.0}}, 1.0, 4);
  const auto w1 = nodal_weights(*g1);
  double s1 = 0.0;
  for (double v : w1) s1 += v;
  CHECK(std::abs(s1 - 2.0) <= 1e-14);

  const auto g2 = SpaceTimeGrid::create({Axis{7, 0.0, 1.0}, Axis{5, -1.0, 1.0}}, 1.0, 4);
  const auto w2 = nodal_weights(*g2);
  double s2 = 0.0;
  for (double v : w2) s2 += v;
  CHECK(std::abs(s2 - 2.0) <= 1e-14);
  // Interior node: full product of mesh widths; corner: a quarter of it.
  CHECK(w2[static_cast<std::size_t>(g2->node_index(3, 2))] ==
        doctest::Approx((1.0 / 6.0) * 0.5).epsilon(1e-13));
  CHECK(w2[static_cast<std::size_t>(g2->node_index(0, 0))] ==
        doctest::Approx((1.0 / 12.0) * 0.25).epsilon(1e-13));
}

TEST_CASE("discrete gradient is exact on affine levels") {
  const auto g1 = SpaceTimeGrid::create({Axis{9, 0.0, 1.0}}, 1.0, 2);
  std::vector<double> lin(static_cast<std::size_t>(g1->node_count()));
  for (int i = 0; i < g1->node_count(); ++i)
    lin[static_cast<std::size_t>(i)] = 2.0 * g1->node_position(i)[0] + 1.0;
  for (const VecD& gv : discrete_gradient(*g1, lin))
    CHECK(std::abs(gv[0] - 2.0) <= 1e-13);

  const auto g2 = SpaceTimeGrid::create({Axis{6, 0.0, 1.0}, Axis{4, -1.0, 1.0}}, 1.0, 2);
  std::vector<double> aff(static_cast<std::size_t>(g2->node_count()));
  for (int i = 0; i < g2->node_count(); ++i) {
    const VecD x = g2->node_position(i);
    aff[static_cast<std::size_t>(i)] = 3.0 * x[0] + 4.0 * x[1] - 1.0;
  }
  for (const VecD& gv : discrete_gradient(*g2, aff)) {
    CHECK(std::abs(gv[0] - 3.0) <= 1e-13);
    CHECK(std::abs(gv[1] - 4.0) <= 1e-13);
  }
}

TEST_CASE("divergence is the negative adjoint of the gradient") {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);

  const auto check_grid = [&](std::shared_ptr<const SpaceTimeGrid> g) {
    const auto w = nodal_weights(*g);
    const double vol = g->cell_volume();
    for (int rep = 0; rep < 5; ++rep) {
      std::vector<VecD> q(static_cast<std::size_t>(g->cell_count()));
      for (auto& v : q) {
        v = VecD::Zero(g->dim());
        for (int k = 0; k < g->dim(); ++k) v[k] = uni(rng);
      }
      std::vector<double> v(static_cast<std::size_t>(g->node_count()));
      for (auto& x : v) x = uni(rng);

      const auto div = discrete_divergence(*g, q);
      const auto grad = discrete_gradient(*g, v);
      double s_nodes = 0.0;
      for (int i = 0; i < g->node_count(); ++i)
        s_nodes += w[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i)] *
                   div[static_cast<std::size_t>(i)];
      double s_cells = 0.0;
      for (int c = 0; c < g->cell_count(); ++c)
        s_cells += vol * q[static_cast<std::size_t>(c)].dot(grad[static_cast<std::size_t>(c)]);
      CHECK(std::abs(s_nodes + s_cells) <= 1e-13 * (1.0 + std::abs(s_nodes) + std::abs(s_cells)));
    }
  };

  check_grid(SpaceTimeGrid::create({Axis{9, 0.0, 1.0}}, 1.0, 2));
  check_grid(SpaceTimeGrid::create({Axis{7, 0.0, 1.0}, Axis{5, -1.0, 1.0}}, 1.0, 2));
}

TEST_CASE("trivial step: zero data returns zero without iterating") {
  const auto g = SpaceTimeGrid::create({Axis{17, 0.0, 1.0}}, 0.1, 1);
  const auto R = regularize(heat_operator(), 1e-2);
  const std::vector<double> prev(static_cast<std::size_t>(g->node_count()), 0.0);
  const auto r = step(*g, prev, 0, R, {}, SolverConfig{});
  CHECK(r.diag.newton_iters == 0);
  CHECK(r.diag.residual == 0.0);
  for (double v : r.u) CHECK(v == 0.0);
}

TEST_CASE("one implicit heat step matches the discrete eigenmode closed form") {
  const int nodes = 33;
  const double h = 1.0 / (nodes - 1);
  const double dt = 0.1;
  const auto g = SpaceTimeGrid::create({Axis{nodes, 0.0, 1.0}}, dt, 1);
  const auto R = regularize(heat_operator(), 0.0);  // identity flux, no extra term

  std::vector<double> prev(static_cast<std::size_t>(g->node_count()));
  for (int i = 0; i < g->node_count(); ++i)
    prev[static_cast<std::size_t>(i)] = std::sin(kPi * g->node_position(i)[0]);

  const auto r = step(*g, prev, 0, R, {}, SolverConfig{});

  // sin(pi x) is an exact eigenvector of the three-point stiffness matrix, so
  // the implicit step divides it by 1 + dt * lambda_h.
  const double shrink = 1.0 / (1.0 + dt * discrete_mode_eigenvalue(h));
  for (int i = 0; i < g->node_count(); ++i)
    CHECK(std::abs(r.u[static_cast<std::size_t>(i)] - shrink * prev[static_cast<std::size_t>(i)]) <= 1e-12);

  // Independent cross-check: dense solve of (I/dt + L) u = prev/dt with the
  // standard tridiagonal Laplacian, assembled from scratch.
  const int m = nodes - 2;
  Eigen::MatrixXd Amat = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd rhs(m);
  for (int j = 0; j < m; ++j) {
    Amat(j, j) = 1.0 / dt + 2.0 / (h * h);
    if (j > 0) Amat(j, j - 1) = -1.0 / (h * h);
    if (j + 1 < m) Amat(j, j + 1) = -1.0 / (h * h);
    rhs[j] = prev[static_cast<std::size_t>(j + 1)] / dt;
  }
  const Eigen::VectorXd dense = Amat.fullPivLu().solve(rhs);
  for (int j = 0; j < m; ++j)
    CHECK(std::abs(r.u[static_cast<std::size_t>(j + 1)] - dense[j]) <= 1e-12);
}

TEST_CASE("implicit heat solve tracks the analytic decaying mode") {
  ProblemSpec spec;
  spec.grid = SpaceTimeGrid::create({Axis{33, 0.0, 1.0}}, 0.25, 16);
  spec.op = heat_operator();
  spec.initial = [](const VecD& x) { return std::sin(kPi * x[0]); };

  const SolverConfig cfg;
  const auto sol = solve(spec, cfg);
  const int last = spec.grid->time_levels() - 1;

  const double T = 0.25;
  const double err = sup_level_error(sol, last, [&](const VecD& x) {
    return std::exp(-kPi * kPi * T) * std::sin(kPi * x[0]);
  });
  // First order in dt plus second order in h; the constant is O(1).
  CHECK(err <= 0.03);
  CHECK(err >= 1e-4);

  // Halving dt roughly halves the error (dt term dominates at this h).
  ProblemSpec spec2 = spec;
  spec2.grid = SpaceTimeGrid::create({Axis{33, 0.0, 1.0}}, 0.25, 32);
  const auto sol2 = solve(spec2, cfg);
  const double err2 = sup_level_error(sol2, spec2.grid->time_levels() - 1, [&](const VecD& x) {
    return std::exp(-kPi * kPi * T) * std::sin(kPi * x[0]);
  });
  CHECK(err2 / err >= 0.40);
  CHECK(err2 / err <= 0.65);

  // Per-step diagnostics: every step converged and satisfied the energy
  // identity within its allowance.
  CHECK(sol.steps.size() == 16);
  for (const auto& d : sol.steps) {
    CHECK(d.residual <= cfg.newton_tol);
    CHECK(std::abs(d.energy_residual) <= 1e-9);
  }
}

TEST_CASE("zero data yields the zero solution and zero traces") {
  ProblemSpec spec;
  spec.grid = SpaceTimeGrid::create({Axis{9, 0.0, 1.0}}, 0.5, 4);
  spec.op = heat_operator();
  const auto sol = solve(spec, SolverConfig{});
  for (double v : sol.u.data()) CHECK(v == 0.0);
  for (const auto& ts : sol.theta_trace) {
    CHECK(ts.theta_term == 0.0);
    CHECK(ts.sup_l2 == 0.0);
    CHECK(ts.modular_gradient == 0.0);
  }
}

TEST_CASE("theta schedule is strictly decreasing and lands exactly on theta_min") {
  const SolverConfig cfg;  // 1e-2 / 2^k down to 1e-6
  const auto ts = theta_schedule(cfg);
  CHECK(ts.size() == 15);
  CHECK(ts.front() == 1e-2);
  CHECK(ts.back() == 1e-6);
  for (std::size_t k = 1; k < ts.size(); ++k) CHECK(ts[k] < ts[k - 1]);

  SolverConfig flat;
  flat.theta0 = 1e-3;
  flat.theta_min = 1e-3;
  const auto single = theta_schedule(flat);
  CHECK(single.size() == 1);
  CHECK(single[0] == 1e-3);

  SolverConfig bad;
  bad.theta_min = 0.0;
  CHECK_THROWS_AS(theta_schedule(bad), config_error);
}

TEST_CASE("cascade trace: regularization term decays, uniform bounds stay flat") {
  ProblemSpec spec;
  spec.grid = SpaceTimeGrid::create({Axis{17, 0.0, 1.0}}, 0.25, 8);
  spec.op = heat_operator();
  spec.initial = [](const VecD& x) { return std::sin(kPi * x[0]); };

  SolverConfig cfg;
  cfg.theta0 = 1e-2;
  cfg.theta_min = 1e-4;
  const auto sol = solve(spec, cfg);
  CHECK(sol.theta_trace.size() == 8);
  CHECK(sol.final_theta == 1e-4);

  for (std::size_t k = 1; k < sol.theta_trace.size(); ++k)
    CHECK(sol.theta_trace[k].theta_term < sol.theta_trace[k - 1].theta_term);

  const auto& first = sol.theta_trace.front();
  for (const auto& ts : sol.theta_trace) {
    CHECK(ts.sup_l2 <= 2.0 * first.sup_l2 + 1e-12);
    CHECK(ts.modular_gradient <= 2.0 * first.modular_gradient + 1e-12);
    CHECK(ts.conjugate_modular_flux <= 2.0 * first.conjugate_modular_flux + 1e-12);
    CHECK(ts.conjugate_theta_term <= 2.0 * first.conjugate_theta_term + 1e-12);
    CHECK(ts.conjugate_theta_term >= 0.0);
  }

  // The stored norm helper reproduces the final stage's trace entry.
  const double tt = theta_term_norm(sol, sol.final_theta, spec.op.governing.dominating);
  CHECK(tt == doctest::Approx(sol.theta_trace.back().theta_term).epsilon(1e-12));
}

TEST_CASE("quartic flux solve converges with recorded Newton work") {
  ProblemSpec spec;
  spec.grid = SpaceTimeGrid::create({Axis{17, 0.0, 1.0}}, 0.25, 4);
  VariableExponentOptions opt;
  opt.p_minus = 4.0;
  opt.p_plus = 4.0;
  spec.op = op_variable_exponent(constant_exponent(4.0), opt);
  spec.initial = [](const VecD& x) { return std::sin(kPi * x[0]); };

  const auto sol = solve(spec, SolverConfig{});
  for (const auto& d : sol.steps) {
    CHECK(d.residual <= 1e-10);
    CHECK(d.picard_iters == 0);
  }
  int max_newton = 0;
  for (const auto& ts : sol.theta_trace) max_newton = std::max(max_newton, ts.max_newton_iters);
  CHECK(max_newton >= 1);
  CHECK(max_newton <= 20);
  // The flux is degenerate but monotone: values stay within the initial range.
  for (double v : sol.u.data()) {
    CHECK(v <= 1.0 + 1e-8);
    CHECK(v >= -1e-8);
  }
}

TEST_CASE("a broken Jacobian triggers the Picard fallback; disabling it fails the step") {
  ProblemSpec spec;
  spec.grid = SpaceTimeGrid::create({Axis{17, 0.0, 1.0}}, 2.0 / 64.0, 2);
  VariableExponentOptions opt;
  opt.p_minus = 4.0;
  opt.p_plus = 4.0;
  spec.op = op_variable_exponent(constant_exponent(4.0), opt);
  // Sabotage: a grossly wrong (but well-conditioned) Jacobian starves the
  // Newton direction, so the line search cannot reach the Armijo decrease.
  spec.op.jacobian = [](double, const VecD&, const VecD&) {
    MatD D = MatD::Identity(1, 1);
    D *= 1e6;
    return D;
  };
  spec.initial = [](const VecD& x) { return 0.1 * std::sin(kPi * x[0]); };

  SolverConfig cfg;
  cfg.theta0 = 1e-3;
  cfg.theta_min = 1e-3;
  const auto sol = solve(spec, cfg);
  int picard_total = 0;
  for (const auto& d : sol.steps) {
    picard_total += d.picard_iters;
    CHECK(d.residual <= cfg.newton_tol);
  }
  CHECK(picard_total > 0);

  SolverConfig strict = cfg;
  strict.picard_fallback = false;
  CHECK_THROWS_AS(solve(spec, strict), step_error);
}

TEST_CASE("newton start choice does not change the solution") {
  ProblemSpec spec;
  spec.grid = SpaceTimeGrid::create({Axis{17, 0.0, 1.0}}, 0.25, 8);
  spec.op = heat_operator();
  spec.initial = [](const VecD& x) { return std::sin(kPi * x[0]); };

  SolverConfig warm;
  SolverConfig cold;
  cold.init = SolverConfig::Init::Zero;
  const auto a = solve(spec, warm);
  const auto b = solve(spec, cold);
  double gap = 0.0;
  for (std::size_t i = 0; i < a.u.data().size(); ++i)
    gap = std::max(gap, std::abs(a.u.data()[i] - b.u.data()[i]));
  CHECK(gap <= 1e-9);
}

TEST_CASE("restart from stored nodal values continues the trajectory") {
  ProblemSpec full;
  full.grid = SpaceTimeGrid::create({Axis{17, 0.0, 1.0}}, 0.25, 8);
  full.op = heat_operator();
  full.initial = [](const VecD& x) { return std::sin(kPi * x[0]); };
  const auto ref = solve(full, SolverConfig{});

  // Second half as a fresh problem: the flux law is autonomous, so shifting
  // the time origin is legitimate; the initial level is the stored level 4.
  std::vector<double> mid(static_cast<std::size_t>(full.grid->node_count()));
  for (int i = 0; i < full.grid->node_count(); ++i)
    mid[static_cast<std::size_t>(i)] = ref.u.at(4, i);

  ProblemSpec tail = full;
  tail.grid = SpaceTimeGrid::create({Axis{17, 0.0, 1.0}}, 0.125, 4);
  tail.initial_nodal = mid;
  const auto cont = solve(tail, SolverConfig{});

  for (int n = 0; n <= 4; ++n)
    for (int i = 0; i < full.grid->node_count(); ++i)
      CHECK(std::abs(cont.u.at(n, i) - ref.u.at(4 + n, i)) <= 1e-9);
}

TEST_CASE("2-D heat solve: symmetry, boundary zeros, analytic proximity") {
  ProblemSpec spec;
  spec.grid = SpaceTimeGrid::create({Axis{9, 0.0, 1.0}, Axis{9, 0.0, 1.0}}, 0.1, 4);
  spec.op = heat_operator(2);
  spec.initial = [](const VecD& x) {
    return std::sin(kPi * x[0]) * std::sin(kPi * x[1]);
  };

  const auto sol = solve(spec, SolverConfig{});
  const auto& g = *spec.grid;
  const int last = g.time_levels() - 1;

  for (int i = 0; i < g.node_count(); ++i)
    if (g.boundary_node(i)) CHECK(sol.u.at(last, i) == 0.0);

  for (int ix = 0; ix < 9; ++ix)
    for (int iy = 0; iy < 9; ++iy)
      CHECK(std::abs(sol.u.at(last, g.node_index(ix, iy)) -
                     sol.u.at(last, g.node_index(iy, ix))) <= 1e-8);

  const double T = 0.1;
  const double err = sup_level_error(sol, last, [&](const VecD& x) {
    return std::exp(-2.0 * kPi * kPi * T) * std::sin(kPi * x[0]) * std::sin(kPi * x[1]);
  });
  CHECK(err <= 0.15);
  CHECK(err >= 1e-4);
}

TEST_CASE("double-phase solve dissipates the weighted L2 norm") {
  ProblemSpec spec;
  spec.grid = SpaceTimeGrid::create({Axis{17, 0.0, 1.0}}, 0.1, 4);
  spec.op = op_double_phase(
      2.0, 3.0, [](double, const VecD& x) { return 0.5 + 0.5 * x[0]; }, 1.0);
  spec.initial = [](const VecD& x) { return std::sin(kPi * x[0]); };

  const auto sol = solve(spec, SolverConfig{});
  const auto w = nodal_weights(*spec.grid);
  const double e0 = weighted_l2(*spec.grid, w, sol, 0);
  for (int n = 1; n <= 4; ++n) CHECK(weighted_l2(*spec.grid, w, sol, n) < e0);
  CHECK(weighted_l2(*spec.grid, w, sol, 4) <
        weighted_l2(*spec.grid, w, sol, 1));
}
