#include <doctest.h>

#include <cmath>
#include <random>

#include "morpde/verify.hpp"

using namespace morpde;

namespace {

const double PI = std::acos(-1.0);

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

ProblemSpec heat_problem(int nodes, int steps, double horizon = 0.25) {
  ProblemSpec spec;
  spec.grid = SpaceTimeGrid::create({Axis{nodes, 0.0, 1.0}}, horizon, steps);
  spec.op = heat_operator(1);
  spec.initial = [](const VecD& x) { return std::sin(PI * x[0]); };
  return spec;
}

DiscreteField constant_field(std::shared_ptr<const SpaceTimeGrid> g, SpaceStagger ss,
                             TimeStagger ts, double value) {
  DiscreteField f(g, ss, ts, 1);
  for (double& v : f.data()) v = value;
  return f;
}

}  // namespace

TEST_CASE("truncation and its primitive match the closed forms") {
  CHECK(truncate_scalar(3.0, 2.0) == doctest::Approx(2.0));
  CHECK(truncate_scalar(-3.0, 2.0) == doctest::Approx(-2.0));
  CHECK(truncate_scalar(0.7, 2.0) == doctest::Approx(0.7));

  // k|s| - k^2/2 beyond the height: G_1(3) = 3 - 1/2 = 2.5.
  CHECK(truncation_primitive(3.0, 1.0) == doctest::Approx(2.5).epsilon(1e-14));
  CHECK(truncation_primitive(-3.0, 1.0) == doctest::Approx(2.5).epsilon(1e-14));
  CHECK(truncation_primitive(0.5, 1.0) == doctest::Approx(0.125).epsilon(1e-14));
  CHECK(truncation_primitive(1.0, 2.0) == doctest::Approx(0.5).epsilon(1e-14));
  // C^1 junction at |s| = k.
  CHECK(std::abs(truncation_primitive(1.0 + 1e-9, 1.0) - truncation_primitive(1.0 - 1e-9, 1.0)) <
        3e-9);

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(-3.0, 3.0);
  for (int rep = 0; rep < 200; ++rep) {
    const double a = dist(rng), b = dist(rng), k = 0.25 + std::abs(dist(rng));
    // Truncation is 1-Lipschitz; the primitive is midpoint convex.
    CHECK(std::abs(truncate_scalar(a, k) - truncate_scalar(b, k)) <= std::abs(a - b) + 1e-15);
    const double mid = truncation_primitive(0.5 * (a + b), k);
    CHECK(mid <= 0.5 * (truncation_primitive(a, k) + truncation_primitive(b, k)) + 1e-12);
  }

  auto g = SpaceTimeGrid::create({Axis{9, 0.0, 1.0}}, 1.0, 4);
  DiscreteField f(g, SpaceStagger::Nodes, TimeStagger::Levels, 1);
  for (int n = 0; n < f.time_count(); ++n)
    for (int i = 0; i < f.space_count(); ++i) f.at(n, i) = 2.0 * std::sin(3.0 * n + i);
  const DiscreteField once = truncate(f, 1.5);
  const DiscreteField twice = truncate(once, 1.5);
  for (std::size_t j = 0; j < once.data().size(); ++j) {
    CHECK(std::abs(once.data()[j]) <= 1.5);
    CHECK(once.data()[j] == twice.data()[j]);
  }
  CHECK_THROWS_AS(truncate(f, 0.0), config_error);
  CHECK_THROWS_AS(
      truncate(DiscreteField(g, SpaceStagger::Nodes, TimeStagger::Levels, 2), 1.0),
      config_error);
}

TEST_CASE("unit cutoff is identically one with zero gradient") {
  const Cutoff c1 = unit_cutoff(1);
  CHECK(c1.value(vec1(0.3)) == doctest::Approx(1.0));
  CHECK(c1.gradient(vec1(0.3)).norm() == doctest::Approx(0.0));
  CHECK(c1.grad_bound == doctest::Approx(0.0));
  const Cutoff c2 = unit_cutoff(2);
  CHECK(c2.value(vec2(0.3, 0.9)) == doctest::Approx(1.0));
  CHECK(c2.gradient(vec2(0.3, 0.9)).norm() == doctest::Approx(0.0));
  CHECK_THROWS_AS(unit_cutoff(3), config_error);
}

TEST_CASE("boundary cutoff ramps between 1/(2j) and 1/j with the stated bounds") {
  auto g = SpaceTimeGrid::create({Axis{65, 0.0, 1.0}}, 1.0, 4);
  const int j = 4;
  const Cutoff psi = boundary_cutoff(*g, j);
  CHECK(psi.grad_bound == doctest::Approx(15.0));

  // Zero inside distance 1/8, one beyond distance 1/4.
  CHECK(psi.value(vec1(0.05)) == doctest::Approx(0.0));
  CHECK(psi.value(vec1(0.125)) == doctest::Approx(0.0));
  CHECK(psi.value(vec1(0.95)) == doctest::Approx(0.0));
  CHECK(psi.value(vec1(0.25)) == doctest::Approx(1.0));
  CHECK(psi.value(vec1(0.5)) == doctest::Approx(1.0));
  CHECK(psi.value(vec1(0.7)) == doctest::Approx(1.0));

  // Quintic ramp midpoint: value 1/2, slope 15/8 * 2j = 15 toward the interior.
  CHECK(psi.value(vec1(0.1875)) == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(psi.gradient(vec1(0.1875))[0] == doctest::Approx(15.0).epsilon(1e-12));
  CHECK(psi.gradient(vec1(0.8125))[0] == doctest::Approx(-15.0).epsilon(1e-12));

  // Analytic gradient agrees with a central difference inside the ramp.
  for (const double x : {0.13, 0.16, 0.2, 0.24}) {
    const double d = 1e-6;
    const double fd = (psi.value(vec1(x + d)) - psi.value(vec1(x - d))) / (2.0 * d);
    CHECK(psi.gradient(vec1(x))[0] == doctest::Approx(fd).epsilon(1e-6));
  }

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (int rep = 0; rep < 300; ++rep) {
    const VecD x = vec1(dist(rng));
    const double v = psi.value(x);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    CHECK(psi.gradient(x).cwiseAbs().sum() <= psi.grad_bound + 1e-9);
  }

  // 2-D: the nearest face drives both the value and the gradient direction.
  auto g2 = SpaceTimeGrid::create({Axis{17, 0.0, 1.0}, Axis{17, 0.0, 1.0}}, 1.0, 4);
  const Cutoff psi2 = boundary_cutoff(*g2, j);
  CHECK(psi2.value(vec2(0.5, 0.05)) == doctest::Approx(0.0));
  CHECK(psi2.value(vec2(0.5, 0.5)) == doctest::Approx(1.0));
  CHECK(psi2.value(vec2(0.1875, 0.5)) == doctest::Approx(0.5).epsilon(1e-13));
  const VecD grad2 = psi2.gradient(vec2(0.1875, 0.5));
  CHECK(grad2[0] == doctest::Approx(15.0).epsilon(1e-12));
  CHECK(grad2[1] == doctest::Approx(0.0));
  const VecD grad2y = psi2.gradient(vec2(0.5, 0.8125));
  CHECK(grad2y[0] == doctest::Approx(0.0));
  CHECK(grad2y[1] == doctest::Approx(-15.0).epsilon(1e-12));

  // Under-resolved ramps are rejected; the marginal case is accepted.
  auto coarse = SpaceTimeGrid::create({Axis{9, 0.0, 1.0}}, 1.0, 4);
  CHECK_THROWS_AS(boundary_cutoff(*coarse, 8), config_error);
  CHECK_NOTHROW(boundary_cutoff(*coarse, 4));
  CHECK_THROWS_AS(boundary_cutoff(*g, 0), config_error);
}

TEST_CASE("interior plateau cutoff is one on the middle and vanishes outside") {
  auto g = SpaceTimeGrid::create({Axis{33, 0.0, 1.0}}, 1.0, 4);
  const Cutoff psi = interior_plateau_cutoff(*g);
  CHECK(psi.value(vec1(0.5)) == doctest::Approx(1.0));
  CHECK(psi.value(vec1(0.4)) == doctest::Approx(1.0));
  CHECK(psi.value(vec1(0.25)) == doctest::Approx(0.0));
  CHECK(psi.value(vec1(0.75)) == doctest::Approx(0.0));
  CHECK(psi.value(vec1(0.1)) == doctest::Approx(0.0));
  CHECK(psi.value(vec1(0.3125)) == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(psi.value(vec1(0.6875)) == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(psi.gradient(vec1(0.3125))[0] == doctest::Approx(15.0).epsilon(1e-12));
  CHECK(psi.gradient(vec1(0.6875))[0] == doctest::Approx(-15.0).epsilon(1e-12));
  CHECK(psi.gradient(vec1(0.5))[0] == doctest::Approx(0.0));

  auto g2 = SpaceTimeGrid::create({Axis{17, 0.0, 1.0}, Axis{17, 0.0, 1.0}}, 1.0, 4);
  const Cutoff psi2 = interior_plateau_cutoff(*g2);
  CHECK(psi2.value(vec2(0.5, 0.5)) == doctest::Approx(1.0));
  CHECK(psi2.value(vec2(0.3125, 0.5)) == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(psi2.value(vec2(0.3125, 0.3125)) == doctest::Approx(0.25).epsilon(1e-13));
  const VecD grad = psi2.gradient(vec2(0.3125, 0.5));
  CHECK(grad[0] == doctest::Approx(15.0).epsilon(1e-12));
  CHECK(grad[1] == doctest::Approx(0.0));
}

TEST_CASE("spatial mollifier: normalized stencil, eigenfunction shrink, guards") {
  auto g = SpaceTimeGrid::create({Axis{65, 0.0, 1.0}}, 1.0, 1);
  const double h = 1.0 / 64.0;
  const double eps = 4.0 * h;

  // A constant survives exactly on the restricted domain and is zeroed near
  // the boundary; a linear field survives by stencil symmetry.
  const DiscreteField ones =
      constant_field(g, SpaceStagger::Nodes, TimeStagger::Levels, 1.0);
  const DiscreteField mones = mollify_space(ones, eps);
  DiscreteField linear(g, SpaceStagger::Nodes, TimeStagger::Levels, 1);
  for (int n = 0; n < linear.time_count(); ++n)
    for (int i = 0; i < linear.space_count(); ++i) linear.at(n, i) = g->node_position(i)[0];
  const DiscreteField mlinear = mollify_space(linear, eps);
  for (int i = 0; i < 65; ++i) {
    const double d = std::min(i, 64 - i) * h;
    if (d >= eps) {
      CHECK(mones.at(0, i) == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(mlinear.at(0, i) == doctest::Approx(g->node_position(i)[0]).epsilon(1e-12));
    } else {
      CHECK(mones.at(0, i) == 0.0);
    }
  }

  // sin(pi x) is an eigenfunction of any symmetric normalized stencil: the
  // factor is the weighted cosine sum, computed here from the kernel formula.
  DiscreteField wave(g, SpaceStagger::Nodes, TimeStagger::Levels, 1);
  for (int n = 0; n < wave.time_count(); ++n)
    for (int i = 0; i < wave.space_count(); ++i)
      wave.at(n, i) = std::sin(PI * g->node_position(i)[0]);
  const DiscreteField mwave = mollify_space(wave, eps);
  double wsum = 0.0, factor = 0.0;
  for (int o = -3; o <= 3; ++o) {
    const double r = o / 4.0;  // o h / eps with eps = 4h
    const double w = std::exp(-1.0 / (1.0 - r * r));
    wsum += w;
    factor += w * std::cos(PI * o * h);
  }
  factor /= wsum;
  CHECK(factor < 1.0);
  CHECK(factor > 0.99);
  for (int i = 4; i <= 60; ++i)
    CHECK(mwave.at(0, i) ==
          doctest::Approx(factor * std::sin(PI * g->node_position(i)[0])).epsilon(1e-12));

  // 2-D constant invariance.
  auto g2 = SpaceTimeGrid::create({Axis{17, 0.0, 1.0}, Axis{17, 0.0, 1.0}}, 1.0, 1);
  const DiscreteField ones2 =
      constant_field(g2, SpaceStagger::Nodes, TimeStagger::Levels, 1.0);
  const DiscreteField mones2 = mollify_space(ones2, 3.0 / 16.0);
  CHECK(mones2.at(0, g2->node_index(8, 8)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(mones2.at(0, g2->node_index(1, 8)) == 0.0);

  CHECK_THROWS_AS(mollify_space(ones, 1.9 * h), config_error);
  CHECK_NOTHROW(mollify_space(ones, 2.0 * h));
  CHECK_THROWS_AS(mollify_space(ones, 0.0), config_error);
  const DiscreteField cells(g, SpaceStagger::Cells, TimeStagger::Levels, 1);
  CHECK_THROWS_AS(mollify_space(cells, eps), config_error);
}

TEST_CASE("time mollifier: extensions, symmetry, and horizon clipping") {
  auto g = SpaceTimeGrid::create({Axis{9, 0.0, 1.0}}, 1.0, 16);
  const double eps = 0.125;

  // Constant-in-time field: the initial extension preserves it up to the
  // horizon clip; at t = T exactly half the kernel mass survives.
  const DiscreteField c = constant_field(g, SpaceStagger::Nodes, TimeStagger::Levels, 3.0);
  const DiscreteField init = mollify_time(c, eps, TimeExtension::InitialThenZero);
  for (int n = 0; n <= 14; ++n) CHECK(init.at(n, 4) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(init.at(16, 4) == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(init.at(15, 4) < 3.0 - 1e-3);

  const DiscreteField both = mollify_time(c, eps, TimeExtension::ZeroBothSides);
  CHECK(both.at(0, 4) == doctest::Approx(1.5).epsilon(1e-12));
  for (int n = 2; n <= 14; ++n) CHECK(both.at(n, 4) == doctest::Approx(3.0).epsilon(1e-12));

  // u(t) = t is invariant where the kernel window stays inside [0, T].
  DiscreteField ramp(g, SpaceStagger::Nodes, TimeStagger::Levels, 1);
  for (int n = 0; n < ramp.time_count(); ++n)
    for (int i = 0; i < ramp.space_count(); ++i) ramp.at(n, i) = g->time_node(n);
  const DiscreteField mramp = mollify_time(ramp, eps, TimeExtension::ZeroBothSides);
  for (int n = 2; n <= 14; ++n)
    CHECK(mramp.at(n, 3) == doctest::Approx(g->time_node(n)).epsilon(1e-12));

  // Interval-staggered data (flux-like) is handled on its midpoint times.
  auto g8 = SpaceTimeGrid::create({Axis{9, 0.0, 1.0}}, 1.0, 8);
  const DiscreteField flux =
      constant_field(g8, SpaceStagger::Cells, TimeStagger::Intervals, 1.0);
  const DiscreteField mflux = mollify_time(flux, eps, TimeExtension::ZeroBothSides);
  for (int n = 1; n <= 6; ++n) CHECK(mflux.at(n, 2) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(mflux.at(0, 2) < 1.0 - 1e-3);
  CHECK(mflux.at(7, 2) < 1.0 - 1e-3);
  const DiscreteField mflux_init = mollify_time(flux, eps, TimeExtension::InitialThenZero);
  CHECK(mflux_init.at(0, 2) == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(mollify_time(c, 0.0, TimeExtension::ZeroBothSides), config_error);
  CHECK_THROWS_AS(mollify_time(c, eps, TimeExtension::ZeroBothSides, 0), config_error);
}

TEST_CASE("approximation diagnostic contracts as the radius shrinks") {
  const ProblemSpec spec = heat_problem(33, 16);
  const Solution sol = solve(spec, SolverConfig{});
  const NFunction M = spec.op.governing;
  const Cutoff psi = boundary_cutoff(*spec.grid, 2);
  const std::vector<double> radii{0.125, 0.0625};

  for (const double k : {2.0, 0.5}) {
    const DiagnosticCurve curve = approximation_diagnostic(sol, M, k, psi, radii);
    REQUIRE(curve.eps.size() == 2);
    for (std::size_t i = 0; i < curve.eps.size(); ++i) {
      CHECK(std::isfinite(curve.distance_full[i]));
      CHECK(std::isfinite(curve.distance_half[i]));
      CHECK(curve.distance_full[i] >= 0.0);
      CHECK(curve.distance_half[i] >= 0.0);
      // The stronger scale dominates the weaker one.
      CHECK(curve.distance_half[i] >= curve.distance_full[i] - 1e-15);
    }
    CHECK(curve.trend_ok);
    CHECK(curve.distance_full.back() <= curve.distance_full.front());
    CHECK(curve.distance_half.back() <= curve.distance_half.front());
  }

  CHECK_THROWS_AS(approximation_diagnostic(sol, M, 0.0, psi, radii), config_error);
  CHECK_THROWS_AS(approximation_diagnostic(sol, M, 1.0, psi, {0.0625, 0.125}), config_error);
  CHECK_THROWS_AS(approximation_diagnostic(sol, M, 1.0, psi, {}), config_error);
}

TEST_CASE("global energy identity: direction, decomposition, halving") {
  const ProblemSpec spec = heat_problem(33, 16);
  const Solution sol = solve(spec, SolverConfig{});
  const EnergySeries series = global_energy_series(sol, spec.source, true);

  REQUIRE(series.nodes.size() == static_cast<std::size_t>(spec.grid->time_levels()));
  CHECK(series.relation == "equality expected");
  CHECK(series.nodes[0].lhs == doctest::Approx(0.0));
  CHECK(series.nodes[0].rhs == doctest::Approx(0.0));
  CHECK(series.direction_ok);
  CHECK(series.scale > 0.1);  // at least the initial-energy scale
  CHECK(series.max_abs_residual > 0.0);

  // The defect decomposes into the backward-difference term and the
  // regularization dissipation, both integrated in time.
  const SpaceTimeGrid& g = *spec.grid;
  const std::vector<double> w = nodal_weights(g);
  const double vol = g.cell_volume();
  const YoungFunction m = regularize(heat_operator(1), sol.final_theta).m;
  double expected = 0.0;
  for (int n = 1; n < g.time_levels(); ++n) {
    double du2 = 0.0;
    for (int i = 0; i < g.node_count(); ++i) {
      const double d = sol.u.at(n, i) - sol.u.at(n - 1, i);
      du2 += w[static_cast<std::size_t>(i)] * d * d;
    }
    double theta_flux = 0.0;
    for (int c = 0; c < g.cell_count(); ++c) {
      const double r = sol.gradient.vec_at(n - 1, c).norm();
      theta_flux += vol * m.derivative(r) * r;
    }
    expected -= 0.5 * du2 + g.dt(n - 1) * sol.final_theta * theta_flux;
    CHECK(series.nodes[static_cast<std::size_t>(n)].residual ==
          doctest::Approx(expected).epsilon(1e-6).scale(series.scale));
  }

  // Halving the time step shrinks the isotropic defect by nearly two.
  const Solution fine = solve(heat_problem(33, 32), SolverConfig{});
  const EnergySeries fine_series = global_energy_series(fine, spec.source, true);
  CHECK(fine_series.direction_ok);
  const double ratio = series.max_abs_residual / fine_series.max_abs_residual;
  CHECK(ratio >= 1.7);
  CHECK(ratio <= 2.4);
  const double final_ratio = std::abs(series.nodes.back().residual) /
                             std::abs(fine_series.nodes.back().residual);
  CHECK(final_ratio >= 1.7);

  // Label toggle for anisotropic families.
  CHECK(global_energy_series(sol, spec.source, false).relation == "inequality expected");

  // Zero data: every entry vanishes identically.
  ProblemSpec zero = heat_problem(9, 4);
  zero.initial = [](const VecD&) { return 0.0; };
  const Solution zsol = solve(zero, SolverConfig{});
  const EnergySeries zseries = global_energy_series(zsol, zero.source, true);
  CHECK(zseries.direction_ok);
  CHECK(zseries.max_abs_residual == doctest::Approx(0.0));
}

TEST_CASE("global energy identity holds with a source term") {
  ProblemSpec spec = heat_problem(33, 16, 0.5);
  spec.source = [](double t, const VecD& x) {
    return (PI * PI - 1.0) * std::exp(-t) * std::sin(PI * x[0]);
  };
  const Solution sol = solve(spec, SolverConfig{});
  const EnergySeries series = global_energy_series(sol, spec.source, true);
  CHECK(series.direction_ok);
  // The source keeps the state near e^{-t} sin(pi x), so the final energy is
  // genuinely nonzero and both sides carry the forcing work.
  CHECK(series.nodes.back().lhs < 0.0);
  CHECK(std::abs(series.nodes.back().lhs) > 1e-3);
  CHECK(std::abs(series.nodes.back().residual) <= 1e-2 * series.scale);
}

TEST_CASE("local energy report: consistency with the global one and direction") {
  const ProblemSpec spec = heat_problem(33, 16);
  const Solution sol = solve(spec, SolverConfig{});
  const EnergySeries global = global_energy_series(sol, spec.source, true);

  // psi = 1 and a truncation height above the range reproduce the global
  // report entry by entry.
  const EnergySeries wide = local_energy_series(sol, spec.source, unit_cutoff(1), 10.0);
  CHECK(wide.relation == "inequality expected");
  REQUIRE(wide.nodes.size() == global.nodes.size());
  for (std::size_t n = 0; n < wide.nodes.size(); ++n) {
    CHECK(wide.nodes[n].lhs == doctest::Approx(global.nodes[n].lhs).epsilon(1e-12));
    CHECK(wide.nodes[n].rhs == doctest::Approx(global.nodes[n].rhs).epsilon(1e-12));
  }
  // Raising the height further changes nothing once it clears the range.
  const EnergySeries wider = local_energy_series(sol, spec.source, unit_cutoff(1), 20.0);
  for (std::size_t n = 0; n < wide.nodes.size(); ++n)
    CHECK(wide.nodes[n].lhs == doctest::Approx(wider.nodes[n].lhs).epsilon(1e-14));

  // An active truncation and a localizing cutoff keep the inequality
  // direction; the truncated density sits below the quadratic one.
  const EnergySeries local =
      local_energy_series(sol, spec.source, interior_plateau_cutoff(*spec.grid), 0.2);
  CHECK(local.direction_ok);
  CHECK(std::abs(local.nodes.back().lhs) < std::abs(global.nodes.back().lhs));

  CHECK_THROWS_AS(local_energy_series(sol, spec.source, unit_cutoff(1), 0.0), config_error);
}

TEST_CASE("boundary modular decay decreases along the cutoff family") {
  // h = 1/128 keeps at least two cells inside the finest ramp, so every
  // cutoff in the family is sampled in its resolved regime.
  const ProblemSpec spec = heat_problem(129, 16);
  const Solution sol = solve(spec, SolverConfig{});
  const NFunction M = spec.op.governing;
  const DecayCurve curve = boundary_modular_decay(sol, M, {4, 8, 16, 32});

  REQUIRE(curve.value.size() == 4);
  CHECK(curve.c_u > 0.0);
  for (const double v : curve.value) CHECK(v > 0.0);
  CHECK(curve.decreasing);
  CHECK(curve.last_over_first < 0.2);
  CHECK(curve.last_over_first > 0.0);

  // A ramp narrower than one cell is rejected.
  CHECK_THROWS_AS(boundary_modular_decay(sol, M, {128}), config_error);
  CHECK_THROWS_AS(boundary_modular_decay(sol, M, {}), config_error);
  CHECK_THROWS_AS(boundary_modular_decay(sol, M, {4}, 0.0), config_error);
}

TEST_CASE("uniqueness probe: independent starts land on the same trajectory") {
  const SolverConfig cfg;

  const UniquenessReport heat = uniqueness_probe(heat_problem(17, 8), cfg);
  CHECK(heat.l2l2_diff <= 1e-8);
  CHECK(heat.sup_diff <= 1e-7);
  CHECK(heat.monotone_pairing >= -1e-10);

  ProblemSpec quartic;
  quartic.grid = SpaceTimeGrid::create({Axis{17, 0.0, 1.0}}, 0.25, 4);
  VariableExponentOptions opt;
  opt.p_minus = 4.0;
  opt.p_plus = 4.0;
  opt.dim = 1;
  quartic.op = op_variable_exponent(constant_exponent(4.0), opt);
  quartic.initial = [](const VecD& x) { return std::sin(PI * x[0]); };
  const UniquenessReport quartic_report = uniqueness_probe(quartic, cfg);
  CHECK(quartic_report.l2l2_diff <= 1e-8);
  CHECK(quartic_report.sup_diff <= 1e-7);
  CHECK(quartic_report.monotone_pairing >= -1e-10);
}

TEST_CASE("convergence study recovers second order in space and first in time") {
  auto make_problem = [](int nodes, int steps) { return heat_problem(nodes, steps); };
  auto exact = [](double t, const VecD& x) {
    return std::exp(-PI * PI * t) * std::sin(PI * x[0]);
  };
  const SolverConfig cfg;
  const OrderStudy study =
      convergence_study(make_problem, cfg, exact, {33, 65, 129}, {32, 64, 128});

  REQUIRE(study.h_errors.size() == 3);
  REQUIRE(study.dt_errors.size() == 3);
  for (std::size_t i = 0; i + 1 < study.h_errors.size(); ++i)
    CHECK(study.h_errors[i + 1] < study.h_errors[i]);
  for (std::size_t i = 0; i + 1 < study.dt_errors.size(); ++i)
    CHECK(study.dt_errors[i + 1] < study.dt_errors[i]);
  CHECK(study.spatial_order >= 1.8);
  CHECK(study.spatial_order <= 2.3);
  CHECK(study.temporal_order >= 0.9);
  CHECK(study.temporal_order <= 1.15);

  CHECK_THROWS_AS(convergence_study(make_problem, cfg, exact, {33, 65, 97}, {32, 64, 128}),
                  config_error);
  CHECK_THROWS_AS(convergence_study(make_problem, cfg, exact, {33, 65, 129}, {32, 64, 100}),
                  config_error);
  CHECK_THROWS_AS(convergence_study(make_problem, cfg, exact, {33, 65}, {32, 64, 128}),
                  config_error);
}
