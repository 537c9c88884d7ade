#include <morpde/run.hpp>

#include <morpde/modular.hpp>
#include <morpde/nfunction.hpp>
#include <morpde/operators.hpp>
#include <morpde/solver.hpp>
#include <morpde/verify.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace morpde {

namespace {

std::string format_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

Report base_report(const RunConfig& cfg) {
  Report r;
  r.config_echo = print_config(cfg);
  r.timestamp = current_timestamp_utc();
  return r;
}

std::string summarize(const Report& r) {
  int failed = 0;
  std::string names;
  for (const auto& inv : r.invariants) {
    if (!inv.pass) {
      ++failed;
      if (!names.empty()) names += ", ";
      names += inv.name;
    }
  }
  if (failed == 0) {
    return "all " + std::to_string(r.invariants.size()) + " invariants passed";
  }
  return std::to_string(failed) + " of " + std::to_string(r.invariants.size()) +
         " invariants failed: " + names;
}

RunArtifacts finish(const RunConfig& cfg, Report&& report,
                    std::vector<std::pair<std::string, std::string>>&& files = {}) {
  RunArtifacts art;
  art.exit_code = report.all_pass() ? 0 : 4;
  art.summary = summarize(report);
  art.report_json = report.render_json();
  if (cfg.write_csv) art.files = std::move(files);
  return art;
}

VecD box_lo(const RunConfig& cfg) {
  return cfg.dim == 1 ? vec1(cfg.x1_lo) : vec2(cfg.x1_lo, cfg.x2_lo);
}

VecD box_hi(const RunConfig& cfg) {
  return cfg.dim == 1 ? vec1(cfg.x1_hi) : vec2(cfg.x1_hi, cfg.x2_hi);
}

void append_property(Report& r, const PropertyCheck& c) {
  r.invariants.push_back({c.property, c.pass, c.worst, c.tol});
}

// L2(L2) distance of two nodal level series on one grid, right-aligned in
// time (interval m pairs with level m + 1), matching the scheme's quadrature.
double l2l2_distance(const SpaceTimeGrid& g, const DiscreteField& a,
                     const DiscreteField& b) {
  const std::vector<double> omega = nodal_weights(g);
  double acc = 0.0;
  for (int m = 0; m < g.time_intervals(); ++m) {
    double level = 0.0;
    for (int i = 0; i < g.node_count(); ++i) {
      const double d = a.at(m + 1, i) - b.at(m + 1, i);
      level += omega[i] * d * d;
    }
    acc += g.dt(m) * level;
  }
  return std::sqrt(acc);
}

double l2_omega(const SpaceTimeGrid& g, const std::vector<double>& omega,
                const DiscreteField& u, int level) {
  double acc = 0.0;
  for (int i = 0; i < g.node_count(); ++i) {
    acc += omega[i] * u.at(level, i) * u.at(level, i);
  }
  return std::sqrt(acc);
}

InvariantEntry breakpoint_invariant(const SpaceTimeGrid& g,
                                    const std::vector<double>& bps) {
  double worst = 0.0;
  const std::vector<double> nodes = g.time_nodes();
  for (double b : bps) {
    double best = std::numeric_limits<double>::infinity();
    for (double t : nodes) best = std::min(best, std::abs(t - b));
    worst = std::max(worst, best);
  }
  return {"breakpoints_on_grid", worst <= 1e-12, worst, 1e-12};
}

// Invariants every solving pipeline asserts: the Newton residual gate, the
// per-step energy identity (as a ratio against its per-step allowance), and
// breakpoint placement.
void append_solve_invariants(Report& r, const RunConfig& cfg, const ProblemSpec& spec,
                             const Solution& sol) {
  const SpaceTimeGrid& g = *spec.grid;
  const std::vector<double> omega = nodal_weights(g);

  double worst_residual = 0.0;
  double worst_energy_ratio = 0.0;
  for (const StepDiagnostics& d : sol.steps) {
    worst_residual = std::max(worst_residual, d.residual);
    const double allowance =
        d.residual * l2_omega(g, omega, sol.u, d.time_index + 1) + 1e-10;
    worst_energy_ratio = std::max(worst_energy_ratio, std::abs(d.energy_residual) / allowance);
  }
  r.invariants.push_back({"newton_residual", worst_residual <= cfg.solver.newton_tol,
                          worst_residual, cfg.solver.newton_tol});
  r.invariants.push_back(
      {"per_step_energy", worst_energy_ratio <= 1.0, worst_energy_ratio, 1.0});

  const std::vector<double> bps = collected_breakpoints(cfg);
  if (!bps.empty()) r.invariants.push_back(breakpoint_invariant(g, bps));
}

void append_energy(Report& r, const EnergySeries& series, const std::string& name) {
  double worst = 0.0;
  for (const EnergyReport& n : series.nodes) worst = std::max(worst, n.residual);
  r.invariants.push_back(
      {name, series.direction_ok, worst, 1e-8 * series.scale});
}

std::vector<std::pair<std::string, std::string>> field_files(const Solution& sol) {
  return {{"u.csv", render_csv(sol.u)},
          {"gradient.csv", render_csv(sol.gradient)},
          {"flux.csv", render_csv(sol.flux)}};
}

// Midpoints between consecutive distinguished times (0, breakpoints, T):
// exactly the sampling times at which a piecewise law is smooth.
std::vector<double> phase_midpoints(const std::vector<double>& bps, double horizon) {
  std::vector<double> pts = {0.0};
  for (double b : bps) {
    if (b > 0.0 && b < horizon) pts.push_back(b);
  }
  pts.push_back(horizon);
  std::sort(pts.begin(), pts.end());
  std::vector<double> mids;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    mids.push_back(0.5 * (pts[i] + pts[i + 1]));
  }
  return mids;
}

// ---------------------------------------------------------------------------
// Pipelines
// ---------------------------------------------------------------------------

RunArtifacts pipeline_check_nfunction(const RunConfig& cfg) {
  Report rep = base_report(cfg);
  const MonotoneOperator op = make_operator(cfg);
  const NFunction& M = op.governing;

  NFunctionSampleSpec spec;
  spec.t_lo = 0.0;
  spec.t_hi = cfg.horizon;
  spec.x_lo = box_lo(cfg);
  spec.x_hi = box_hi(cfg);
  spec.seed = cfg.seed;
  const YoungPropertyReport props = check_nfunction_properties(M, spec);
  for (const PropertyCheck& c : props.checks) append_property(rep, c);

  if (M.isotropic) {
    ThetaConditionSpec tspec;
    tspec.t_samples = phase_midpoints(M.breakpoints, cfg.horizon);
    const ThetaConditionReport tc =
        check_theta_condition(M, box_lo(cfg), box_hi(cfg), tspec);
    Curve curve{"theta_condition_ratio", {}};
    double worst = 0.0;
    for (const auto& d : tc.per_delta) {
      curve.points.push_back({d.delta, d.max_ratio});
      worst = std::max(worst, d.max_ratio);
    }
    rep.curves.push_back(std::move(curve));
    const double bound =
        tc.per_delta.empty() ? 1.0 : 1.5 * std::max(tc.per_delta.front().max_ratio, 1.0);
    rep.invariants.push_back({"theta_condition_bounded", tc.bounded, worst, bound});
  }
  return finish(cfg, std::move(rep));
}

RunArtifacts pipeline_check_operator(const RunConfig& cfg) {
  Report rep = base_report(cfg);
  const MonotoneOperator op = make_operator(cfg);

  OperatorSampleSpec spec;
  spec.t_lo = 0.0;
  spec.t_hi = cfg.horizon;
  spec.x_lo = box_lo(cfg);
  spec.x_hi = box_hi(cfg);
  spec.seed = cfg.seed;
  const AssumptionReport ar = check_assumptions(op, spec);
  append_property(rep, ar.coercivity_growth);
  append_property(rep, ar.monotonicity);
  append_property(rep, ar.zero_at_zero);

  Curve balls{"ball_bounds", {}};
  for (const BallBound& b : ar.ball_bounds) {
    balls.points.push_back({b.radius, b.max_flux_norm});
  }
  rep.curves.push_back(std::move(balls));
  return finish(cfg, std::move(rep));
}

RunArtifacts pipeline_solve(const RunConfig& cfg) {
  Report rep = base_report(cfg);
  const ProblemSpec spec = make_problem(cfg);
  const Solution sol = solve(spec, cfg.solver);

  append_solve_invariants(rep, cfg, spec, sol);
  const EnergySeries series =
      global_energy_series(sol, spec.source, spec.op.governing.isotropic);
  rep.energy = series.nodes;
  append_energy(rep, series, "energy_direction");

  Curve iters{"newton_iters", {}};
  Curve residuals{"step_residual", {}};
  for (const StepDiagnostics& d : sol.steps) {
    iters.points.push_back({double(d.time_index), double(d.newton_iters)});
    residuals.points.push_back({double(d.time_index), d.residual});
  }
  rep.curves.push_back(std::move(iters));
  rep.curves.push_back(std::move(residuals));
  return finish(cfg, std::move(rep), field_files(sol));
}

RunArtifacts pipeline_energy_report(const RunConfig& cfg) {
  Report rep = base_report(cfg);
  const ProblemSpec spec = make_problem(cfg);
  const Solution sol = solve(spec, cfg.solver);
  const SpaceTimeGrid& g = *spec.grid;

  append_solve_invariants(rep, cfg, spec, sol);

  auto wants = [&](const char* name) {
    return std::find(cfg.diagnostics.begin(), cfg.diagnostics.end(), name) !=
           cfg.diagnostics.end();
  };

  if (wants("global_energy")) {
    const EnergySeries series =
        global_energy_series(sol, spec.source, spec.op.governing.isotropic);
    rep.energy = series.nodes;
    append_energy(rep, series, "global_direction");
  }
  if (wants("local_energy")) {
    const Cutoff psi = interior_plateau_cutoff(g);
    for (double k : cfg.k_list) {
      const EnergySeries series = local_energy_series(sol, spec.source, psi, k);
      append_energy(rep, series, "local_direction[k=" + format_g(k) + "]");
      Curve res{"local_residual[k=" + format_g(k) + "]", {}};
      for (const EnergyReport& n : series.nodes) res.points.push_back({n.t, n.residual});
      rep.curves.push_back(std::move(res));
    }
  }
  if (wants("approximation")) {
    const Cutoff psi = boundary_cutoff(g, 2);
    for (double k : cfg.k_list) {
      const DiagnosticCurve curve =
          approximation_diagnostic(sol, spec.op.governing, k, psi, cfg.eps_list);
      Curve full{"approximation_full[k=" + format_g(k) + "]", {}};
      Curve half{"approximation_half[k=" + format_g(k) + "]", {}};
      for (std::size_t i = 0; i < curve.eps.size(); ++i) {
        full.points.push_back({curve.eps[i], curve.distance_full[i]});
        half.points.push_back({curve.eps[i], curve.distance_half[i]});
      }
      rep.curves.push_back(std::move(full));
      rep.curves.push_back(std::move(half));
      const double first = curve.distance_full.front();
      const double ratio = first > 0.0 ? curve.distance_full.back() / first
                                       : (curve.distance_full.back() > 0.0 ? HUGE_VAL : 0.0);
      rep.invariants.push_back(
          {"approximation_trend[k=" + format_g(k) + "]", curve.trend_ok, ratio, 1.0});
    }
  }
  return finish(cfg, std::move(rep), field_files(sol));
}

RunArtifacts pipeline_theta_study(const RunConfig& cfg) {
  Report rep = base_report(cfg);
  const ProblemSpec spec = make_problem(cfg);
  const Solution sol = solve(spec, cfg.solver);

  append_solve_invariants(rep, cfg, spec, sol);

  Curve term{"theta_term", {}};
  Curve conj_term{"conjugate_theta_term", {}};
  Curve sup_l2{"sup_l2", {}};
  Curve mod_grad{"modular_gradient", {}};
  Curve conj_flux{"conjugate_modular_flux", {}};
  for (const ThetaStage& s : sol.theta_trace) {
    term.points.push_back({s.theta, s.theta_term});
    conj_term.points.push_back({s.theta, s.conjugate_theta_term});
    sup_l2.points.push_back({s.theta, s.sup_l2});
    mod_grad.points.push_back({s.theta, s.modular_gradient});
    conj_flux.points.push_back({s.theta, s.conjugate_modular_flux});
  }

  double worst_ratio = 0.0;
  for (std::size_t i = 0; i + 1 < sol.theta_trace.size(); ++i) {
    const double a = sol.theta_trace[i].theta_term;
    const double b = sol.theta_trace[i + 1].theta_term;
    worst_ratio = std::max(worst_ratio, a > 0.0 ? b / a : HUGE_VAL);
  }
  rep.invariants.push_back(
      {"theta_term_decreasing", worst_ratio < 1.0, worst_ratio, 1.0});

  // Uniform-bound traces must stay within a factor 2 of their first stage.
  double worst_growth = 0.0;
  auto growth = [&](auto pick) {
    const double first = std::max(pick(sol.theta_trace.front()), 1e-300);
    for (const ThetaStage& s : sol.theta_trace) {
      worst_growth = std::max(worst_growth, pick(s) / first);
    }
  };
  growth([](const ThetaStage& s) { return s.sup_l2; });
  growth([](const ThetaStage& s) { return s.modular_gradient; });
  growth([](const ThetaStage& s) { return s.conjugate_modular_flux; });
  growth([](const ThetaStage& s) { return s.conjugate_theta_term; });
  rep.invariants.push_back({"trace_bounds", worst_growth <= 2.0, worst_growth, 2.0});

  // Extending the cascade one stage further must no longer move the solution.
  RunConfig ext = cfg;
  ext.solver.theta_min = cfg.solver.theta_min / 2.0;
  const Solution sol_ext = solve(spec, ext.solver);
  const double gap = l2l2_distance(*spec.grid, sol.u, sol_ext.u);
  rep.invariants.push_back({"theta_limit_gap", gap <= 1e-6, gap, 1e-6});

  rep.curves.push_back(std::move(term));
  rep.curves.push_back(std::move(conj_term));
  rep.curves.push_back(std::move(sup_l2));
  rep.curves.push_back(std::move(mod_grad));
  rep.curves.push_back(std::move(conj_flux));
  return finish(cfg, std::move(rep), field_files(sol));
}

RunArtifacts pipeline_convergence_study(const RunConfig& cfg) {
  if (cfg.exact.empty()) {
    throw config_error("convergence-study requires key 'exact' in [verify]");
  }
  Report rep = base_report(cfg);
  const Expression exact = cfg.exact;
  const OrderStudy study = convergence_study(
      [&cfg](int nodes, int steps) { return make_problem_resized(cfg, nodes, steps); },
      cfg.solver, [exact](double t, const VecD& x) { return exact(t, x); },
      cfg.node_counts, cfg.step_counts);

  Curve h_curve{"h_errors", {}};
  for (std::size_t i = 0; i < study.node_counts.size(); ++i) {
    h_curve.points.push_back({double(study.node_counts[i]), study.h_errors[i]});
  }
  Curve dt_curve{"dt_errors", {}};
  for (std::size_t i = 0; i < study.step_counts.size(); ++i) {
    dt_curve.points.push_back({double(study.step_counts[i]), study.dt_errors[i]});
  }
  rep.curves.push_back(std::move(h_curve));
  rep.curves.push_back(std::move(dt_curve));

  // Second order in space and first order in time, with the customary margin.
  rep.invariants.push_back(
      {"spatial_order", study.spatial_order >= 1.8, study.spatial_order, 1.8});
  rep.invariants.push_back(
      {"temporal_order", study.temporal_order >= 0.9, study.temporal_order, 0.9});
  return finish(cfg, std::move(rep));
}

RunArtifacts pipeline_uniqueness_probe(const RunConfig& cfg) {
  Report rep = base_report(cfg);
  const ProblemSpec spec = make_problem(cfg);
  const UniquenessReport ur = uniqueness_probe(spec, cfg.solver);

  const double tol = 10.0 * cfg.solver.newton_tol;
  rep.invariants.push_back({"solution_gap", ur.l2l2_diff <= tol, ur.l2l2_diff, tol});
  rep.invariants.push_back({"monotone_pairing", ur.monotone_pairing >= -1e-10,
                            ur.monotone_pairing, -1e-10});

  Curve norms{"difference_norms", {}};
  norms.points.push_back({2.0, ur.l2l2_diff});  // param 2: L2(L2)
  norms.points.push_back({0.0, ur.sup_diff});   // param 0: sup norm
  rep.curves.push_back(std::move(norms));
  return finish(cfg, std::move(rep));
}

RunArtifacts pipeline_boundary_decay(const RunConfig& cfg) {
  Report rep = base_report(cfg);
  const ProblemSpec spec = make_problem(cfg);
  const Solution sol = solve(spec, cfg.solver);

  append_solve_invariants(rep, cfg, spec, sol);
  const DecayCurve curve = boundary_modular_decay(sol, spec.op.governing, cfg.j_list);

  Curve decay{"boundary_decay", {}};
  double worst_ratio = 0.0;
  for (std::size_t i = 0; i < curve.j.size(); ++i) {
    decay.points.push_back({double(curve.j[i]), curve.value[i]});
    if (i > 0 && curve.value[i - 1] > 0.0) {
      worst_ratio = std::max(worst_ratio, curve.value[i] / curve.value[i - 1]);
    }
  }
  rep.curves.push_back(std::move(decay));
  rep.curves.push_back({"decay_last_over_first", {{0.0, curve.last_over_first}}});
  rep.curves.push_back({"decay_normalization", {{0.0, curve.c_u}}});
  rep.invariants.push_back(
      {"decay_decreasing", curve.decreasing, worst_ratio, 1.0});
  return finish(cfg, std::move(rep), field_files(sol));
}

RunArtifacts abort_artifacts(int code, const std::string& what) {
  RunArtifacts art;
  art.exit_code = code;
  art.summary = what;
  return art;
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = {
      "check-nfunction", "check-operator",    "solve",
      "energy-report",   "theta-study",       "convergence-study",
      "uniqueness-probe", "boundary-decay"};
  return names;
}

RunArtifacts run_pipeline(const std::string& subcommand, const RunConfig& cfg) {
  try {
    if (subcommand == "check-nfunction") return pipeline_check_nfunction(cfg);
    if (subcommand == "check-operator") return pipeline_check_operator(cfg);
    if (subcommand == "solve") return pipeline_solve(cfg);
    if (subcommand == "energy-report") return pipeline_energy_report(cfg);
    if (subcommand == "theta-study") return pipeline_theta_study(cfg);
    if (subcommand == "convergence-study") return pipeline_convergence_study(cfg);
    if (subcommand == "uniqueness-probe") return pipeline_uniqueness_probe(cfg);
    if (subcommand == "boundary-decay") return pipeline_boundary_decay(cfg);
    throw config_error("unknown subcommand '" + subcommand + "'");
  } catch (const config_error& e) {
    return abort_artifacts(2, std::string("configuration error: ") + e.what());
  } catch (const step_error& e) {
    return abort_artifacts(3, std::string("solver failure: ") + e.what());
  } catch (const invariant_error& e) {
    return abort_artifacts(4, std::string("invariant violated: ") + e.what());
  } catch (const growth_error& e) {
    return abort_artifacts(4, std::string("growth violation: ") + e.what());
  } catch (const error& e) {
    return abort_artifacts(3, std::string("runtime failure: ") + e.what());
  } catch (const std::exception& e) {
    return abort_artifacts(3, std::string("runtime failure: ") + e.what());
  }
}

int run_cli(int argc, const char* const* argv) {
  const std::string usage =
      "usage: <binary> <subcommand> --config <path> [--out <dir>] [--seed <n>]\n"
      "subcommands: check-nfunction | check-operator | solve | energy-report |\n"
      "             theta-study | convergence-study | uniqueness-probe | boundary-decay\n";

  if (argc < 2) {
    std::cerr << usage;
    return 2;
  }
  const std::string sub = argv[1];
  const auto& names = subcommands();
  if (std::find(names.begin(), names.end(), sub) == names.end()) {
    std::cerr << "unknown subcommand '" << sub << "'\n" << usage;
    return 2;
  }

  std::string config_path, out_override, seed_text;
  for (int i = 2; i < argc; ++i) {
    const std::string flag = argv[i];
    if (flag != "--config" && flag != "--out" && flag != "--seed") {
      std::cerr << "unknown option '" << flag << "'\n" << usage;
      return 2;
    }
    if (i + 1 >= argc) {
      std::cerr << "option '" << flag << "' requires a value\n" << usage;
      return 2;
    }
    const std::string value = argv[++i];
    if (flag == "--config") config_path = value;
    else if (flag == "--out") out_override = value;
    else seed_text = value;
  }
  if (config_path.empty()) {
    std::cerr << "missing required option --config\n" << usage;
    return 2;
  }

  std::ifstream in(config_path);
  if (!in) {
    std::cerr << "cannot read config file '" << config_path << "'\n";
    return 2;
  }
  std::stringstream buffer;
  buffer << in.rdbuf();

  RunConfig cfg;
  try {
    cfg = parse_config(buffer.str());
  } catch (const config_error& e) {
    std::cerr << "configuration error in '" << config_path << "': " << e.what() << "\n";
    return 2;
  }
  if (!out_override.empty()) cfg.out_dir = out_override;
  if (!seed_text.empty()) {
    try {
      cfg.seed = std::stoul(seed_text);
    } catch (const std::exception&) {
      std::cerr << "--seed expects a nonnegative integer, got '" << seed_text << "'\n";
      return 2;
    }
  }

  const RunArtifacts art = run_pipeline(sub, cfg);

  if (!art.report_json.empty() || !art.files.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.out_dir, ec);
    if (ec) {
      std::cerr << "cannot create output directory '" << cfg.out_dir
                << "': " << ec.message() << "\n";
      return 3;
    }
    if (cfg.write_json && !art.report_json.empty()) {
      std::ofstream out(std::filesystem::path(cfg.out_dir) / "report.json");
      out << art.report_json;
      if (!out) {
        std::cerr << "cannot write report.json\n";
        return 3;
      }
    }
    for (const auto& [name, content] : art.files) {
      std::ofstream out(std::filesystem::path(cfg.out_dir) / name);
      out << content;
      if (!out) {
        std::cerr << "cannot write " << name << "\n";
        return 3;
      }
    }
  }

  std::cout << sub << ": " << art.summary << "\n";
  if (art.exit_code != 0) {
    std::cerr << sub << " failed with exit code " << art.exit_code << "\n";
  }
  return art.exit_code;
}

}  // namespace morpde
