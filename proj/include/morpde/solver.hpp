#pragma once

#include <optional>
#include <span>

#include "morpde/modular.hpp"
#include "morpde/operators.hpp"

namespace morpde {

/// The initial-boundary value problem u_t = div A(t,x,grad u) + f on the
/// grid's cylinder with homogeneous Dirichlet data. `initial_nodal`, when
/// set, overrides the initial map with exact nodal values (restart runs).
struct ProblemSpec {
  std::shared_ptr<const SpaceTimeGrid> grid;
  MonotoneOperator op;
  ScalarMap source;
  std::function<double(const VecD&)> initial;
  std::optional<std::vector<double>> initial_nodal;
};

struct SolverConfig {
  double newton_tol = 1e-10;  // on the pointwise residual max-norm
  int max_newton = 50;
  int max_line_search = 20;  // residual backtracking halvings
  bool picard_fallback = true;
  int picard_fallback_after = 3;  // failed line searches before switching
  int max_picard = 200;
  double theta0 = 1e-2;
  double theta_min = 1e-6;
  double theta_ratio = 2.0;
  enum class Init { PreviousLevel, Zero };
  Init init = Init::PreviousLevel;  // Newton start at the first cascade stage
};

/// Geometric schedule theta0, theta0/ratio, ... while > theta_min, then
/// theta_min itself; strictly decreasing.
std::vector<double> theta_schedule(const SolverConfig& cfg);

/// Trapezoidal nodal quadrature weights (boundary nodes carry half weight
/// per axis); sums exactly to |Omega|.
std::vector<double> nodal_weights(const SpaceTimeGrid& g);

/// Cell-centered gradient of a nodal level: forward difference in 1-D, the
/// bilinear cell-center gradient in 2-D.
std::vector<VecD> discrete_gradient(const SpaceTimeGrid& g,
                                    std::span<const double> level);

/// Nodal divergence defined as the negative adjoint of discrete_gradient
/// under the (nodal weights, cell volume) inner products, so
/// <div q, v>_nodes = -<q, grad v>_cells holds to round-off.
std::vector<double> discrete_divergence(const SpaceTimeGrid& g,
                                        const std::vector<VecD>& q);

struct StepDiagnostics {
  int time_index = 0;
  int newton_iters = 0;
  int picard_iters = 0;
  int line_search_failures = 0;
  double residual = 0.0;         // final pointwise residual max-norm
  double energy_residual = 0.0;  // defect of the per-step energy identity
};

/// One implicit step from `prev` (level time_index) to level time_index + 1
/// with the regularized flux: the unknown enters implicitly at the right
/// endpoint while the flux law and the source are sampled at the interval
/// midpoint, so a law that jumps at a breakpoint node is always read on the
/// side the interval belongs to. Throws step_error if Newton and the Picard
/// fallback both fail; throws invariant_error if the accepted level violates
/// the per-step energy identity beyond |residual|-induced slack.
struct StepResult {
  std::vector<double> u;
  StepDiagnostics diag;
};
StepResult step(const SpaceTimeGrid& g, const std::vector<double>& prev,
                int time_index, const RegularizedOperator& A, const ScalarMap& f,
                const SolverConfig& cfg,
                const std::vector<double>* initial_guess = nullptr);

/// Per-stage cascade record: the vanishing regularization term and the four
/// uniform-bound quantities tracked along the schedule.
struct ThetaStage {
  double theta = 0.0;
  double theta_term = 0.0;              // integral of |theta grad m(|grad u|)|
  double sup_l2 = 0.0;                  // max over levels of the L2 norm of u
  double modular_gradient = 0.0;        // modular of grad u at scale 1
  double conjugate_modular_flux = 0.0;  // conjugate modular of the base flux
  double conjugate_theta_term = 0.0;    // integral of theta m*(|grad m(|grad u|)|)
  int max_newton_iters = 0;
};

struct Solution {
  std::shared_ptr<const SpaceTimeGrid> grid;
  DiscreteField u;         // scalar, nodes x time levels
  DiscreteField gradient;  // d-vector, cells x intervals; interval n holds grad of level n+1
  DiscreteField flux;      // d-vector, cells x intervals; interval n holds the base
                           // flux A(t_mid(n), x, grad u^{n+1}) the scheme integrated
  std::vector<StepDiagnostics> steps;  // final stage
  std::vector<ThetaStage> theta_trace;
  double final_theta = 0.0;

  Solution(std::shared_ptr<const SpaceTimeGrid> g)
      : grid(g),
        u(g, SpaceStagger::Nodes, TimeStagger::Levels, 1),
        gradient(g, SpaceStagger::Cells, TimeStagger::Intervals, g->dim()),
        flux(g, SpaceStagger::Cells, TimeStagger::Intervals, g->dim()) {}
};

/// Full theta-cascade solve: every stage integrates all time steps with the
/// stage's regularized operator, warm-started from the previous stage; the
/// reported solution is the theta_min stage.
Solution solve(const ProblemSpec& spec, const SolverConfig& cfg);

/// Quadrature of |theta grad m(|grad u|)| over the cylinder for the stored
/// final-stage gradient.
double theta_term_norm(const Solution& sol, double theta, const YoungFunction& m);

}  // namespace morpde
