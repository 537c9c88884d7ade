#pragma once

#include <array>
#include <functional>
#include <memory>
#include <vector>

#include "morpde/common.hpp"

namespace morpde {

/// One spatial axis of the tensor grid: `nodes` equispaced nodes on [lo, hi].
struct Axis {
  int nodes = 2;
  double lo = 0.0;
  double hi = 1.0;

  double length() const { return hi - lo; }
  int cells() const { return nodes - 1; }
  double h() const { return length() / cells(); }
};

/// Tensor-product carrier for the space-time cylinder (0, T) x Omega with
/// Omega an axis-aligned box in dimension 1 or 2. Time nodes are uniform
/// except that every declared breakpoint is inserted as an extra node, so a
/// growth law that is discontinuous across a breakpoint is smooth inside
/// every time cell. Spatial indexing is x-fastest.
class SpaceTimeGrid {
 public:
  SpaceTimeGrid(std::vector<Axis> space, double horizon, int time_steps,
                std::vector<double> time_breakpoints = {});

  static std::shared_ptr<const SpaceTimeGrid> create(
      std::vector<Axis> space, double horizon, int time_steps,
      std::vector<double> time_breakpoints = {}) {
    return std::make_shared<const SpaceTimeGrid>(
        std::move(space), horizon, time_steps, std::move(time_breakpoints));
  }

  int dim() const { return static_cast<int>(space_.size()); }
  const Axis& axis(int a) const { return space_[static_cast<std::size_t>(a)]; }
  double horizon() const { return horizon_; }
  const std::vector<double>& breakpoints() const { return breakpoints_; }

  // Time partition. Intervals are indexed 0..time_intervals()-1; interval n
  // spans [time_node(n), time_node(n+1)].
  int time_levels() const { return static_cast<int>(times_.size()); }
  int time_intervals() const { return time_levels() - 1; }
  double time_node(int n) const { return times_[static_cast<std::size_t>(n)]; }
  double dt(int n) const { return times_[static_cast<std::size_t>(n) + 1] - times_[static_cast<std::size_t>(n)]; }
  double time_mid(int n) const { return 0.5 * (times_[static_cast<std::size_t>(n)] + times_[static_cast<std::size_t>(n) + 1]); }
  const std::vector<double>& time_nodes() const { return times_; }

  // Spatial nodes and cells, x-fastest.
  int node_count() const;
  int cell_count() const;
  VecD node_position(int i) const;
  VecD cell_center(int c) const;
  bool boundary_node(int i) const;
  int node_index(int ix, int iy = 0) const;
  int cell_index(int cx, int cy = 0) const;

  /// Volume of one spatial cell (all cells are congruent).
  double cell_volume() const;
  double space_measure() const;
  /// Measure of the space-time cylinder, horizon * |Omega|.
  double total_measure() const { return horizon_ * space_measure(); }
  /// Sum of all space-time cell measures; equals total_measure() up to
  /// roundoff (checked by tests, relative 1e-12).
  double quadrature_measure() const;

 private:
  std::vector<Axis> space_;
  double horizon_;
  std::vector<double> times_;
  std::vector<double> breakpoints_;
};

/// Where a field's spatial samples live.
enum class SpaceStagger { Nodes, Cells };
/// Where a field's time samples live: at time nodes (levels) or one value per
/// time interval.
enum class TimeStagger { Levels, Intervals };

/// Sampled scalar- or vector-valued function on the space-time grid. Storage
/// is time-major, then space (x-fastest), then component.
class DiscreteField {
 public:
  DiscreteField(std::shared_ptr<const SpaceTimeGrid> grid, SpaceStagger space,
                TimeStagger time, int arity);

  /// Samples f(t, x) (returning an arity-long vector) at this stagger's
  /// sample points.
  static DiscreteField sample(std::shared_ptr<const SpaceTimeGrid> grid,
                              SpaceStagger space, TimeStagger time, int arity,
                              const std::function<VecD(double, const VecD&)>& f);

  const SpaceTimeGrid& grid() const { return *grid_; }
  const std::shared_ptr<const SpaceTimeGrid>& grid_ptr() const { return grid_; }
  SpaceStagger space_stagger() const { return space_; }
  TimeStagger time_stagger() const { return time_; }
  int arity() const { return arity_; }

  int time_count() const;
  int space_count() const;

  /// Time coordinate of row n: the node for level-staggered fields, the
  /// interval midpoint for interval-staggered ones.
  double t_at(int n) const;
  /// Spatial coordinate of slot i: node position or cell center.
  VecD x_at(int i) const;

  double& at(int n, int i, int k = 0) {
    return values_[(static_cast<std::size_t>(n) * static_cast<std::size_t>(space_count()) + static_cast<std::size_t>(i)) * static_cast<std::size_t>(arity_) + static_cast<std::size_t>(k)];
  }
  double at(int n, int i, int k = 0) const {
    return values_[(static_cast<std::size_t>(n) * static_cast<std::size_t>(space_count()) + static_cast<std::size_t>(i)) * static_cast<std::size_t>(arity_) + static_cast<std::size_t>(k)];
  }
  VecD vec_at(int n, int i) const;

  std::vector<double>& data() { return values_; }
  const std::vector<double>& data() const { return values_; }

  bool dirichlet_trace = false;

  /// True when the two fields share the grid, staggers, and arity.
  bool same_shape(const DiscreteField& other) const;

 private:
  std::shared_ptr<const SpaceTimeGrid> grid_;
  SpaceStagger space_;
  TimeStagger time_;
  int arity_;
  std::vector<double> values_;
};

/// Elementwise a - b; throws invariant_error on shape mismatch.
DiscreteField field_difference(const DiscreteField& a, const DiscreteField& b);
/// Elementwise a + b; throws invariant_error on shape mismatch.
DiscreteField field_sum(const DiscreteField& a, const DiscreteField& b);
/// Elementwise c * a.
DiscreteField field_scale(const DiscreteField& a, double c);

/// Average of the field's sample values adjacent to space-time cell (n, c):
/// the stored value itself when the field is interval/cell staggered, the
/// corner (and level) average otherwise. This is the midpoint-rule value the
/// quadrature layer integrates.
VecD cell_value(const DiscreteField& f, int n, int c);

}  // namespace morpde
