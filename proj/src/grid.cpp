#include "morpde/grid.hpp"

#include <algorithm>
#include <cmath>

namespace morpde {

SpaceTimeGrid::SpaceTimeGrid(std::vector<Axis> space, double horizon,
                             int time_steps, std::vector<double> time_breakpoints)
    : space_(std::move(space)), horizon_(horizon) {
  if (space_.empty() || space_.size() > 2)
    throw config_error("spatial dimension must be 1 or 2");
  for (const Axis& a : space_) {
    if (a.nodes < 2) throw config_error("each axis needs at least 2 nodes");
    if (!(a.hi > a.lo)) throw config_error("axis extent must be positive");
  }
  if (!(horizon_ > 0.0)) throw config_error("time horizon must be positive");
  if (time_steps < 1) throw config_error("need at least one time step");

  times_.resize(static_cast<std::size_t>(time_steps) + 1);
  for (int n = 0; n <= time_steps; ++n)
    times_[static_cast<std::size_t>(n)] = horizon_ * n / time_steps;
  times_.back() = horizon_;

  const double tol = 1e-12 * std::max(1.0, horizon_);
  std::sort(time_breakpoints.begin(), time_breakpoints.end());
  for (double b : time_breakpoints) {
    if (!(b > 0.0) || !(b < horizon_))
      throw config_error("time breakpoint outside (0, horizon)");
    auto it = std::lower_bound(times_.begin(), times_.end(), b);
    const bool on_node = (it != times_.end() && *it - b <= tol) ||
                         (it != times_.begin() && b - *(it - 1) <= tol);
    if (!on_node) times_.insert(it, b);
    if (breakpoints_.empty() || b - breakpoints_.back() > tol)
      breakpoints_.push_back(b);
  }
}

int SpaceTimeGrid::node_count() const {
  int n = 1;
  for (const Axis& a : space_) n *= a.nodes;
  return n;
}

int SpaceTimeGrid::cell_count() const {
  int n = 1;
  for (const Axis& a : space_) n *= a.cells();
  return n;
}

VecD SpaceTimeGrid::node_position(int i) const {
  if (dim() == 1) return vec1(space_[0].lo + i * space_[0].h());
  const int nx = space_[0].nodes;
  const int ix = i % nx, iy = i / nx;
  return vec2(space_[0].lo + ix * space_[0].h(), space_[1].lo + iy * space_[1].h());
}

VecD SpaceTimeGrid::cell_center(int c) const {
  if (dim() == 1) return vec1(space_[0].lo + (c + 0.5) * space_[0].h());
  const int cx_count = space_[0].cells();
  const int cx = c % cx_count, cy = c / cx_count;
  return vec2(space_[0].lo + (cx + 0.5) * space_[0].h(),
              space_[1].lo + (cy + 0.5) * space_[1].h());
}

bool SpaceTimeGrid::boundary_node(int i) const {
  if (dim() == 1) return i == 0 || i == space_[0].nodes - 1;
  const int nx = space_[0].nodes;
  const int ix = i % nx, iy = i / nx;
  return ix == 0 || ix == nx - 1 || iy == 0 || iy == space_[1].nodes - 1;
}

int SpaceTimeGrid::node_index(int ix, int iy) const {
  return dim() == 1 ? ix : ix + space_[0].nodes * iy;
}

int SpaceTimeGrid::cell_index(int cx, int cy) const {
  return dim() == 1 ? cx : cx + space_[0].cells() * cy;
}

double SpaceTimeGrid::cell_volume() const {
  double v = 1.0;
  for (const Axis& a : space_) v *= a.h();
  return v;
}

double SpaceTimeGrid::space_measure() const {
  double v = 1.0;
  for (const Axis& a : space_) v *= a.length();
  return v;
}

double SpaceTimeGrid::quadrature_measure() const {
  const double space = cell_volume() * cell_count();
  std::vector<double> per_interval(static_cast<std::size_t>(time_intervals()));
  for (int n = 0; n < time_intervals(); ++n)
    per_interval[static_cast<std::size_t>(n)] = dt(n) * space;
  return tree_sum(per_interval);
}

DiscreteField::DiscreteField(std::shared_ptr<const SpaceTimeGrid> grid,
                             SpaceStagger space, TimeStagger time, int arity)
    : grid_(std::move(grid)), space_(space), time_(time), arity_(arity) {
  if (!grid_) throw config_error("field needs a grid");
  if (arity_ != 1 && arity_ != grid_->dim())
    throw config_error("field arity must be 1 or the spatial dimension");
  values_.assign(static_cast<std::size_t>(time_count()) *
                     static_cast<std::size_t>(space_count()) *
                     static_cast<std::size_t>(arity_),
                 0.0);
}

DiscreteField DiscreteField::sample(std::shared_ptr<const SpaceTimeGrid> grid,
                                    SpaceStagger space, TimeStagger time, int arity,
                                    const std::function<VecD(double, const VecD&)>& f) {
  DiscreteField out(std::move(grid), space, time, arity);
  for (int n = 0; n < out.time_count(); ++n) {
    const double t = out.t_at(n);
    for (int i = 0; i < out.space_count(); ++i) {
      const VecD v = f(t, out.x_at(i));
      for (int k = 0; k < arity; ++k) out.at(n, i, k) = v(k);
    }
  }
  return out;
}

int DiscreteField::time_count() const {
  return time_ == TimeStagger::Levels ? grid_->time_levels() : grid_->time_intervals();
}

int DiscreteField::space_count() const {
  return space_ == SpaceStagger::Nodes ? grid_->node_count() : grid_->cell_count();
}

double DiscreteField::t_at(int n) const {
  return time_ == TimeStagger::Levels ? grid_->time_node(n) : grid_->time_mid(n);
}

VecD DiscreteField::x_at(int i) const {
  return space_ == SpaceStagger::Nodes ? grid_->node_position(i) : grid_->cell_center(i);
}

VecD DiscreteField::vec_at(int n, int i) const {
  VecD v(arity_);
  for (int k = 0; k < arity_; ++k) v(k) = at(n, i, k);
  return v;
}

bool DiscreteField::same_shape(const DiscreteField& other) const {
  return grid_.get() == other.grid_.get() && space_ == other.space_ &&
         time_ == other.time_ && arity_ == other.arity_;
}

namespace {

DiscreteField combined(const DiscreteField& a, const DiscreteField& b, double sign) {
  if (!a.same_shape(b))
    throw invariant_error("field shapes differ (grid, stagger, or arity)");
  DiscreteField out = a;
  for (std::size_t j = 0; j < out.data().size(); ++j)
    out.data()[j] = a.data()[j] + sign * b.data()[j];
  return out;
}

}  // namespace

DiscreteField field_difference(const DiscreteField& a, const DiscreteField& b) {
  return combined(a, b, -1.0);
}

DiscreteField field_sum(const DiscreteField& a, const DiscreteField& b) {
  return combined(a, b, 1.0);
}

DiscreteField field_scale(const DiscreteField& a, double c) {
  DiscreteField out = a;
  for (double& v : out.data()) v *= c;
  return out;
}

VecD cell_value(const DiscreteField& f, int n, int c) {
  const SpaceTimeGrid& g = f.grid();

  int rows[2];
  int row_count = 1;
  rows[0] = n;
  if (f.time_stagger() == TimeStagger::Levels) {
    rows[1] = n + 1;
    row_count = 2;
  }

  int slots[4];
  int slot_count = 1;
  slots[0] = c;
  if (f.space_stagger() == SpaceStagger::Nodes) {
    if (g.dim() == 1) {
      slots[0] = c;
      slots[1] = c + 1;
      slot_count = 2;
    } else {
      const int cx_count = g.axis(0).cells();
      const int nx = g.axis(0).nodes;
      const int cx = c % cx_count, cy = c / cx_count;
      const int base = cx + nx * cy;
      slots[0] = base;
      slots[1] = base + 1;
      slots[2] = base + nx;
      slots[3] = base + nx + 1;
      slot_count = 4;
    }
  }

  VecD v = VecD::Zero(f.arity());
  for (int r = 0; r < row_count; ++r)
    for (int s = 0; s < slot_count; ++s) v += f.vec_at(rows[r], slots[s]);
  v /= static_cast<double>(row_count * slot_count);
  return v;
}

}  // namespace morpde
