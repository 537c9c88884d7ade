#pragma once

#include <morpde/grid.hpp>
#include <morpde/verify.hpp>

#include <string>
#include <vector>

namespace morpde {

/// One asserted invariant: `pass` decides the process exit code, `worst` is
/// the observed extreme, `tol` the gate it was compared against.
struct InvariantEntry {
  std::string name;
  bool pass = false;
  double worst = 0.0;
  double tol = 0.0;
};

struct CurvePoint {
  double param = 0.0;
  double value = 0.0;
};

struct Curve {
  std::string name;
  std::vector<CurvePoint> points;
};

/// Structured run outcome rendered to JSON with a fixed schema: top-level
/// keys config_echo (canonical configuration text), invariants (name ->
/// {pass, worst, tol}), curves (name -> [{param, value}]), energy
/// ([{t, lhs, rhs, residual}]), timing ({timestamp}). Keys keep insertion
/// order; numbers carry 17 significant digits. The timestamp is the only
/// field that varies between identical runs.
struct Report {
  std::string config_echo;
  std::vector<InvariantEntry> invariants;
  std::vector<Curve> curves;
  std::vector<EnergyReport> energy;
  std::string timestamp;

  bool all_pass() const;
  std::string render_json() const;
};

/// Serializes a field as CSV. Header: t,x1[,x2] then `value` for scalar
/// fields or `value,v1[,v2]` (magnitude, then components) for vector fields.
/// Rows are row-major in time, then space, 17 significant digits.
std::string render_csv(const DiscreteField& f);

/// Current wall-clock time as ISO 8601 UTC (e.g. 2026-08-18T23:00:00Z).
std::string current_timestamp_utc();

/// Removes the timestamp line, for byte-comparing reports across runs.
std::string strip_timestamp(const std::string& json);

}  // namespace morpde
