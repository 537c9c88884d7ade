#pragma once

#include <morpde/config.hpp>
#include <morpde/report.hpp>

#include <string>
#include <utility>
#include <vector>

namespace morpde {

/// Supported pipelines, in documentation order:
///   check-nfunction    sampled structural checks of the governing N-function
///   check-operator     sampled flux-law checks (coercivity, monotonicity, ...)
///   solve              cascade solve; writes fields and the energy series
///   energy-report      solve plus global/local energy and the approximation
///                      diagnostic selected in [verify] diagnostics
///   theta-study        regularization cascade traces and the limit gap
///   convergence-study  orders against the [verify] exact reference
///   uniqueness-probe   two independent solves compared in L2(L2) and sup
///   boundary-decay     modular decay of boundary-collar gradients
const std::vector<std::string>& subcommands();

/// Outcome of one pipeline. Exit codes: 0 every asserted invariant passed,
/// 2 configuration problem, 3 solver or runtime failure, 4 violated
/// invariant. An aborted run (codes 2 and 3, and code-4 aborts raised as
/// exceptions) carries no report text.
struct RunArtifacts {
  int exit_code = 0;
  std::string summary;      // one console line
  std::string report_json;  // rendered Report; empty when the run aborted
  std::vector<std::pair<std::string, std::string>> files;  // name -> content
};

RunArtifacts run_pipeline(const std::string& subcommand, const RunConfig& cfg);

/// Command-line entry point:
///   <binary> <subcommand> --config <path> [--out <dir>] [--seed <n>]
/// Reads and parses the configuration, applies the overrides, runs the
/// pipeline, creates the output directory if missing, writes report.json and
/// any CSV files, prints the summary, and returns the exit code.
int run_cli(int argc, const char* const* argv);

}  // namespace morpde
