#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "boltzgen/ast.hpp"

namespace boltzgen {

enum class OracleStatus { Converged, Diverged, ResourceLimited };

/// Dense uniform grid of a differential class on [0, x]: abscissae,
/// values, and right-hand-side (derivative) values for interpolation.
struct OdeGridEntry {
  std::vector<double> t, y, dydt;
};

struct OracleTable {
  double x = 0;
  std::map<std::string, double> values;
  OracleStatus status = OracleStatus::Diverged;
  int iterations = 0;
  double residual = std::numeric_limits<double>::infinity();
  std::vector<double> residual_history;
  std::map<std::string, OdeGridEntry> ode_grid;
};

struct EvalOptions {
  double tol = 1e-12;
  double value_cap = 1e9;          // values past this signal x at/over the singularity
  int newton_iteration_cap = 500;
  int ode_initial_steps = 64;
  int ode_max_doublings = 15;
  std::size_t mset_power_cap = 200000;  // geometric-point budget per evaluation
  double mset_tail_target = 1e-17;      // truncation bound on the MSet exponent sum
};

/// Evaluator for one specification (optionally restricted to the dependency
/// closure of a root class). Stateful: eval(x) caches the solution at x and
/// at every geometric point x^k an MSet construction required, so that node
/// constants can be queried afterwards. Not thread-safe; share the results,
/// not the evaluator.
class GfOracle {
 public:
  explicit GfOracle(const Spec& spec, EvalOptions options = {});
  GfOracle(const Spec& spec, const std::string& root, EvalOptions options = {});
  ~GfOracle();
  GfOracle(GfOracle&&) noexcept;
  GfOracle& operator=(GfOracle&&) noexcept;

  /// Solves the generating-function system at x. Labelled specifications use
  /// exponential generating functions throughout.
  OracleTable eval(double x);

  /// Convergence predicate used for singularity location. For systems with
  /// differential classes this runs an adaptive blow-up probe instead of the
  /// dense-grid integration, so divergence just past the singularity is
  /// detected at fine resolution.
  OracleStatus probe(double x);

  // Queries against the last converged eval(x). `power` selects the
  // geometric point x^power (power 1 = x itself); only points the
  // evaluation actually visited are available.
  bool has_power(std::size_t power) const;
  double class_value(const std::string& cls, std::size_t power = 1) const;
  double expr_value(const ClassExpr& e, std::size_t power = 1) const;
  /// For an MSet node: argument values A(x^{power·j}) for j = 1..K, where K
  /// covers the exponent sum to the configured tail bound.
  std::vector<double> mset_inner_values(const ClassExpr& mset_node,
                                        std::size_t power = 1) const;

  const OdeGridEntry& ode_grid(const std::string& cls) const;
  /// Cubic Hermite interpolation of a differential class on its grid.
  double grid_value(const std::string& cls, double t) const;
  /// All class values at parameter t in [0, x]: differential classes from
  /// their grids, algebraic classes by a fresh Newton solve. nullopt if the
  /// algebraic subsystem fails at t.
  std::optional<std::map<std::string, double>> values_at(double t);

  const Spec& spec() const;
  const EvalOptions& options() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct RadiusEstimate {
  double value = 0;
  double halfwidth = 0;
  bool entire = false;       // no divergence up to the probe cap
  bool uncertain = false;    // evaluation budget limited the bracketing
};

struct TuneResult {
  std::uint64_t target_size = 0;
  double parameter = 0;
  double achieved_expected_size = 0;
  RadiusEstimate radius;
  bool singular_recommendation = false;  // expected size stays below target up to rho
};

OracleTable eval(const Spec& spec, double x, const EvalOptions& options = {});

/// Numerical derivative of the class generating function (central finite
/// difference; the step shrinks toward a known singularity).
double eval_derivative(const Spec& spec, const std::string& cls, double x,
                       const EvalOptions& options = {},
                       std::optional<double> rho_hint = {});

/// Expected size x·C'(x)/C(x) under the Boltzmann distribution.
double expected_size(const Spec& spec, const std::string& cls, double x,
                     const EvalOptions& options = {},
                     std::optional<double> rho_hint = {});

/// Dominant-singularity location by bisection on the convergence predicate.
RadiusEstimate find_radius(const Spec& spec, const std::string& cls,
                           const EvalOptions& options = {});

/// Solves expected_size(x) = n on (0, rho). If the expected size stays below
/// n all the way to the singularity, returns rho with the singular flag.
TuneResult tune(const Spec& spec, const std::string& cls, std::uint64_t n,
                const EvalOptions& options = {});

}  // namespace boltzgen
