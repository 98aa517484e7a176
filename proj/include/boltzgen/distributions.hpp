#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "boltzgen/oracle.hpp"

namespace boltzgen {

/// Open/half-open interval on a sampler constant within which the draw that
/// produced it would have come out identical.
struct SafetyInterval {
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  bool lo_open = false;
  bool hi_open = false;

  static SafetyInterval full() {
    return {-std::numeric_limits<double>::infinity(),
            std::numeric_limits<double>::infinity(), true, true};
  }
  bool contains(double p) const {
    if (p < lo || (lo_open && p == lo)) return false;
    if (p > hi || (hi_open && p == hi)) return false;
    return true;
  }
  void intersect(const SafetyInterval& o) {
    if (o.lo > lo || (o.lo == lo && o.lo_open)) {
      lo = o.lo;
      lo_open = o.lo_open ? true : lo_open;
    }
    if (o.lo == lo && o.lo_open) lo_open = true;
    if (o.hi < hi || (o.hi == hi && o.hi_open)) {
      hi = o.hi;
      hi_open = o.hi_open ? true : hi_open;
    }
    if (o.hi == hi && o.hi_open) hi_open = true;
  }
};

/// One CDF-inversion draw: K = min{k : u < CDF(k)} for a single uniform u.
struct DrawResult {
  std::int64_t value = 0;
  SafetyInterval interval;
  unsigned uniforms_consumed = 1;
};

struct RealDrawResult {
  double value = 0;
  SafetyInterval interval;
  unsigned uniforms_consumed = 1;
};

/// value 1 iff u < p; interval (u, 1] on success, [0, u] on failure.
DrawResult bernoulli(double u, double p);

/// K >= 0 with P(K <= k) = 1 - p^{k+1}; interval in closed form.
DrawResult geometric(double u, double p);

/// Poisson(lambda) by sequential inversion, log-space terms past lambda = 30;
/// interval endpoints located by bisection to relative width 1e-9.
DrawResult poisson(double u, double lambda, double lambda_cap = 1e6);

/// Poisson conditioned on K >= min_value (renormalized inversion).
DrawResult poisson_truncated(double u, double lambda, std::int64_t min_value,
                             double lambda_cap = 1e6);

/// Logarithmic law mu_p(k) = p^k / (k |log(1-p)|), k >= 1.
DrawResult loga(double u, double p);

/// Largest repetition index for the multiset sampler:
/// P(K <= k) = (1/cx) prod_{j<=k} exp(inner[j-1]/j), K >= 0.
/// Per-coordinate safety intervals come out in closed form.
struct MaxIndexResult {
  std::int64_t value = 0;
  std::vector<SafetyInterval> per_inner;
  unsigned uniforms_consumed = 1;
};
MaxIndexResult max_index(double u, std::span<const double> inner_values, double cx,
                         double tail_bound);

/// Inverse-CDF draw from the density x0 A'(t)/(A(x0) - A(0)) on (0, x0),
/// bisected against the class grid to absolute tolerance 1e-12 x0. The
/// interval reports the final bracket on the returned abscissa.
RealDrawResult sample_h_density(double u, const GfOracle& oracle,
                                const std::string& cls, double x0);

}  // namespace boltzgen
