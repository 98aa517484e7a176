#include "boltzgen/distributions.hpp"

#include <cmath>

#include "boltzgen/errors.hpp"

namespace boltzgen {
namespace {

double pow_by_exp(double p, double k) { return std::exp(k * std::log(p)); }

// Poisson CDF at integer k, terms in log space past lambda = 30 so the
// e^{-lambda} prefactor cannot underflow the recurrence.
double poisson_cdf(std::int64_t k, double lambda) {
  if (k < 0) return 0.0;
  if (lambda <= 0) return 1.0;
  double s = 0.0;
  if (lambda <= 30.0) {
    double t = std::exp(-lambda);
    s = t;
    for (std::int64_t i = 1; i <= k; ++i) {
      t *= lambda / static_cast<double>(i);
      s += t;
    }
  } else {
    double ll = std::log(lambda);
    for (std::int64_t i = 0; i <= k; ++i)
      s += std::exp(-lambda + static_cast<double>(i) * ll -
                    std::lgamma(static_cast<double>(i) + 1.0));
  }
  return s;
}

double loga_cdf(std::int64_t k, double p) {
  double L = -std::log1p(-p);
  double t = p, s = 0.0;
  for (std::int64_t i = 1; i <= k; ++i) {
    s += t / (static_cast<double>(i) * L);
    t *= p;
  }
  return s;
}

// Smallest parameter above `from` where `cdf_k` drops to u, bisected to
// relative width 1e-9; returns the inner (certified) edge of the bracket.
template <typename F>
double upper_boundary(F cdf_k, double from, double u) {
  double lo = from, hi = std::max(from, 1e-9);
  int guard = 0;
  while (cdf_k(hi) > u) {
    lo = hi;
    hi *= 2;
    if (++guard > 200) return std::numeric_limits<double>::infinity();
  }
  while ((hi - lo) > 1e-9 * hi) {
    double mid = 0.5 * (lo + hi);
    if (cdf_k(mid) > u)
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

// Largest parameter below `from` where `cdf_km1` rises back above u; the
// draw keeps its value strictly above that point. Returns the inner
// (certified) edge of the bracket.
template <typename F>
double lower_boundary(F cdf_km1, double from, double u) {
  double outside = 0.0;  // CDF(K-1) -> 1 as the parameter vanishes
  double inside = from;  // the actual draw certifies this end
  while ((inside - outside) > 1e-9 * std::max(inside, 1e-300)) {
    double mid = 0.5 * (outside + inside);
    if (cdf_km1(mid) <= u)
      inside = mid;
    else
      outside = mid;
  }
  return inside;
}

}  // namespace

DrawResult bernoulli(double u, double p) {
  DrawResult r;
  if (u < p) {
    r.value = 1;
    r.interval = {u, 1.0, true, false};
  } else {
    r.value = 0;
    r.interval = {0.0, u, false, false};
  }
  return r;
}

DrawResult geometric(double u, double p) {
  if (p >= 1.0)
    throw ParameterError("geometric parameter at or above 1 (Seq argument at the singularity)");
  if (p < 0) throw ParameterError("negative geometric parameter");
  DrawResult r;
  double q = 1.0 - u;
  if (p == 0.0 || u == 0.0) {
    r.value = 0;
    r.interval = {0.0, q >= 1.0 ? 1.0 : q, false, true};
    return r;
  }
  // K = min{k >= 0 : p^{k+1} < 1-u}.
  double est = std::log(q) / std::log(p);
  std::int64_t k = std::max<std::int64_t>(0, static_cast<std::int64_t>(est) - 2);
  while (!(pow_by_exp(p, static_cast<double>(k + 1)) < q)) ++k;
  while (k > 0 && pow_by_exp(p, static_cast<double>(k)) < q) --k;
  r.value = k;
  r.interval.lo = k == 0 ? 0.0 : pow_by_exp(q, 1.0 / static_cast<double>(k));
  r.interval.lo_open = false;
  r.interval.hi = pow_by_exp(q, 1.0 / static_cast<double>(k + 1));
  r.interval.hi_open = true;
  return r;
}

DrawResult poisson(double u, double lambda, double lambda_cap) {
  if (lambda < 0) throw ParameterError("negative Poisson rate");
  if (lambda > lambda_cap) throw ParameterError("Poisson rate above the cap");
  DrawResult r;
  std::int64_t cap =
      static_cast<std::int64_t>(lambda + 20.0 * std::sqrt(lambda + 1.0) + 60.0);
  std::int64_t k = 0;
  for (;; ++k) {
    if (u < poisson_cdf(k, lambda)) break;
    if (k > cap) throw InternalError("Poisson inversion failed to reach the target CDF");
  }
  r.value = k;
  r.interval.hi = upper_boundary([k](double l) { return poisson_cdf(k, l); },
                                 std::max(lambda, 1e-12), u);
  r.interval.hi_open = true;
  r.interval.lo = k == 0 ? 0.0
                         : lower_boundary([k](double l) { return poisson_cdf(k - 1, l); },
                                          lambda, u);
  r.interval.lo_open = k != 0;
  return r;
}

DrawResult poisson_truncated(double u, double lambda, std::int64_t min_value,
                             double lambda_cap) {
  if (min_value <= 0) return poisson(u, lambda, lambda_cap);
  if (lambda < 0) throw ParameterError("negative Poisson rate");
  if (lambda > lambda_cap) throw ParameterError("Poisson rate above the cap");
  auto cond_cdf = [min_value](std::int64_t k, double l) {
    double fm = poisson_cdf(min_value - 1, l);
    if (fm >= 1.0) return 1.0;  // vanishing rate: all mass at min_value
    return (poisson_cdf(k, l) - fm) / (1.0 - fm);
  };
  DrawResult r;
  std::int64_t cap =
      static_cast<std::int64_t>(lambda + 20.0 * std::sqrt(lambda + 1.0) + 60.0) +
      min_value;
  std::int64_t k = min_value;
  for (;; ++k) {
    if (u < cond_cdf(k, lambda)) break;
    if (k > cap) throw InternalError("truncated Poisson inversion failed");
  }
  r.value = k;
  r.interval.hi = upper_boundary([&](double l) { return cond_cdf(k, l); },
                                 std::max(lambda, 1e-12), u);
  r.interval.hi_open = true;
  r.interval.lo =
      k == min_value
          ? 0.0
          : lower_boundary([&](double l) { return cond_cdf(k - 1, l); }, lambda, u);
  r.interval.lo_open = k != min_value;
  return r;
}

DrawResult loga(double u, double p) {
  if (!(p > 0.0) || !(p < 1.0))
    throw ParameterError("logarithmic law needs p in (0, 1)");
  DrawResult r;
  double L = -std::log1p(-p);
  double t = p, s = 0.0;
  std::int64_t k = 0;
  for (std::int64_t i = 1;; ++i) {
    s += t / (static_cast<double>(i) * L);
    t *= p;
    if (u < s) {
      k = i;
      break;
    }
    if (i > 10'000'000)
      throw ResourceError("logarithmic inversion exceeded the term cap");
  }
  r.value = k;
  r.interval.hi = upper_boundary([k](double q) { return loga_cdf(k, q); }, p, u);
  if (r.interval.hi >= 1.0) r.interval.hi = 1.0;
  r.interval.hi_open = true;
  r.interval.lo =
      k == 1 ? 0.0 : lower_boundary([k](double q) { return loga_cdf(k - 1, q); }, p, u);
  r.interval.lo_open = true;
  return r;
}

MaxIndexResult max_index(double u, std::span<const double> inner_values, double cx,
                         double tail_bound) {
  MaxIndexResult r;
  std::size_t J = inner_values.size();
  std::vector<double> cum(J + 1, 0.0);
  for (std::size_t j = 1; j <= J; ++j)
    cum[j] = cum[j - 1] + inner_values[j - 1] / static_cast<double>(j);
  double log_ucx = std::log(u) + std::log(cx);
  std::int64_t k = -1;
  for (std::size_t j = 0; j <= J; ++j) {
    if (log_ucx < cum[j]) {  // u < exp(cum_j)/cx
      k = static_cast<std::int64_t>(j);
      break;
    }
  }
  if (k < 0) {
    if (tail_bound <= 1e-16)
      k = static_cast<std::int64_t>(J);  // CDF(J) is 1 up to rounding
    else
      throw ResourceError("max_index CDF did not reach the target; extend the geometric points");
  }
  r.value = k;
  r.per_inner.assign(J, SafetyInterval::full());
  for (std::size_t j = 1; j <= J; ++j) {
    auto& iv = r.per_inner[j - 1];
    double dj = static_cast<double>(j);
    if (static_cast<std::int64_t>(j) <= k && k >= 1) {
      // u < CDF(k): cum_k > log(u cx).
      iv.lo = dj * (log_ucx - (cum[k] - inner_values[j - 1] / dj));
      iv.lo_open = true;
      if (iv.lo < 0) {
        iv.lo = 0;
        iv.lo_open = false;
      }
    }
    if (static_cast<std::int64_t>(j) <= k - 1) {
      // CDF(k-1) <= u: cum_{k-1} <= log(u cx).
      iv.hi = dj * (log_ucx - (cum[k - 1] - inner_values[j - 1] / dj));
      iv.hi_open = false;
    }
  }
  return r;
}

RealDrawResult sample_h_density(double u, const GfOracle& oracle,
                                const std::string& cls, double x0) {
  const OdeGridEntry& grid = oracle.ode_grid(cls);
  double a0 = grid.y.front();
  double ax0 = oracle.grid_value(cls, x0);
  if (!(ax0 > a0))
    throw ParameterError("h-density undefined: A(x0) does not exceed A(0)");
  double target = a0 + u * (ax0 - a0);
  double lo = 0.0, hi = x0;
  double glo = a0, ghi = ax0;
  if (glo > ghi) throw InternalError("non-monotone ODE grid");
  double tol = 1e-12 * x0;
  while ((hi - lo) > tol) {
    double mid = 0.5 * (lo + hi);
    double gm = oracle.grid_value(cls, mid);
    if (gm < target) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
      ghi = gm;
    }
  }
  RealDrawResult r;
  r.value = 0.5 * (lo + hi);
  r.interval = {lo, hi, true, true};
  return r;
}

}  // namespace boltzgen
