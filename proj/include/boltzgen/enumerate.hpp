#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <map>
#include <string>
#include <vector>

#include "boltzgen/ast.hpp"
#include "boltzgen/oracle.hpp"

namespace boltzgen {

using BigInt = boost::multiprecision::cpp_int;

/// Exact structure counts c_0..c_N per class. In labelled mode the entries
/// count labelled structures (n! times the EGF coefficient).
struct CountTable {
  std::size_t upto = 0;
  std::map<std::string, std::vector<BigInt>> counts;
};

/// Coefficient dynamic programming over the construction algebra, exact in
/// big integers. Requires a validated spec; n is clamped by `cap`.
CountTable count_upto(const Spec& spec, std::size_t n, std::size_t cap = 512);

/// Boltzmann size law p_0..p_N at parameter x: p_n = c_n x^n / C(x),
/// with an extra 1/n! in labelled mode. The denominator comes from the
/// numerical oracle, the numerators from exact counts.
std::vector<double> size_pmf(const Spec& spec, const std::string& cls, double x,
                             std::size_t n, const EvalOptions& options = {});

/// log of a nonnegative big integer (-inf for zero); used to form
/// coefficient ratios far beyond double range.
double big_ln(const BigInt& v);

}  // namespace boltzgen
