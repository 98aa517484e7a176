#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "boltzgen/enumerate.hpp"
#include "boltzgen/oracle.hpp"
#include "boltzgen/parse.hpp"
#include "support/corpus.hpp"

using namespace boltzgen;

namespace {
double plane_closed(double x) { return (1.0 - std::sqrt(1.0 - 4.0 * x)) / 2.0; }
}

TEST_CASE("evaluation against closed forms") {
  SUBCASE("plane trees inside the disk") {
    Spec s = parse_spec(corpus::kPlaneTrees);
    for (double x : {0.05, 0.1, 0.2, 0.24}) {
      OracleTable t = eval(s, x);
      REQUIRE(t.status == OracleStatus::Converged);
      CHECK(t.values.at("P") ==
            doctest::Approx(plane_closed(x)).epsilon(1e-11));
    }
  }
  SUBCASE("plane trees beyond the singularity diverge") {
    OracleTable t = eval(parse_spec(corpus::kPlaneTrees), 0.3);
    CHECK(t.status == OracleStatus::Diverged);
  }
  SUBCASE("Cayley solves T = x e^T") {
    OracleTable t = eval(parse_spec(corpus::kCayley), 0.3);
    REQUIRE(t.status == OracleStatus::Converged);
    double T = t.values.at("T");
    CHECK(std::fabs(T * std::exp(-T) - 0.3) < 1e-10);
    CHECK(T == doctest::Approx(0.48940222718021497).epsilon(1e-10));
  }
  SUBCASE("decreasing binary trees integrate to tan") {
    Spec s = parse_spec(corpus::kDecreasingTrees);
    for (double x : {0.5, 1.0, 1.5}) {
      OracleTable t = eval(s, x);
      REQUIRE(t.status == OracleStatus::Converged);
      CHECK(t.values.at("T") == doctest::Approx(std::tan(x)).epsilon(1e-10));
      CHECK(t.ode_grid.count("T") == 1);
    }
  }
  SUBCASE("MSet needs x below 1") {
    CHECK_THROWS_AS(eval(parse_spec(corpus::kPartitions), 1.0), ParameterError);
  }
}

TEST_CASE("Newton residuals decay quadratically at the end") {
  OracleTable t = eval(parse_spec(corpus::kPlaneTrees), 0.2);
  REQUIRE(t.status == OracleStatus::Converged);
  std::vector<double> r;
  for (double v : t.residual_history)
    if (v > 1e-15) r.push_back(v);
  REQUIRE(r.size() >= 3);
  double ra = r[r.size() - 3], rb = r[r.size() - 2], rc = r[r.size() - 1];
  double k = rb / (ra * ra);
  CHECK(rc <= 4.0 * k * rb * rb);
}

TEST_CASE("oracle agrees with the truncated series at rho/2") {
  struct Row {
    const char* text;
    const char* cls;
  };
  const Row rows[] = {
      {corpus::kPlaneTrees, "P"}, {corpus::kSeqZ, "S"},
      {corpus::kPartitions, "Part"}, {corpus::kRootedTrees, "R"},
      {corpus::kMotzkin, "M"},    {corpus::kBinaryWords, "W"},
      {corpus::kPermutations, "Perm"}, {corpus::kCayley, "T"},
  };
  const std::size_t N = 200;
  for (const Row& row : rows) {
    Spec s = parse_spec(row.text);
    RadiusEstimate rho = find_radius(s, row.cls);
    double x = rho.value / 2;
    OracleTable t = eval(s, x);
    REQUIRE(t.status == OracleStatus::Converged);
    CountTable counts = count_upto(s, N);
    bool labelled = s.mode == Mode::Labelled;
    double sum = 0, last = 0;
    for (std::size_t n = 0; n <= N; ++n) {
      const BigInt& c = counts.counts.at(row.cls)[n];
      if (c == 0) continue;
      double lt = big_ln(c) + n * std::log(x);
      if (labelled) lt -= std::lgamma(static_cast<double>(n) + 1);
      last = std::exp(lt);
      sum += last;
    }
    // Geometric tail bound from the last ratio (r = x/rho < 0.51 plus slack).
    double bound = last * 0.6 / (1 - 0.6) + 1e-12;
    CAPTURE(row.cls);
    CHECK(std::fabs(t.values.at(row.cls) - sum) <= bound + 1e-9 * sum);
  }
}

TEST_CASE("derivative and expected size") {
  SUBCASE("Seq(Z) at 1/2") {
    Spec s = parse_spec(corpus::kSeqZ);
    CHECK(eval_derivative(s, "S", 0.5) == doctest::Approx(4.0).epsilon(1e-7));
    CHECK(expected_size(s, "S", 0.5) == doctest::Approx(1.0).epsilon(1e-7));
  }
  SUBCASE("plane trees at 0.2") {
    Spec s = parse_spec(corpus::kPlaneTrees);
    CHECK(eval_derivative(s, "P", 0.2) ==
          doctest::Approx(2.2360679774997896).epsilon(1e-7));
    CHECK(expected_size(s, "P", 0.2) ==
          doctest::Approx(1.6180339887498949).epsilon(1e-7));
  }
  SUBCASE("small x tends to the minimum size") {
    CHECK(expected_size(parse_spec(corpus::kPlaneTrees), "P", 1e-7) ==
          doctest::Approx(1.0).epsilon(1e-5));
  }
}

TEST_CASE("singularity location") {
  SUBCASE("plane trees") {
    RadiusEstimate r = find_radius(parse_spec(corpus::kPlaneTrees), "P");
    CHECK_FALSE(r.entire);
    CHECK(std::fabs(r.value - 0.25) <= 1e-8);
  }
  SUBCASE("Cayley trees at 1/e") {
    RadiusEstimate r = find_radius(parse_spec(corpus::kCayley), "T");
    CHECK(std::fabs(r.value - 0.36787944117144233) <= 1e-8);
  }
  SUBCASE("tan blows up at pi/2") {
    RadiusEstimate r = find_radius(parse_spec(corpus::kDecreasingTrees), "T");
    CHECK(std::fabs(r.value - 1.5707963267948966) <= 1e-8);
  }
  SUBCASE("Seq(Z) pole at 1") {
    RadiusEstimate r = find_radius(parse_spec(corpus::kSeqZ), "S");
    CHECK(std::fabs(r.value - 1.0) <= 2e-8);
  }
  SUBCASE("a polynomial class is flagged entire") {
    RadiusEstimate r = find_radius(parse_spec("A = 1 + Z + Z * Z;"), "A");
    CHECK(r.entire);
  }
}

TEST_CASE("expected size is strictly increasing on a grid") {
  struct Row {
    const char* text;
    const char* cls;
  };
  const Row rows[] = {{corpus::kPlaneTrees, "P"},
                      {corpus::kCayley, "T"},
                      {corpus::kPartitions, "Part"},
                      {corpus::kMotzkin, "M"}};
  for (const Row& row : rows) {
    Spec s = parse_spec(row.text);
    RadiusEstimate rho = find_radius(s, row.cls);
    double prev = -1;
    for (int i = 1; i <= 100; ++i) {
      double x = rho.value * (1.0 - rho.halfwidth) * i / 101.0;
      double n = expected_size(s, row.cls, x, {}, rho.value);
      CAPTURE(row.cls);
      CAPTURE(x);
      CHECK(n > prev);
      prev = n;
    }
  }
}

TEST_CASE("tuning") {
  SUBCASE("plane trees n=10 hits 90/361") {
    TuneResult t = tune(parse_spec(corpus::kPlaneTrees), "P", 10);
    CHECK_FALSE(t.singular_recommendation);
    CHECK(std::fabs(t.parameter - 90.0 / 361.0) <= 1e-6);
    CHECK(std::fabs(t.achieved_expected_size - 10.0) <= 1e-5);
  }
  SUBCASE("Seq(Z) n=99 gives x=0.99") {
    TuneResult t = tune(parse_spec(corpus::kSeqZ), "S", 99);
    CHECK(t.parameter == doctest::Approx(0.99).epsilon(1e-7));
  }
  SUBCASE("tune and expected_size round-trip") {
    for (std::uint64_t n : {10ULL, 100ULL, 1000ULL}) {
      Spec s = parse_spec(corpus::kPlaneTrees);
      TuneResult t = tune(s, "P", n);
      double achieved = expected_size(s, "P", t.parameter, {}, t.radius.value);
      CHECK(std::fabs(achieved - static_cast<double>(n)) <= 1e-6 * static_cast<double>(n));
    }
  }
  SUBCASE("below the minimum size fails") {
    CHECK_THROWS_AS(tune(parse_spec(corpus::kPlaneTrees), "P", 0), ParameterError);
  }
}

TEST_CASE("weighted atoms shift the generating function") {
  Spec s = parse_spec(corpus::kSeqZ);
  s.set_atom_weight("Z", 2.0);
  OracleTable t = eval(s, 0.25);  // 1/(1 - 2x) = 2
  REQUIRE(t.status == OracleStatus::Converged);
  CHECK(t.values.at("S") == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(eval(s, 0.5).status == OracleStatus::Diverged);
}

TEST_CASE("Newton limit is stable under perturbed restarts") {
  // The y=0 start is relied on to select the combinatorial branch; restarts
  // from perturbed points must not land on a different nonnegative fixpoint.
  Spec s = parse_spec(corpus::kPlaneTrees);
  OracleTable base = eval(s, 0.2);
  REQUIRE(base.status == OracleStatus::Converged);
  // The second real root of P = x + P^2... at x=0.2 is (1+sqrt(0.2))/2; a
  // restart from y=0 must keep selecting the smaller branch.
  CHECK(base.values.at("P") < 0.5);
}
