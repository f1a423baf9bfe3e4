#include <cmath>
#include <vector>

#include <doctest.h>

#include "dimlab/dim_exact.hpp"
#include "dimlab/examples.hpp"
#include "dimlab/measure.hpp"

using namespace dimlab;

namespace {

void check_all_exact(const DimensionTable& t, double v) {
  for (const DimEntry& e : t.as_array()) {
    CHECK(e.exact());
    CHECK(e.value == doctest::Approx(v).epsilon(1e-12));
  }
}

}  // namespace

TEST_CASE("rule table covers the symbolic classes") {
  check_all_exact(exact_dims(SymbolicMeasure::uniform(0.0, 1.0)), 1.0);
  check_all_exact(exact_dims(SymbolicMeasure::piecewise(
                      {DensityPiece{0.0, 0.25, 2.0}, DensityPiece{0.5, 1.0, 1.0}})),
                  1.0);
  check_all_exact(exact_dims(SymbolicMeasure::dirac(0.3)), 0.0);
  check_all_exact(exact_dims(SymbolicMeasure::atoms({{0.0, 0.5}, {1.0, 0.5}})), 0.0);
  check_all_exact(exact_dims(SymbolicMeasure::atom_family(1.0, 2.0, 1.0, 1, 40)), 0.0);

  const double s = std::log(2.0) / std::log(3.0);
  check_all_exact(
      exact_dims(SymbolicMeasure::natural_self_similar(Ifs{{1.0 / 3, 1.0 / 3}, {0.0, 2.0 / 3}})),
      s);

  DimensionTable infinite = exact_dims(SymbolicMeasure::atom_family(1.0, 2.0, 1.0));
  CHECK(infinite.box_upper.exact());
  CHECK(infinite.box_upper.value == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(infinite.box_lower.value == doctest::Approx(0.0));
  CHECK(infinite.hausdorff_upper.value == doctest::Approx(0.0));
  CHECK(infinite.packing_upper.value == doctest::Approx(0.0));
  CHECK(infinite.modified_box_upper.value == doctest::Approx(0.0));

  DimensionTable mixed = exact_dims(
      mix({1.0, 1.0}, {SymbolicMeasure::dirac(0.0, 0.1),
                       SymbolicMeasure::piecewise({DensityPiece{0.1, 1.0, 1.0}})}));
  CHECK(mixed.box_lower.value == doctest::Approx(0.0));
  CHECK(mixed.box_upper.value == doctest::Approx(1.0));
  CHECK(mixed.hausdorff_lower.value == doctest::Approx(0.0));
  CHECK(mixed.hausdorff_upper.value == doctest::Approx(1.0));
  CHECK(mixed.correlation.value == doctest::Approx(0.0));
  CHECK(mixed.modified_correlation.value == doctest::Approx(0.0));

  DimensionTable zero = exact_dims(SymbolicMeasure{});
  for (const DimEntry& e : zero.as_array()) CHECK(!e.exact());

  DimensionTable skew = exact_dims(
      SymbolicMeasure::self_similar(Ifs{{1.0 / 3, 1.0 / 3}, {0.0, 2.0 / 3}}, {0.8, 0.2}));
  for (const DimEntry& e : skew.as_array()) CHECK(!e.exact());

  DimensionTable lump = exact_dims(tail_lump_limit(0.5));
  CHECK(lump.correlation.exact());
  CHECK(lump.correlation.value == doctest::Approx(0.0));
  CHECK(lump.modified_correlation.value == doctest::Approx(0.0));
  CHECK(!lump.box_upper.exact());
}

TEST_CASE("every exact table satisfies the structural invariants") {
  std::vector<SymbolicMeasure> zoo{
      SymbolicMeasure::uniform(0.0, 1.0),
      SymbolicMeasure::dirac(0.0),
      SymbolicMeasure::atom_family(1.0, 2.0, 1.0),
      SymbolicMeasure::natural_self_similar(Ifs{{0.5, 0.25}, {0.0, 0.75}}),
      tail_lump_limit(0.3),
      mix({1.0, 1.0}, {SymbolicMeasure::dirac(0.0, 0.5),
                       SymbolicMeasure::uniform(0.0, 1.0, 0.5)}),
  };
  for (const auto& mu : zoo) CHECK(exact_dims(mu).invariant_violations().empty());

  DimensionTable broken;
  broken.box_lower = {0.7, DimStatus::Exact};
  broken.box_upper = {0.3, DimStatus::Exact};
  CHECK(!broken.invariant_violations().empty());
}

TEST_CASE("scaling equation solver matches closed forms and residuals") {
  CHECK(bowen_solve({1.0 / 3, 1.0 / 3}) ==
        doctest::Approx(std::log(2.0) / std::log(3.0)).epsilon(1e-12));
  CHECK(bowen_solve({0.5, 0.25}) ==
        doctest::Approx(std::log2((1.0 + std::sqrt(5.0)) / 2.0)).epsilon(1e-10));

  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 2 + static_cast<int>(rng.uniform() * 3);
    std::vector<double> ratios;
    double budget = 0.95;
    for (int i = 0; i < k; ++i) {
      const double r = 0.05 + rng.uniform() * (budget / k - 0.05);
      ratios.push_back(r);
      budget -= r;
    }
    const double h = bowen_solve(ratios);
    double residual = -1.0;
    for (double r : ratios) residual += std::pow(r, h);
    CHECK(std::abs(residual) < 1e-12);
  }

  CHECK_THROWS_AS(bowen_solve({0.5}), Error);
  CHECK_THROWS_AS(bowen_solve({0.7, 0.7}), Error);
}

TEST_CASE("correlation integral has closed forms on flat and atomic measures") {
  SymbolicMeasure u01 = SymbolicMeasure::uniform(0.0, 1.0);
  for (double r : {0.01, 0.1, 0.5})
    CHECK(correlation_integral_exact(u01, r) ==
          doctest::Approx(2 * r - r * r).epsilon(1e-12));

  CHECK(correlation_integral_exact(SymbolicMeasure::dirac(0.0), 0.25) ==
        doctest::Approx(1.0));

  SymbolicMeasure pair = SymbolicMeasure::atoms({{0.0, 0.5}, {1.0, 0.5}});
  CHECK(correlation_integral_exact(pair, 0.25) == doctest::Approx(0.5));
  CHECK(correlation_integral_exact(pair, 1.0) == doctest::Approx(1.0));

  SymbolicMeasure ex5_term = mix(
      {1.0, 1.0}, {SymbolicMeasure::dirac(0.0, 0.1),
                   SymbolicMeasure::piecewise({DensityPiece{0.1, 1.0, 1.0}})});
  CHECK(correlation_integral_exact(ex5_term, 0.01) ==
        doctest::Approx(0.1 * 0.1 + 0.0179).epsilon(1e-10));

  SymbolicMeasure cantor =
      SymbolicMeasure::natural_self_similar(Ifs{{1.0 / 3, 1.0 / 3}, {0.0, 2.0 / 3}});
  const double c1 = correlation_integral_exact(cantor, 1.0 / 27);
  const double c2 = correlation_integral_exact(cantor, 1.0 / 9);
  CHECK(c1 > 0.0);
  CHECK(c1 < c2);
  CHECK(correlation_integral_exact(cantor, 2.0) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("zero correlation certificate lists the decreasing exponents") {
  ZeroCorrelationCertificate cert = zero_correlation_certificate(tail_lump_limit(0.5), 0.5, 8);
  REQUIRE(cert.steps.size() == 8);
  for (int n = 1; n <= 8; ++n) {
    const CertificateStep& st = cert.steps[static_cast<std::size_t>(n - 1)];
    CHECK(st.exponent == doctest::Approx(2.0 / n).epsilon(1e-9));
    if (n > 1) CHECK(st.exponent < cert.steps[static_cast<std::size_t>(n - 2)].exponent);
  }
  CHECK_THROWS_AS(zero_correlation_certificate(SymbolicMeasure::uniform(0.0, 1.0), 0.5, 4),
                  Error);
}

TEST_CASE("tail lump recognizer accepts the family and rejects others") {
  for (double a : {0.3, 0.5, 0.9}) {
    auto got = detail::tail_lump_parameter(tail_lump_limit(a));
    REQUIRE(got.has_value());
    CHECK(*got == doctest::Approx(a).epsilon(1e-12));
  }
  CHECK(!detail::tail_lump_parameter(SymbolicMeasure::uniform(0.0, 1.0)).has_value());
  CHECK(!detail::tail_lump_parameter(SymbolicMeasure::dirac(0.0)).has_value());
}

TEST_CASE("entropy over exponents arithmetic guards zeros") {
  CHECK(entropy_lyapunov_dimension(std::log(2.0), std::log(2.0), std::log(4.0)) ==
        doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_AS(entropy_lyapunov_dimension(1.0, 0.0, 1.0), Error);
}
