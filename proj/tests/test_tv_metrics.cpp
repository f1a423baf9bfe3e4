#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <doctest.h>

#include "dimlab/examples.hpp"
#include "dimlab/measure.hpp"
#include "dimlab/tv_metrics.hpp"

using namespace dimlab;

namespace {

// Raw data for a random atoms-plus-density probability measure, kept outside
// the library types so the signed split below is an independent oracle.
struct RawMeasure {
  std::vector<std::pair<double, double>> atoms;  // sorted, on a shared grid
  std::vector<double> heights;                   // 8 cells over [0,1)
};

RawMeasure random_raw(Rng& rng) {
  RawMeasure raw;
  double atom_total = 0;
  for (int k = 0; k < 4; ++k) {
    if (rng.uniform() < 0.5) {
      const double w = 0.05 + 0.1 * rng.uniform();
      raw.atoms.emplace_back(k * 0.25, w);
      atom_total += w;
    }
  }
  raw.heights.resize(8);
  double density_total = 0;
  for (double& h : raw.heights) {
    h = 0.2 + rng.uniform();
    density_total += h / 8;
  }
  const double target = 1.0 - atom_total;
  for (double& h : raw.heights) h *= target / density_total;
  return raw;
}

SymbolicMeasure build(const RawMeasure& raw) {
  std::vector<SymbolicMeasure> parts;
  std::vector<double> coeffs;
  if (!raw.atoms.empty()) {
    parts.push_back(SymbolicMeasure::atoms(raw.atoms));
    coeffs.push_back(1.0);
  }
  std::vector<DensityPiece> pieces;
  for (int j = 0; j < 8; ++j)
    pieces.push_back({j / 8.0, (j + 1) / 8.0, raw.heights[static_cast<std::size_t>(j)]});
  parts.push_back(SymbolicMeasure::piecewise(pieces));
  coeffs.push_back(1.0);
  return mix(coeffs, parts);
}

// Independent Jordan decomposition: atoms live on the shared quarter grid and
// densities on the shared eighth grid, so positive and negative parts are
// plain sums over those cells.
SignedSplit raw_split(const RawMeasure& a, const RawMeasure& b) {
  auto atom_at = [](const RawMeasure& m, double x) {
    for (const auto& [loc, w] : m.atoms)
      if (loc == x) return w;
    return 0.0;
  };
  SignedSplit s;
  for (int k = 0; k < 4; ++k) {
    const double d = atom_at(a, k * 0.25) - atom_at(b, k * 0.25);
    (d > 0 ? s.pos : s.neg) += std::abs(d);
  }
  for (int j = 0; j < 8; ++j) {
    const double d =
        (a.heights[static_cast<std::size_t>(j)] - b.heights[static_cast<std::size_t>(j)]) / 8.0;
    (d > 0 ? s.pos : s.neg) += std::abs(d);
  }
  return s;
}

}  // namespace

TEST_CASE("signed split has closed forms on disjoint and nested pairs") {
  SymbolicMeasure u01 = SymbolicMeasure::uniform(0.0, 1.0);
  SymbolicMeasure u_half = SymbolicMeasure::uniform(0.5, 1.5);
  CHECK(tv_distance(u01, u_half) == doctest::Approx(0.5).epsilon(1e-12));

  SymbolicMeasure d0 = SymbolicMeasure::dirac(0.0);
  SymbolicMeasure d1 = SymbolicMeasure::dirac(1.0);
  SignedSplit s = signed_split(d0, d1);
  CHECK(s.tv() == doctest::Approx(1.0));
  CHECK(s.l1() == doctest::Approx(2.0));

  CHECK(tv_distance(d0, u01) == doctest::Approx(1.0));

  SymbolicMeasure half_mix = mix({0.5, 0.5}, {d0, u01});
  CHECK(tv_distance(half_mix, u01) == doctest::Approx(0.5).epsilon(1e-12));

  SignedSplit nested = signed_split(scale(u01, 2.0), u01);
  CHECK(nested.pos == doctest::Approx(1.0));
  CHECK(nested.neg == doctest::Approx(0.0));
  CHECK(nested.tv() == doctest::Approx(1.0));
  CHECK(nested.l1() == doctest::Approx(1.0));
}

TEST_CASE("signed split agrees with a brute force grid oracle") {
  Rng rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    RawMeasure ra = random_raw(rng), rb = random_raw(rng);
    SignedSplit expect = raw_split(ra, rb);
    SignedSplit got = signed_split(build(ra), build(rb));
    CHECK(got.pos == doctest::Approx(expect.pos).epsilon(1e-12));
    CHECK(got.neg == doctest::Approx(expect.neg).epsilon(1e-12));
  }
}

TEST_CASE("tv distance satisfies the metric axioms on random triples") {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    SymbolicMeasure x = build(random_raw(rng));
    SymbolicMeasure y = build(random_raw(rng));
    SymbolicMeasure z = build(random_raw(rng));
    const double dxy = tv_distance(x, y);
    const double dyx = tv_distance(y, x);
    const double dxz = tv_distance(x, z);
    const double dyz = tv_distance(y, z);
    CHECK(std::abs(dxy - dyx) <= 1e-10);
    CHECK(dxz <= dxy + dyz + 1e-10);
    CHECK(tv_distance(x, x) == doctest::Approx(0.0));
    CHECK((dxy >= 0.0 && dxy <= 1.0 + 1e-12));
  }
}

TEST_CASE("tail lump distances follow the exact geometric law") {
  for (double a : {0.3, 0.5, 0.9}) {
    SymbolicMeasure limit = tail_lump_limit(a);
    for (int n = 0; n <= 10; ++n) {
      const double expect = std::pow(a, n + 1);
      CHECK(tv_distance(tail_lump_term(a, n), limit) ==
            doctest::Approx(expect).epsilon(1e-10));
    }
  }
}

TEST_CASE("example distance series match their closed forms") {
  ExampleSpec e6;
  e6.id = ExampleId::ex6;
  MeasureSequence s6 = make_example(e6);
  for (int n : {1, 2, 7, 40}) {
    CHECK(tv_distance(s6.generator(n), s6.limit) ==
          doctest::Approx(1.0 / n).epsilon(1e-10));
  }

  ExampleSpec e8;
  e8.id = ExampleId::ex8;
  MeasureSequence s8 = make_example(e8);
  for (int n : {1, 3, 12}) {
    CHECK(tv_distance(s8.generator(n), s8.limit) ==
          doctest::Approx(series::power_sum(n + 1, detail::kInf, 2.0)).epsilon(1e-10));
  }
}

TEST_CASE("convergence checkers reproduce the ledger verdicts") {
  auto seq_of = [](ExampleId id) {
    ExampleSpec spec;
    spec.id = id;
    return make_example(spec);
  };

  ConvergenceVerdict w1 = weak_converges(seq_of(ExampleId::ex1), 200, 0.02);
  CHECK(w1.status == VerdictStatus::Certified);

  ConvergenceVerdict w4 = weak_converges(seq_of(ExampleId::ex4), 200, 0.02);
  CHECK(w4.status == VerdictStatus::Certified);

  ConvergenceVerdict sw1 = setwise_converges(seq_of(ExampleId::ex1), 60, 0.05);
  CHECK(sw1.status == VerdictStatus::Refuted);
  REQUIRE(sw1.witness.has_value());
  CHECK(sw1.witness->contains_point(0.0));
  CHECK(sw1.witness_gap == doctest::Approx(1.0).epsilon(1e-12));

  ConvergenceVerdict t5 = tv_converges(seq_of(ExampleId::ex5), 200, 0.02);
  CHECK(t5.status == VerdictStatus::Certified);

  ConvergenceVerdict t1 = tv_converges(seq_of(ExampleId::ex1), 60, 0.05);
  CHECK(t1.status == VerdictStatus::Refuted);

  ConvergenceVerdict w3 = weak_converges(seq_of(ExampleId::ex3), 16, 0.02);
  CHECK(w3.status == VerdictStatus::Certified);
  ConvergenceVerdict sw3 = setwise_converges(seq_of(ExampleId::ex3), 16, 0.05);
  CHECK(sw3.status == VerdictStatus::Refuted);
  CHECK(sw3.witness.has_value());
}

TEST_CASE("scheffe sequences certify setwise via the L1 route") {
  MeasureSequence seq = random_scheffe_sequence(5, 60);
  ConvergenceVerdict v = setwise_converges(seq, 60, 0.05);
  CHECK(v.status == VerdictStatus::Certified);
  ConvergenceVerdict w = weak_converges(seq, 60, 0.05);
  CHECK(w.status != VerdictStatus::Refuted);
}

TEST_CASE("verdict series are attached for diagnostics") {
  ExampleSpec spec;
  spec.id = ExampleId::ex6;
  ConvergenceVerdict v = tv_converges(make_example(spec), 25, 0.05);
  REQUIRE(v.series.size() == 25);
  for (int n = 1; n <= 25; ++n)
    CHECK(v.series[static_cast<std::size_t>(n - 1)] ==
          doctest::Approx(1.0 / n).epsilon(1e-10));
}

TEST_CASE("absolute continuity and equivalence are detected structurally") {
  SymbolicMeasure u01 = SymbolicMeasure::uniform(0.0, 1.0);
  SymbolicMeasure with_atom = mix({0.5, 0.5}, {SymbolicMeasure::dirac(0.0), u01});
  CHECK(abs_continuous(u01, with_atom));
  CHECK(!abs_continuous(with_atom, u01));
  CHECK(equivalent(u01, scale(u01, 2.0)));
  CHECK(!equivalent(u01, with_atom));
}
