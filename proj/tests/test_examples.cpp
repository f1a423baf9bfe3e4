#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <doctest.h>

#include "dimlab/dim_exact.hpp"
#include "dimlab/examples.hpp"
#include "dimlab/tv_metrics.hpp"

using namespace dimlab;

namespace {

MeasureSequence seq_of(ExampleId id) {
  ExampleSpec spec;
  spec.id = id;
  return make_example(spec);
}

int holds_count(const SemicontinuityReport& rep) {
  int n = 0;
  for (const auto& row : rep.rows)
    if (row.verdict == SemiVerdict::Holds) ++n;
  return n;
}

}  // namespace

TEST_CASE("example catalog round trips names and rejects strangers") {
  CHECK(all_examples().size() == 7);
  for (ExampleId id : all_examples()) CHECK(parse_example_id(example_name(id)) == id);
  CHECK_THROWS_AS(parse_example_id("ex2"), Error);
  CHECK_THROWS_AS(parse_example_id(""), Error);
}

TEST_CASE("the cascade generator is exact only up to its cap") {
  CHECK(example_horizon_cap(ExampleId::ex3) == 16);
  MeasureSequence seq = seq_of(ExampleId::ex3);
  CHECK_NOTHROW(seq.generator(16));
  CHECK_THROWS_AS(seq.generator(17), Error);
  for (ExampleId id : all_examples())
    if (id != ExampleId::ex3) CHECK(example_horizon_cap(id) >= 1000);
}

TEST_CASE("ledger verdict matrix separates the three topologies") {
  auto statuses = [](ExampleId id) {
    ExampleSpec spec;
    spec.id = id;
    ExpectedLedger led = expected(spec);
    return std::array<VerdictStatus, 3>{led.weak, led.setwise, led.tv};
  };
  using S = VerdictStatus;
  for (ExampleId id : {ExampleId::ex1, ExampleId::ex3, ExampleId::ex4}) {
    auto [w, s, t] = statuses(id);
    CHECK(w == S::Certified);
    CHECK(s == S::Refuted);
    CHECK(t == S::Refuted);
  }
  for (ExampleId id : {ExampleId::ex5, ExampleId::ex6, ExampleId::ex7, ExampleId::ex8}) {
    auto [w, s, t] = statuses(id);
    CHECK(w == S::Certified);
    CHECK(s == S::Certified);
    CHECK(t == S::Certified);
  }
}

TEST_CASE("ledger tables agree with the rule engine on sampled indices") {
  ExampleSpec e1;
  e1.id = ExampleId::ex1;
  ExpectedLedger led = expected(e1);
  MeasureSequence seq = make_example(e1);
  for (int n : {1, 2, 5, 8}) {
    DimensionTable want = led.per_n(n);
    DimensionTable got = exact_dims(seq.generator(n));
    auto wa = want.as_array();
    auto ga = got.as_array();
    for (std::size_t i = 0; i < wa.size(); ++i) {
      CHECK(wa[i].exact() == ga[i].exact());
      if (wa[i].exact()) CHECK(ga[i].value == doctest::Approx(wa[i].value).epsilon(1e-12));
    }
  }
}

TEST_CASE("tail lump terms are probabilities and start at the full gap") {
  for (double a : {0.3, 0.5, 0.9}) {
    CHECK(tail_lump_term(a, 0).total_mass() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(tail_lump_limit(a).total_mass() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(tv_distance(tail_lump_term(a, 0), tail_lump_limit(a)) ==
          doctest::Approx(a).epsilon(1e-10));
  }
  CHECK_THROWS_AS(tail_lump_limit(0.99), Error);
  CHECK_THROWS_AS(tail_lump_limit(0.0), Error);
}

TEST_CASE("random density sequences keep the exact halving L1 law") {
  for (std::uint64_t seed : {1ull, 2ull, 77ull}) {
    MeasureSequence seq = random_scheffe_sequence(seed, 40);
    MeasureSequence again = random_scheffe_sequence(seed, 40);
    for (int n : {1, 2, 5, 10, 20}) {
      SignedSplit s = signed_split(seq.generator(n), seq.limit);
      CHECK(s.l1() <= std::ldexp(1.0, -n) * (1 + 1e-9));
      CHECK(s.l1() > 0.0);
      CHECK(tv_distance(seq.generator(n), again.generator(n)) ==
            doctest::Approx(0.0).epsilon(1e-15));
    }
  }
}

TEST_CASE("full ledger verification passes for every example") {
  for (ExampleId id : all_examples()) {
    ExampleSpec spec;
    spec.id = id;
    VerifyReport rep = verify_example(spec, 50);
    CHECK(rep.all_pass());
    CHECK(!rep.basis.empty());
    for (const VerifyClaim& c : rep.claims) {
      CHECK(!c.description.empty());
      CHECK(!c.basis.empty());
      if (!c.pass) {
        MESSAGE(rep.example << " failed: " << c.description << " " << c.detail);
      }
    }
  }
}

TEST_CASE("semicontinuity audit binds only under certified setwise convergence") {
  SemicontinuityReport ex5 = semicontinuity_check(seq_of(ExampleId::ex5), 50, 0.05);
  CHECK(ex5.certified_mode == "setwise");
  CHECK(ex5.ok());
  CHECK(holds_count(ex5) == 10);
  for (const auto& row : ex5.rows)
    if (row.verdict == SemiVerdict::Holds) CHECK(row.margin >= -1e-9);

  SemicontinuityReport ex8 = semicontinuity_check(seq_of(ExampleId::ex8), 50, 0.05);
  CHECK(ex8.certified_mode == "setwise");
  CHECK(holds_count(ex8) == 10);
  bool saw_box_upper_gap = false;
  for (const auto& row : ex8.rows)
    if (row.mapping == "box upper" && row.verdict == SemiVerdict::NotApplicable &&
        std::abs(row.margin + 0.5) < 1e-9)
      saw_box_upper_gap = true;
  CHECK(saw_box_upper_gap);

  SemicontinuityReport ex6 = semicontinuity_check(seq_of(ExampleId::ex6), 50, 0.05);
  CHECK(ex6.certified_mode == "setwise");
  CHECK(ex6.ok());
  CHECK(holds_count(ex6) == 7);

  SemicontinuityReport ex4 = semicontinuity_check(seq_of(ExampleId::ex4), 50, 0.05);
  CHECK(ex4.certified_mode == "");
  CHECK(holds_count(ex4) == 0);
  bool saw_illustration = false;
  for (const auto& row : ex4.rows) {
    CHECK(row.verdict == SemiVerdict::NotApplicable);
    if (row.mapping == "box upper" && std::abs(row.margin + 1.0) < 1e-9)
      saw_illustration = true;
  }
  CHECK(saw_illustration);

  SemicontinuityReport sch = semicontinuity_check(random_scheffe_sequence(11, 50), 50, 0.05);
  CHECK(sch.certified_mode == "setwise");
  CHECK(sch.ok());
  CHECK(holds_count(sch) == 10);
  for (const auto& row : sch.rows)
    if (row.verdict == SemiVerdict::Holds) CHECK(row.margin >= -1e-9);
}

TEST_CASE("finer topology certificates never contradict coarser ones") {
  for (ExampleId id : {ExampleId::ex1, ExampleId::ex4, ExampleId::ex5, ExampleId::ex6,
                       ExampleId::ex7, ExampleId::ex8}) {
    MeasureSequence seq = seq_of(id);
    ConvergenceVerdict t = tv_converges(seq, 30, 0.05);
    ConvergenceVerdict s = setwise_converges(seq, 30, 0.05);
    ConvergenceVerdict w = weak_converges(seq, 30, 0.05);
    if (t.status == VerdictStatus::Certified) {
      CHECK(s.status != VerdictStatus::Refuted);
      CHECK(w.status != VerdictStatus::Refuted);
    }
    if (s.status == VerdictStatus::Certified) CHECK(w.status != VerdictStatus::Refuted);
    if (w.status == VerdictStatus::Refuted) {
      CHECK(s.status != VerdictStatus::Certified);
      CHECK(t.status != VerdictStatus::Certified);
    }
  }
}
