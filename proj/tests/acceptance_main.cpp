#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "dimlab/dim_exact.hpp"
#include "dimlab/dim_numeric.hpp"
#include "dimlab/examples.hpp"
#include "dimlab/io.hpp"
#include "dimlab/measure.hpp"
#include "dimlab/tv_metrics.hpp"

namespace {

using namespace dimlab;

int g_failures = 0;

double now_s() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

void report(bool pass, const std::string& label) {
  std::printf("%s %s\n", pass ? "[PASS]" : "[FAIL]", label.c_str());
  if (!pass) ++g_failures;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Criterion 1: exact distance series.
// ---------------------------------------------------------------------------

void criterion1() {
  const double t0 = now_s();

  ExampleSpec e6;
  e6.id = ExampleId::ex6;
  MeasureSequence seq6 = make_example(e6);
  double worst6 = 0;
  for (int n = 1; n <= 1000; ++n) {
    const double d = tv_distance(seq6.generator(n), seq6.limit);
    worst6 = std::max(worst6, std::abs(d - 1.0 / n));
  }
  report(worst6 <= 1e-10,
         "criterion 1a: atom/density series distance to the point limit is 1/n for n = "
         "1..1000 (worst dev " +
             fmt(worst6) + ")");

  double worst_true = 0, worst_tab = 0;
  double tab_dev_at_n0_a9 = 0;
  for (double a : {0.3, 0.5, 0.9}) {
    SymbolicMeasure limit = tail_lump_limit(a);
    for (int n = 0; n <= 30; ++n) {
      const double d = tv_distance(tail_lump_term(a, n), limit);
      const double geometric = std::pow(a, n + 1);
      const double tabulated = geometric / (1.0 - geometric);
      worst_true = std::max(worst_true, std::abs(d - geometric));
      worst_tab = std::max(worst_tab, std::abs(d - tabulated));
      if (a == 0.9 && n == 0) tab_dev_at_n0_a9 = std::abs(d - tabulated);
    }
  }
  report(worst_true <= 1e-10,
         "criterion 1b-exact: tail-lump distance equals a^(n+1) for a in {0.3,0.5,0.9}, n = "
         "0..30 (worst dev " +
             fmt(worst_true) + ")");

  const bool tab_ok = worst_tab <= 1e-10;
  report(tab_ok,
         "criterion 1b-tabulated: tail-lump distance equals a^(n+1)/(1-a^(n+1)) (worst dev " +
             fmt(worst_tab) + ")");
  if (!tab_ok) {
    std::printf(
        "       analysis: the tabulated closed form divides the exact geometric distance\n"
        "       a^(n+1) by its complement 1-a^(n+1). The sup-form distance between the\n"
        "       term and the limit is the renormalized tail mass itself, a^(n+1): both\n"
        "       measures are probabilities, so no set can separate them by more than the\n"
        "       renormalization gap. The quotient exceeds 1 at a=0.9, n=0 (value 9),\n"
        "       which no distance between probability measures can reach; measured\n"
        "       deviation there is %s. The computed distances satisfy the exact law\n"
        "       to %s, so the tabulated expression, not the computation, is off.\n",
        fmt(tab_dev_at_n0_a9).c_str(), fmt(worst_true).c_str());
  }

  const double dt = now_s() - t0;
  report(dt < 5.0, "criterion 1 runtime below 5 s (took " + fmt(dt) + " s)");
}

// ---------------------------------------------------------------------------
// Criterion 2: scaling-equation solver.
// ---------------------------------------------------------------------------

void criterion2() {
  const double t0 = now_s();
  Rng rng(20240601);
  double worst_residual = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = 2 + static_cast<int>(rng.uniform() * 4);
    std::vector<double> ratios;
    double budget = 0.97;
    for (int i = 0; i < k; ++i) {
      const double cap = budget / (k - i);
      const double r = 0.02 + rng.uniform() * std::max(0.01, cap - 0.02);
      ratios.push_back(std::min(r, cap));
      budget -= ratios.back();
    }
    const double h = bowen_solve(ratios);
    double residual = -1.0;
    for (double r : ratios) residual += std::pow(r, h);
    worst_residual = std::max(worst_residual, std::abs(residual));
  }
  report(worst_residual < 1e-12,
         "criterion 2: solver residual below 1e-12 on 1000 random ratio sets (worst " +
             fmt(worst_residual) + ")");

  const double third = bowen_solve({1.0 / 3, 1.0 / 3});
  const double want_third = std::log(2.0) / std::log(3.0);
  report(std::abs(third - want_third) <= 1e-10,
         "criterion 2: (1/3,1/3) root equals log2/log3 (dev " +
             fmt(std::abs(third - want_third)) + ")");

  const double golden = bowen_solve({0.5, 0.25});
  const double want_golden = std::log2((1.0 + std::sqrt(5.0)) / 2.0);
  report(std::abs(golden - want_golden) <= 1e-10,
         "criterion 2: (1/2,1/4) root equals log2 of the golden ratio (dev " +
             fmt(std::abs(golden - want_golden)) + ")");
  std::printf("       runtime %s s\n", fmt(now_s() - t0).c_str());
}

// ---------------------------------------------------------------------------
// Criterion 3: sampled correlation integral against the exact oracle.
// ---------------------------------------------------------------------------

void criterion3() {
  const double t0 = now_s();
  const std::size_t N = 10000;
  const std::uint64_t seed = 424242;
  const auto schedule = log_spaced(1e-2, 0.5, 12);

  struct Subject {
    std::string name;
    SymbolicMeasure mu;
  };
  ExampleSpec e5, e6;
  e5.id = ExampleId::ex5;
  e6.id = ExampleId::ex6;
  std::vector<Subject> subjects;
  subjects.push_back({"uniform [0,1]", SymbolicMeasure::uniform(0.0, 1.0)});
  subjects.push_back({"atom+density term n=10", make_example(e5).generator(10)});
  subjects.push_back({"escaping-mass term n=10", normalize(make_example(e6).generator(10))});

  // Standard-error convention: the sampled pair fraction at each scale is
  // compared as a per-sample binomial proportion, sigma = sqrt(C(1-C)/N)
  // with N the sample count, floored to keep the bound meaningful when C is
  // at the scale of rounding.
  for (const Subject& s : subjects) {
    auto xs = sample(s.mu, N, seed);
    DimensionEstimate est = correlation_dim_gp(xs, schedule);
    double worst_z = 0;
    std::size_t checked = 0;
    for (const auto& [r, cn] : est.series.points) {
      const double c = correlation_integral_exact(s.mu, r);
      const double se = std::sqrt(std::max(c * (1.0 - c), 1e-12) / static_cast<double>(N));
      worst_z = std::max(worst_z, std::abs(cn - c) / se);
      ++checked;
    }
    report(checked == schedule.size() && worst_z <= 3.0,
           "criterion 3: sampled pair fraction within 3 binomial SE of the exact "
           "correlation integral for " +
               s.name + " at " + std::to_string(checked) + " scales (worst z " +
               fmt(worst_z) + ")");
  }
  std::printf("       N = %zu, fixed seed %llu, runtime %s s\n", N,
              static_cast<unsigned long long>(seed), fmt(now_s() - t0).c_str());
}

// ---------------------------------------------------------------------------
// Criterion 4: estimator accuracy on the reference measures.
// ---------------------------------------------------------------------------

void criterion4() {
  const std::size_t N = 10000;

  {
    const double t0 = now_s();
    auto xs = sample(SymbolicMeasure::uniform(0.0, 1.0), N, 11);
    DimensionEstimate est = correlation_dim_gp(xs, log_spaced(1e-3, 1e-1, 16));
    const double dt = now_s() - t0;
    report(std::abs(est.slope - 1.0) <= 0.05 && dt < 30.0,
           "criterion 4: pair-correlation slope for uniform [0,1] is 1.00 +/- 0.05 (got " +
               fmt(est.slope) + ", " + fmt(dt) + " s)");
  }
  {
    const double t0 = now_s();
    SymbolicMeasure cantor =
        SymbolicMeasure::natural_self_similar(Ifs{{1.0 / 3, 1.0 / 3}, {0.0, 2.0 / 3}});
    auto xs = sample(cantor, N, 12);
    DimensionEstimate est = correlation_dim_gp(xs, log_spaced(1e-4, 1e-1, 16));
    const double dt = now_s() - t0;
    report(std::abs(est.slope - 0.631) <= 0.05 && dt < 30.0,
           "criterion 4: pair-correlation slope for the (1/3,1/3) natural measure is "
           "0.631 +/- 0.05 (got " +
               fmt(est.slope) + ", " + fmt(dt) + " s)");
  }
  {
    const double t0 = now_s();
    auto xs = sample(SymbolicMeasure::dirac(0.0), N, 13);
    DimensionEstimate est = correlation_dim_gp(xs, log_spaced(1e-4, 1e-1, 16));
    const double dt = now_s() - t0;
    report(est.slope == 0.0 && dt < 30.0,
           "criterion 4: pair-correlation slope for a point mass is exactly 0 (got " +
               fmt(est.slope) + ", " + fmt(dt) + " s)");
  }
  {
    const double t0 = now_s();
    ExampleSpec e8;
    e8.id = ExampleId::ex8;
    SymbolicMeasure family = make_example(e8).limit;
    auto schedule = log_spaced(1e-6, 1e-2, 16);
    auto by_delta = box_dimension_estimate(family, {0.0}, schedule,
                                           std::make_pair(1e-6, 1e-2));
    const double slope = by_delta.at(0.0).slope;
    const double dt = now_s() - t0;
    report(std::abs(slope - 0.5) <= 0.05 && dt < 30.0,
           "criterion 4: box-count slope for the inverse-square atom family at delta = 0 "
           "is 0.50 +/- 0.05 over [1e-6,1e-2] (got " +
               fmt(slope) + ", " + fmt(dt) + " s)");
  }
}

// ---------------------------------------------------------------------------
// Criterion 5: the full example ledger at horizon 50.
// ---------------------------------------------------------------------------

void criterion5() {
  const double t0 = now_s();
  bool all_pass = true;
  int claims = 0;
  for (ExampleId id : all_examples()) {
    ExampleSpec spec;
    spec.id = id;
    VerifyReport rep = verify_example(spec, 50);
    claims += static_cast<int>(rep.claims.size());
    for (const VerifyClaim& c : rep.claims) {
      if (!c.pass) {
        all_pass = false;
        std::printf("       ledger failure in %s: %s %s\n", rep.example.c_str(),
                    c.description.c_str(), c.detail.c_str());
      }
    }
  }
  const double dt = now_s() - t0;
  report(all_pass, "criterion 5: every ledger claim passes at horizon 50 (" +
                       std::to_string(claims) + " claims across 7 examples)");
  report(dt < 120.0, "criterion 5 runtime below 2 min (took " + fmt(dt) + " s)");
}

// ---------------------------------------------------------------------------
// Criterion 6: semicontinuity margins under certified setwise convergence.
// ---------------------------------------------------------------------------

void criterion6() {
  const double t0 = now_s();

  double worst_margin = 1e9;
  bool all_certified = true;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    MeasureSequence seq = random_scheffe_sequence(seed, 50);
    SemicontinuityReport rep = semicontinuity_check(seq, 50, 0.05);
    all_certified = all_certified && rep.certified_mode == "setwise";
    for (const auto& row : rep.rows)
      if (row.verdict != SemiVerdict::NotApplicable) worst_margin = std::min(worst_margin, row.margin);
  }
  report(all_certified && worst_margin >= -1e-9,
         "criterion 6: binding inequality margins at least -1e-9 over 100 seeded density "
         "sequences (worst " +
             fmt(worst_margin) + ")");

  double worst_example = 1e9;
  bool ok = true;
  for (ExampleId id : {ExampleId::ex5, ExampleId::ex6, ExampleId::ex7, ExampleId::ex8}) {
    ExampleSpec spec;
    spec.id = id;
    const int horizon = std::min(50, example_horizon_cap(id));
    SemicontinuityReport rep = semicontinuity_check(make_example(spec), horizon, 0.05);
    ok = ok && rep.ok() && rep.certified_mode == "setwise";
    for (const auto& row : rep.rows)
      if (row.verdict != SemiVerdict::NotApplicable)
        worst_example = std::min(worst_example, row.margin);
  }
  report(ok && worst_example >= -1e-9,
         "criterion 6: binding margins hold on every distance-certified example (worst " +
             fmt(worst_example) + ")");

  ExampleSpec e4;
  e4.id = ExampleId::ex4;
  SemicontinuityReport rep4 = semicontinuity_check(make_example(e4), 50, 0.05);
  bool gap_seen = false;
  for (const auto& row : rep4.rows)
    if (row.mapping == "box upper" && row.verdict == SemiVerdict::NotApplicable &&
        std::abs(row.margin + 1.0) <= 1e-9)
      gap_seen = true;
  report(rep4.certified_mode.empty() && gap_seen,
         "criterion 6: skeleton example is NotApplicable(setwise) with observed upper-box "
         "gap -1");
  std::printf("       runtime %s s\n", fmt(now_s() - t0).c_str());
}

// ---------------------------------------------------------------------------
// Criterion 7: ordering under absolute continuity, equality under equivalence.
// ---------------------------------------------------------------------------

void criterion7() {
  const double t0 = now_s();
  ExampleSpec e5, e8;
  e5.id = ExampleId::ex5;
  e8.id = ExampleId::ex8;

  std::vector<SymbolicMeasure> bases{
      SymbolicMeasure::uniform(0.0, 1.0),
      SymbolicMeasure::natural_self_similar(Ifs{{1.0 / 3, 1.0 / 3}, {0.0, 2.0 / 3}}),
      make_example(e5).generator(10),
      make_example(e8).limit,
      tail_lump_limit(0.5),
      SymbolicMeasure::atoms({{0.0, 0.5}, {0.75, 0.5}}),
  };

  const std::array<std::size_t, 4> upper_idx{1, 3, 5, 7};  // upper mappings in table order
  int ordered_checks = 0, equal_checks = 0;
  bool ordering_ok = true, equality_ok = true;

  auto check_order = [&](const SymbolicMeasure& finer, const SymbolicMeasure& coarser) {
    if (finer.is_zero()) return;
    auto fa = exact_dims(finer).as_array();
    auto ca = exact_dims(coarser).as_array();
    for (std::size_t i : upper_idx) {
      if (!fa[i].exact() || !ca[i].exact()) continue;
      ++ordered_checks;
      if (!(fa[i].value <= ca[i].value)) {
        ordering_ok = false;
        std::printf("       ordering violated: %s of restricted part %s > %s\n",
                    DimensionTable::names()[i], fmt(fa[i].value).c_str(),
                    fmt(ca[i].value).c_str());
      }
    }
  };
  auto check_equal = [&](const SymbolicMeasure& a, const SymbolicMeasure& b) {
    auto aa = exact_dims(a).as_array();
    auto ba = exact_dims(b).as_array();
    for (std::size_t i : upper_idx) {
      if (!aa[i].exact() || !ba[i].exact()) continue;
      ++equal_checks;
      if (aa[i].value != ba[i].value) {
        equality_ok = false;
        std::printf("       equality violated: %s %s vs %s\n", DimensionTable::names()[i],
                    fmt(aa[i].value).c_str(), fmt(ba[i].value).c_str());
      }
    }
  };

  for (const SymbolicMeasure& mu : bases) {
    // Scalings and normalizations are equivalent measures.
    check_equal(scale(mu, 2.0), mu);
    check_equal(scale(mu, 0.25), mu);
    check_equal(normalize(mu), mu);
    // Full-support restriction is the measure itself.
    check_order(restrict(mu, BorelTestSet::interval(mu.support_lo() - 1.0,
                                                    mu.support_hi() + 1.0)),
                mu);
    check_equal(restrict(mu, BorelTestSet::interval(mu.support_lo() - 1.0,
                                                    mu.support_hi() + 1.0)),
                mu);
    // Partial restrictions are absolutely continuous with respect to mu.
    const bool has_ss = [&] {
      for (const auto& c : mu.components())
        if (std::holds_alternative<SelfSimilar>(c)) return true;
      return false;
    }();
    if (!has_ss) {
      for (double cut : {0.3, 0.151, 0.05}) {
        SymbolicMeasure left = restrict(mu, BorelTestSet::interval(mu.support_lo(), cut));
        check_order(left, mu);
        if (!left.is_zero()) check_order(normalize(left), mu);
      }
      check_order(restrict(mu, BorelTestSet::point(0.0)), mu);
    }
  }

  report(ordering_ok, "criterion 7: upper-mapping ordering holds for every absolutely "
                      "continuous derived pair (" +
                          std::to_string(ordered_checks) + " exact comparisons)");
  report(equality_ok && equal_checks > 0,
         "criterion 7: upper mappings agree on every equivalent pair (" +
             std::to_string(equal_checks) + " exact comparisons)");
  std::printf("       runtime %s s\n", fmt(now_s() - t0).c_str());
}

// ---------------------------------------------------------------------------
// Criterion 8: structural checks.
// ---------------------------------------------------------------------------

long long brute_force_boxes(const std::vector<double>& box_masses, double delta) {
  const int b = static_cast<int>(box_masses.size());
  double total = 0;
  for (double m : box_masses) total += m;
  const double target = (1.0 - delta) * total;
  long long best = b;
  for (unsigned subset = 0; subset < (1u << b); ++subset) {
    double sum = 0;
    int count = 0;
    for (int i = 0; i < b; ++i)
      if (subset & (1u << i)) {
        sum += box_masses[static_cast<std::size_t>(i)];
        ++count;
      }
    if (sum >= target - 1e-12 && count < best) best = count;
  }
  return best;
}

SymbolicMeasure random_probability(Rng& rng) {
  std::vector<std::pair<double, double>> atoms;
  double atom_total = 0;
  for (int k = 0; k < 4; ++k)
    if (rng.uniform() < 0.5) {
      const double w = 0.05 + 0.1 * rng.uniform();
      atoms.emplace_back(k * 0.25, w);
      atom_total += w;
    }
  std::vector<DensityPiece> pieces;
  double density_total = 0;
  for (int j = 0; j < 8; ++j) {
    const double h = 0.2 + rng.uniform();
    pieces.push_back({j / 8.0, (j + 1) / 8.0, h});
    density_total += h / 8;
  }
  const double target = 1.0 - atom_total;
  for (auto& p : pieces) p.height *= target / density_total;
  std::vector<SymbolicMeasure> parts;
  std::vector<double> coeffs;
  if (!atoms.empty()) {
    parts.push_back(SymbolicMeasure::atoms(atoms));
    coeffs.push_back(1.0);
  }
  parts.push_back(SymbolicMeasure::piecewise(pieces));
  coeffs.push_back(1.0);
  return mix(coeffs, parts);
}

void criterion8() {
  const double t0 = now_s();

  {
    Rng rng(808);
    bool all_equal = true;
    int instances = 0;
    const double r = 0.25;
    for (int trial = 0; trial < 50; ++trial) {
      const int boxes = 4 + static_cast<int>(rng.uniform() * 15);  // up to 18 boxes
      std::vector<std::pair<double, double>> atoms;
      std::vector<double> masses;
      for (int k = 0; k < boxes; ++k) {
        const double w = 0.05 + rng.uniform();
        atoms.emplace_back(k * r + r / 2, w);
        masses.push_back(w);
      }
      SymbolicMeasure mu = SymbolicMeasure::atoms(atoms);
      for (double delta : {0.0, 0.05, 0.2, 0.45}) {
        ++instances;
        if (min_box_count(mu, r, delta) != brute_force_boxes(masses, delta))
          all_equal = false;
      }
    }
    report(all_equal, "criterion 8: greedy box cover equals exhaustive search on " +
                          std::to_string(instances) + " instances with <= 18 occupied boxes");
  }

  {
    Rng rng(909);
    double worst_sym = 0, worst_tri = 0, worst_self = 0;
    for (int trial = 0; trial < 1000; ++trial) {
      SymbolicMeasure x = random_probability(rng);
      SymbolicMeasure y = random_probability(rng);
      SymbolicMeasure z = random_probability(rng);
      const double dxy = tv_distance(x, y);
      const double dyx = tv_distance(y, x);
      const double dxz = tv_distance(x, z);
      const double dyz = tv_distance(y, z);
      worst_sym = std::max(worst_sym, std::abs(dxy - dyx));
      worst_tri = std::max(worst_tri, dxz - (dxy + dyz));
      worst_self = std::max(worst_self, tv_distance(x, x));
    }
    report(worst_sym <= 1e-10 && worst_tri <= 1e-10 && worst_self <= 1e-10,
           "criterion 8: distance metric axioms on 1000 random triples (sym " +
               fmt(worst_sym) + ", triangle slack " + fmt(worst_tri) + ", self " +
               fmt(worst_self) + ")");
  }

  {
    ExampleSpec e5;
    e5.id = ExampleId::ex5;
    struct Family {
      std::string name;
      SymbolicMeasure mu;
    };
    std::vector<Family> families;
    families.push_back({"uniform [0,1]", SymbolicMeasure::uniform(0.0, 1.0)});
    families.push_back({"(1/3,1/3) natural measure",
                        SymbolicMeasure::natural_self_similar(
                            Ifs{{1.0 / 3, 1.0 / 3}, {0.0, 2.0 / 3}})});
    families.push_back({"atom+density term n=10", make_example(e5).generator(10)});

    const std::size_t N = 10000;
    const double eps = std::sqrt(std::log(2.0 / 0.01) / (2.0 * static_cast<double>(N)));
    bool all_ok = true;
    for (const Family& f : families) {
      auto xs = sample(f.mu, N, 7);
      std::sort(xs.begin(), xs.end());
      // Tied samples (atoms) are handled as runs: at a jump of either CDF the
      // deviation is checked from the right with F(x) and from the left with
      // F(x-) = F(x) - mu({x}).
      double dev = 0;
      std::size_t i = 0;
      while (i < xs.size()) {
        std::size_t j = i;
        while (j < xs.size() && xs[j] == xs[i]) ++j;
        const double fx = cdf(f.mu, xs[i]);
        const double fx_left = fx - mass(f.mu, BorelTestSet::point(xs[i]));
        dev = std::max(dev, std::abs(static_cast<double>(j) / N - fx));
        dev = std::max(dev, std::abs(static_cast<double>(i) / N - fx_left));
        i = j;
      }
      const bool ok = dev <= eps;
      all_ok = all_ok && ok;
      std::printf("       %s: empirical CDF deviation %s (bound %s) %s\n", f.name.c_str(),
                  fmt(dev).c_str(), fmt(eps).c_str(), ok ? "ok" : "EXCEEDED");
    }
    report(all_ok,
           "criterion 8: sampler meets the 99% DKW band at N = 10^4 on three families");
  }

  {
    auto run_once = [](const char* threads) {
      setenv("DIMLAB_THREADS", threads, 1);
      auto xs = sample(SymbolicMeasure::uniform(0.0, 1.0), 5000, 21);
      DimensionEstimate est = correlation_dim_gp(xs, log_spaced(1e-3, 1e-1, 14));
      JsonValue v = json_of_estimate(est);
      return v.dump();
    };
    const std::string a = run_once("1");
    const std::string b = run_once("4");
    const std::string c = run_once("4");
    unsetenv("DIMLAB_THREADS");
    report(a == b && b == c,
           "criterion 8: serialized estimates byte-identical across repeated runs and "
           "thread counts 1 and 4");
  }
  std::printf("       runtime %s s\n", fmt(now_s() - t0).c_str());
}

}  // namespace

int main() {
  std::printf("acceptance checks\n=================\n");
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  if (g_failures == 0) {
    std::printf("all acceptance checks passed\n");
    return 0;
  }
  std::printf("%d acceptance check(s) failed\n", g_failures);
  return 1;
}
