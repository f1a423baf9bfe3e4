#include "dimlab/examples.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "dimlab/dim_numeric.hpp"

namespace dimlab {

namespace {

constexpr int kCascadeCap = 16;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

DimEntry exact_entry(double v) { return DimEntry{v, DimStatus::Exact}; }

DimensionTable flat_table(double v) {
  DimensionTable t;
  t.box_lower = t.box_upper = exact_entry(v);
  t.modified_box_lower = t.modified_box_upper = exact_entry(v);
  t.hausdorff_lower = t.hausdorff_upper = exact_entry(v);
  t.packing_lower = t.packing_upper = exact_entry(v);
  t.correlation = t.modified_correlation = exact_entry(v);
  return t;
}

// Point mass plus absolutely continuous part: every lower mapping sees the
// atom (0), every upper mapping the density (1), correlation mappings 0.
DimensionTable atom_density_table() {
  DimensionTable t;
  t.box_lower = t.modified_box_lower = t.hausdorff_lower = t.packing_lower = exact_entry(0);
  t.box_upper = t.modified_box_upper = t.hausdorff_upper = t.packing_upper = exact_entry(1);
  t.correlation = t.modified_correlation = exact_entry(0);
  return t;
}

// Tail-lump limit: only the correlation mappings are exactly resolvable.
DimensionTable tail_lump_limit_table() {
  DimensionTable t;
  t.correlation = t.modified_correlation = exact_entry(0);
  return t;
}

// Infinite atom family at i^(-p): everything 0 except upper box 1/(1+p).
DimensionTable infinite_family_table(double p) {
  DimensionTable t = flat_table(0);
  t.box_upper = exact_entry(1.0 / (1.0 + p));
  return t;
}

void validate_spec(const ExampleSpec& spec) {
  if (spec.horizon < 1) fail(Errc::invalid_argument, "horizon must be at least 1");
  if (spec.id == ExampleId::ex7 && !(spec.a >= 0.05 && spec.a <= 0.95))
    fail(Errc::invalid_argument, "tail-lump parameter a must lie in [0.05, 0.95]");
}

SymbolicMeasure cascade_level(const Ifs& ifs, double h, int n) {
  struct AffineWord {
    double c, d;
  };
  std::vector<AffineWord> words{{1.0, 0.0}};
  for (int level = 0; level < n; ++level) {
    std::vector<AffineWord> next;
    next.reserve(words.size() * static_cast<std::size_t>(ifs.branches()));
    for (const AffineWord& w : words)
      for (int b = 0; b < ifs.branches(); ++b)
        next.push_back({w.c * ifs.ratios()[b], w.c * ifs.offsets()[b] + w.d});
    words = std::move(next);
  }
  const double lo = ifs.hull_lo(), hi = ifs.hull_hi();
  std::vector<DensityPiece> pieces;
  pieces.reserve(words.size());
  for (const AffineWord& w : words)
    pieces.push_back({w.c * lo + w.d, w.c * hi + w.d, std::pow(w.c, h)});
  std::sort(pieces.begin(), pieces.end(),
            [](const DensityPiece& x, const DensityPiece& y) { return x.lo < y.lo; });
  return SymbolicMeasure::piecewise(std::move(pieces));
}

SymbolicMeasure atom_plus_density(double atom_w, double dens_lo, double dens_hi, double height) {
  AtomList al;
  al.atoms.push_back({0.0, atom_w});
  PiecewiseDensity pd;
  pd.pieces.push_back({dens_lo, dens_hi, height});
  return SymbolicMeasure({MeasureComponent{al}, MeasureComponent{pd}});
}

// Within the tail-lump family, a term built for index n is numerically
// indistinguishable from the limit once a^(n - N) falls under the detector
// resolution; claims about such terms are skipped rather than asserted.
bool tail_lump_term_ambiguous(double a, int n) {
  const int bands = detail::tail_lump_band_count(a);
  return n > bands && std::pow(a, n - bands) < 1e-9;
}

std::string diff_tables(const DimensionTable& got, const DimensionTable& want) {
  const auto ga = got.as_array();
  const auto wa = want.as_array();
  const auto& labels = DimensionTable::names();
  for (std::size_t i = 0; i < ga.size(); ++i) {
    if (ga[i].status != wa[i].status)
      return std::string(labels[i]) + ": status " +
             (ga[i].exact() ? "Exact" : "Unsupported") + ", expected " +
             (wa[i].exact() ? "Exact" : "Unsupported");
    if (wa[i].exact() && std::abs(ga[i].value - wa[i].value) > 1e-9)
      return std::string(labels[i]) + ": value " + fmt(ga[i].value) + ", expected " +
             fmt(wa[i].value);
  }
  return {};
}

int tail_start(int horizon) { return std::max(1, (horizon + 1) / 2); }

VerifyClaim run_claim(std::string description, std::string basis,
                      const std::function<void(VerifyClaim&)>& body) {
  VerifyClaim c;
  c.description = std::move(description);
  c.basis = std::move(basis);
  try {
    body(c);
  } catch (const Error& e) {
    c.pass = false;
    c.detail = std::string("error ") + errc_name(e.code()) + ": " + e.what();
  } catch (const std::exception& e) {
    c.pass = false;
    c.detail = std::string("error: ") + e.what();
  }
  return c;
}

}  // namespace

ExampleId parse_example_id(const std::string& name) {
  for (ExampleId id : all_examples())
    if (name == example_name(id)) return id;
  fail(Errc::unknown_example, "unknown example: " + name);
}

const char* example_name(ExampleId id) {
  switch (id) {
    case ExampleId::ex1: return "ex1";
    case ExampleId::ex3: return "ex3";
    case ExampleId::ex4: return "ex4";
    case ExampleId::ex5: return "ex5";
    case ExampleId::ex6: return "ex6";
    case ExampleId::ex7: return "ex7";
    case ExampleId::ex8: return "ex8";
  }
  return "?";
}

std::vector<ExampleId> all_examples() {
  return {ExampleId::ex1, ExampleId::ex3, ExampleId::ex4, ExampleId::ex5,
          ExampleId::ex6, ExampleId::ex7, ExampleId::ex8};
}

int example_horizon_cap(ExampleId id) {
  return id == ExampleId::ex3 ? kCascadeCap : std::numeric_limits<int>::max();
}

SymbolicMeasure tail_lump_term(double a, int n) {
  if (!(a >= 0.05 && a <= 0.95))
    fail(Errc::invalid_argument, "tail-lump parameter a must lie in [0.05, 0.95]");
  if (n < 0) fail(Errc::invalid_argument, "tail-lump term index must be nonnegative");
  const int bands = detail::tail_lump_band_count(a);
  const double z = 1.0 - std::pow(a, n + 1);
  const int explicit_top = std::min(n, bands);
  PiecewiseDensity pd;
  if (n > bands) {
    const double lump_hi = std::pow(a, double(bands + 1) * (bands + 1));
    const double lump_mass = (std::pow(a, bands + 1) - std::pow(a, n + 1)) / z;
    pd.pieces.push_back({0.0, lump_hi, lump_mass / lump_hi});
  }
  for (int i = explicit_top; i >= 0; --i) {
    const double lo = std::pow(a, double(i + 1) * (i + 1));
    const double hi = std::pow(a, double(i) * i);
    const double m = (1.0 - a) * std::pow(a, i) / z;
    pd.pieces.push_back({lo, hi, m / (hi - lo)});
  }
  return SymbolicMeasure::piecewise(std::move(pd.pieces));
}

SymbolicMeasure tail_lump_limit(double a) {
  if (!(a >= 0.05 && a <= 0.95))
    fail(Errc::invalid_argument, "tail-lump parameter a must lie in [0.05, 0.95]");
  const int bands = detail::tail_lump_band_count(a);
  PiecewiseDensity pd;
  const double lump_hi = std::pow(a, double(bands + 1) * (bands + 1));
  const double lump_mass = std::pow(a, bands + 1);
  pd.pieces.push_back({0.0, lump_hi, lump_mass / lump_hi});
  for (int i = bands; i >= 0; --i) {
    const double lo = std::pow(a, double(i + 1) * (i + 1));
    const double hi = std::pow(a, double(i) * i);
    const double m = (1.0 - a) * std::pow(a, i);
    pd.pieces.push_back({lo, hi, m / (hi - lo)});
  }
  return SymbolicMeasure::piecewise(std::move(pd.pieces));
}

MeasureSequence make_example(const ExampleSpec& spec) {
  validate_spec(spec);
  MeasureSequence seq;
  seq.name = example_name(spec.id);
  switch (spec.id) {
    case ExampleId::ex1:
      seq.generator = [](int n) {
        if (n % 2 == 1) return SymbolicMeasure::uniform(0.0, 1.0 / n);
        return SymbolicMeasure::dirac(1.0 / n);
      };
      seq.limit = SymbolicMeasure::dirac(0.0);
      seq.declared_mode = "weak";
      break;
    case ExampleId::ex3: {
      Ifs ifs(spec.ratios, spec.offsets);
      const double h = ifs.similarity_dimension();
      seq.generator = [ifs, h](int n) {
        if (n > kCascadeCap)
          fail(Errc::invalid_argument,
               "cascade generator is exact only up to level " + std::to_string(kCascadeCap));
        return cascade_level(ifs, h, n);
      };
      seq.limit = SymbolicMeasure::natural_self_similar(ifs);
      seq.declared_mode = "weak";
    } break;
    case ExampleId::ex4:
      seq.generator = [](int n) {
        std::vector<std::pair<double, double>> atoms;
        atoms.reserve(static_cast<std::size_t>(n));
        for (int i = 1; i <= n; ++i) atoms.push_back({double(i) / n, 1.0 / n});
        return SymbolicMeasure::atoms(std::move(atoms));
      };
      seq.limit = SymbolicMeasure::uniform(0.0, 1.0);
      seq.declared_mode = "weak";
      break;
    case ExampleId::ex5:
      seq.generator = [](int n) {
        if (n == 1) return SymbolicMeasure::dirac(0.0);
        return atom_plus_density(1.0 / n, 1.0 / n, 1.0, 1.0);
      };
      seq.limit = SymbolicMeasure::uniform(0.0, 1.0);
      seq.declared_mode = "tv";
      break;
    case ExampleId::ex6:
      seq.generator = [](int n) {
        if (n == 1) return SymbolicMeasure::uniform(1.0, 2.0);
        return atom_plus_density((n - 1.0) / n, 1.0, 2.0, 1.0 / n);
      };
      seq.limit = SymbolicMeasure::dirac(0.0);
      seq.declared_mode = "tv";
      break;
    case ExampleId::ex7: {
      const double a = spec.a;
      seq.generator = [a](int n) { return tail_lump_term(a, n); };
      seq.limit = tail_lump_limit(a);
      seq.declared_mode = "tv";
    } break;
    case ExampleId::ex8:
      seq.generator = [](int n) { return SymbolicMeasure::atom_family(1.0, 2.0, 1.0, 1, n); };
      seq.limit = SymbolicMeasure::atom_family(1.0, 2.0, 1.0);
      seq.declared_mode = "tv";
      break;
  }
  return seq;
}

ExpectedLedger expected(const ExampleSpec& spec) {
  validate_spec(spec);
  ExpectedLedger led;
  switch (spec.id) {
    case ExampleId::ex1:
      led.per_n = [](int n) { return n % 2 == 1 ? flat_table(1) : flat_table(0); };
      led.limit = flat_table(0);
      led.weak = VerdictStatus::Certified;
      led.setwise = VerdictStatus::Refuted;
      led.tv = VerdictStatus::Refuted;
      led.basis = "exact rule table; the limit atom is a discriminating set";
      break;
    case ExampleId::ex3: {
      const double h = detail::similarity_dimension(spec.ratios);
      led.per_n = [](int) { return flat_table(1); };
      led.limit = flat_table(h);
      led.weak = VerdictStatus::Certified;
      led.setwise = VerdictStatus::Refuted;
      led.tv = VerdictStatus::Refuted;
      led.basis =
          "exact rule table; terms are absolutely continuous with geometrically "
          "decaying mass, the limit is singular";
    } break;
    case ExampleId::ex4:
      led.per_n = [](int) { return flat_table(0); };
      led.limit = flat_table(1);
      led.weak = VerdictStatus::Certified;
      led.setwise = VerdictStatus::Refuted;
      led.tv = VerdictStatus::Refuted;
      led.basis = "exact rule table; the atom-location skeleton separates terms from the limit";
      break;
    case ExampleId::ex5:
      led.per_n = [](int n) { return n == 1 ? flat_table(0) : atom_density_table(); };
      led.limit = flat_table(1);
      led.weak = VerdictStatus::Certified;
      led.setwise = VerdictStatus::Certified;
      led.tv = VerdictStatus::Certified;
      led.basis = "exact rule table; total variation distance 1/n in closed form";
      break;
    case ExampleId::ex6:
      led.per_n = [](int n) { return n == 1 ? flat_table(1) : atom_density_table(); };
      led.limit = flat_table(0);
      led.weak = VerdictStatus::Certified;
      led.setwise = VerdictStatus::Certified;
      led.tv = VerdictStatus::Certified;
      led.basis = "exact rule table; total variation distance 1/n in closed form";
      break;
    case ExampleId::ex7:
      led.per_n = [](int) { return flat_table(1); };
      led.limit = tail_lump_limit_table();
      led.weak = VerdictStatus::Certified;
      led.setwise = VerdictStatus::Certified;
      led.tv = VerdictStatus::Certified;
      led.basis =
          "exact rule table; true total variation distance a^(n+1) from the "
          "Jordan decomposition of band masses; correlation exponents 2/n from "
          "the certificate windows";
      break;
    case ExampleId::ex8:
      led.per_n = [](int) { return flat_table(0); };
      led.limit = infinite_family_table(1.0);
      led.weak = VerdictStatus::Certified;
      led.setwise = VerdictStatus::Certified;
      led.tv = VerdictStatus::Certified;
      led.basis = "exact rule table; total variation distance equals the exact family tail sum";
      break;
  }
  return led;
}

bool VerifyReport::all_pass() const {
  for (const VerifyClaim& c : claims)
    if (!c.pass) return false;
  return true;
}

VerifyReport verify_example(const ExampleSpec& spec_in, int horizon, const VerifyTolerances& tol) {
  ExampleSpec spec = spec_in;
  spec.horizon = std::min(horizon, example_horizon_cap(spec.id));
  const int h = spec.horizon;
  const double num_tol = tol.numeric;

  VerifyReport rep;
  rep.example = example_name(spec.id);
  MeasureSequence seq = make_example(spec);
  ExpectedLedger led = expected(spec);
  rep.basis = led.basis;

  rep.claims.push_back(run_claim(
      "exact dimension tables match the ledger for n = 1.." + std::to_string(h), "exact rule table",
      [&](VerifyClaim& c) {
        int checked = 0, skipped = 0;
        std::string first_bad;
        for (int n = 1; n <= h; ++n) {
          if (spec.id == ExampleId::ex7 && tail_lump_term_ambiguous(spec.a, n)) {
            ++skipped;
            continue;
          }
          DimensionTable got = exact_dims(seq.generator(n));
          if (!got.invariant_violations().empty() && first_bad.empty())
            first_bad = "n=" + std::to_string(n) + ": " + got.invariant_violations().front();
          std::string diff = diff_tables(got, led.per_n(n));
          if (!diff.empty() && first_bad.empty())
            first_bad = "n=" + std::to_string(n) + ": " + diff;
          ++checked;
        }
        c.pass = first_bad.empty();
        c.detail = std::to_string(checked) + " terms checked";
        if (skipped > 0)
          c.detail += ", " + std::to_string(skipped) +
                      " skipped (term numerically indistinguishable from the limit)";
        if (!first_bad.empty()) c.detail = first_bad;
      }));

  rep.claims.push_back(run_claim("exact dimension table of the limit matches the ledger", "exact rule table",
                                 [&](VerifyClaim& c) {
                                   DimensionTable got = exact_dims(seq.limit);
                                   std::string diff = diff_tables(got, led.limit);
                                   if (diff.empty() && !got.invariant_violations().empty())
                                     diff = got.invariant_violations().front();
                                   c.pass = diff.empty();
                                   c.detail = diff;
                                 }));

  ConvergenceVerdict weak_v, set_v, tv_v;
  auto verdict_claim = [&](const char* mode, const ConvergenceVerdict& got, VerdictStatus want) {
    return run_claim(std::string(mode) + " verdict is " + verdict_status_name(want), "convergence checker against the ledger verdict",
                     [&](VerifyClaim& c) {
                       c.pass = got.status == want;
                       if (got.status == VerdictStatus::Refuted && got.witness)
                         c.detail = "witness " + got.witness->describe() + ", min tail gap " +
                                    fmt(got.witness_gap);
                       else if (!got.certificate.empty())
                         c.detail = got.certificate;
                       if (!c.pass)
                         c.detail = std::string("got ") + verdict_status_name(got.status) +
                                    (c.detail.empty() ? "" : " (" + c.detail + ")");
                     });
  };

  rep.claims.push_back(run_claim("weak convergence verdict is " +
                                     std::string(verdict_status_name(led.weak)), "convergence checker against the ledger verdict",
                                 [&](VerifyClaim& c) {
                                   weak_v = weak_converges(seq, h, tol.convergence);
                                   VerifyClaim inner =
                                       verdict_claim("weak", weak_v, led.weak);
                                   c.pass = inner.pass;
                                   c.detail = inner.detail;
                                 }));
  rep.claims.push_back(run_claim("setwise convergence verdict is " +
                                     std::string(verdict_status_name(led.setwise)), "convergence checker against the ledger verdict",
                                 [&](VerifyClaim& c) {
                                   set_v = setwise_converges(seq, h, tol.convergence);
                                   VerifyClaim inner =
                                       verdict_claim("setwise", set_v, led.setwise);
                                   c.pass = inner.pass;
                                   c.detail = inner.detail;
                                 }));
  rep.claims.push_back(run_claim("tv convergence verdict is " +
                                     std::string(verdict_status_name(led.tv)), "convergence checker against the ledger verdict",
                                 [&](VerifyClaim& c) {
                                   tv_v = tv_converges(seq, h, tol.convergence);
                                   VerifyClaim inner = verdict_claim("tv", tv_v, led.tv);
                                   c.pass = inner.pass;
                                   c.detail = inner.detail;
                                 }));

  switch (spec.id) {
    case ExampleId::ex1: {
      rep.claims.push_back(run_claim(
          "tv refutation pinpoints the limit atom", "canonical witness search", [&](VerifyClaim& c) {
            c.pass = tv_v.witness.has_value() && tv_v.witness->points().size() == 1 &&
                     tv_v.witness->points()[0] == 0.0 && tv_v.witness->intervals().empty();
            if (tv_v.witness) c.detail = tv_v.witness->describe();
          }));
      rep.claims.push_back(run_claim(
          "correlation slope of an absolutely continuous term is 1", "sampled estimator against the exact value", [&](VerifyClaim& c) {
            auto xs = sample(seq.generator(5), 4000, tol.seed);
            auto est = correlation_dim_gp(xs, log_spaced(1e-4, 2e-1, 16));
            c.pass = std::abs(est.slope - 1.0) <= num_tol;
            c.margin = num_tol - std::abs(est.slope - 1.0);
            c.detail = "slope " + fmt(est.slope);
          }));
      rep.claims.push_back(run_claim(
          "correlation slope of a point-mass term is exactly 0", "sampled estimator, exact constancy", [&](VerifyClaim& c) {
            auto xs = sample(seq.generator(4), 2000, tol.seed);
            auto est = correlation_dim_gp(xs, log_spaced(1e-4, 1e-1, 12));
            c.pass = est.slope == 0.0;
            c.detail = "slope " + fmt(est.slope);
          }));
    } break;
    case ExampleId::ex3: {
      const Ifs ifs(spec.ratios, spec.offsets);
      const double hdim = ifs.similarity_dimension();
      double s = 0;
      for (double r : spec.ratios) s += std::pow(r, hdim + 1.0);
      const double width = ifs.hull_hi() - ifs.hull_lo();
      rep.claims.push_back(run_claim(
          "term mass follows the cascade formula (no renormalization)", "closed-form cascade mass",
          [&](VerifyClaim& c) {
            double worst = 0;
            for (int n = 1; n <= h; ++n) {
              const double want = width * std::pow(s, n);
              const double got = seq.generator(n).total_mass();
              worst = std::max(worst, std::abs(got - want) / want);
            }
            c.pass = worst <= 1e-9;
            c.margin = 1e-9 - worst;
            c.detail = "mass at n=" + std::to_string(h) + " is " +
                       fmt(seq.generator(h).total_mass()) + ", worst rel dev " + fmt(worst);
          }));
      rep.claims.push_back(run_claim(
          "correlation slope of the sampled limit matches its dimension", "sampled estimator against the exact value",
          [&](VerifyClaim& c) {
            auto xs = sample(seq.limit, 20000, tol.seed);
            auto est = correlation_dim_gp(xs, log_spaced(1e-4, 5e-1, 16));
            c.pass = std::abs(est.slope - hdim) <= num_tol;
            c.margin = num_tol - std::abs(est.slope - hdim);
            c.detail = "slope " + fmt(est.slope) + ", dimension " + fmt(hdim);
          }));
      rep.claims.push_back(run_claim(
          "setwise refutation carries a witness exceeding the tolerance", "canonical witness search",
          [&](VerifyClaim& c) {
            c.pass = set_v.witness.has_value() && set_v.witness_gap > tol.convergence;
            if (set_v.witness)
              c.detail = set_v.witness->describe() + ", min tail gap " + fmt(set_v.witness_gap);
          }));
    } break;
    case ExampleId::ex4: {
      rep.claims.push_back(run_claim(
          "setwise refutation uses the atom-location skeleton", "canonical witness search", [&](VerifyClaim& c) {
            c.pass = set_v.witness.has_value() && set_v.witness->skeleton_tag().has_value();
            if (set_v.witness) c.detail = set_v.witness->describe();
          }));
      rep.claims.push_back(run_claim(
          "correlation slope of a term is exactly 0 below the atom spacing", "sampled estimator, exact constancy",
          [&](VerifyClaim& c) {
            auto xs = sample(seq.generator(std::min(h, 50)), 4000, tol.seed);
            auto est = correlation_dim_gp(xs, log_spaced(1e-4, 1.5e-2, 12));
            c.pass = est.slope == 0.0;
            c.detail = "slope " + fmt(est.slope);
          }));
      rep.claims.push_back(run_claim(
          "correlation slope of the sampled limit is 1", "sampled estimator against the exact value", [&](VerifyClaim& c) {
            auto xs = sample(seq.limit, 10000, tol.seed);
            auto est = correlation_dim_gp(xs, log_spaced(1e-4, 5e-1, 16));
            c.pass = std::abs(est.slope - 1.0) <= num_tol;
            c.margin = num_tol - std::abs(est.slope - 1.0);
            c.detail = "slope " + fmt(est.slope);
          }));
    } break;
    case ExampleId::ex5: {
      rep.claims.push_back(run_claim(
          "exact correlation integral of the n=10 term at r=0.01", "closed-form correlation integral", [&](VerifyClaim& c) {
            const double want = 0.1 * 0.1 + 0.0179;  // atom self-pair + density edge-corrected part
            const double got = correlation_integral_exact(seq.generator(10), 0.01);
            c.pass = std::abs(got - want) <= 1e-10;
            c.margin = 1e-10 - std::abs(got - want);
            c.detail = "C(0.01) = " + fmt(got);
          }));
      rep.claims.push_back(run_claim(
          "atom pins the sampled correlation slope near 0 at small scales", "sampled estimator against the exact value",
          [&](VerifyClaim& c) {
            auto xs = sample(seq.generator(10), 10000, tol.seed);
            auto est = correlation_dim_gp(xs, log_spaced(1e-5, 1e-1, 20),
                                          std::make_pair(1e-5, 1e-3));
            c.pass = std::abs(est.slope) <= num_tol;
            c.margin = num_tol - std::abs(est.slope);
            c.detail = "slope " + fmt(est.slope);
          }));
      rep.claims.push_back(run_claim(
          "dropping the concentration restores slope 1 (delta = 0.2)", "sampled estimator against the exact value",
          [&](VerifyClaim& c) {
            auto xs = sample(seq.generator(10), 10000, tol.seed);
            auto est = modified_correlation_dim(xs, 0.2, log_spaced(1e-5, 1e-1, 20));
            c.pass = std::abs(est.slope - 1.0) <= num_tol;
            c.margin = num_tol - std::abs(est.slope - 1.0);
            c.detail = "slope " + fmt(est.slope) + "; " + est.note;
          }));
      rep.claims.push_back(run_claim(
          "delta = 0.01 is too small to remove the concentration", "sampled estimator against the exact value", [&](VerifyClaim& c) {
            auto xs = sample(seq.generator(10), 10000, tol.seed);
            auto est = modified_correlation_dim(xs, 0.01, log_spaced(1e-5, 1e-1, 20),
                                                std::make_pair(1e-5, 1e-3));
            c.pass = std::abs(est.slope) <= num_tol;
            c.margin = num_tol - std::abs(est.slope);
            c.detail = "slope " + fmt(est.slope);
          }));
    } break;
    case ExampleId::ex6: {
      rep.claims.push_back(run_claim(
          "tv distances equal 1/n exactly", "closed-form distance series", [&](VerifyClaim& c) {
            double worst = 0;
            for (int n = 1; n <= h; ++n)
              worst = std::max(worst, std::abs(tv_v.series[n - 1] - 1.0 / n));
            c.pass = worst <= 1e-10;
            c.margin = 1e-10 - worst;
            c.detail = "worst deviation " + fmt(worst);
          }));
      rep.claims.push_back(run_claim(
          "local exponent quantiles split the atom from the density", "sampled estimator against the exact values",
          [&](VerifyClaim& c) {
            const SymbolicMeasure m = seq.generator(10);
            auto xs = sample(m, 2000, tol.seed);
            auto prof = local_dimension_profile(m, xs, log_spaced(1e-6, 1e-1, 24), {0.01, 0.99});
            const double lo_slope = prof.at(0.01).slope;
            const double hi_slope = prof.at(0.99).slope;
            const double dev = std::max(std::abs(lo_slope), std::abs(hi_slope - 1.0));
            c.pass = dev <= num_tol;
            c.margin = num_tol - dev;
            c.detail = "q01 slope " + fmt(lo_slope) + ", q99 slope " + fmt(hi_slope);
          }));
    } break;
    case ExampleId::ex7: {
      rep.claims.push_back(run_claim(
          "tv distances equal a^(n+1) exactly", "closed-form distance series", [&](VerifyClaim& c) {
            double worst = 0;
            for (int n = 1; n <= h; ++n)
              worst = std::max(worst, std::abs(tv_v.series[n - 1] - std::pow(spec.a, n + 1)));
            c.pass = worst <= 1e-10;
            c.margin = 1e-10 - worst;
            c.detail = "worst deviation " + fmt(worst);
          }));
      rep.claims.push_back(run_claim(
          "zero-correlation certificate exponents are 2/n and decreasing", "closed-form certificate exponents",
          [&](VerifyClaim& c) {
            auto cert = zero_correlation_certificate(seq.limit, spec.a, 10);
            double worst = 0;
            bool decreasing = true;
            for (std::size_t k = 0; k < cert.steps.size(); ++k) {
              worst = std::max(worst, std::abs(cert.steps[k].exponent - 2.0 / double(k + 1)));
              if (k > 0 && cert.steps[k].exponent >= cert.steps[k - 1].exponent)
                decreasing = false;
            }
            c.pass = cert.steps.size() == 10 && decreasing && worst <= 1e-9;
            c.margin = 1e-9 - worst;
            std::string series = "exponents";
            for (const CertificateStep& st : cert.steps) series += " " + fmt(st.exponent);
            c.detail = series + "; worst deviation from 2/n " + fmt(worst);
          }));
      rep.claims.push_back(run_claim(
          "early terms are absolutely continuous with slope 1", "sampled estimator against the exact value", [&](VerifyClaim& c) {
            auto xs = sample(seq.generator(1), 10000, tol.seed);
            auto est = correlation_dim_gp(xs, log_spaced(1e-3, 2e-1, 12));
            c.pass = std::abs(est.slope - 1.0) <= num_tol;
            c.margin = num_tol - std::abs(est.slope - 1.0);
            c.detail = "slope " + fmt(est.slope);
          }));
    } break;
    case ExampleId::ex8: {
      rep.claims.push_back(run_claim(
          "tv distances equal the exact family tail sums", "exact series tail sums", [&](VerifyClaim& c) {
            double worst = 0;
            for (int n = 1; n <= h; ++n)
              worst = std::max(worst,
                               std::abs(tv_v.series[n - 1] -
                                        series::power_sum(n + 1, detail::kInf, 2.0)));
            c.pass = worst <= 1e-10;
            c.margin = 1e-10 - worst;
            c.detail = "worst deviation " + fmt(worst);
          }));
      rep.claims.push_back(run_claim(
          "exact box counts of the limit scale with exponent 1/2", "exact box counts", [&](VerifyClaim& c) {
            auto est = box_dimension_estimate(seq.limit, {0.0}, log_spaced(1e-6, 1e-2, 16),
                                              std::make_pair(1e-6, 1e-2));
            const double slope = est.at(0.0).slope;
            c.pass = std::abs(slope - 0.5) <= num_tol;
            c.margin = num_tol - std::abs(slope - 0.5);
            c.detail = "slope " + fmt(slope);
          }));
    } break;
  }

  rep.claims.push_back(run_claim(
      "semicontinuity audit has no violated rows", "finite-horizon semicontinuity audit", [&](VerifyClaim& c) {
        SemicontinuityReport sr = semicontinuity_check(seq, h, tol.convergence);
        c.pass = sr.ok();
        int binding = 0, violated = 0;
        for (const SemicontinuityRow& row : sr.rows) {
          if (row.verdict == SemiVerdict::Holds) ++binding;
          if (row.verdict == SemiVerdict::Violated) ++violated;
        }
        c.detail = (sr.certified_mode.empty() ? std::string("not setwise-certified")
                                              : "certified " + sr.certified_mode) +
                   ", " + std::to_string(binding) + " rows hold";
        if (violated > 0) c.detail += ", " + std::to_string(violated) + " violated";
      }));

  return rep;
}

const char* semi_verdict_name(SemiVerdict v) {
  switch (v) {
    case SemiVerdict::Holds: return "Holds";
    case SemiVerdict::Violated: return "Violated";
    case SemiVerdict::NotApplicable: return "NotApplicable";
  }
  return "?";
}

bool SemicontinuityReport::ok() const {
  for (const SemicontinuityRow& r : rows)
    if (r.verdict == SemiVerdict::Violated) return false;
  return true;
}

SemicontinuityReport semicontinuity_check(const MeasureSequence& seq, int horizon,
                                          double conv_tol) {
  if (horizon < 2) fail(Errc::invalid_argument, "semicontinuity check needs horizon >= 2");
  SemicontinuityReport rep;
  rep.sequence = seq.name;

  ConvergenceVerdict sw = setwise_converges(seq, horizon, conv_tol);
  const bool certified = sw.status == VerdictStatus::Certified;
  rep.certified_mode = certified ? "setwise" : "";
  const std::string mode_note = certified
                                    ? std::string()
                                    : "setwise convergence not certified (" +
                                          std::string(verdict_status_name(sw.status)) +
                                          "); observed gap recorded for illustration";

  std::vector<std::array<DimEntry, 10>> terms;
  terms.reserve(static_cast<std::size_t>(horizon));
  for (int n = 1; n <= horizon; ++n) terms.push_back(exact_dims(seq.generator(n)).as_array());
  const auto lim = exact_dims(seq.limit).as_array();
  const int t0 = tail_start(horizon);
  const auto& labels = DimensionTable::names();

  struct Gather {
    bool window_exact = true, all_exact = true;
    double win_min = std::numeric_limits<double>::infinity();
    double win_max = -std::numeric_limits<double>::infinity();
    double sup_all = -std::numeric_limits<double>::infinity();
  };
  auto gather = [&](int idx) {
    Gather g;
    for (int n = 1; n <= horizon; ++n) {
      const DimEntry& e = terms[static_cast<std::size_t>(n - 1)][static_cast<std::size_t>(idx)];
      if (!e.exact()) {
        g.all_exact = false;
        if (n >= t0) g.window_exact = false;
        continue;
      }
      g.sup_all = std::max(g.sup_all, e.value);
      if (n >= t0) {
        g.win_min = std::min(g.win_min, e.value);
        g.win_max = std::max(g.win_max, e.value);
      }
    }
    return g;
  };

  auto push_row = [&](int idx, const std::string& direction,
                      const std::function<void(SemicontinuityRow&, const Gather&)>& body) {
    SemicontinuityRow row;
    row.mapping = labels[static_cast<std::size_t>(idx)];
    row.direction = direction;
    const Gather g = gather(idx);
    if (!g.window_exact) {
      row.verdict = SemiVerdict::NotApplicable;
      row.note = "term table entry not exactly computable on the tail window";
    } else if (!lim[static_cast<std::size_t>(idx)].exact()) {
      row.verdict = SemiVerdict::NotApplicable;
      row.note = "limit table entry not exactly computable";
    } else {
      row.limit = lim[static_cast<std::size_t>(idx)].value;
      body(row, g);
    }
    rep.rows.push_back(std::move(row));
  };

  // Countably stable upper mappings: liminf over the tail must reach the limit
  // value whenever setwise convergence is certified.
  for (int idx : {3, 5, 7}) {
    push_row(idx, "liminf over the tail >= limit", [&](SemicontinuityRow& row, const Gather& g) {
      row.proxy = g.win_min;
      row.margin = g.win_min - row.limit;
      if (!certified) {
        row.verdict = SemiVerdict::NotApplicable;
        row.note = mode_note;
      } else if (row.margin >= -1e-9) {
        row.verdict = SemiVerdict::Holds;
        row.note = "binding under certified setwise convergence";
      } else {
        row.verdict = SemiVerdict::Violated;
      }
    });
  }

  // Upper box is not countably stable, so no inequality is claimed; the
  // observed gap is recorded because it can genuinely be negative.
  push_row(1, "liminf over the tail vs limit (no guarantee)",
           [&](SemicontinuityRow& row, const Gather& g) {
             row.proxy = g.win_min;
             row.margin = g.win_min - row.limit;
             row.verdict = SemiVerdict::NotApplicable;
             row.note = "upper box mapping is not countably stable; observed gap only";
           });

  // Lower mappings: limsup over the tail must not exceed the limit under
  // certified setwise convergence.
  for (int idx : {0, 2, 4, 6}) {
    push_row(idx, "limsup over the tail <= limit", [&](SemicontinuityRow& row, const Gather& g) {
      row.proxy = g.win_max;
      row.margin = row.limit - g.win_max;
      if (!certified) {
        row.verdict = SemiVerdict::NotApplicable;
        row.note = mode_note;
      } else if (row.margin >= -1e-9) {
        row.verdict = SemiVerdict::Holds;
        row.note = "binding under certified setwise convergence";
      } else {
        row.verdict = SemiVerdict::Violated;
      }
    });
  }

  // Correlation mappings have no semicontinuity guarantee in any of the three
  // modes; record the worse of the two directional gaps.
  for (int idx : {8, 9}) {
    push_row(idx, "no stability in either direction (illustration)",
             [&](SemicontinuityRow& row, const Gather& g) {
               row.proxy = g.win_min;
               row.margin = std::min(g.win_min - row.limit, row.limit - g.win_max);
               row.verdict = SemiVerdict::NotApplicable;
               row.note = "correlation mappings admit no semicontinuity statement; observed "
                          "gap only";
             });
  }

  // Dominated-equality rows: when every upper value sits at or below the
  // limit, the countably stable upper mappings must converge to it exactly.
  for (int idx : {3, 5, 7}) {
    SemicontinuityRow row;
    row.mapping = labels[static_cast<std::size_t>(idx)];
    row.direction = "limit equality under dominance";
    const Gather g = gather(idx);
    if (!certified) {
      row.verdict = SemiVerdict::NotApplicable;
      row.note = mode_note;
    } else if (!g.all_exact || !lim[static_cast<std::size_t>(idx)].exact()) {
      row.verdict = SemiVerdict::NotApplicable;
      row.note = "needs exact entries for every term and the limit";
    } else {
      row.limit = lim[static_cast<std::size_t>(idx)].value;
      if (g.sup_all > row.limit + 1e-9) {
        row.verdict = SemiVerdict::NotApplicable;
        row.note = "dominance hypothesis fails: sup of term values " + fmt(g.sup_all) +
                   " exceeds the limit";
      } else {
        double dev = 0;
        for (int n = t0; n <= horizon; ++n)
          dev = std::max(dev, std::abs(terms[static_cast<std::size_t>(n - 1)]
                                             [static_cast<std::size_t>(idx)].value -
                                       row.limit));
        row.proxy = row.limit + dev;
        row.margin = -dev;
        row.verdict = dev <= 1e-9 ? SemiVerdict::Holds : SemiVerdict::Violated;
        if (row.verdict == SemiVerdict::Holds)
          row.note = "tail values equal the limit under the dominance hypothesis";
      }
    }
    rep.rows.push_back(std::move(row));
  }

  return rep;
}

MeasureSequence random_scheffe_sequence(std::uint64_t seed, int horizon) {
  if (horizon < 1) fail(Errc::invalid_argument, "horizon must be at least 1");
  Rng rng(seed * 0x9e3779b97f4a7c15ull + 0x2545f4914f6cdd1dull);
  std::array<double, 8> heights{};
  double total = 0;
  for (double& x : heights) {
    x = 0.6 + 0.8 * rng.uniform();
    total += x;
  }
  for (double& x : heights) x *= 8.0 / total;  // total mass becomes exactly-targeted 1

  MeasureSequence seq;
  seq.name = "scheffe-" + std::to_string(seed);
  seq.declared_mode = "setwise";
  const double base = std::min(heights[2], heights[5]) / 8.0;  // min of the two cell masses
  seq.generator = [heights, base](int n) {
    const double delta = std::ldexp(base, -n - 1);
    std::vector<DensityPiece> pieces;
    pieces.reserve(8);
    for (int j = 0; j < 8; ++j) {
      double hj = heights[static_cast<std::size_t>(j)];
      if (j == 2) hj += 8.0 * delta;
      if (j == 5) hj -= 8.0 * delta;
      pieces.push_back({j / 8.0, (j + 1) / 8.0, hj});
    }
    return SymbolicMeasure::piecewise(std::move(pieces));
  };
  std::vector<DensityPiece> lim;
  lim.reserve(8);
  for (int j = 0; j < 8; ++j)
    lim.push_back({j / 8.0, (j + 1) / 8.0, heights[static_cast<std::size_t>(j)]});
  seq.limit = SymbolicMeasure::piecewise(std::move(lim));
  return seq;
}

}  // namespace dimlab
