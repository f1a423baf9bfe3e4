#include "dimlab/tv_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

namespace dimlab {

const char* verdict_status_name(VerdictStatus s) {
  switch (s) {
    case VerdictStatus::Certified: return "Certified";
    case VerdictStatus::Refuted: return "Refuted";
    case VerdictStatus::Unknown: return "Unknown";
  }
  return "Unknown";
}

// ---------------------------------------------------------------------------
// Signed decomposition. The class splits into three mutually singular
// categories: atoms, absolutely continuous densities, and self-similar
// singular parts (strong separation forces sum(ratios) < 1, so attractors are
// Lebesgue-null and the natural measures are non-atomic).
// ---------------------------------------------------------------------------

namespace {

constexpr long long kExpandLimit = 100000;

struct AtomicSide {
  std::vector<std::pair<double, double>> atoms;  // merged, sorted by location
  std::vector<AtomFamily> families;              // large or unbounded ranges
};

AtomicSide collect_atoms(const SymbolicMeasure& m) {
  AtomicSide side;
  for (const auto& comp : m.components()) {
    if (const auto* al = std::get_if<AtomList>(&comp)) {
      side.atoms.insert(side.atoms.end(), al->atoms.begin(), al->atoms.end());
    } else if (const auto* f = std::get_if<AtomFamily>(&comp)) {
      if (!f->infinite() && f->i_max - f->i_min < kExpandLimit) {
        for (long long i = f->i_min; i <= f->i_max; ++i)
          side.atoms.emplace_back(f->location(i), f->weight(i));
      } else {
        side.families.push_back(*f);
      }
    }
  }
  std::sort(side.atoms.begin(), side.atoms.end());
  std::vector<std::pair<double, double>> merged;
  for (auto& [x, w] : side.atoms) {
    if (!merged.empty() && merged.back().first == x)
      merged.back().second += w;
    else
      merged.emplace_back(x, w);
  }
  side.atoms = std::move(merged);
  return side;
}

double explicit_weight_at(const AtomicSide& s, double x) {
  auto it = std::lower_bound(s.atoms.begin(), s.atoms.end(), x,
                             [](const std::pair<double, double>& a, double v) { return a.first < v; });
  return (it != s.atoms.end() && it->first == x) ? it->second : 0.0;
}

void split_atomic(const SymbolicMeasure& mu, const SymbolicMeasure& rho, double& pos,
                  double& neg) {
  AtomicSide a = collect_atoms(mu), b = collect_atoms(rho);
  if (a.atoms.empty() && b.atoms.empty() && a.families.empty() && b.families.empty()) return;

  // Large families on opposite sides with different location exponents would
  // need cross-grid collision resolution; not representable exactly here.
  for (const auto& fa : a.families)
    for (const auto& fb : b.families)
      if (fa.p != fb.p)
        fail(Errc::unsupported_measure,
             "TV between infinite atom families with different location exponents");

  // consumed[p] = family indices already settled through explicit collisions
  std::map<double, std::set<long long>> consumed;

  // Pass 1: explicit locations from both sides, with family contributions.
  std::vector<double> locs;
  locs.reserve(a.atoms.size() + b.atoms.size());
  for (auto& [x, w] : a.atoms) locs.push_back(x);
  for (auto& [x, w] : b.atoms) locs.push_back(x);
  std::sort(locs.begin(), locs.end());
  locs.erase(std::unique(locs.begin(), locs.end()), locs.end());
  for (double x : locs) {
    double wa = explicit_weight_at(a, x), wb = explicit_weight_at(b, x);
    for (const auto& f : a.families) {
      auto idx = detail::family_index_at(f, x);
      if (idx) {
        wa += f.weight(*idx);
        consumed[f.p].insert(*idx);
      }
    }
    for (const auto& f : b.families) {
      auto idx = detail::family_index_at(f, x);
      if (idx) {
        wb += f.weight(*idx);
        consumed[f.p].insert(*idx);
      }
    }
    double d = wa - wb;
    if (d > 0)
      pos += d;
    else
      neg -= d;
  }

  // Pass 2: family grids, per location exponent p, on index segments cut at
  // every range endpoint so the active coefficient set is constant.
  std::map<double, std::vector<std::pair<const AtomFamily*, double>>> groups;  // family, sign
  for (const auto& f : a.families) groups[f.p].emplace_back(&f, 1.0);
  for (const auto& f : b.families) groups[f.p].emplace_back(&f, -1.0);
  for (auto& [p, fams] : groups) {
    std::vector<long long> cuts{1};
    bool open_ended = false;
    for (auto& [f, sign] : fams) {
      cuts.push_back(f->i_min);
      if (f->infinite())
        open_ended = true;
      else
        cuts.push_back(f->i_max + 1);
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    const auto& used = consumed[p];
    for (std::size_t k = 0; k < cuts.size(); ++k) {
      long long s = cuts[k];
      long long e = (k + 1 < cuts.size()) ? cuts[k + 1] - 1 : detail::kInf;
      if (e == detail::kInf && !open_ended) break;
      std::vector<std::pair<double, double>> active;  // (signed c, q)
      for (auto& [f, sign] : fams)
        if (f->i_min <= s && (f->infinite() || (e != detail::kInf && f->i_max >= e)))
          active.emplace_back(sign * f->c, f->q);
      if (active.empty()) continue;
      bool same_q = true;
      for (auto& [c, q] : active) same_q = same_q && (q == active.front().second);
      if (same_q) {
        double q = active.front().second;
        double coeff = 0;
        for (auto& [c, qq] : active) coeff += c;
        if (coeff == 0) continue;
        double part = std::abs(coeff) * series::power_sum(s, e, q);
        for (long long i : used) {
          if (i < s || (e != detail::kInf && i > e)) continue;
          part -= std::abs(coeff) * std::pow(static_cast<double>(i), -q);
        }
        part = std::max(part, 0.0);
        if (coeff > 0)
          pos += part;
        else
          neg += part;
      } else {
        if (e == detail::kInf || e - s > 1000000)
          fail(Errc::unsupported_measure,
               "TV between atom families with mixed weight exponents on an unbounded range");
        for (long long i = s; i <= e; ++i) {
          if (used.count(i)) continue;
          double d = 0;
          for (auto& [c, q] : active) d += c * std::pow(static_cast<double>(i), -q);
          if (d > 0)
            pos += d;
          else
            neg -= d;
        }
      }
    }
  }
}

void split_density(const SymbolicMeasure& mu, const SymbolicMeasure& rho, double& pos,
                   double& neg) {
  struct SignedPiece {
    double lo, hi, height;
  };
  std::vector<SignedPiece> pieces;
  auto gather = [&](const SymbolicMeasure& m, double sign) {
    for (const auto& comp : m.components())
      if (const auto* d = std::get_if<PiecewiseDensity>(&comp))
        for (const auto& p : d->pieces) pieces.push_back({p.lo, p.hi, sign * p.height});
  };
  gather(mu, 1.0);
  gather(rho, -1.0);
  if (pieces.empty()) return;
  std::vector<double> cuts;
  for (auto& p : pieces) {
    cuts.push_back(p.lo);
    cuts.push_back(p.hi);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  std::sort(pieces.begin(), pieces.end(),
            [](const SignedPiece& x, const SignedPiece& y) { return x.lo < y.lo; });
  std::size_t first_candidate = 0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    double lo = cuts[k], hi = cuts[k + 1];
    double h = 0;
    while (first_candidate < pieces.size() && pieces[first_candidate].hi <= lo) ++first_candidate;
    for (std::size_t j = first_candidate; j < pieces.size() && pieces[j].lo < hi; ++j)
      if (pieces[j].lo <= lo && pieces[j].hi >= hi) h += pieces[j].height;
    if (h > 0)
      pos += h * (hi - lo);
    else
      neg -= h * (hi - lo);
  }
}

void split_self_similar(const SymbolicMeasure& mu, const SymbolicMeasure& rho, double& pos,
                        double& neg) {
  std::vector<const SelfSimilar*> sa, sb;
  for (const auto& comp : mu.components())
    if (const auto* s = std::get_if<SelfSimilar>(&comp)) sa.push_back(s);
  for (const auto& comp : rho.components())
    if (const auto* s = std::get_if<SelfSimilar>(&comp)) sb.push_back(s);
  std::vector<bool> matched(sb.size(), false);
  for (const auto* x : sa) {
    bool found = false;
    for (std::size_t j = 0; j < sb.size(); ++j) {
      if (matched[j] || !x->ifs.same_as(sb[j]->ifs)) continue;
      matched[j] = true;
      found = true;
      if (x->weights == sb[j]->weights) {
        double d = x->mass - sb[j]->mass;
        if (d > 0)
          pos += d;
        else
          neg -= d;
      } else {
        // Same attractor, different branch weights: mutually singular natural
        // measures (cylinder frequencies differ almost everywhere).
        pos += x->mass;
        neg += sb[j]->mass;
      }
      break;
    }
    if (!found) {
      // Unmatched against every rho self-similar part: singular only if the
      // hulls are disjoint, otherwise the overlap is not resolvable exactly.
      for (std::size_t j = 0; j < sb.size(); ++j) {
        if (matched[j]) continue;
        if (x->ifs.hull_hi() >= sb[j]->ifs.hull_lo() && x->ifs.hull_lo() <= sb[j]->ifs.hull_hi())
          fail(Errc::unsupported_measure,
               "TV between different self-similar systems with overlapping hulls");
      }
      pos += x->mass;
    }
  }
  for (std::size_t j = 0; j < sb.size(); ++j)
    if (!matched[j]) neg += sb[j]->mass;
}

}  // namespace

SignedSplit signed_split(const SymbolicMeasure& mu, const SymbolicMeasure& rho) {
  SignedSplit s;
  split_atomic(mu, rho, s.pos, s.neg);
  split_density(mu, rho, s.pos, s.neg);
  split_self_similar(mu, rho, s.pos, s.neg);
  return s;
}

double tv_distance(const SymbolicMeasure& mu, const SymbolicMeasure& rho) {
  return signed_split(mu, rho).tv();
}

// ---------------------------------------------------------------------------
// Absolute continuity / equivalence
// ---------------------------------------------------------------------------

namespace {

double atom_weight_in(const SymbolicMeasure& m, double x) {
  double w = 0;
  for (const auto& comp : m.components()) {
    if (const auto* al = std::get_if<AtomList>(&comp)) {
      auto it = std::lower_bound(
          al->atoms.begin(), al->atoms.end(), x,
          [](const std::pair<double, double>& a, double v) { return a.first < v; });
      if (it != al->atoms.end() && it->first == x) w += it->second;
    } else if (const auto* f = std::get_if<AtomFamily>(&comp)) {
      auto idx = detail::family_index_at(*f, x);
      if (idx) w += f->weight(*idx);
    }
  }
  return w;
}

std::vector<std::pair<double, double>> density_support(const SymbolicMeasure& m) {
  std::vector<std::pair<double, double>> iv;
  for (const auto& comp : m.components())
    if (const auto* d = std::get_if<PiecewiseDensity>(&comp))
      for (const auto& p : d->pieces) iv.emplace_back(p.lo, p.hi);
  std::sort(iv.begin(), iv.end());
  std::vector<std::pair<double, double>> merged;
  for (auto& [lo, hi] : iv) {
    if (!merged.empty() && lo <= merged.back().second)
      merged.back().second = std::max(merged.back().second, hi);
    else
      merged.emplace_back(lo, hi);
  }
  return merged;
}

}  // namespace

bool abs_continuous(const SymbolicMeasure& mu, const SymbolicMeasure& rho) {
  auto rho_support = density_support(rho);
  for (const auto& comp : mu.components()) {
    bool ok = std::visit(
        [&](const auto& c) -> bool {
          using T = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<T, AtomList>) {
            for (auto& [x, w] : c.atoms)
              if (atom_weight_in(rho, x) <= 0) return false;
            return true;
          } else if constexpr (std::is_same_v<T, AtomFamily>) {
            if (!c.infinite() && c.i_max - c.i_min < kExpandLimit) {
              for (long long i = c.i_min; i <= c.i_max; ++i)
                if (atom_weight_in(rho, c.location(i)) <= 0) return false;
              return true;
            }
            for (const auto& rc : rho.components()) {
              const auto* f = std::get_if<AtomFamily>(&rc);
              if (!f || f->p != c.p) continue;
              bool covers_lo = f->i_min <= c.i_min;
              bool covers_hi = f->infinite() || (!c.infinite() && f->i_max >= c.i_max);
              if (covers_lo && covers_hi) return true;
            }
            return false;
          } else if constexpr (std::is_same_v<T, PiecewiseDensity>) {
            for (const auto& p : c.pieces) {
              double covered = 0;
              for (auto& [lo, hi] : rho_support) {
                double a = std::max(lo, p.lo), b = std::min(hi, p.hi);
                if (b > a) covered += b - a;
              }
              if (covered < (p.hi - p.lo) * (1.0 - 1e-12)) return false;
            }
            return true;
          } else {
            for (const auto& rc : rho.components()) {
              const auto* s = std::get_if<SelfSimilar>(&rc);
              if (s && s->ifs.same_as(c.ifs) && s->weights == c.weights) return true;
            }
            return false;
          }
        },
        comp);
    if (!ok) return false;
  }
  return true;
}

bool equivalent(const SymbolicMeasure& mu, const SymbolicMeasure& rho) {
  return abs_continuous(mu, rho) && abs_continuous(rho, mu);
}

// ---------------------------------------------------------------------------
// Canonical discriminating sets
// ---------------------------------------------------------------------------

namespace detail {

std::vector<BorelTestSet> canonical_test_sets(const std::vector<SymbolicMeasure>& terms,
                                              const SymbolicMeasure& limit) {
  std::vector<BorelTestSet> out;
  std::vector<double> all_atom_locs;
  std::vector<double> skeleton_ps;
  std::vector<double> breakpoints;
  std::vector<const Ifs*> systems;
  double lo = limit.support_lo(), hi = limit.support_hi();

  auto scan = [&](const SymbolicMeasure& m) {
    lo = std::min(lo, m.support_lo());
    hi = std::max(hi, m.support_hi());
    for (const auto& comp : m.components()) {
      std::visit(
          [&](const auto& c) {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, AtomList>) {
              if (all_atom_locs.size() < 200000)
                for (auto& [x, w] : c.atoms) all_atom_locs.push_back(x);
            } else if constexpr (std::is_same_v<T, AtomFamily>) {
              skeleton_ps.push_back(c.p);
            } else if constexpr (std::is_same_v<T, PiecewiseDensity>) {
              std::size_t stride = std::max<std::size_t>(1, c.pieces.size() / 64);
              for (std::size_t k = 0; k < c.pieces.size(); k += stride) {
                breakpoints.push_back(c.pieces[k].lo);
                breakpoints.push_back(c.pieces[k].hi);
              }
              breakpoints.push_back(c.pieces.back().hi);
            } else {
              bool seen = false;
              for (const auto* s : systems) seen = seen || s->same_as(c.ifs);
              if (!seen) systems.push_back(&c.ifs);
            }
          },
          comp);
    }
  };
  scan(limit);
  for (const auto& m : terms) scan(m);
  if (!(hi > lo)) hi = lo + 1;

  // Singletons at limit atoms (and a few early-term atoms).
  std::vector<double> singleton_locs;
  for (const auto& comp : limit.components())
    if (const auto* al = std::get_if<AtomList>(&comp))
      for (auto& [x, w] : al->atoms)
        if (singleton_locs.size() < 64) singleton_locs.push_back(x);
  if (!terms.empty())
    for (const auto& comp : terms.front().components())
      if (const auto* al = std::get_if<AtomList>(&comp))
        for (auto& [x, w] : al->atoms)
          if (singleton_locs.size() < 96) singleton_locs.push_back(x);
  std::sort(singleton_locs.begin(), singleton_locs.end());
  singleton_locs.erase(std::unique(singleton_locs.begin(), singleton_locs.end()),
                       singleton_locs.end());
  for (double x : singleton_locs) out.push_back(BorelTestSet::point(x));

  // Skeleton of every atom location seen anywhere.
  std::sort(all_atom_locs.begin(), all_atom_locs.end());
  all_atom_locs.erase(std::unique(all_atom_locs.begin(), all_atom_locs.end()),
                      all_atom_locs.end());
  std::sort(skeleton_ps.begin(), skeleton_ps.end());
  skeleton_ps.erase(std::unique(skeleton_ps.begin(), skeleton_ps.end()), skeleton_ps.end());
  if (!all_atom_locs.empty() || !skeleton_ps.empty())
    out.push_back(BorelTestSet::skeleton(
        SkeletonSet{"all atom locations across the sequence and limit", all_atom_locs,
                    skeleton_ps}));

  // Attractor complements.
  for (const auto* s : systems) out.push_back(BorelTestSet::attractor_complement(*s));

  // Open intervals between consecutive density breakpoints.
  std::sort(breakpoints.begin(), breakpoints.end());
  breakpoints.erase(std::unique(breakpoints.begin(), breakpoints.end()), breakpoints.end());
  if (breakpoints.size() > 2048) {
    std::vector<double> thin;
    std::size_t stride = breakpoints.size() / 2048 + 1;
    for (std::size_t k = 0; k < breakpoints.size(); k += stride) thin.push_back(breakpoints[k]);
    thin.push_back(breakpoints.back());
    breakpoints = std::move(thin);
  }
  for (std::size_t k = 0; k + 1 < breakpoints.size(); ++k)
    if (breakpoints[k + 1] > breakpoints[k])
      out.push_back(
          BorelTestSet::interval(breakpoints[k], breakpoints[k + 1], false, false));

  // The bounding interval (total-mass discriminator).
  out.push_back(BorelTestSet::interval(lo - 1.0, hi + 1.0));

  // Dyadic cells to depth 12, half-open to keep them a partition per depth.
  for (int depth = 0; depth <= 12; ++depth) {
    long long cells = 1LL << depth;
    double w = (hi - lo) / static_cast<double>(cells);
    for (long long j = 0; j < cells; ++j) {
      double a = lo + w * static_cast<double>(j);
      double b = (j + 1 == cells) ? hi : lo + w * static_cast<double>(j + 1);
      out.push_back(BorelTestSet::interval(a, b, true, j + 1 == cells));
    }
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Convergence checkers
// ---------------------------------------------------------------------------

namespace {

int tail_start(int horizon) { return std::max(1, (horizon + 1) / 2); }

std::vector<SymbolicMeasure> evaluate_terms(const MeasureSequence& seq, int horizon) {
  if (horizon < 1) fail(Errc::invalid_argument, "horizon must be at least 1");
  std::vector<SymbolicMeasure> terms;
  terms.reserve(static_cast<std::size_t>(horizon));
  for (int n = 1; n <= horizon; ++n) terms.push_back(seq.generator(n));
  return terms;
}

// Grid points steer clear of limit atoms: around each atom a shrinking
// exclusion zone of radius 2*range/horizon keeps finite-horizon terms whose
// discrepancy is trapped next to an atom from polluting the sup.
bool near_limit_atom(const SymbolicMeasure& limit, double g, double radius) {
  for (const auto& comp : limit.components()) {
    if (const auto* al = std::get_if<AtomList>(&comp)) {
      auto it = std::lower_bound(
          al->atoms.begin(), al->atoms.end(), g - radius,
          [](const std::pair<double, double>& a, double v) { return a.first < v; });
      if (it != al->atoms.end() && it->first <= g + radius) return true;
    } else if (const auto* f = std::get_if<AtomFamily>(&comp)) {
      if (g + radius <= 0) continue;
      double probe = std::max(g - radius, 1e-300);
      double guess = std::pow(probe, -1.0 / f->p);
      long long mid = guess > 9.0e17 ? 900000000000000000LL
                                     : static_cast<long long>(std::llround(guess));
      for (long long i = std::max(1LL, mid - 3); i <= mid + 3; ++i) {
        if (i < f->i_min || (f->i_max >= 0 && i > f->i_max)) continue;
        if (std::abs(f->location(i) - g) <= radius) return true;
      }
    }
  }
  return false;
}

}  // namespace

ConvergenceVerdict weak_converges(const MeasureSequence& seq, int horizon, double tol) {
  ConvergenceVerdict v;
  v.mode = "weak";
  v.horizon = horizon;
  v.tol = tol;
  auto terms = evaluate_terms(seq, horizon);
  SymbolicMeasure limit = normalize(seq.limit);
  for (auto& t : terms) t = normalize(t);
  double lo = limit.support_lo(), hi = limit.support_hi();
  for (const auto& t : terms) {
    lo = std::min(lo, t.support_lo());
    hi = std::max(hi, t.support_hi());
  }
  if (!(hi > lo)) hi = lo + 1;
  const double radius = 2.0 * (hi - lo) / static_cast<double>(horizon);
  std::vector<double> grid;
  for (int j = 0; j < 1024; ++j) {
    double g = lo + (hi - lo) * (static_cast<double>(j) + 0.5) / 1024.0;
    if (near_limit_atom(limit, g, 1e-9 * (hi - lo))) g += 1e-9 * (hi - lo);
    if (!near_limit_atom(limit, g, radius)) grid.push_back(g);
  }
  if (grid.empty()) grid.push_back(hi + 1.0);

  std::vector<double> limit_cdf(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) limit_cdf[k] = cdf(limit, grid[k]);

  std::vector<std::vector<double>> gaps(static_cast<std::size_t>(horizon),
                                        std::vector<double>(grid.size()));
  v.series.resize(static_cast<std::size_t>(horizon));
  for (int n = 1; n <= horizon; ++n) {
    double worst = 0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      double d = std::abs(cdf(terms[static_cast<std::size_t>(n - 1)], grid[k]) - limit_cdf[k]);
      gaps[static_cast<std::size_t>(n - 1)][k] = d;
      worst = std::max(worst, d);
    }
    v.series[static_cast<std::size_t>(n - 1)] = worst;
  }

  const int t0 = tail_start(horizon);
  double best_persistent = 0;
  std::size_t best_k = 0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    double min_gap = std::numeric_limits<double>::infinity();
    for (int n = t0; n <= horizon; ++n)
      min_gap = std::min(min_gap, gaps[static_cast<std::size_t>(n - 1)][k]);
    if (min_gap > best_persistent) {
      best_persistent = min_gap;
      best_k = k;
    }
  }
  if (best_persistent > tol) {
    v.status = VerdictStatus::Refuted;
    v.witness = BorelTestSet::interval(lo - 1.0, grid[best_k]);
    v.witness_gap = best_persistent;
    v.certificate = "persistent CDF gap at a continuity grid point";
    return v;
  }
  // Certification per the finite-horizon criterion: the sup gap has settled
  // below tol at the horizon and the later half of the tail does not exceed
  // the earlier half (decreasing trend, not per-step monotonicity, because
  // grid alignment makes the sup gap mildly non-monotone for atomic terms).
  const int mid = (t0 + horizon) / 2;
  double early_max = 0, late_max = 0;
  for (int n = t0; n <= mid; ++n)
    early_max = std::max(early_max, v.series[static_cast<std::size_t>(n - 1)]);
  for (int n = mid + 1; n <= horizon; ++n)
    late_max = std::max(late_max, v.series[static_cast<std::size_t>(n - 1)]);
  const bool decreasing = mid >= horizon || late_max <= early_max + 1e-12;
  if (v.series[static_cast<std::size_t>(horizon - 1)] <= tol && decreasing) {
    v.status = VerdictStatus::Certified;
    v.certificate = "sup CDF gap on the continuity grid decreasing below tol by the horizon";
  } else {
    v.status = VerdictStatus::Unknown;
    v.certificate = "grid gap neither persistently large nor settled below tol";
  }
  return v;
}

namespace {

// Scheffe-style structural certificate: identical atom supports with l1 weight
// convergence plus L1 density convergence plus matched self-similar parts.
// That total is exactly the l1 mass of the signed split when the split is
// computable and no category is mutually singular across the pair.
bool scheffe_applicable(const SymbolicMeasure& a, const SymbolicMeasure& b) {
  AtomicSide sa = collect_atoms(a), sb = collect_atoms(b);
  if (sa.families.size() != sb.families.size()) return false;
  for (std::size_t i = 0; i < sa.families.size(); ++i) {
    const auto& fa = sa.families[i];
    const auto& fb = sb.families[i];
    if (fa.p != fb.p || fa.q != fb.q || fa.i_min != fb.i_min || fa.i_max != fb.i_max) return false;
  }
  if (sa.atoms.size() != sb.atoms.size()) return false;
  for (std::size_t i = 0; i < sa.atoms.size(); ++i)
    if (sa.atoms[i].first != sb.atoms[i].first) return false;
  std::vector<const SelfSimilar*> xa, xb;
  for (const auto& comp : a.components())
    if (const auto* s = std::get_if<SelfSimilar>(&comp)) xa.push_back(s);
  for (const auto& comp : b.components())
    if (const auto* s = std::get_if<SelfSimilar>(&comp)) xb.push_back(s);
  if (xa.size() != xb.size()) return false;
  for (std::size_t i = 0; i < xa.size(); ++i)
    if (!xa[i]->ifs.same_as(xb[i]->ifs) || xa[i]->weights != xb[i]->weights) return false;
  return true;
}

}  // namespace

ConvergenceVerdict tv_converges(const MeasureSequence& seq, int horizon, double tol) {
  ConvergenceVerdict v;
  v.mode = "tv";
  v.horizon = horizon;
  v.tol = tol;
  auto terms = evaluate_terms(seq, horizon);
  v.series.resize(static_cast<std::size_t>(horizon));
  for (int n = 1; n <= horizon; ++n)
    v.series[static_cast<std::size_t>(n - 1)] =
        tv_distance(terms[static_cast<std::size_t>(n - 1)], seq.limit);
  const int t0 = tail_start(horizon);
  double tail_min = std::numeric_limits<double>::infinity();
  bool monotone = true;
  for (int n = t0; n <= horizon; ++n) {
    tail_min = std::min(tail_min, v.series[static_cast<std::size_t>(n - 1)]);
    if (n > t0 &&
        v.series[static_cast<std::size_t>(n - 1)] >
            v.series[static_cast<std::size_t>(n - 2)] + 1e-12)
      monotone = false;
  }
  if (v.series[static_cast<std::size_t>(horizon - 1)] <= tol && monotone) {
    v.status = VerdictStatus::Certified;
    v.certificate = "TV distances decrease monotonically below tol over the tail window";
    return v;
  }
  if (tail_min > tol) {
    v.status = VerdictStatus::Refuted;
    v.certificate = "TV distance bounded away from zero over the tail window";
    // Locate a persistent witness among the canonical sets.
    auto sets = detail::canonical_test_sets(terms, seq.limit);
    double best = 0;
    std::size_t best_idx = 0;
    for (std::size_t s = 0; s < sets.size(); ++s) {
      double min_gap = std::numeric_limits<double>::infinity();
      bool evaluable = true;
      for (int n = t0; n <= horizon && evaluable; ++n) {
        try {
          double gap = std::abs(mass(terms[static_cast<std::size_t>(n - 1)], sets[s]) -
                                mass(seq.limit, sets[s]));
          min_gap = std::min(min_gap, gap);
        } catch (const Error&) {
          evaluable = false;
        }
      }
      if (evaluable && min_gap > best) {
        best = min_gap;
        best_idx = s;
      }
    }
    if (best > tol) {
      v.witness = sets[best_idx];
      v.witness_gap = best;
    }
    return v;
  }
  v.status = VerdictStatus::Unknown;
  v.certificate = "TV tail neither below tol at the horizon nor bounded away from zero";
  return v;
}

ConvergenceVerdict setwise_converges(const MeasureSequence& seq, int horizon, double tol) {
  ConvergenceVerdict v;
  v.mode = "setwise";
  v.horizon = horizon;
  v.tol = tol;
  auto terms = evaluate_terms(seq, horizon);
  auto sets = detail::canonical_test_sets(terms, seq.limit);
  const int t0 = tail_start(horizon);

  double best = 0;
  std::size_t best_idx = 0;
  std::vector<double> best_series;
  for (std::size_t s = 0; s < sets.size(); ++s) {
    double limit_mass;
    try {
      limit_mass = mass(seq.limit, sets[s]);
    } catch (const Error&) {
      continue;
    }
    double min_gap = std::numeric_limits<double>::infinity();
    std::vector<double> gaps(static_cast<std::size_t>(horizon), 0.0);
    bool evaluable = true;
    for (int n = 1; n <= horizon && evaluable; ++n) {
      try {
        gaps[static_cast<std::size_t>(n - 1)] =
            std::abs(mass(terms[static_cast<std::size_t>(n - 1)], sets[s]) - limit_mass);
      } catch (const Error&) {
        evaluable = false;
      }
      if (n >= t0) min_gap = std::min(min_gap, gaps[static_cast<std::size_t>(n - 1)]);
    }
    if (evaluable && min_gap > best) {
      best = min_gap;
      best_idx = s;
      best_series = std::move(gaps);
    }
  }
  if (best > tol) {
    v.status = VerdictStatus::Refuted;
    v.witness = sets[best_idx];
    v.witness_gap = best;
    v.series = std::move(best_series);
    v.certificate = "persistent mass gap on a canonical test set: " + sets[best_idx].describe();
    return v;
  }

  // Certification needs an analytic certificate; a searched family can only
  // refute. Try the structural Scheffe route first, then TV dominance.
  bool structural = true;
  for (const auto& t : terms) structural = structural && scheffe_applicable(t, seq.limit);
  if (structural) {
    std::vector<double> l1(static_cast<std::size_t>(horizon));
    for (int n = 1; n <= horizon; ++n)
      l1[static_cast<std::size_t>(n - 1)] =
          signed_split(terms[static_cast<std::size_t>(n - 1)], seq.limit).l1();
    bool tail_small = true;
    for (int n = t0; n <= horizon; ++n)
      tail_small = tail_small && l1[static_cast<std::size_t>(n - 1)] <= tol;
    if (tail_small) {
      v.status = VerdictStatus::Certified;
      v.certificate = "L1 density convergence with fixed atom support (Scheffe certificate)";
      v.series = std::move(l1);
      return v;
    }
  }
  ConvergenceVerdict tv = tv_converges(seq, horizon, tol);
  if (tv.status == VerdictStatus::Certified) {
    v.status = VerdictStatus::Certified;
    v.certificate = "TV convergence certificate: distances decrease below tol";
    v.series = std::move(tv.series);
    return v;
  }
  v.status = VerdictStatus::Unknown;
  v.certificate = "no persistent witness found and no analytic certificate applies";
  return v;
}

}  // namespace dimlab
