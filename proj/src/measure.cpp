#include "dimlab/measure.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <thread>

namespace dimlab {

int thread_cap() {
  const char* env = std::getenv("DIMLAB_THREADS");
  long v = 0;
  if (env && *env) {
    char* end = nullptr;
    v = std::strtol(env, &end, 10);
    if (end == env || v < 0) fail(Errc::invalid_argument, "DIMLAB_THREADS must be a non-negative integer");
  }
  if (v == 0) {
    unsigned hw = std::thread::hardware_concurrency();
    v = hw ? static_cast<long>(hw) : 1;
  }
  return static_cast<int>(v);
}

// ---------------------------------------------------------------------------
// Power sums
// ---------------------------------------------------------------------------

namespace series {

namespace {

// sum_{i>=n} i^(-q) by Euler-Maclaurin, n >= 256, q > 1.
double em_tail(double n, double q) {
  const double integral = std::pow(n, 1.0 - q) / (q - 1.0);
  const double t0 = std::pow(n, -q);
  const double t1 = q * std::pow(n, -q - 1.0) / 12.0;
  const double t3 = q * (q + 1.0) * (q + 2.0) * std::pow(n, -q - 3.0) / 720.0;
  const double t5 =
      q * (q + 1.0) * (q + 2.0) * (q + 3.0) * (q + 4.0) * std::pow(n, -q - 5.0) / 30240.0;
  return integral + 0.5 * t0 + t1 - t3 + t5;
}

// sum_{i>=n} i^(-q) for any n >= 1.
double tail_from(long long n, double q) {
  if (q <= 1.0) fail(Errc::invalid_argument, "infinite power sum needs q > 1");
  if (n < 1) n = 1;
  if (n >= 256) return em_tail(static_cast<double>(n), q);
  double head = 0;
  for (long long i = 255; i >= n; --i) head += std::pow(static_cast<double>(i), -q);
  return head + em_tail(256.0, q);
}

}  // namespace

double power_sum(long long lo, long long hi, double q) {
  if (lo < 1) lo = 1;
  if (hi >= 0 && hi < lo) return 0.0;
  if (hi < 0) return tail_from(lo, q);
  if (hi - lo <= 4096) {
    double s = 0;
    for (long long i = hi; i >= lo; --i) s += std::pow(static_cast<double>(i), -q);
    return s;
  }
  return tail_from(lo, q) - tail_from(hi + 1, q);
}

double zeta(double q) { return tail_from(1, q); }

}  // namespace series

// ---------------------------------------------------------------------------
// AtomFamily helpers
// ---------------------------------------------------------------------------

double AtomFamily::location(long long i) const {
  if (p == 1.0) return 1.0 / static_cast<double>(i);
  return std::pow(static_cast<double>(i), -p);
}

double AtomFamily::weight(long long i) const {
  return c * std::pow(static_cast<double>(i), -q);
}

namespace detail {

// Smallest i >= 1 with location(i) <= b. kInf if no such index exists is
// impossible (locations tend to 0), but b <= 0 has none: signalled as kInf.
long long family_first_index_leq(const AtomFamily& f, double b) {
  if (b <= 0) return kInf;
  if (f.location(1) <= b) return 1;
  double guess = std::pow(b, -1.0 / f.p);
  long long i = guess > 9.0e17 ? 900000000000000000LL : static_cast<long long>(guess);
  i = std::max(1LL, i - 2);
  while (f.location(i) > b) ++i;
  while (i > 1 && f.location(i - 1) <= b) --i;
  return i;
}

// Largest i with location(i) >= a; 0 if none; kInf if all (a <= 0).
long long family_last_index_geq(const AtomFamily& f, double a) {
  if (a <= 0) return kInf;
  if (f.location(1) < a) return 0;
  double guess = std::pow(a, -1.0 / f.p);
  if (guess > 9.0e17) return 900000000000000000LL;
  long long i = std::max(1LL, static_cast<long long>(guess) + 2);
  while (i >= 1 && f.location(i) < a) --i;
  while (f.location(i + 1) >= a) ++i;
  return i;
}

std::optional<long long> family_index_at(const AtomFamily& f, double x) {
  if (x <= 0 || x > f.location(f.i_min)) return std::nullopt;
  double guess = std::pow(x, -1.0 / f.p);
  if (guess > 9.0e17) return std::nullopt;
  long long mid = static_cast<long long>(std::llround(guess));
  for (long long i = std::max(1LL, mid - 2); i <= mid + 2; ++i) {
    if (f.location(i) == x) {
      if (i < f.i_min || (f.i_max >= 0 && i > f.i_max)) return std::nullopt;
      return i;
    }
  }
  return std::nullopt;
}

double family_range_mass(const AtomFamily& f, long long lo, long long hi) {
  lo = std::max(lo, f.i_min);
  if (f.i_max >= 0) hi = hi < 0 ? f.i_max : std::min(hi, f.i_max);
  if (hi >= 0 && hi < lo) return 0.0;
  return f.c * series::power_sum(lo, hi, f.q);
}

// Index range of family atoms inside an interval, honoring open endpoints.
// Returns {lo, hi} with hi = kInf for an unbounded range, {1, 0} when empty.
std::pair<long long, long long> family_range_in_interval(const AtomFamily& f, const Interval& iv) {
  long long lo_idx = family_first_index_leq(f, iv.hi);
  if (lo_idx == kInf) return {1, 0};
  if (!iv.closed_hi && f.location(lo_idx) == iv.hi) ++lo_idx;
  long long hi_idx = family_last_index_geq(f, iv.lo);
  if (hi_idx == 0) return {1, 0};
  if (hi_idx != kInf && !iv.closed_lo && f.location(hi_idx) == iv.lo) --hi_idx;
  lo_idx = std::max(lo_idx, f.i_min);
  if (f.i_max >= 0) hi_idx = hi_idx == kInf ? f.i_max : std::min(hi_idx, f.i_max);
  if (hi_idx != kInf && hi_idx < lo_idx) return {1, 0};
  return {lo_idx, hi_idx};
}

double similarity_dimension(const std::vector<double>& ratios) {
  auto g = [&](double h) {
    double s = 0;
    for (double r : ratios) s += std::pow(r, h);
    return s - 1.0;
  };
  double lo = 0.0, hi = 1.0;
  if (g(lo) <= 0) return 0.0;
  if (g(hi) > 0) return 1.0;  // sum of ratios >= 1; not reachable for valid IFS
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    (g(mid) > 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

long long grid_index(double x, double r) {
  long long k = static_cast<long long>(std::floor(x / r));
  while ((static_cast<double>(k) + 1.0) * r <= x) ++k;
  while (static_cast<double>(k) * r > x) --k;
  return k;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Ifs
// ---------------------------------------------------------------------------

Ifs::Ifs(std::vector<double> ratios, std::vector<double> offsets)
    : ratios_(std::move(ratios)), offsets_(std::move(offsets)) {
  if (ratios_.empty() || ratios_.size() != offsets_.size())
    fail(Errc::invalid_ratios, "ratio and offset lists must be non-empty and equal length");
  for (double r : ratios_)
    if (!(r > 0.0 && r < 1.0)) fail(Errc::invalid_ratios, "contraction ratios must lie in (0,1)");
  for (std::size_t i = 0; i < ratios_.size(); ++i) {
    double lo = offsets_[i], hi = ratios_[i] + offsets_[i];
    if (!(lo >= 0.0 && hi <= 1.0))
      fail(Errc::invalid_ratios, "each map must send [0,1] into [0,1]");
  }
  // Strong separation: closed images pairwise disjoint.
  std::vector<std::pair<double, double>> imgs;
  for (std::size_t i = 0; i < ratios_.size(); ++i)
    imgs.emplace_back(offsets_[i], ratios_[i] + offsets_[i]);
  std::sort(imgs.begin(), imgs.end());
  for (std::size_t i = 0; i + 1 < imgs.size(); ++i)
    if (!(imgs[i].second < imgs[i + 1].first))
      fail(Errc::invalid_ratios, "map images must be pairwise disjoint");
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 400; ++it) {
    double nlo = std::numeric_limits<double>::infinity();
    double nhi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ratios_.size(); ++i) {
      nlo = std::min(nlo, map(static_cast<int>(i), lo));
      nhi = std::max(nhi, map(static_cast<int>(i), hi));
    }
    lo = nlo;
    hi = nhi;
  }
  hull_lo_ = lo;
  hull_hi_ = hi;
  sim_dim_ = detail::similarity_dimension(ratios_);
}

bool Ifs::same_as(const Ifs& other) const {
  return ratios_ == other.ratios_ && offsets_ == other.offsets_;
}

// ---------------------------------------------------------------------------
// BorelTestSet
// ---------------------------------------------------------------------------

BorelTestSet BorelTestSet::empty() { return BorelTestSet{}; }

BorelTestSet BorelTestSet::interval(double lo, double hi, bool closed_lo, bool closed_hi) {
  BorelTestSet s;
  s.intervals_.push_back({lo, hi, closed_lo, closed_hi});
  s.canonicalize();
  return s;
}

BorelTestSet BorelTestSet::point(double x) {
  BorelTestSet s;
  s.points_.push_back(x);
  s.canonicalize();
  return s;
}

BorelTestSet BorelTestSet::of_intervals(std::vector<Interval> iv) {
  BorelTestSet s;
  s.intervals_ = std::move(iv);
  s.canonicalize();
  return s;
}

BorelTestSet BorelTestSet::of_points(std::vector<double> pts) {
  BorelTestSet s;
  s.points_ = std::move(pts);
  s.canonicalize();
  return s;
}

BorelTestSet BorelTestSet::skeleton(SkeletonSet sk) {
  BorelTestSet s;
  std::sort(sk.points.begin(), sk.points.end());
  sk.points.erase(std::unique(sk.points.begin(), sk.points.end()), sk.points.end());
  s.skeleton_ = std::move(sk);
  return s;
}

BorelTestSet BorelTestSet::attractor_complement(Ifs ifs) {
  BorelTestSet s;
  s.co_attractor_ = std::move(ifs);
  return s;
}

BorelTestSet BorelTestSet::unite(const BorelTestSet& other) const {
  if (co_attractor_ || other.co_attractor_)
    fail(Errc::unsupported_set, "attractor complements cannot be combined with other sets");
  BorelTestSet s;
  s.intervals_ = intervals_;
  s.intervals_.insert(s.intervals_.end(), other.intervals_.begin(), other.intervals_.end());
  s.points_ = points_;
  s.points_.insert(s.points_.end(), other.points_.begin(), other.points_.end());
  if (skeleton_ && other.skeleton_) {
    SkeletonSet merged = *skeleton_;
    merged.description += " + " + other.skeleton_->description;
    merged.points.insert(merged.points.end(), other.skeleton_->points.begin(),
                         other.skeleton_->points.end());
    merged.power_ps.insert(merged.power_ps.end(), other.skeleton_->power_ps.begin(),
                           other.skeleton_->power_ps.end());
    std::sort(merged.points.begin(), merged.points.end());
    merged.points.erase(std::unique(merged.points.begin(), merged.points.end()),
                        merged.points.end());
    s.skeleton_ = std::move(merged);
  } else if (skeleton_) {
    s.skeleton_ = skeleton_;
  } else if (other.skeleton_) {
    s.skeleton_ = other.skeleton_;
  }
  s.canonicalize();
  return s;
}

void BorelTestSet::canonicalize() {
  for (auto& iv : intervals_) {
    if (!(iv.lo <= iv.hi)) fail(Errc::invalid_argument, "interval endpoints out of order");
    if (iv.lo == iv.hi) {
      if (iv.closed_lo && iv.closed_hi) points_.push_back(iv.lo);
      iv.lo = 1.0;
      iv.hi = 0.0;  // mark degenerate for removal
    }
  }
  std::erase_if(intervals_, [](const Interval& iv) { return iv.lo > iv.hi; });
  std::sort(intervals_.begin(), intervals_.end(), [](const Interval& a, const Interval& b) {
    if (a.lo != b.lo) return a.lo < b.lo;
    return a.closed_lo && !b.closed_lo;
  });
  std::vector<Interval> merged;
  for (const auto& iv : intervals_) {
    if (!merged.empty()) {
      Interval& m = merged.back();
      bool touches = iv.lo < m.hi || (iv.lo == m.hi && (m.closed_hi || iv.closed_lo));
      if (touches) {
        if (iv.lo == m.lo) m.closed_lo = m.closed_lo || iv.closed_lo;
        if (iv.hi > m.hi) {
          m.hi = iv.hi;
          m.closed_hi = iv.closed_hi;
        } else if (iv.hi == m.hi) {
          m.closed_hi = m.closed_hi || iv.closed_hi;
        }
        continue;
      }
    }
    merged.push_back(iv);
  }
  intervals_ = std::move(merged);
  std::sort(points_.begin(), points_.end());
  points_.erase(std::unique(points_.begin(), points_.end()), points_.end());
  std::vector<double> kept;
  for (double x : points_) {
    bool absorbed = false;
    for (auto& iv : intervals_) {
      bool inside = (x > iv.lo || (x == iv.lo && iv.closed_lo)) &&
                    (x < iv.hi || (x == iv.hi && iv.closed_hi));
      if (inside) {
        absorbed = true;
        break;
      }
      if (x == iv.lo && !iv.closed_lo) {
        iv.closed_lo = true;
        absorbed = true;
        break;
      }
      if (x == iv.hi && !iv.closed_hi) {
        iv.closed_hi = true;
        absorbed = true;
        break;
      }
    }
    if (!absorbed) kept.push_back(x);
  }
  points_ = std::move(kept);
}

namespace {

bool interval_contains(const Interval& iv, double x) {
  return (x > iv.lo || (x == iv.lo && iv.closed_lo)) && (x < iv.hi || (x == iv.hi && iv.closed_hi));
}

bool skeleton_contains(const SkeletonSet& sk, double x) {
  if (std::binary_search(sk.points.begin(), sk.points.end(), x)) return true;
  for (double p : sk.power_ps) {
    if (x <= 0) continue;
    double guess = std::pow(x, -1.0 / p);
    if (guess > 9.0e17) continue;
    long long mid = static_cast<long long>(std::llround(guess));
    for (long long i = std::max(1LL, mid - 2); i <= mid + 2; ++i) {
      double loc = (p == 1.0) ? 1.0 / static_cast<double>(i)
                              : std::pow(static_cast<double>(i), -p);
      if (loc == x) return true;
    }
  }
  return false;
}

// True when x provably stays inside every refinement level up to the depth cap.
bool point_in_attractor(const Ifs& ifs, double x) {
  const double hlo = ifs.hull_lo(), hhi = ifs.hull_hi();
  if (x < hlo || x > hhi) return false;
  // Cylinders are tracked as composed maps S(t) = c*t + d over the hull;
  // children of the word w are S_w(s_b(hull)), not s_b(S_w(hull)).
  double c = 1, d = 0;
  for (int depth = 0; depth < 90; ++depth) {
    bool found = false;
    for (int b = 0; b < ifs.branches(); ++b) {
      double cc = c * ifs.ratios()[b];
      double cd = c * ifs.offsets()[b] + d;
      if (x >= cc * hlo + cd && x <= cc * hhi + cd) {
        c = cc;
        d = cd;
        found = true;
        break;
      }
    }
    if (!found) return false;
    if (c * (hhi - hlo) < 1e-300) return true;
  }
  return true;
}

}  // namespace

bool BorelTestSet::contains_point(double x) const {
  for (const auto& iv : intervals_)
    if (interval_contains(iv, x)) return true;
  if (std::binary_search(points_.begin(), points_.end(), x)) return true;
  if (skeleton_ && skeleton_contains(*skeleton_, x)) return true;
  if (co_attractor_) {
    if (x >= co_attractor_->hull_lo() && x <= co_attractor_->hull_hi() &&
        !point_in_attractor(*co_attractor_, x))
      return true;
  }
  return false;
}

std::string BorelTestSet::describe() const {
  std::string out;
  if (co_attractor_) return "hull minus attractor (union of all construction gaps)";
  if (!intervals_.empty()) out += std::to_string(intervals_.size()) + " interval(s)";
  if (!points_.empty()) {
    if (!out.empty()) out += ", ";
    out += std::to_string(points_.size()) + " point(s)";
  }
  if (skeleton_) {
    if (!out.empty()) out += ", ";
    out += "skeleton: " + skeleton_->description;
  }
  return out.empty() ? "empty set" : out;
}

// ---------------------------------------------------------------------------
// SymbolicMeasure construction
// ---------------------------------------------------------------------------

namespace {

bool finite_num(double x) { return std::isfinite(x); }

double component_mass(const MeasureComponent& comp) {
  return std::visit(
      [](const auto& c) -> double {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, AtomList>) {
          double s = 0;
          for (auto& [x, w] : c.atoms) {
            (void)x;
            s += w;
          }
          return s;
        } else if constexpr (std::is_same_v<T, AtomFamily>) {
          return detail::family_range_mass(c, c.i_min, c.i_max);
        } else if constexpr (std::is_same_v<T, PiecewiseDensity>) {
          double s = 0;
          for (auto& p : c.pieces) s += p.height * (p.hi - p.lo);
          return s;
        } else {
          return c.mass;
        }
      },
      comp);
}

std::pair<double, double> component_hull(const MeasureComponent& comp) {
  return std::visit(
      [](const auto& c) -> std::pair<double, double> {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, AtomList>) {
          return {c.atoms.front().first, c.atoms.back().first};
        } else if constexpr (std::is_same_v<T, AtomFamily>) {
          double hi = c.location(c.i_min);
          double lo = c.i_max >= 0 ? c.location(c.i_max) : 0.0;
          return {lo, hi};
        } else if constexpr (std::is_same_v<T, PiecewiseDensity>) {
          return {c.pieces.front().lo, c.pieces.back().hi};
        } else {
          return {c.ifs.hull_lo(), c.ifs.hull_hi()};
        }
      },
      comp);
}

void validate_component(const MeasureComponent& comp) {
  std::visit(
      [](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, AtomList>) {
          double prev = -std::numeric_limits<double>::infinity();
          for (auto& [x, w] : c.atoms) {
            if (!finite_num(x) || !finite_num(w) || w <= 0)
              fail(Errc::invalid_argument, "atom weights must be positive and finite");
            if (x <= prev) fail(Errc::invalid_argument, "atom locations must strictly increase");
            prev = x;
          }
        } else if constexpr (std::is_same_v<T, AtomFamily>) {
          if (!(c.p > 0)) fail(Errc::invalid_argument, "atom family needs p > 0");
          if (!(c.q > 1)) fail(Errc::invalid_argument, "atom family needs q > 1");
          if (!(c.c > 0)) fail(Errc::invalid_argument, "atom family needs c > 0");
          if (c.i_min < 1 || (c.i_max >= 0 && c.i_max < c.i_min))
            fail(Errc::invalid_argument, "atom family index range is empty or invalid");
        } else if constexpr (std::is_same_v<T, PiecewiseDensity>) {
          double prev = -std::numeric_limits<double>::infinity();
          for (auto& p : c.pieces) {
            if (!finite_num(p.lo) || !finite_num(p.hi) || !finite_num(p.height))
              fail(Errc::invalid_argument, "density pieces must be finite");
            if (!(p.lo < p.hi)) fail(Errc::invalid_argument, "density piece needs lo < hi");
            if (!(p.height > 0)) fail(Errc::invalid_argument, "density heights must be positive");
            if (p.lo < prev) fail(Errc::invalid_argument, "density pieces must have disjoint interiors");
            prev = p.hi;
          }
        } else {
          if (c.weights.size() != static_cast<std::size_t>(c.ifs.branches()))
            fail(Errc::invalid_argument, "one weight per IFS branch required");
          double s = 0;
          for (double w : c.weights) {
            if (!(w > 0)) fail(Errc::invalid_argument, "branch weights must be positive");
            s += w;
          }
          if (std::abs(s - 1.0) > 1e-12)
            fail(Errc::invalid_argument, "branch weights must sum to 1");
          if (!(c.mass > 0)) fail(Errc::invalid_argument, "self-similar mass must be positive");
        }
      },
      comp);
}

bool component_empty(const MeasureComponent& comp) {
  return std::visit(
      [](const auto& c) -> bool {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, AtomList>)
          return c.atoms.empty();
        else if constexpr (std::is_same_v<T, PiecewiseDensity>)
          return c.pieces.empty();
        else
          return false;
      },
      comp);
}

}  // namespace

SymbolicMeasure::SymbolicMeasure(std::vector<MeasureComponent> components) {
  for (auto& c : components) {
    if (component_empty(c)) continue;
    validate_component(c);
    components_.push_back(std::move(c));
  }
  total_mass_ = 0;
  support_lo_ = std::numeric_limits<double>::infinity();
  support_hi_ = -std::numeric_limits<double>::infinity();
  for (const auto& c : components_) {
    total_mass_ += component_mass(c);
    auto [lo, hi] = component_hull(c);
    support_lo_ = std::min(support_lo_, lo);
    support_hi_ = std::max(support_hi_, hi);
  }
  if (components_.empty()) {
    support_lo_ = support_hi_ = 0;
  }
}

SymbolicMeasure SymbolicMeasure::dirac(double x, double w) {
  return atoms({{x, w}});
}

SymbolicMeasure SymbolicMeasure::atoms(std::vector<std::pair<double, double>> a) {
  std::sort(a.begin(), a.end());
  return SymbolicMeasure({AtomList{std::move(a)}});
}

SymbolicMeasure SymbolicMeasure::atom_family(double p, double q, double c, long long i_min,
                                             long long i_max) {
  return SymbolicMeasure({AtomFamily{p, q, c, i_min, i_max}});
}

SymbolicMeasure SymbolicMeasure::uniform(double lo, double hi, double total) {
  if (!(hi > lo) || !(total > 0)) fail(Errc::invalid_argument, "uniform needs hi > lo, total > 0");
  return SymbolicMeasure({PiecewiseDensity{{{lo, hi, total / (hi - lo)}}}});
}

SymbolicMeasure SymbolicMeasure::piecewise(std::vector<DensityPiece> pieces) {
  std::sort(pieces.begin(), pieces.end(),
            [](const DensityPiece& a, const DensityPiece& b) { return a.lo < b.lo; });
  return SymbolicMeasure({PiecewiseDensity{std::move(pieces)}});
}

SymbolicMeasure SymbolicMeasure::self_similar(Ifs ifs, std::vector<double> weights, double mass) {
  return SymbolicMeasure({SelfSimilar{std::move(ifs), std::move(weights), mass}});
}

SymbolicMeasure SymbolicMeasure::natural_self_similar(Ifs ifs, double mass) {
  double h = ifs.similarity_dimension();
  std::vector<double> w;
  double s = 0;
  for (double r : ifs.ratios()) {
    w.push_back(std::pow(r, h));
    s += w.back();
  }
  for (double& x : w) x /= s;  // exact normalization against root tolerance
  return SymbolicMeasure({SelfSimilar{std::move(ifs), std::move(w), mass}});
}

// ---------------------------------------------------------------------------
// Self-similar refinement queries
// ---------------------------------------------------------------------------

namespace {

// mu((-inf, x]) for a self-similar part; certified error <= 5e-13.
double ss_cdf(const SelfSimilar& ss, double x) {
  const double hlo = ss.ifs.hull_lo(), hhi = ss.ifs.hull_hi();
  if (x >= hhi) return ss.mass;
  if (x < hlo) return 0;
  double acc = 0;
  // Current cylinder as a composed map S(t) = c*t + d over the hull. Strong
  // separation means at most one child image contains x; a child whose image
  // ends at or before x is fully counted (its boundary carries no mass), and
  // one starting at or after x contributes nothing.
  double c = 1, d = 0, m = ss.mass;
  for (int depth = 0; depth < 4000; ++depth) {
    if (m < 1e-13) return acc + 0.5 * m;
    bool descended = false;
    double nc = 0, nd = 0, nm = 0;
    for (int b = 0; b < ss.ifs.branches(); ++b) {
      double cc = c * ss.ifs.ratios()[b];
      double cd = c * ss.ifs.offsets()[b] + d;
      double clo = cc * hlo + cd;
      double chi = cc * hhi + cd;
      double cm = m * ss.weights[b];
      if (chi <= x) {
        acc += cm;
      } else if (clo >= x) {
        // nothing
      } else if (!descended) {
        nc = cc;
        nd = cd;
        nm = cm;
        descended = true;
      }
    }
    if (!descended) return acc;
    c = nc;
    d = nd;
    m = nm;
    if (c * (hhi - hlo) < 1e-300) return acc + 0.5 * m;
  }
  return acc + 0.5 * m;
}

// mass of [a, b] under a self-similar part (boundary points carry no mass).
double ss_interval_mass(const SelfSimilar& ss, double a, double b) {
  if (b < a) return 0;
  return std::max(0.0, ss_cdf(ss, b) - ss_cdf(ss, a));
}

}  // namespace

// ---------------------------------------------------------------------------
// mass / cdf / ball_mass
// ---------------------------------------------------------------------------

namespace {

double co_attractor_mass(const SymbolicMeasure& mu, const Ifs& ifs) {
  double total = 0;
  const double hlo = ifs.hull_lo(), hhi = ifs.hull_hi();
  for (const auto& comp : mu.components()) {
    std::visit(
        [&](const auto& c) {
          using T = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<T, AtomList>) {
            for (auto& [x, w] : c.atoms)
              if (x >= hlo && x <= hhi && !point_in_attractor(ifs, x)) total += w;
          } else if constexpr (std::is_same_v<T, AtomFamily>) {
            auto [lo, hi] = detail::family_range_in_interval(c, {hlo, hhi, true, true});
            if (hi == detail::kInf)
              fail(Errc::unsupported_set,
                   "attractor complement cannot be resolved against an infinite atom family");
            for (long long i = lo; i <= hi; ++i)
              if (!point_in_attractor(ifs, c.location(i))) total += c.weight(i);
          } else if constexpr (std::is_same_v<T, PiecewiseDensity>) {
            for (auto& p : c.pieces) {
              double lo = std::max(p.lo, hlo), hi = std::min(p.hi, hhi);
              if (hi > lo) total += p.height * (hi - lo);  // attractor has zero length
            }
          } else {
            if (c.ifs.same_as(ifs)) return;  // supported inside the attractor
            fail(Errc::unsupported_set,
                 "attractor complement against a different IFS is not resolvable");
          }
        },
        comp);
  }
  return total;
}

double atom_list_set_mass(const AtomList& al, const BorelTestSet& a) {
  double total = 0;
  auto loc_less = [](const std::pair<double, double>& at, double v) { return at.first < v; };
  std::vector<char> taken(al.atoms.size(), 0);
  for (const auto& iv : a.intervals()) {
    auto it = std::lower_bound(al.atoms.begin(), al.atoms.end(), iv.lo, loc_less);
    for (; it != al.atoms.end() && it->first <= iv.hi; ++it) {
      if (interval_contains(iv, it->first)) {
        total += it->second;
        taken[static_cast<std::size_t>(it - al.atoms.begin())] = 1;
      }
    }
  }
  auto add_pointlike = [&](double x) {
    auto it = std::lower_bound(al.atoms.begin(), al.atoms.end(), x, loc_less);
    if (it != al.atoms.end() && it->first == x) {
      std::size_t k = static_cast<std::size_t>(it - al.atoms.begin());
      if (!taken[k]) {
        total += it->second;
        taken[k] = 1;
      }
    }
  };
  for (double x : a.points()) add_pointlike(x);
  if (a.skeleton_tag()) {
    for (std::size_t k = 0; k < al.atoms.size(); ++k)
      if (!taken[k] && skeleton_contains(*a.skeleton_tag(), al.atoms[k].first)) {
        total += al.atoms[k].second;
        taken[k] = 1;
      }
  }
  return total;
}

double family_set_mass(const AtomFamily& f, const BorelTestSet& a) {
  if (a.skeleton_tag()) {
    const auto& sk = *a.skeleton_tag();
    for (double p : sk.power_ps)
      if (p == f.p) return detail::family_range_mass(f, f.i_min, f.i_max);
  }
  double total = 0;
  std::vector<long long> counted;  // indices already included via intervals
  for (const auto& iv : a.intervals()) {
    auto [lo, hi] = detail::family_range_in_interval(f, iv);
    if (hi != detail::kInf && hi < lo) continue;
    total += f.c * series::power_sum(lo, hi, f.q);
    if (hi != detail::kInf && hi - lo < 1024)
      for (long long i = lo; i <= hi; ++i) counted.push_back(i);
    else
      counted.push_back(detail::kInf);  // marker: large range, rely on canonical disjointness
  }
  auto add_point = [&](double x) {
    auto idx = detail::family_index_at(f, x);
    if (!idx) return;
    for (const auto& iv : a.intervals())
      if (interval_contains(iv, x)) return;  // already counted through the interval range
    total += f.weight(*idx);
  };
  for (double x : a.points()) add_point(x);
  if (a.skeleton_tag()) {
    const auto& sk = *a.skeleton_tag();
    if (!sk.power_ps.empty() && f.infinite())
      fail(Errc::unsupported_set,
           "skeleton power grid with mismatched exponent against an infinite atom family");
    for (double x : sk.points) {
      if (std::binary_search(a.points().begin(), a.points().end(), x)) continue;
      add_point(x);
    }
    if (!sk.power_ps.empty()) {
      // finite family: test each atom against the grids
      for (long long i = f.i_min; i <= f.i_max; ++i) {
        double x = f.location(i);
        bool already = std::binary_search(sk.points.begin(), sk.points.end(), x) ||
                       std::binary_search(a.points().begin(), a.points().end(), x);
        if (already) continue;
        bool in_iv = false;
        for (const auto& iv : a.intervals())
          if (interval_contains(iv, x)) {
            in_iv = true;
            break;
          }
        if (in_iv) continue;
        if (skeleton_contains(*a.skeleton_tag(), x)) total += f.weight(i);
      }
    }
  }
  return total;
}

double piecewise_set_mass(const PiecewiseDensity& d, const BorelTestSet& a) {
  double total = 0;
  auto hi_less = [](const DensityPiece& p, double v) { return p.hi <= v; };
  for (const auto& iv : a.intervals()) {
    auto it = std::lower_bound(d.pieces.begin(), d.pieces.end(), iv.lo, hi_less);
    for (; it != d.pieces.end() && it->lo < iv.hi; ++it) {
      double lo = std::max(it->lo, iv.lo), hi = std::min(it->hi, iv.hi);
      if (hi > lo) total += it->height * (hi - lo);
    }
  }
  return total;
}

}  // namespace

double mass(const SymbolicMeasure& mu, const BorelTestSet& a) {
  if (a.co_attractor()) {
    if (!a.intervals().empty() || !a.points().empty() || a.skeleton_tag())
      fail(Errc::unsupported_set, "attractor complement must be queried on its own");
    return co_attractor_mass(mu, *a.co_attractor());
  }
  double total = 0;
  for (const auto& comp : mu.components()) {
    std::visit(
        [&](const auto& c) {
          using T = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<T, AtomList>)
            total += atom_list_set_mass(c, a);
          else if constexpr (std::is_same_v<T, AtomFamily>)
            total += family_set_mass(c, a);
          else if constexpr (std::is_same_v<T, PiecewiseDensity>)
            total += piecewise_set_mass(c, a);
          else {
            for (const auto& iv : a.intervals()) total += ss_interval_mass(c, iv.lo, iv.hi);
          }
        },
        comp);
  }
  return total;
}

double cdf(const SymbolicMeasure& mu, double x) {
  double total = 0;
  for (const auto& comp : mu.components()) {
    std::visit(
        [&](const auto& c) {
          using T = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<T, AtomList>) {
            for (auto& [loc, w] : c.atoms) {
              if (loc > x) break;
              total += w;
            }
          } else if constexpr (std::is_same_v<T, AtomFamily>) {
            long long lo = detail::family_first_index_leq(c, x);
            if (lo != detail::kInf) total += detail::family_range_mass(c, lo, detail::kInf);
          } else if constexpr (std::is_same_v<T, PiecewiseDensity>) {
            for (auto& p : c.pieces) {
              if (p.lo >= x) break;
              total += p.height * (std::min(p.hi, x) - p.lo);
            }
          } else {
            total += ss_cdf(c, x);
          }
        },
        comp);
  }
  return total;
}

double ball_mass(const SymbolicMeasure& mu, double x, double r) {
  if (!(r >= 0)) fail(Errc::invalid_argument, "ball radius must be non-negative");
  return mass(mu, BorelTestSet::interval(x - r, x + r));
}

// ---------------------------------------------------------------------------
// sample
// ---------------------------------------------------------------------------

std::vector<double> sample(const SymbolicMeasure& mu, std::size_t n, std::uint64_t seed) {
  if (std::abs(mu.total_mass() - 1.0) > 1e-12)
    fail(Errc::not_probability, "sampling requires a probability measure");
  struct CompSampler {
    const MeasureComponent* comp;
    double mass;
    std::vector<double> cum;  // per-atom or per-piece cumulative, when applicable
  };
  std::vector<CompSampler> samplers;
  std::vector<double> comp_cum;
  double acc = 0;
  for (const auto& comp : mu.components()) {
    CompSampler cs{&comp, component_mass(comp), {}};
    std::visit(
        [&](const auto& c) {
          using T = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<T, AtomList>) {
            double s = 0;
            for (auto& [x, w] : c.atoms) {
              (void)x;
              s += w;
              cs.cum.push_back(s);
            }
          } else if constexpr (std::is_same_v<T, PiecewiseDensity>) {
            double s = 0;
            for (auto& p : c.pieces) {
              s += p.height * (p.hi - p.lo);
              cs.cum.push_back(s);
            }
          }
        },
        comp);
    acc += cs.mass;
    samplers.push_back(std::move(cs));
    comp_cum.push_back(acc);
  }
  Rng rng(seed);
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    double u = rng.uniform() * mu.total_mass();
    std::size_t ci = std::lower_bound(comp_cum.begin(), comp_cum.end(), u) - comp_cum.begin();
    if (ci >= samplers.size()) ci = samplers.size() - 1;
    const CompSampler& cs = samplers[ci];
    double local = u - (ci == 0 ? 0.0 : comp_cum[ci - 1]);
    double x = std::visit(
        [&](const auto& c) -> double {
          using T = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<T, AtomList>) {
            std::size_t i =
                std::lower_bound(cs.cum.begin(), cs.cum.end(), local) - cs.cum.begin();
            if (i >= c.atoms.size()) i = c.atoms.size() - 1;
            return c.atoms[i].first;
          } else if constexpr (std::is_same_v<T, AtomFamily>) {
            // Smallest index i with cumulative family mass >= local.
            long long lo = c.i_min;
            long long hi = c.i_max >= 0 ? c.i_max : c.i_min;
            if (c.i_max < 0) {
              while (detail::family_range_mass(c, c.i_min, hi) < local && hi < (1LL << 60))
                hi *= 2;
            }
            while (lo < hi) {
              long long mid = lo + (hi - lo) / 2;
              if (detail::family_range_mass(c, c.i_min, mid) >= local)
                hi = mid;
              else
                lo = mid + 1;
            }
            return c.location(lo);
          } else if constexpr (std::is_same_v<T, PiecewiseDensity>) {
            std::size_t i =
                std::lower_bound(cs.cum.begin(), cs.cum.end(), local) - cs.cum.begin();
            if (i >= c.pieces.size()) i = c.pieces.size() - 1;
            const auto& p = c.pieces[i];
            double v = rng.uniform();
            return p.lo + (p.hi - p.lo) * v;
          } else {
            const double hlo = c.ifs.hull_lo(), hhi = c.ifs.hull_hi();
            double cc = 1, cd = 0;
            while (cc * (hhi - hlo) > 1e-18) {
              double v = rng.uniform();
              double s = 0;
              int pick = c.ifs.branches() - 1;
              for (int b = 0; b < c.ifs.branches(); ++b) {
                s += c.weights[b];
                if (v < s) {
                  pick = b;
                  break;
                }
              }
              cd = cc * c.ifs.offsets()[pick] + cd;
              cc = cc * c.ifs.ratios()[pick];
            }
            return cc * hlo + cd;
          }
        },
        *cs.comp);
    out.push_back(x);
  }
  return out;
}

// ---------------------------------------------------------------------------
// mix / restrict / normalize / scale
// ---------------------------------------------------------------------------

namespace {

// Re-canonicalize a bag of scaled components into one measure.
SymbolicMeasure assemble(std::vector<MeasureComponent> comps) {
  std::vector<std::pair<double, double>> atom_bag;
  std::vector<AtomFamily> families;
  std::vector<DensityPiece> piece_bag;
  std::vector<SelfSimilar> ss_parts;
  for (auto& comp : comps) {
    std::visit(
        [&](auto& c) {
          using T = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<T, AtomList>) {
            for (auto& a : c.atoms) atom_bag.push_back(a);
          } else if constexpr (std::is_same_v<T, AtomFamily>) {
            bool merged = false;
            for (auto& f : families) {
              if (f.p == c.p && f.q == c.q && f.i_min == c.i_min && f.i_max == c.i_max) {
                f.c += c.c;
                merged = true;
                break;
              }
            }
            if (!merged) families.push_back(c);
          } else if constexpr (std::is_same_v<T, PiecewiseDensity>) {
            for (auto& p : c.pieces) piece_bag.push_back(p);
          } else {
            bool merged = false;
            for (auto& s : ss_parts) {
              if (s.ifs.same_as(c.ifs) && s.weights == c.weights) {
                s.mass += c.mass;
                merged = true;
                break;
              }
            }
            if (!merged) ss_parts.push_back(std::move(c));
          }
        },
        comp);
  }
  std::vector<MeasureComponent> out;
  if (!atom_bag.empty()) {
    std::sort(atom_bag.begin(), atom_bag.end());
    AtomList al;
    for (auto& [x, w] : atom_bag) {
      if (!al.atoms.empty() && al.atoms.back().first == x)
        al.atoms.back().second += w;
      else
        al.atoms.emplace_back(x, w);
    }
    out.emplace_back(std::move(al));
  }
  for (auto& f : families) out.emplace_back(f);
  if (!piece_bag.empty()) {
    // Refine overlapping pieces onto a common breakpoint grid, summing heights.
    std::vector<double> cuts;
    for (auto& p : piece_bag) {
      cuts.push_back(p.lo);
      cuts.push_back(p.hi);
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    std::sort(piece_bag.begin(), piece_bag.end(),
              [](const DensityPiece& a, const DensityPiece& b) { return a.lo < b.lo; });
    PiecewiseDensity pd;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      double lo = cuts[i], hi = cuts[i + 1];
      double h = 0;
      for (auto& p : piece_bag) {
        if (p.lo >= hi) break;
        if (p.lo <= lo && p.hi >= hi) h += p.height;
      }
      if (h <= 0) continue;
      if (!pd.pieces.empty() && pd.pieces.back().hi == lo && pd.pieces.back().height == h)
        pd.pieces.back().hi = hi;
      else
        pd.pieces.push_back({lo, hi, h});
    }
    out.emplace_back(std::move(pd));
  }
  for (auto& s : ss_parts) out.emplace_back(std::move(s));
  return SymbolicMeasure(std::move(out));
}

MeasureComponent scale_component(const MeasureComponent& comp, double f) {
  return std::visit(
      [&](const auto& c) -> MeasureComponent {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, AtomList>) {
          AtomList out = c;
          for (auto& a : out.atoms) a.second *= f;
          return out;
        } else if constexpr (std::is_same_v<T, AtomFamily>) {
          AtomFamily out = c;
          out.c *= f;
          return out;
        } else if constexpr (std::is_same_v<T, PiecewiseDensity>) {
          PiecewiseDensity out = c;
          for (auto& p : out.pieces) p.height *= f;
          return out;
        } else {
          SelfSimilar out = c;
          out.mass *= f;
          return out;
        }
      },
      comp);
}

}  // namespace

SymbolicMeasure mix(const std::vector<double>& coeffs, const std::vector<SymbolicMeasure>& parts) {
  if (coeffs.size() != parts.size())
    fail(Errc::invalid_argument, "mix needs one coefficient per measure");
  std::vector<MeasureComponent> bag;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (!(coeffs[i] > 0) || !finite_num(coeffs[i]))
      fail(Errc::invalid_argument, "mix coefficients must be positive and finite");
    for (const auto& comp : parts[i].components()) bag.push_back(scale_component(comp, coeffs[i]));
  }
  return assemble(std::move(bag));
}

SymbolicMeasure scale(const SymbolicMeasure& mu, double factor) {
  if (!(factor > 0) || !finite_num(factor))
    fail(Errc::invalid_argument, "scale factor must be positive and finite");
  std::vector<MeasureComponent> bag;
  for (const auto& comp : mu.components()) bag.push_back(scale_component(comp, factor));
  return assemble(std::move(bag));
}

SymbolicMeasure restrict(const SymbolicMeasure& mu, const BorelTestSet& a) {
  if (a.skeleton_tag() || a.co_attractor())
    fail(Errc::unsupported_set, "restrict supports finite unions of intervals and points only");
  std::vector<MeasureComponent> bag;
  for (const auto& comp : mu.components()) {
    std::visit(
        [&](const auto& c) {
          using T = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<T, AtomList>) {
            AtomList kept;
            for (auto& [x, w] : c.atoms)
              if (a.contains_point(x)) kept.atoms.emplace_back(x, w);
            if (!kept.atoms.empty()) bag.emplace_back(std::move(kept));
          } else if constexpr (std::is_same_v<T, AtomFamily>) {
            for (const auto& iv : a.intervals()) {
              auto [lo, hi] = detail::family_range_in_interval(c, iv);
              if (hi != detail::kInf && hi < lo) continue;
              AtomFamily sub = c;
              sub.i_min = lo;
              sub.i_max = hi;
              bag.emplace_back(std::move(sub));
            }
            AtomList singles;
            for (double x : a.points()) {
              auto idx = detail::family_index_at(c, x);
              if (idx) singles.atoms.emplace_back(x, c.weight(*idx));
            }
            if (!singles.atoms.empty()) {
              std::sort(singles.atoms.begin(), singles.atoms.end());
              bag.emplace_back(std::move(singles));
            }
          } else if constexpr (std::is_same_v<T, PiecewiseDensity>) {
            PiecewiseDensity kept;
            for (const auto& iv : a.intervals()) {
              for (auto& p : c.pieces) {
                double lo = std::max(p.lo, iv.lo), hi = std::min(p.hi, iv.hi);
                if (hi > lo) kept.pieces.push_back({lo, hi, p.height});
              }
            }
            std::sort(kept.pieces.begin(), kept.pieces.end(),
                      [](const DensityPiece& x, const DensityPiece& y) { return x.lo < y.lo; });
            if (!kept.pieces.empty()) bag.emplace_back(std::move(kept));
          } else {
            bool covered = false, disjoint = true;
            for (const auto& iv : a.intervals()) {
              if (iv.lo <= c.ifs.hull_lo() && iv.hi >= c.ifs.hull_hi()) covered = true;
              if (iv.hi >= c.ifs.hull_lo() && iv.lo <= c.ifs.hull_hi()) disjoint = false;
            }
            if (covered)
              bag.emplace_back(c);
            else if (!disjoint)
              fail(Errc::unsupported_set,
                   "partial restriction of a self-similar part leaves the class");
          }
        },
        comp);
  }
  return assemble(std::move(bag));
}

SymbolicMeasure normalize(const SymbolicMeasure& mu) {
  if (mu.total_mass() <= 0) fail(Errc::zero_mass, "cannot normalize the zero measure");
  return scale(mu, 1.0 / mu.total_mass());
}

}  // namespace dimlab
