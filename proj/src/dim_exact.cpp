#include "dimlab/dim_exact.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace dimlab {

const std::array<const char*, 10>& DimensionTable::names() {
  static const std::array<const char*, 10> kNames{
      "box lower",       "box upper",       "modified box lower", "modified box upper",
      "hausdorff lower", "hausdorff upper", "packing lower",      "packing upper",
      "correlation",     "modified correlation"};
  return kNames;
}

std::array<DimEntry, 10> DimensionTable::as_array() const {
  return {box_lower,      box_upper,      modified_box_lower, modified_box_upper,
          hausdorff_lower, hausdorff_upper, packing_lower,     packing_upper,
          correlation,    modified_correlation};
}

std::vector<std::string> DimensionTable::invariant_violations() const {
  std::vector<std::string> out;
  auto pair_check = [&](const DimEntry& lo, const DimEntry& hi, const char* what) {
    if (lo.exact() && hi.exact() && lo.value > hi.value + 1e-12)
      out.push_back(std::string(what) + ": lower exceeds upper");
  };
  pair_check(box_lower, box_upper, "box");
  pair_check(modified_box_lower, modified_box_upper, "modified box");
  pair_check(hausdorff_lower, hausdorff_upper, "hausdorff");
  pair_check(packing_lower, packing_upper, "packing");
  if (hausdorff_lower.exact() && correlation.exact() && modified_correlation.exact()) {
    if (hausdorff_lower.value > correlation.value + 1e-12)
      out.push_back("hausdorff lower exceeds correlation");
    if (correlation.value > modified_correlation.value + 1e-12)
      out.push_back("correlation exceeds modified correlation");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tail-lump construction detector
// ---------------------------------------------------------------------------

namespace detail {

int tail_lump_band_count(double a) {
  // Keep band endpoints a^((i+1)^2) comfortably above the smallest positive
  // normal double: (N+1)^2 * (-log10 a) <= 290.
  return static_cast<int>(std::floor(std::sqrt(290.0 * std::log(10.0) / (-std::log(a))))) - 1;
}

std::optional<double> tail_lump_parameter(const SymbolicMeasure& mu) {
  if (mu.components().size() != 1) return std::nullopt;
  const auto* d = std::get_if<PiecewiseDensity>(&mu.components().front());
  if (!d) return std::nullopt;
  const auto& pieces = d->pieces;
  if (pieces.size() < 9) return std::nullopt;
  const int N = static_cast<int>(pieces.size()) - 2;
  const auto& top = pieces.back();
  if (top.hi != 1.0) return std::nullopt;
  const double a = top.lo;
  if (!(a > 0 && a < 1)) return std::nullopt;
  if (N != tail_lump_band_count(a)) return std::nullopt;
  for (int i = 0; i <= N; ++i) {
    const auto& p = pieces[pieces.size() - 1 - static_cast<std::size_t>(i)];
    if (p.lo != std::pow(a, static_cast<double>(i + 1) * (i + 1)) ||
        p.hi != std::pow(a, static_cast<double>(i) * i))
      return std::nullopt;
  }
  const auto& lump = pieces.front();
  if (lump.lo != 0.0) return std::nullopt;
  const double s = mu.total_mass();
  auto close = [](double x, double y) { return std::abs(x - y) <= 1e-12 * std::max(x, y); };
  for (int i = 0; i <= N; ++i) {
    const auto& p = pieces[pieces.size() - 1 - static_cast<std::size_t>(i)];
    double m = p.height * (p.hi - p.lo);
    if (!close(m, s * (1.0 - a) * std::pow(a, i))) return std::nullopt;
  }
  if (!close(lump.height * (lump.hi - lump.lo), s * std::pow(a, N + 1))) return std::nullopt;
  return a;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// exact_dims rule table
// ---------------------------------------------------------------------------

namespace {

DimEntry exact(double v) { return DimEntry{v, DimStatus::Exact}; }

DimensionTable all_exact(double v) {
  DimensionTable t;
  t.box_lower = t.box_upper = exact(v);
  t.modified_box_lower = t.modified_box_upper = exact(v);
  t.hausdorff_lower = t.hausdorff_upper = exact(v);
  t.packing_lower = t.packing_upper = exact(v);
  t.correlation = t.modified_correlation = exact(v);
  return t;
}

bool has_natural_weights(const SelfSimilar& ss) {
  double h = ss.ifs.similarity_dimension();
  double total = 0;
  for (double r : ss.ifs.ratios()) total += std::pow(r, h);
  for (int b = 0; b < ss.ifs.branches(); ++b)
    if (std::abs(ss.weights[static_cast<std::size_t>(b)] -
                 std::pow(ss.ifs.ratios()[static_cast<std::size_t>(b)], h) / total) > 1e-12)
      return false;
  return true;
}

}  // namespace

DimensionTable exact_dims(const SymbolicMeasure& mu) {
  DimensionTable t;  // everything Unsupported by default
  if (mu.is_zero()) return t;

  if (auto a = detail::tail_lump_parameter(mu)) {
    (void)a;
    t.correlation = t.modified_correlation = exact(0.0);
    return t;
  }

  int n_atom_lists = 0, n_finite_fams = 0, n_infinite_fams = 0, n_density = 0, n_ss = 0;
  double p_min = std::numeric_limits<double>::infinity();
  const SelfSimilar* sole_ss = nullptr;
  for (const auto& comp : mu.components()) {
    if (std::holds_alternative<AtomList>(comp)) {
      ++n_atom_lists;
    } else if (const auto* f = std::get_if<AtomFamily>(&comp)) {
      if (f->infinite()) {
        ++n_infinite_fams;
        p_min = std::min(p_min, f->p);
      } else {
        ++n_finite_fams;
      }
    } else if (std::holds_alternative<PiecewiseDensity>(comp)) {
      ++n_density;
    } else {
      ++n_ss;
      sole_ss = std::get_if<SelfSimilar>(&comp);
    }
  }
  const int n_atomic = n_atom_lists + n_finite_fams + n_infinite_fams;

  if (n_ss == 1 && n_atomic == 0 && n_density == 0) {
    if (has_natural_weights(*sole_ss)) return all_exact(sole_ss->ifs.similarity_dimension());
    return t;
  }
  if (n_ss > 0) return t;

  if (n_density > 0 && n_atomic == 0) return all_exact(1.0);

  if (n_density == 0 && n_infinite_fams == 0) return all_exact(0.0);

  if (n_density == 0) {
    // Atomic with at least one infinite family: positive-measure sets can be a
    // single atom (lower mappings 0); full-measure sets must keep every
    // accumulation tail, whose box dimension is 1/(1+p) for locations i^-p.
    t = all_exact(0.0);
    t.box_upper = exact(1.0 / (1.0 + p_min));
    return t;
  }

  // Atoms plus densities: an atom pins the lower mappings at 0, the density
  // part pins the upper mappings at 1, and the atom forces correlation slope 0.
  t.box_lower = t.modified_box_lower = t.hausdorff_lower = t.packing_lower = exact(0.0);
  t.box_upper = t.modified_box_upper = t.hausdorff_upper = t.packing_upper = exact(1.0);
  t.correlation = t.modified_correlation = exact(0.0);
  return t;
}

// ---------------------------------------------------------------------------
// Bowen equation
// ---------------------------------------------------------------------------

double bowen_solve(const std::vector<double>& ratios, double tol) {
  if (ratios.size() < 2) fail(Errc::invalid_ratios, "need at least two contraction ratios");
  double sum = 0;
  for (double r : ratios) {
    if (!(r > 0 && r < 1)) fail(Errc::invalid_ratios, "ratios must lie in (0, 1)");
    sum += r;
  }
  if (sum > 1.0) fail(Errc::invalid_ratios, "ratios must sum to at most 1");
  if (!(tol > 0)) fail(Errc::invalid_argument, "tol must be positive");
  auto g = [&](double h) {
    double s = 0;
    for (double r : ratios) s += std::pow(r, h);
    return s - 1.0;
  };
  double lo = 0.0, hi = 1.0;
  for (int iter = 0; iter < 200; ++iter) {
    double mid = 0.5 * (lo + hi);
    if (g(mid) > 0)
      lo = mid;
    else
      hi = mid;
  }
  double h = 0.5 * (lo + hi);
  if (std::abs(g(h)) >= tol) fail(Errc::no_root, "bisection failed to meet tolerance");
  return h;
}

// ---------------------------------------------------------------------------
// Exact correlation integral
// ---------------------------------------------------------------------------

namespace {

double ss_correlation_integral(const SelfSimilar& ss, double r) {
  // (mu x mu) of {|x - y| <= r} by refining cylinder pairs; a pair is decided
  // once its interval images are farther than r apart or within r entirely.
  struct Cyl {
    double c, d, m;  // map S(t) = c t + d over the hull, mass m
  };
  const double hlo = ss.ifs.hull_lo(), hhi = ss.ifs.hull_hi();
  struct Pair {
    Cyl a, b;
  };
  std::deque<Pair> queue;
  queue.push_back({Cyl{1, 0, ss.mass}, Cyl{1, 0, ss.mass}});
  double inside = 0;
  double undecided_tiny = 0;
  long long pops = 0;
  while (!queue.empty()) {
    if (++pops > 20000000)
      fail(Errc::unsupported_measure, "correlation integral refinement did not settle");
    Pair pr = queue.front();
    queue.pop_front();
    double alo = pr.a.c * hlo + pr.a.d, ahi = pr.a.c * hhi + pr.a.d;
    double blo = pr.b.c * hlo + pr.b.d, bhi = pr.b.c * hhi + pr.b.d;
    double gap = std::max(blo - ahi, alo - bhi);  // negative when overlapping
    double reach = std::max(bhi - alo, ahi - blo);
    double pm = pr.a.m * pr.b.m;
    if (gap > r) continue;
    if (reach <= r) {
      inside += pm;
      continue;
    }
    if (pm < 1e-16 || (ahi - alo) + (bhi - blo) < 1e-15 * r) {
      undecided_tiny += pm;
      if (undecided_tiny > 1e-10)
        fail(Errc::unsupported_measure, "correlation integral error budget exceeded");
      continue;
    }
    bool split_a = (ahi - alo) >= (bhi - blo);
    const Cyl& parent = split_a ? pr.a : pr.b;
    for (int br = 0; br < ss.ifs.branches(); ++br) {
      Cyl child{parent.c * ss.ifs.ratios()[static_cast<std::size_t>(br)],
                parent.c * ss.ifs.offsets()[static_cast<std::size_t>(br)] + parent.d,
                parent.m * ss.weights[static_cast<std::size_t>(br)]};
      queue.push_back(split_a ? Pair{child, pr.b} : Pair{pr.a, child});
    }
  }
  return inside + 0.5 * undecided_tiny;
}

}  // namespace

double correlation_integral_exact(const SymbolicMeasure& mu, double r) {
  if (!(r > 0)) fail(Errc::invalid_argument, "r must be positive");
  if (mu.is_zero()) return 0;

  int n_ss = 0, n_other = 0;
  const SelfSimilar* sole_ss = nullptr;
  for (const auto& comp : mu.components()) {
    if (const auto* s = std::get_if<SelfSimilar>(&comp)) {
      ++n_ss;
      sole_ss = s;
    } else {
      ++n_other;
    }
  }
  if (n_ss > 0 && (n_other > 0 || n_ss > 1))
    fail(Errc::unsupported_measure,
         "correlation integral for self-similar parts mixed with other components");
  if (n_ss == 1) return ss_correlation_integral(*sole_ss, r);

  std::vector<std::pair<double, double>> atoms;
  std::vector<DensityPiece> pieces;
  for (const auto& comp : mu.components()) {
    if (const auto* al = std::get_if<AtomList>(&comp)) {
      atoms.insert(atoms.end(), al->atoms.begin(), al->atoms.end());
    } else if (const auto* f = std::get_if<AtomFamily>(&comp)) {
      if (f->infinite() || f->i_max - f->i_min >= 100000)
        fail(Errc::unsupported_measure,
             "correlation integral over an unbounded atom family is not closed-form here");
      for (long long i = f->i_min; i <= f->i_max; ++i)
        atoms.emplace_back(f->location(i), f->weight(i));
    } else if (const auto* d = std::get_if<PiecewiseDensity>(&comp)) {
      pieces.insert(pieces.end(), d->pieces.begin(), d->pieces.end());
    }
  }
  std::sort(atoms.begin(), atoms.end());
  std::sort(pieces.begin(), pieces.end(),
            [](const DensityPiece& x, const DensityPiece& y) { return x.lo < y.lo; });

  auto piece_interval_mass = [&](double lo, double hi) {
    if (pieces.empty() || hi <= lo) return 0.0;
    double m = 0;
    auto it = std::lower_bound(pieces.begin(), pieces.end(), lo,
                               [](const DensityPiece& p, double v) { return p.hi <= v; });
    for (; it != pieces.end() && it->lo < hi; ++it)
      m += it->height * (std::min(it->hi, hi) - std::max(it->lo, lo));
    return m;
  };

  double total = 0;

  // Atom-atom pairs, self-pairs included (the diagonal has positive product
  // mass exactly at the atoms).
  if (!atoms.empty()) {
    std::vector<double> prefix(atoms.size() + 1, 0.0);
    for (std::size_t i = 0; i < atoms.size(); ++i) prefix[i + 1] = prefix[i] + atoms[i].second;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      auto lo_it = std::lower_bound(
          atoms.begin(), atoms.end(), atoms[i].first - r,
          [](const std::pair<double, double>& a, double v) { return a.first < v; });
      auto hi_it = std::upper_bound(
          atoms.begin(), atoms.end(), atoms[i].first + r,
          [](double v, const std::pair<double, double>& a) { return v < a.first; });
      total += atoms[i].second * (prefix[static_cast<std::size_t>(hi_it - atoms.begin())] -
                                  prefix[static_cast<std::size_t>(lo_it - atoms.begin())]);
    }
  }

  // Atom-density cross terms, both orders.
  for (auto& [x, w] : atoms) total += 2.0 * w * piece_interval_mass(x - r, x + r);

  // Density-density term: the ball mass is piecewise linear in x between
  // consecutive breakpoints of {endpoints, endpoints +- r}, so the integral
  // against a piecewise-constant density is a sum of exact trapezoids.
  if (!pieces.empty()) {
    std::vector<double> grid;
    grid.reserve(pieces.size() * 6);
    for (const auto& p : pieces) {
      for (double e : {p.lo, p.hi}) {
        grid.push_back(e);
        grid.push_back(e - r);
        grid.push_back(e + r);
      }
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    std::vector<double> ball(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k)
      ball[k] = piece_interval_mass(grid[k] - r, grid[k] + r);
    std::size_t cursor = 0;
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
      double u = grid[k], v = grid[k + 1];
      while (cursor < pieces.size() && pieces[cursor].hi <= u) ++cursor;
      if (cursor >= pieces.size()) break;
      const auto& p = pieces[cursor];
      if (p.lo >= v || p.hi <= u) continue;
      total += p.height * 0.5 * (ball[k] + ball[k + 1]) * (v - u);
    }
  }
  return total;
}

// ---------------------------------------------------------------------------
// Entropy/Lyapunov arithmetic
// ---------------------------------------------------------------------------

double entropy_lyapunov_dimension(double entropy, double lambda1, double lambda2) {
  if (!(entropy >= 0)) fail(Errc::invalid_argument, "entropy must be non-negative");
  if (lambda1 == 0 || lambda2 == 0) fail(Errc::zero_exponent, "lyapunov exponents must be nonzero");
  return entropy * (1.0 / lambda1 - 1.0 / lambda2);
}

// ---------------------------------------------------------------------------
// Zero-correlation certificate
// ---------------------------------------------------------------------------

ZeroCorrelationCertificate zero_correlation_certificate(const SymbolicMeasure& mu, double a,
                                                        int n_max) {
  if (n_max < 1) fail(Errc::invalid_argument, "n_max must be at least 1");
  auto detected = detail::tail_lump_parameter(mu);
  if (!detected) fail(Errc::wrong_shape, "measure is not the tail-lump density construction");
  if (*detected != a)
    fail(Errc::wrong_shape, "tail-lump parameter does not match the requested a");
  SymbolicMeasure prob = normalize(mu);

  ZeroCorrelationCertificate cert;
  cert.a = a;
  const int cap = detail::tail_lump_band_count(a) + 1;
  const int steps = std::min(n_max, cap);
  double prev = std::numeric_limits<double>::infinity();
  for (int n = 1; n <= steps; ++n) {
    double r = std::pow(a, static_cast<double>(n) * n);
    BorelTestSet window = BorelTestSet::interval(0.0, r);
    double product = ball_mass(prob, 0.0, r) * mass(prob, window);
    double expo = std::log(product) / std::log(r);
    if (!(expo > 0) || expo >= prev)
      fail(Errc::no_root, "certificate exponents failed to decrease toward zero");
    cert.steps.push_back({r, window, expo});
    prev = expo;
  }
  return cert;
}

}  // namespace dimlab
