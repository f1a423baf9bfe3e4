#include "dimlab/dim_numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>
#include <unordered_map>

namespace dimlab {

std::vector<double> log_spaced(double r_min, double r_max, int steps) {
  if (!(r_min > 0) || !(r_max > r_min)) fail(Errc::invalid_argument, "need 0 < r_min < r_max");
  if (steps < 2) fail(Errc::invalid_argument, "need at least 2 scales");
  std::vector<double> out(static_cast<std::size_t>(steps));
  const double la = std::log(r_max), lb = std::log(r_min);
  for (int k = 0; k < steps; ++k)
    out[static_cast<std::size_t>(k)] = std::exp(la + (lb - la) * k / (steps - 1));
  out.front() = r_max;
  out.back() = r_min;
  return out;
}

std::pair<double, double> default_window(const std::vector<double>& schedule) {
  if (schedule.size() < 4) fail(Errc::invalid_argument, "schedule too short for a fit window");
  std::size_t drop = schedule.size() / 4;
  return {schedule[schedule.size() - 1 - drop], schedule[drop]};
}

namespace {

bool in_window(double r, const std::pair<double, double>& w) {
  return r >= w.first * (1.0 - 1e-12) && r <= w.second * (1.0 + 1e-12);
}

void validate_schedule(const std::vector<double>& rs) {
  if (rs.size() < 2) fail(Errc::invalid_argument, "need at least 2 scales");
  for (std::size_t k = 0; k < rs.size(); ++k) {
    if (!(rs[k] > 0)) fail(Errc::invalid_argument, "scales must be positive");
    if (k > 0 && rs[k] >= rs[k - 1])
      fail(Errc::invalid_argument, "scale schedule must be strictly decreasing");
  }
}

std::pair<double, double> pick_window(const std::vector<double>& rs,
                                      const std::optional<std::pair<double, double>>& w) {
  if (!w) return default_window(rs);
  if (!(w->first > 0) || !(w->second >= w->first))
    fail(Errc::invalid_argument, "window must satisfy 0 < r_min <= r_max");
  return *w;
}

}  // namespace

std::pair<double, double> loglog_fit(const ScalingSeries& series,
                                     std::pair<double, double> window) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& [r, v] : series.points) {
    if (!in_window(r, window)) continue;
    if (!(v > 0)) fail(Errc::non_positive_value, "log-log fit fed a non-positive value");
    pts.emplace_back(std::log(r), std::log(v));
  }
  const std::size_t n = pts.size();
  if (n < 3) fail(Errc::too_few_points, "need at least 3 scales inside the fit window");
  double sx = 0, sy = 0;
  for (const auto& [x, y] : pts) {
    sx += x;
    sy += y;
  }
  const double mx = sx / static_cast<double>(n), my = sy / static_cast<double>(n);
  double sxx = 0, sxy = 0;
  for (const auto& [x, y] : pts) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  const double slope = sxy / sxx;
  double ss_res = 0;
  for (const auto& [x, y] : pts) {
    double resid = y - my - slope * (x - mx);
    ss_res += resid * resid;
  }
  double se = (n > 2) ? std::sqrt(ss_res / static_cast<double>(n - 2) / sxx) : 0.0;
  return {slope, se};
}

// ---------------------------------------------------------------------------
// Box counting
// ---------------------------------------------------------------------------

namespace {

std::vector<std::pair<long long, double>> box_masses(const SymbolicMeasure& mu, double r) {
  std::unordered_map<long long, double> boxes;
  for (const auto& comp : mu.components()) {
    if (const auto* al = std::get_if<AtomList>(&comp)) {
      for (auto& [x, w] : al->atoms) boxes[detail::grid_index(x, r)] += w;
    } else if (const auto* f = std::get_if<AtomFamily>(&comp)) {
      // Indices with location >= r head to their own boxes; everything below
      // lands in box 0 as one closed-form lump.
      long long cut = detail::family_last_index_geq(*f, r);
      long long hi_explicit =
          f->infinite() ? cut : std::min(cut, f->i_max);
      for (long long i = f->i_min; i <= hi_explicit; ++i)
        boxes[detail::grid_index(f->location(i), r)] += f->weight(i);
      double lump = detail::family_range_mass(*f, hi_explicit + 1,
                                              f->infinite() ? detail::kInf : f->i_max);
      if (lump > 0) boxes[0] += lump;
    } else if (const auto* d = std::get_if<PiecewiseDensity>(&comp)) {
      for (const auto& p : d->pieces) {
        long long k_lo = detail::grid_index(p.lo, r);
        long long k_hi = detail::grid_index(std::nextafter(p.hi, p.lo), r);
        for (long long k = k_lo; k <= k_hi; ++k) {
          double lo = std::max(p.lo, static_cast<double>(k) * r);
          double hi = std::min(p.hi, static_cast<double>(k + 1) * r);
          if (hi > lo) boxes[k] += p.height * (hi - lo);
        }
      }
    } else {
      fail(Errc::unsupported_measure,
           "box counts for self-similar parts are not exactly computable here");
    }
  }
  std::vector<std::pair<long long, double>> out(boxes.begin(), boxes.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

long long min_box_count(const SymbolicMeasure& mu, double r, double delta) {
  if (!(r > 0)) fail(Errc::invalid_argument, "r must be positive");
  if (!(delta >= 0 && delta < 1)) fail(Errc::invalid_argument, "delta must lie in [0, 1)");
  if (mu.is_zero()) return 0;
  auto boxes = box_masses(mu, r);
  if (delta == 0) return static_cast<long long>(boxes.size());
  // Greedy: heaviest boxes first; ties broken by box index for determinism.
  std::sort(boxes.begin(), boxes.end(),
            [](const std::pair<long long, double>& a, const std::pair<long long, double>& b) {
              if (a.second != b.second) return a.second > b.second;
              return a.first < b.first;
            });
  const double target = (1.0 - delta) * mu.total_mass() - 1e-12 * mu.total_mass();
  double cum = 0;
  long long taken = 0;
  for (const auto& [k, m] : boxes) {
    cum += m;
    ++taken;
    if (cum >= target) return taken;
  }
  return static_cast<long long>(boxes.size());
}

std::map<double, DimensionEstimate> box_dimension_estimate(
    const SymbolicMeasure& mu, const std::vector<double>& deltas,
    const std::vector<double>& r_schedule, std::optional<std::pair<double, double>> window) {
  if (deltas.empty()) fail(Errc::invalid_argument, "need at least one delta");
  validate_schedule(r_schedule);
  auto w = pick_window(r_schedule, window);
  std::map<double, DimensionEstimate> out;
  for (double delta : deltas) {
    ScalingSeries series;
    series.method = "box";
    series.delta = delta;
    bool supported = true;
    for (double r : r_schedule) {
      long long n;
      try {
        n = min_box_count(mu, r, delta);
      } catch (const Error& e) {
        if (e.code() == Errc::unsupported_measure) {
          supported = false;
          break;
        }
        throw;
      }
      if (n > 0) series.points.emplace_back(r, static_cast<double>(n));
    }
    if (!supported || series.points.empty()) continue;
    DimensionEstimate est;
    auto [slope, se] = loglog_fit(series, w);
    est.slope = -slope;  // counts scale like r^{-dim}
    est.std_error = se;
    est.window = w;
    est.series = std::move(series);
    out.emplace(delta, std::move(est));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Local dimension profile
// ---------------------------------------------------------------------------

std::map<double, DimensionEstimate> local_dimension_profile(
    const SymbolicMeasure& mu, const std::vector<double>& samples,
    const std::vector<double>& r_schedule, const std::vector<double>& quantiles,
    std::optional<std::pair<double, double>> window) {
  if (samples.empty()) fail(Errc::invalid_argument, "need at least one sample");
  if (quantiles.empty()) fail(Errc::invalid_argument, "need at least one quantile");
  for (double q : quantiles)
    if (!(q >= 0 && q <= 1)) fail(Errc::invalid_argument, "quantiles must lie in [0, 1]");
  validate_schedule(r_schedule);
  auto w = pick_window(r_schedule, window);

  // Ball mass is monotone in r, so positivity at the smallest scale settles
  // the whole schedule.
  const double r_small = r_schedule.back();
  std::vector<double> kept;
  kept.reserve(samples.size());
  long long excluded = 0;
  for (double x : samples) {
    if (ball_mass(mu, x, r_small) > 0)
      kept.push_back(x);
    else
      ++excluded;
  }
  if (kept.empty()) fail(Errc::degenerate_ball, "every sample ball carries zero mass");

  std::vector<std::vector<double>> alpha(r_schedule.size());
  for (std::size_t k = 0; k < r_schedule.size(); ++k) {
    const double r = r_schedule[k];
    auto& a = alpha[k];
    a.reserve(kept.size());
    for (double x : kept) a.push_back(std::log(ball_mass(mu, x, r)) / std::log(r));
    std::sort(a.begin(), a.end());
  }

  std::map<double, DimensionEstimate> out;
  for (double q : quantiles) {
    ScalingSeries series;
    series.method = "local";
    series.delta = q;
    series.samples = static_cast<long long>(kept.size());
    for (std::size_t k = 0; k < r_schedule.size(); ++k) {
      const double r = r_schedule[k];
      std::size_t idx = static_cast<std::size_t>(
          std::llround(q * static_cast<double>(kept.size() - 1)));
      series.points.emplace_back(r, std::pow(r, alpha[k][idx]));
    }
    DimensionEstimate est;
    auto [slope, se] = loglog_fit(series, w);
    est.slope = slope;
    est.std_error = se;
    est.window = w;
    est.series = std::move(series);
    if (excluded > 0)
      est.note = "excluded " + std::to_string(excluded) + " sample(s) with zero ball mass";
    out.emplace(q, std::move(est));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pair correlation
// ---------------------------------------------------------------------------

namespace {

// Exact pair-distance histogram over a descending schedule: bucket[k] counts
// pairs whose distance first fits at scale k; suffix sums give cumulative
// counts. Integer accumulation makes the result independent of the thread
// partition.
std::vector<long long> pair_histogram_1d(const std::vector<double>& sorted,
                                         const std::vector<double>& ascending) {
  const std::size_t n = sorted.size();
  const double r_max = ascending.back();
  const std::size_t buckets = ascending.size();
  int workers = thread_cap();
  if (workers > static_cast<int>(n)) workers = static_cast<int>(n);
  if (workers < 1) workers = 1;
  std::vector<std::vector<long long>> partial(
      static_cast<std::size_t>(workers), std::vector<long long>(buckets, 0));
  auto run = [&](int t) {
    auto& hist = partial[static_cast<std::size_t>(t)];
    for (std::size_t i = static_cast<std::size_t>(t); i < n;
         i += static_cast<std::size_t>(workers)) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double d = sorted[j] - sorted[i];
        if (d > r_max) break;
        auto it = std::lower_bound(ascending.begin(), ascending.end(), d);
        ++hist[static_cast<std::size_t>(it - ascending.begin())];
      }
    }
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(run, t);
    for (auto& th : pool) th.join();
  }
  std::vector<long long> hist(buckets, 0);
  for (const auto& h : partial)
    for (std::size_t k = 0; k < buckets; ++k) hist[k] += h[k];
  return hist;
}

DimensionEstimate fit_correlation(const std::vector<double>& rs,
                                  const std::vector<long long>& counts, long long n,
                                  const std::pair<double, double>& w, const char* method) {
  const double denom = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  ScalingSeries series;
  series.method = method;
  series.samples = n;
  long long dropped_zero = 0;
  for (std::size_t k = 0; k < rs.size(); ++k) {
    if (counts[k] > 0)
      series.points.emplace_back(rs[k], static_cast<double>(counts[k]) / denom);
    else
      ++dropped_zero;
  }
  bool any_window_value = false;
  for (const auto& [r, v] : series.points) any_window_value = any_window_value || in_window(r, w);
  if (!any_window_value)
    fail(Errc::empty_correlation, "no positive pair counts inside the fit window");
  DimensionEstimate est;
  auto [slope, se] = loglog_fit(series, w);
  est.slope = slope;
  est.std_error = se;
  est.window = w;
  est.series = std::move(series);
  if (dropped_zero > 0)
    est.note = "dropped " + std::to_string(dropped_zero) + " empty scale(s)";
  return est;
}

std::vector<long long> counts_from_histogram(const std::vector<long long>& hist) {
  // hist is indexed by ascending schedule position; descending-index counts
  // are suffix sums from the small-r end.
  const std::size_t K = hist.size();
  std::vector<long long> counts(K, 0);
  long long run = 0;
  for (std::size_t a = 0; a < K; ++a) {
    run += hist[a];
    counts[K - 1 - a] = run;
  }
  return counts;
}

}  // namespace

DimensionEstimate correlation_dim_gp(const std::vector<double>& samples,
                                     const std::vector<double>& r_schedule,
                                     std::optional<std::pair<double, double>> window) {
  if (samples.size() < 2) fail(Errc::too_few_points, "need at least 2 samples");
  validate_schedule(r_schedule);
  auto w = pick_window(r_schedule, window);
  std::vector<double> sorted = samples;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> ascending(r_schedule.rbegin(), r_schedule.rend());
  auto hist = pair_histogram_1d(sorted, ascending);
  auto counts = counts_from_histogram(hist);
  return fit_correlation(r_schedule, counts, static_cast<long long>(samples.size()), w,
                         "gp");
}

DimensionEstimate correlation_dim_gp(const std::vector<std::vector<double>>& samples,
                                     const std::vector<double>& r_schedule,
                                     std::optional<std::pair<double, double>> window) {
  if (samples.size() < 2) fail(Errc::too_few_points, "need at least 2 samples");
  const std::size_t dim = samples.front().size();
  if (dim == 0) fail(Errc::invalid_argument, "points must have at least one coordinate");
  for (const auto& p : samples)
    if (p.size() != dim) fail(Errc::invalid_argument, "points must share one dimension");
  validate_schedule(r_schedule);
  auto w = pick_window(r_schedule, window);
  std::vector<double> ascending(r_schedule.rbegin(), r_schedule.rend());
  const double r_max = ascending.back();
  const std::size_t n = samples.size();
  int workers = thread_cap();
  if (workers > static_cast<int>(n)) workers = static_cast<int>(n);
  if (workers < 1) workers = 1;
  std::vector<std::vector<long long>> partial(
      static_cast<std::size_t>(workers), std::vector<long long>(ascending.size(), 0));
  auto run = [&](int t) {
    auto& hist = partial[static_cast<std::size_t>(t)];
    for (std::size_t i = static_cast<std::size_t>(t); i < n;
         i += static_cast<std::size_t>(workers)) {
      for (std::size_t j = i + 1; j < n; ++j) {
        double s2 = 0;
        for (std::size_t c = 0; c < dim; ++c) {
          double diff = samples[i][c] - samples[j][c];
          s2 += diff * diff;
        }
        double d = std::sqrt(s2);
        if (d > r_max) continue;
        auto it = std::lower_bound(ascending.begin(), ascending.end(), d);
        ++hist[static_cast<std::size_t>(it - ascending.begin())];
      }
    }
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(run, t);
    for (auto& th : pool) th.join();
  }
  std::vector<long long> hist(ascending.size(), 0);
  for (const auto& h : partial)
    for (std::size_t k = 0; k < hist.size(); ++k) hist[k] += h[k];
  auto counts = counts_from_histogram(hist);
  return fit_correlation(r_schedule, counts, static_cast<long long>(n), w, "gp");
}

DimensionEstimate modified_correlation_dim(const std::vector<double>& samples, double delta,
                                           const std::vector<double>& r_schedule,
                                           std::optional<std::pair<double, double>> window) {
  if (samples.size() < 2) fail(Errc::too_few_points, "need at least 2 samples");
  if (!(delta > 0 && delta < 1)) fail(Errc::invalid_argument, "delta must lie in (0, 1)");
  validate_schedule(r_schedule);
  auto w = pick_window(r_schedule, window);

  const std::size_t n = samples.size();
  const double r_med = r_schedule[r_schedule.size() / 2];
  std::vector<double> sorted = samples;
  std::sort(sorted.begin(), sorted.end());

  // Neighbor counts at the median scale identify the mass concentrations.
  std::vector<long long> neighbors(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    auto lo = std::lower_bound(sorted.begin(), sorted.end(), sorted[i] - r_med);
    auto hi = std::upper_bound(sorted.begin(), sorted.end(), sorted[i] + r_med);
    neighbors[i] = (hi - lo) - 1;
  }
  const std::size_t drop = static_cast<std::size_t>(delta * static_cast<double>(n));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (neighbors[a] != neighbors[b]) return neighbors[a] > neighbors[b];
    return a < b;
  });
  std::vector<bool> dropped(n, false);
  for (std::size_t k = 0; k < drop && k < n; ++k) dropped[order[k]] = true;
  std::vector<double> retained;
  retained.reserve(n - drop);
  for (std::size_t i = 0; i < n; ++i)
    if (!dropped[i]) retained.push_back(sorted[i]);
  if (retained.size() < 2) fail(Errc::too_few_points, "fewer than 2 samples retained");

  std::vector<double> ascending(r_schedule.rbegin(), r_schedule.rend());
  auto hist = pair_histogram_1d(retained, ascending);
  auto counts = counts_from_histogram(hist);
  DimensionEstimate est = fit_correlation(
      r_schedule, counts, static_cast<long long>(retained.size()), w, "mc");
  est.series.delta = delta;
  std::string note = "retained " + std::to_string(retained.size()) + " of " +
                     std::to_string(n) + " samples after dropping the " +
                     std::to_string(drop) + " with most neighbors at r = " +
                     std::to_string(r_med);
  est.note = est.note.empty() ? note : note + "; " + est.note;
  return est;
}

}  // namespace dimlab
