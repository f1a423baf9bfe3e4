#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dimlab/measure.hpp"

namespace dimlab {

// A log-log scaling record: (r, value) points with r strictly decreasing and
// values positive, plus the metadata needed to reproduce the run.
struct ScalingSeries {
  std::vector<std::pair<double, double>> points;
  std::string method;
  double delta = 0;
  long long samples = 0;
  std::uint64_t seed = 0;
};

struct DimensionEstimate {
  double slope = 0;
  double std_error = 0;
  std::pair<double, double> window{0, 0};  // (r_min, r_max)
  ScalingSeries series;
  std::string note;  // audit trail: retained sets, dropped scales, exclusions
};

// Descending logarithmic schedule from r_max down to r_min, inclusive.
std::vector<double> log_spaced(double r_min, double r_max, int steps);

// Fit window dropping the top and bottom quarter of a descending schedule.
std::pair<double, double> default_window(const std::vector<double>& schedule);

// Ordinary least squares of log(value) on log(r) restricted to the window.
// Needs at least 3 in-window points, all with positive values.
std::pair<double, double> loglog_fit(const ScalingSeries& series,
                                     std::pair<double, double> window);

// Minimal number of half-open grid boxes [k r, (k+1) r) anchored at 0 whose
// total mass reaches (1 - delta) * mu(X). Greedy by descending box mass,
// which is optimal because grid boxes partition the line. Atom families are
// resolved exactly: indices at or above the scale are enumerated, the rest is
// one lump in the box at zero.
long long min_box_count(const SymbolicMeasure& mu, double r, double delta);

// Per delta, the slope of log N_delta(r) against log(1/r) over the window.
// Deltas whose counts are not exactly computable for this measure are omitted.
std::map<double, DimensionEstimate> box_dimension_estimate(
    const SymbolicMeasure& mu, const std::vector<double>& deltas,
    const std::vector<double>& r_schedule,
    std::optional<std::pair<double, double>> window = std::nullopt);

// Local scaling exponents alpha(x, r) = log mu(B(x, r)) / log r, reduced to
// per-scale quantiles and fitted; low quantiles proxy the lower Hausdorff
// mapping, high quantiles the upper. Samples with zero ball mass at the
// smallest scale are excluded and counted in the note.
std::map<double, DimensionEstimate> local_dimension_profile(
    const SymbolicMeasure& mu, const std::vector<double>& samples,
    const std::vector<double>& r_schedule, const std::vector<double>& quantiles,
    std::optional<std::pair<double, double>> window = std::nullopt);

// Sample pair-correlation estimator C_N(r) = 2/(N(N-1)) #{i<j: d(xi,xj) <= r}
// with exact integer pair counts, bit-identical at any thread count.
DimensionEstimate correlation_dim_gp(const std::vector<double>& samples,
                                     const std::vector<double>& r_schedule,
                                     std::optional<std::pair<double, double>> window = std::nullopt);
DimensionEstimate correlation_dim_gp(const std::vector<std::vector<double>>& samples,
                                     const std::vector<double>& r_schedule,
                                     std::optional<std::pair<double, double>> window = std::nullopt);

// Restricted correlation slope: drops the floor(delta N) samples with the
// most neighbors at the median scale (the mass concentrations that pin the
// slope down), then refits on the retained set. The note reports the
// retained set so the choice of A is auditable.
DimensionEstimate modified_correlation_dim(const std::vector<double>& samples, double delta,
                                           const std::vector<double>& r_schedule,
                                           std::optional<std::pair<double, double>> window = std::nullopt);

}  // namespace dimlab
