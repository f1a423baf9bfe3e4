#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "dimlab/common.hpp"

namespace dimlab {

// ---------------------------------------------------------------------------
// Components of the symbolic measure class. Everything lives on the real line.
// ---------------------------------------------------------------------------

// Finite list of atoms, locations strictly increasing, weights positive.
struct AtomList {
  std::vector<std::pair<double, double>> atoms;  // (location, weight)
};

// Countable atom family: atoms at i^(-p) with weight c*i^(-q) for
// i in [i_min, i_max], i_max < 0 meaning unbounded. Locations accumulate at 0.
struct AtomFamily {
  double p = 1.0;
  double q = 2.0;
  double c = 1.0;
  long long i_min = 1;
  long long i_max = -1;  // -1 = infinite

  bool infinite() const { return i_max < 0; }
  double location(long long i) const;
  double weight(long long i) const;
};

// Piecewise-constant density block on [lo, hi) with the given height.
struct DensityPiece {
  double lo, hi, height;
};

// Sorted pieces with pairwise-disjoint interiors.
struct PiecewiseDensity {
  std::vector<DensityPiece> pieces;
};

// Iterated function system of similarities s_i(x) = ratio_i * x + offset_i
// on [0,1]. Construction verifies strong separation (closed images pairwise
// disjoint) which forces sum(ratios) < 1.
class Ifs {
 public:
  Ifs(std::vector<double> ratios, std::vector<double> offsets);

  int branches() const { return static_cast<int>(ratios_.size()); }
  const std::vector<double>& ratios() const { return ratios_; }
  const std::vector<double>& offsets() const { return offsets_; }
  double map(int i, double x) const { return ratios_[i] * x + offsets_[i]; }
  double hull_lo() const { return hull_lo_; }
  double hull_hi() const { return hull_hi_; }
  // Similarity dimension: the root h of sum ratios^h = 1.
  double similarity_dimension() const { return sim_dim_; }
  bool same_as(const Ifs& other) const;

 private:
  std::vector<double> ratios_, offsets_;
  double hull_lo_, hull_hi_;
  double sim_dim_;
};

// Self-similar measure: mass distributed over the IFS attractor with branch
// weights (positive, summing to 1); total mass may be scaled.
struct SelfSimilar {
  Ifs ifs;
  std::vector<double> weights;
  double mass = 1.0;
};

using MeasureComponent = std::variant<AtomList, AtomFamily, PiecewiseDensity, SelfSimilar>;

// ---------------------------------------------------------------------------
// Borel test sets: finite unions of intervals and points, plus two countable /
// measure-zero markers that interval arithmetic cannot express: a "skeleton"
// (all atom locations of a declared family of measures) and the complement of
// an IFS attractor within its hull (the union of all construction gaps).
// ---------------------------------------------------------------------------

struct Interval {
  double lo = 0, hi = 0;
  bool closed_lo = true, closed_hi = true;
};

struct SkeletonSet {
  std::string description;
  std::vector<double> points;    // sorted explicit atom locations
  std::vector<double> power_ps;  // p values: the full grids {i^(-p) : i >= 1}
};

class BorelTestSet {
 public:
  static BorelTestSet empty();
  static BorelTestSet interval(double lo, double hi, bool closed_lo = true, bool closed_hi = true);
  static BorelTestSet point(double x);
  static BorelTestSet of_intervals(std::vector<Interval> iv);
  static BorelTestSet of_points(std::vector<double> pts);
  static BorelTestSet skeleton(SkeletonSet s);
  static BorelTestSet attractor_complement(Ifs ifs);

  BorelTestSet unite(const BorelTestSet& other) const;

  const std::vector<Interval>& intervals() const { return intervals_; }
  const std::vector<double>& points() const { return points_; }
  const std::optional<SkeletonSet>& skeleton_tag() const { return skeleton_; }
  const std::optional<Ifs>& co_attractor() const { return co_attractor_; }
  bool contains_point(double x) const;  // intervals/points/skeleton membership
  std::string describe() const;

 private:
  void canonicalize();
  std::vector<Interval> intervals_;
  std::vector<double> points_;
  std::optional<SkeletonSet> skeleton_;
  std::optional<Ifs> co_attractor_;
};

// ---------------------------------------------------------------------------
// The measure itself: a finite positive mixture of components.
// ---------------------------------------------------------------------------

class SymbolicMeasure {
 public:
  SymbolicMeasure() = default;  // zero measure
  explicit SymbolicMeasure(std::vector<MeasureComponent> components);

  static SymbolicMeasure dirac(double x, double w = 1.0);
  static SymbolicMeasure atoms(std::vector<std::pair<double, double>> atoms);
  static SymbolicMeasure atom_family(double p, double q, double c, long long i_min = 1,
                                     long long i_max = -1);
  static SymbolicMeasure uniform(double lo, double hi, double total = 1.0);
  static SymbolicMeasure piecewise(std::vector<DensityPiece> pieces);
  static SymbolicMeasure self_similar(Ifs ifs, std::vector<double> weights, double mass = 1.0);
  // Branch weights ratios^h with h the similarity dimension.
  static SymbolicMeasure natural_self_similar(Ifs ifs, double mass = 1.0);

  const std::vector<MeasureComponent>& components() const { return components_; }
  double total_mass() const { return total_mass_; }
  double support_lo() const { return support_lo_; }
  double support_hi() const { return support_hi_; }
  bool is_zero() const { return components_.empty(); }

 private:
  std::vector<MeasureComponent> components_;
  double total_mass_ = 0;
  double support_lo_ = 0, support_hi_ = 0;
};

// ---------------------------------------------------------------------------
// Operations. Mass-style queries carry certified absolute error <= 1e-10; on
// this class nearly all of them are exact up to rounding.
// ---------------------------------------------------------------------------

double mass(const SymbolicMeasure& mu, const BorelTestSet& a);
double cdf(const SymbolicMeasure& mu, double x);                  // mu((-inf, x])
double ball_mass(const SymbolicMeasure& mu, double x, double r);  // mu([x-r, x+r])
std::vector<double> sample(const SymbolicMeasure& mu, std::size_t n, std::uint64_t seed);
SymbolicMeasure mix(const std::vector<double>& coeffs, const std::vector<SymbolicMeasure>& parts);
SymbolicMeasure restrict(const SymbolicMeasure& mu, const BorelTestSet& a);
SymbolicMeasure normalize(const SymbolicMeasure& mu);
SymbolicMeasure scale(const SymbolicMeasure& mu, double factor);

namespace series {
// sum_{i=lo..hi} i^(-q), hi < 0 meaning infinity; q > 1 for infinite sums.
// Euler-Maclaurin beyond an explicit head; absolute error below 1e-14 * value.
double power_sum(long long lo, long long hi, double q);
double zeta(double q);
}  // namespace series

namespace detail {
double similarity_dimension(const std::vector<double>& ratios);
// Largest index of an interval cell [k*r, (k+1)*r) under exact comparisons.
long long grid_index(double x, double r);

// Atom-family index arithmetic. kInf marks an unbounded range end.
inline constexpr long long kInf = -1;
long long family_first_index_leq(const AtomFamily& f, double b);
long long family_last_index_geq(const AtomFamily& f, double a);
std::optional<long long> family_index_at(const AtomFamily& f, double x);
double family_range_mass(const AtomFamily& f, long long lo, long long hi);
std::pair<long long, long long> family_range_in_interval(const AtomFamily& f, const Interval& iv);
}  // namespace detail

}  // namespace dimlab
