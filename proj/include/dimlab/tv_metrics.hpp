#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dimlab/measure.hpp"

namespace dimlab {

// Jordan decomposition masses of the signed difference mu - rho.
struct SignedSplit {
  double pos = 0;  // (mu - rho)^+ (X)
  double neg = 0;  // (mu - rho)^- (X)
  double tv() const { return pos > neg ? pos : neg; }  // sup_A |mu(A) - rho(A)|
  double l1() const { return pos + neg; }              // |mu - rho|(X)
};

SignedSplit signed_split(const SymbolicMeasure& mu, const SymbolicMeasure& rho);

// Sup over Borel sets of |mu(A) - rho(A)|; exact on the class up to certified
// truncation error <= 1e-10.
double tv_distance(const SymbolicMeasure& mu, const SymbolicMeasure& rho);

bool abs_continuous(const SymbolicMeasure& mu, const SymbolicMeasure& rho);  // mu << rho
bool equivalent(const SymbolicMeasure& mu, const SymbolicMeasure& rho);

// Indexed sequence of measures with a declared limit. Generator is 1-based and
// must be total up to the horizon a checker is called with.
struct MeasureSequence {
  std::function<SymbolicMeasure(int)> generator;
  SymbolicMeasure limit;
  std::string name;
  std::string declared_mode;  // optional: "weak" | "setwise" | "tv" | ""
};

enum class VerdictStatus { Certified, Refuted, Unknown };
const char* verdict_status_name(VerdictStatus s);

// Finite-horizon convergence evidence. Refuted always carries a witness whose
// mass gap exceeds the tolerance on the whole tail window; Certified carries a
// certificate description; the full diagnostic series is attached either way.
struct ConvergenceVerdict {
  std::string mode;  // "weak" | "setwise" | "tv"
  VerdictStatus status = VerdictStatus::Unknown;
  std::string certificate;
  std::optional<BorelTestSet> witness;
  double witness_gap = 0;      // min gap of the witness over the tail window
  std::vector<double> series;  // series[n-1] = diagnostic value at index n
  int horizon = 0;
  double tol = 0;
};

ConvergenceVerdict weak_converges(const MeasureSequence& seq, int horizon, double tol);
ConvergenceVerdict setwise_converges(const MeasureSequence& seq, int horizon, double tol);
ConvergenceVerdict tv_converges(const MeasureSequence& seq, int horizon, double tol);

namespace detail {
// Canonical discriminating sets for setwise/TV refutation: limit-atom
// singletons, the skeleton of all atom locations, density breakpoint
// intervals, dyadic cells to depth 12, attractor complements, and the
// bounding interval.
std::vector<BorelTestSet> canonical_test_sets(const std::vector<SymbolicMeasure>& terms,
                                              const SymbolicMeasure& limit);
}  // namespace detail

}  // namespace dimlab
