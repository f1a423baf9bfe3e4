#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "dimlab/measure.hpp"

namespace dimlab {

enum class DimStatus { Exact, Unsupported };

struct DimEntry {
  double value = 0;
  DimStatus status = DimStatus::Unsupported;
  bool exact() const { return status == DimStatus::Exact; }
};

// Ten measure-dimension mappings. Lower mappings take the infimum over sets of
// positive measure, upper mappings over sets of full measure; correlation and
// modified correlation come from the scaling of the correlation integral.
struct DimensionTable {
  DimEntry box_lower, box_upper;
  DimEntry modified_box_lower, modified_box_upper;
  DimEntry hausdorff_lower, hausdorff_upper;
  DimEntry packing_lower, packing_upper;
  DimEntry correlation, modified_correlation;

  static const std::array<const char*, 10>& names();
  std::array<DimEntry, 10> as_array() const;

  // Structural requirements: lower <= upper per mapping, and
  // hausdorff_lower <= correlation <= modified_correlation, checked only on
  // entries marked Exact. Returns human-readable violations, empty when clean.
  std::vector<std::string> invariant_violations() const;
};

// Closed-form dimension table by class rules; combinations outside the rule
// set come back with Unsupported entries rather than guessed numbers.
DimensionTable exact_dims(const SymbolicMeasure& mu);

// Unique h in (0, 1] with sum(ratios[i]^h) == 1, by bisection. Requires at
// least two ratios, each in (0,1), summing to at most 1.
double bowen_solve(const std::vector<double>& ratios, double tol = 1e-12);

// C(r) = integral of mu(closed ball(x, r)) d mu(x). Exact for atom and
// piecewise-density mixtures; a sole self-similar component is resolved by
// cylinder-pair refinement with certified error below 1e-10.
double correlation_integral_exact(const SymbolicMeasure& mu, double r);

// entropy * (1/lambda1 - 1/lambda2); raw arithmetic with nonzero guards.
double entropy_lyapunov_dimension(double entropy, double lambda1, double lambda2);

// Witness schedule that the correlation dimension of the tail-lump density
// family is zero: at r = a^(n^2) the window Y = [0, r] satisfies
// mu(B(0,r)) * mu(Y) = r^(2/n), and 2/n decreases to zero.
struct CertificateStep {
  double r = 0;
  BorelTestSet window;
  double exponent = 0;
};

struct ZeroCorrelationCertificate {
  double a = 0;
  std::vector<CertificateStep> steps;
};

ZeroCorrelationCertificate zero_correlation_certificate(const SymbolicMeasure& mu, double a,
                                                        int n_max);

namespace detail {
// Recognizes the tail-lump density construction (explicit dyadic-squared
// bands [a^((i+1)^2), a^(i^2)] with masses proportional to (1-a) a^i plus a
// closing lump at zero) and returns its parameter a.
std::optional<double> tail_lump_parameter(const SymbolicMeasure& mu);
// Number of explicit bands the builder keeps before lumping, chosen so band
// endpoints stay representable as doubles.
int tail_lump_band_count(double a);
}  // namespace detail

}  // namespace dimlab
