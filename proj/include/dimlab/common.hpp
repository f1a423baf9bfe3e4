#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace dimlab {

enum class Errc {
  invalid_argument,    // malformed inputs, bad schedules, bad parameters
  unsupported_set,     // test set outside what the symbolic class can resolve
  unsupported_measure, // operation not defined for this component combination
  not_probability,     // sampling requires total mass 1
  zero_mass,           // normalize of the zero measure
  invalid_ratios,      // contraction ratios outside (0,1) or sum > 1
  no_root,             // scaling-equation solver found no root in [0,1]
  zero_exponent,       // entropy/exponent formula with a zero Lyapunov exponent
  wrong_shape,         // certificate requested for a measure of the wrong shape
  empty_correlation,   // all pair counts zero in the fit window
  degenerate_ball,     // every sample ball carries zero mass
  too_few_points,      // fewer than 3 scales in the fit window
  non_positive_value,  // log-log fit fed a non-positive value
  unknown_example,     // example name not in the catalog
  parse_error,         // document could not be parsed
  io_error             // filesystem failure
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::unsupported_set: return "unsupported_set";
    case Errc::unsupported_measure: return "unsupported_measure";
    case Errc::not_probability: return "not_probability";
    case Errc::zero_mass: return "zero_mass";
    case Errc::invalid_ratios: return "invalid_ratios";
    case Errc::no_root: return "no_root";
    case Errc::zero_exponent: return "zero_exponent";
    case Errc::wrong_shape: return "wrong_shape";
    case Errc::empty_correlation: return "empty_correlation";
    case Errc::degenerate_ball: return "degenerate_ball";
    case Errc::too_few_points: return "too_few_points";
    case Errc::non_positive_value: return "non_positive_value";
    case Errc::unknown_example: return "unknown_example";
    case Errc::parse_error: return "parse_error";
    case Errc::io_error: return "io_error";
  }
  return "unknown";
}

// Deterministic RNG. mt19937_64 is fully specified by the standard and the
// uniform conversion below avoids implementation-defined distributions, so a
// seed pins the sample stream on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  std::uint64_t bits() { return eng_(); }

 private:
  std::mt19937_64 eng_;
};

// Worker cap from DIMLAB_THREADS (0 or unset selects hardware concurrency).
int thread_cap();

}  // namespace dimlab
