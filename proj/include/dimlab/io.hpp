#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dimlab/dim_exact.hpp"
#include "dimlab/dim_numeric.hpp"
#include "dimlab/examples.hpp"
#include "dimlab/measure.hpp"
#include "dimlab/tv_metrics.hpp"

namespace dimlab {

// Ordered JSON tree used for every emitted artifact: insertion order is
// preserved and doubles print at 17 significant digits, so identical runs
// produce identical bytes.
class JsonValue {
 public:
  static JsonValue null();
  static JsonValue boolean(bool b);
  static JsonValue integer(long long i);
  static JsonValue number(double d);
  static JsonValue string(std::string s);
  static JsonValue array();
  static JsonValue object();

  void push(JsonValue v);                        // array element
  void set(const std::string& key, JsonValue v); // object member (appends)
  std::string dump(int indent = 2) const;

 private:
  enum class Kind { Null, Bool, Int, Num, Str, Arr, Obj };
  Kind kind_ = Kind::Null;
  bool b_ = false;
  long long i_ = 0;
  double d_ = 0;
  std::string s_;
  std::vector<JsonValue> arr_;
  std::vector<std::pair<std::string, JsonValue>> obj_;

  void dump_to(std::string& out, int indent, int depth) const;
};

// Bit-exact decimal form of a double (17 significant digits).
std::string format_double(double v);

// Measure documents: top-level {"kind": "mixture", "components": [...]} with
// component kinds "atoms", "atom_family", "piecewise", "self_similar".
// Parsing is strict (unknown kinds or keys are parse errors, reported with
// line and column); serialize emits the canonical form that parses back to
// the identical measure.
SymbolicMeasure parse_measure_document(const std::string& text);
std::string serialize_measure_document(const SymbolicMeasure& mu);

std::string read_text_file(const std::string& path);
void atomic_write_text(const std::string& path, const std::string& text);
SymbolicMeasure load_measure(const std::string& path);
void save_measure(const SymbolicMeasure& mu, const std::string& path);

// CSV bodies with fixed documented columns.
std::string csv_scaling(const ScalingSeries& series);            // log10_r,log10_value
std::string csv_convergence(const std::vector<double>& series);  // n,value
std::string csv_claims(const VerifyReport& report);  // example,claim,pass,margin,basis,detail

JsonValue json_of_dimension_table(const DimensionTable& t);
JsonValue json_of_scaling_series(const ScalingSeries& s);
JsonValue json_of_estimate(const DimensionEstimate& e);
JsonValue json_of_test_set(const BorelTestSet& s);
JsonValue json_of_verdict(const ConvergenceVerdict& v);
JsonValue json_of_verify_report(const VerifyReport& r);
JsonValue json_of_semicontinuity(const SemicontinuityReport& r);

}  // namespace dimlab
