#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dimlab/dim_exact.hpp"
#include "dimlab/dim_numeric.hpp"
#include "dimlab/examples.hpp"
#include "dimlab/io.hpp"
#include "dimlab/measure.hpp"
#include "dimlab/tv_metrics.hpp"

namespace {

using namespace dimlab;

constexpr const char* kVersion = "0.1.0";

constexpr int kExitPass = 0;
constexpr int kExitClaimFailure = 1;
constexpr int kExitInputError = 2;
constexpr int kExitEstimatorError = 3;

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::invalid_argument:
    case Errc::invalid_ratios:
    case Errc::zero_mass:
    case Errc::unknown_example:
    case Errc::parse_error:
    case Errc::io_error:
      return kExitInputError;
    default:
      return kExitEstimatorError;
  }
}

std::string fmt6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Flags shared by the measure-consuming subcommands.
struct MeasureSource {
  std::string measure_path;
  std::string example;
  int n = -1;  // example term index; <= 0 selects the declared limit
  double a = 0.5;
};

void add_source_flags(CLI::App* cmd, MeasureSource& src) {
  auto* m = cmd->add_option("--measure", src.measure_path, "measure document (JSON)");
  auto* e = cmd->add_option("--example", src.example, "example name (ex1, ex3, ..., ex8)");
  cmd->add_option("--n", src.n, "example term index; omit for the declared limit");
  cmd->add_option("--a", src.a, "tail-lump parameter for ex7")->default_val(0.5);
  m->excludes(e);
  e->excludes(m);
}

ExampleSpec spec_for(const MeasureSource& src, int horizon = 50) {
  ExampleSpec spec;
  spec.id = parse_example_id(src.example);
  spec.a = src.a;
  spec.horizon = horizon;
  return spec;
}

SymbolicMeasure resolve_measure(const MeasureSource& src) {
  if (!src.measure_path.empty()) return load_measure(src.measure_path);
  if (src.example.empty())
    fail(Errc::invalid_argument, "one of --measure or --example is required");
  MeasureSequence seq = make_example(spec_for(src));
  if (src.n > 0) return seq.generator(src.n);
  return seq.limit;
}

JsonValue config_entry(const MeasureSource& src) {
  JsonValue cfg = JsonValue::object();
  if (!src.measure_path.empty()) cfg.set("measure", JsonValue::string(src.measure_path));
  if (!src.example.empty()) {
    cfg.set("example", JsonValue::string(src.example));
    cfg.set("n", JsonValue::integer(src.n));
    cfg.set("a", JsonValue::number(src.a));
  }
  return cfg;
}

JsonValue report_envelope(const std::string& command, JsonValue config) {
  JsonValue root = JsonValue::object();
  root.set("tool", JsonValue::string("dimlab"));
  root.set("version", JsonValue::string(kVersion));
  root.set("command", JsonValue::string(command));
  root.set("config", std::move(config));
  return root;
}

struct OutputSink {
  std::string dir = ".";
  std::string format = "both";

  bool json() const { return format == "json" || format == "both"; }
  bool csv() const { return format == "csv" || format == "both"; }

  void add_flags(CLI::App* cmd) {
    cmd->add_option("--out", dir, "output directory")->default_val(".");
    cmd->add_option("--format", format, "csv | json | both")
        ->default_val("both")
        ->check(CLI::IsMember({"csv", "json", "both"}));
  }

  void write_json(const std::string& name, const JsonValue& v) const {
    if (json()) atomic_write_text((std::filesystem::path(dir) / name).string(), v.dump());
  }
  void write_csv(const std::string& name, const std::string& body) const {
    if (csv()) atomic_write_text((std::filesystem::path(dir) / name).string(), body);
  }
};

std::string csv_dimension_table(const DimensionTable& t) {
  std::string out = "mapping,status,value\n";
  const auto entries = t.as_array();
  const auto& labels = DimensionTable::names();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    out += labels[i];
    out += entries[i].exact() ? ",exact," + format_double(entries[i].value) : ",unsupported,";
    out += '\n';
  }
  return out;
}

void print_table(const DimensionTable& t) {
  const auto entries = t.as_array();
  const auto& labels = DimensionTable::names();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].exact())
      std::printf("  %-22s %s\n", labels[i], fmt6(entries[i].value).c_str());
    else
      std::printf("  %-22s unsupported\n", labels[i]);
  }
}

// ---------------------------------------------------------------------------
// exact
// ---------------------------------------------------------------------------

struct ExactArgs {
  MeasureSource src;
  OutputSink sink;
};

int run_exact(const ExactArgs& args) {
  SymbolicMeasure mu = resolve_measure(args.src);
  DimensionTable table = exact_dims(mu);
  std::printf("exact dimension table (%s):\n",
              args.src.example.empty()
                  ? args.src.measure_path.c_str()
                  : (args.src.example + (args.src.n > 0 ? " term n=" + std::to_string(args.src.n)
                                                        : " limit"))
                        .c_str());
  print_table(table);
  for (const std::string& v : table.invariant_violations())
    std::printf("  invariant violation: %s\n", v.c_str());

  JsonValue root = report_envelope("exact", config_entry(args.src));
  root.set("table", json_of_dimension_table(table));
  args.sink.write_json("exact.json", root);
  args.sink.write_csv("exact.csv", csv_dimension_table(table));
  return kExitPass;
}

// ---------------------------------------------------------------------------
// estimate
// ---------------------------------------------------------------------------

struct EstimateArgs {
  MeasureSource src;
  OutputSink sink;
  std::string method;
  long long samples = 10000;
  std::uint64_t seed = 0;
  double rmin = 1e-6, rmax = 1e-1;
  int rsteps = 24;
  double delta = 0.0;
};

int run_estimate(const EstimateArgs& args) {
  SymbolicMeasure mu = resolve_measure(args.src);
  const std::vector<double> schedule = log_spaced(args.rmin, args.rmax, args.rsteps);

  JsonValue cfg = config_entry(args.src);
  cfg.set("method", JsonValue::string(args.method));
  cfg.set("samples", JsonValue::integer(args.samples));
  cfg.set("seed", JsonValue::integer(static_cast<long long>(args.seed)));
  cfg.set("rmin", JsonValue::number(args.rmin));
  cfg.set("rmax", JsonValue::number(args.rmax));
  cfg.set("rsteps", JsonValue::integer(args.rsteps));
  cfg.set("delta", JsonValue::number(args.delta));
  JsonValue root = report_envelope("estimate", std::move(cfg));

  if (args.method == "box") {
    auto by_delta = box_dimension_estimate(mu, {args.delta}, schedule);
    if (by_delta.empty())
      fail(Errc::unsupported_measure, "exact box counts are not available for this measure");
    const DimensionEstimate& est = by_delta.begin()->second;
    std::printf("box slope %s (std err %s), delta %s\n", fmt6(est.slope).c_str(),
                fmt6(est.std_error).c_str(), fmt6(args.delta).c_str());
    root.set("estimate", json_of_estimate(est));
    args.sink.write_json("estimate_box.json", root);
    args.sink.write_csv("estimate_box.csv", csv_scaling(est.series));
    return kExitPass;
  }
  if (args.method == "local") {
    const std::vector<double> quantiles{0.01, 0.25, 0.5, 0.75, 0.99};
    auto xs = sample(mu, static_cast<std::size_t>(args.samples), args.seed);
    auto by_q = local_dimension_profile(mu, xs, schedule, quantiles);
    JsonValue per_q = JsonValue::object();
    for (const auto& [q, est] : by_q) {
      std::printf("local slope at q=%s: %s\n", fmt6(q).c_str(), fmt6(est.slope).c_str());
      per_q.set("q" + fmt6(q), json_of_estimate(est));
      args.sink.write_csv("estimate_local_q" + fmt6(q) + ".csv", csv_scaling(est.series));
    }
    root.set("estimates", std::move(per_q));
    args.sink.write_json("estimate_local.json", root);
    return kExitPass;
  }
  if (args.method == "gp" || args.method == "mc") {
    auto xs = sample(mu, static_cast<std::size_t>(args.samples), args.seed);
    DimensionEstimate est = args.method == "gp"
                                ? correlation_dim_gp(xs, schedule)
                                : modified_correlation_dim(xs, args.delta, schedule);
    est.series.seed = args.seed;
    std::printf("%s slope %s (std err %s)\n", args.method.c_str(), fmt6(est.slope).c_str(),
                fmt6(est.std_error).c_str());
    if (!est.note.empty()) std::printf("  note: %s\n", est.note.c_str());
    root.set("estimate", json_of_estimate(est));
    args.sink.write_json("estimate_" + args.method + ".json", root);
    args.sink.write_csv("estimate_" + args.method + ".csv", csv_scaling(est.series));
    return kExitPass;
  }
  fail(Errc::invalid_argument, "unknown method: " + args.method);
}

// ---------------------------------------------------------------------------
// tv
// ---------------------------------------------------------------------------

struct TvArgs {
  std::string path_a, path_b;
  MeasureSource src;
  OutputSink sink;
  int horizon = 50;
  double tol = 0.05;
};

int run_tv(const TvArgs& args) {
  if (!args.path_a.empty() || !args.path_b.empty()) {
    if (args.path_a.empty() || args.path_b.empty())
      fail(Errc::invalid_argument, "tv needs both --a and --b (or --example)");
    SymbolicMeasure a = load_measure(args.path_a);
    SymbolicMeasure b = load_measure(args.path_b);
    const double d = tv_distance(a, b);
    std::printf("tv distance: %s\n", format_double(d).c_str());
    JsonValue cfg = JsonValue::object();
    cfg.set("a", JsonValue::string(args.path_a));
    cfg.set("b", JsonValue::string(args.path_b));
    JsonValue root = report_envelope("tv", std::move(cfg));
    root.set("distance", JsonValue::number(d));
    args.sink.write_json("tv.json", root);
    return kExitPass;
  }
  if (args.src.example.empty())
    fail(Errc::invalid_argument, "tv needs either --a/--b documents or --example");

  ExampleSpec spec = spec_for(args.src, args.horizon);
  const int horizon = std::min(args.horizon, example_horizon_cap(spec.id));
  if (horizon < args.horizon)
    std::printf("note: horizon clamped to %d (generator exactness cap)\n", horizon);
  MeasureSequence seq = make_example(spec);
  ConvergenceVerdict v = tv_converges(seq, horizon, args.tol);
  std::printf("tv series vs limit over n = 1..%d: status %s, last distance %s\n", horizon,
              verdict_status_name(v.status), fmt6(v.series.back()).c_str());

  JsonValue cfg = config_entry(args.src);
  cfg.set("horizon", JsonValue::integer(horizon));
  cfg.set("tol", JsonValue::number(args.tol));
  JsonValue root = report_envelope("tv", std::move(cfg));
  root.set("verdict", json_of_verdict(v));
  args.sink.write_json("tv.json", root);
  args.sink.write_csv("tv.csv", csv_convergence(v.series));
  return kExitPass;
}

// ---------------------------------------------------------------------------
// converge
// ---------------------------------------------------------------------------

struct ConvergeArgs {
  MeasureSource src;
  OutputSink sink;
  std::string mode = "tv";
  int horizon = 50;
  double tol = 0.05;
};

int run_converge(const ConvergeArgs& args) {
  if (args.src.example.empty()) fail(Errc::invalid_argument, "converge needs --example");
  ExampleSpec spec = spec_for(args.src, args.horizon);
  const int horizon = std::min(args.horizon, example_horizon_cap(spec.id));
  if (horizon < args.horizon)
    std::printf("note: horizon clamped to %d (generator exactness cap)\n", horizon);
  MeasureSequence seq = make_example(spec);

  ConvergenceVerdict v;
  if (args.mode == "weak")
    v = weak_converges(seq, horizon, args.tol);
  else if (args.mode == "setwise")
    v = setwise_converges(seq, horizon, args.tol);
  else if (args.mode == "tv")
    v = tv_converges(seq, horizon, args.tol);
  else
    fail(Errc::invalid_argument, "mode must be weak, setwise, or tv");

  std::printf("%s convergence of %s: %s\n", v.mode.c_str(), seq.name.c_str(),
              verdict_status_name(v.status));
  if (!v.certificate.empty()) std::printf("  certificate: %s\n", v.certificate.c_str());
  if (v.witness)
    std::printf("  witness: %s (min tail gap %s)\n", v.witness->describe().c_str(),
                fmt6(v.witness_gap).c_str());

  JsonValue cfg = config_entry(args.src);
  cfg.set("mode", JsonValue::string(args.mode));
  cfg.set("horizon", JsonValue::integer(horizon));
  cfg.set("tol", JsonValue::number(args.tol));
  JsonValue root = report_envelope("converge", std::move(cfg));
  root.set("verdict", json_of_verdict(v));
  args.sink.write_json("converge_" + args.mode + ".json", root);
  args.sink.write_csv("converge_" + args.mode + ".csv", csv_convergence(v.series));
  return kExitPass;
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

struct VerifyArgs {
  std::vector<std::string> names;
  bool all = false;
  int horizon = 50;
  double tol = 0.05;
  double a = 0.5;
  std::uint64_t seed = 0;
  OutputSink sink;
};

int run_verify(const VerifyArgs& args) {
  std::vector<ExampleId> ids;
  if (args.all) {
    ids = all_examples();
  } else {
    for (const std::string& name : args.names) ids.push_back(parse_example_id(name));
  }
  if (ids.empty()) fail(Errc::invalid_argument, "verify needs example names or --all");

  VerifyTolerances tols;
  tols.numeric = args.tol;
  tols.convergence = args.tol;
  tols.seed = args.seed;

  bool all_pass = true;
  std::string claims_csv;
  JsonValue reports = JsonValue::array();

  for (ExampleId id : ids) {
    ExampleSpec spec;
    spec.id = id;
    spec.a = args.a;
    VerifyReport rep = verify_example(spec, args.horizon, tols);
    all_pass = all_pass && rep.all_pass();

    int passed = 0;
    for (const VerifyClaim& c : rep.claims) passed += c.pass ? 1 : 0;
    std::printf("%-4s %2d/%2d claims pass\n", rep.example.c_str(), passed,
                static_cast<int>(rep.claims.size()));
    for (const VerifyClaim& c : rep.claims)
      if (!c.pass)
        std::printf("     FAILED: %s%s%s\n", c.description.c_str(),
                    c.detail.empty() ? "" : " | ", c.detail.c_str());

    const std::string body = csv_claims(rep);
    claims_csv += claims_csv.empty() ? body : body.substr(body.find('\n') + 1);

    JsonValue one = json_of_verify_report(rep);
    const int horizon = std::min(args.horizon, example_horizon_cap(id));
    MeasureSequence seq = make_example(ExampleSpec{id, args.a, spec.ratios, spec.offsets, horizon});
    one.set("semicontinuity", json_of_semicontinuity(
                                  semicontinuity_check(seq, horizon, tols.convergence)));
    reports.push(std::move(one));
  }

  JsonValue cfg = JsonValue::object();
  cfg.set("all", JsonValue::boolean(args.all));
  JsonValue names = JsonValue::array();
  for (ExampleId id : ids) names.push(JsonValue::string(example_name(id)));
  cfg.set("examples", std::move(names));
  cfg.set("horizon", JsonValue::integer(args.horizon));
  cfg.set("tol", JsonValue::number(args.tol));
  cfg.set("a", JsonValue::number(args.a));
  cfg.set("seed", JsonValue::integer(static_cast<long long>(args.seed)));
  JsonValue root = report_envelope("verify", std::move(cfg));
  root.set("all_pass", JsonValue::boolean(all_pass));
  root.set("reports", std::move(reports));

  args.sink.write_json("verify.json", root);
  args.sink.write_csv("verify_claims.csv", claims_csv);

  std::printf("verify: %s\n", all_pass ? "all claims pass" : "claim failures");
  return all_pass ? kExitPass : kExitClaimFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dimlab: exact measures, dimension mappings, and convergence checks"};
  app.require_subcommand(1);

  ExactArgs exact_args;
  auto* cmd_exact = app.add_subcommand("exact", "closed-form dimension table");
  add_source_flags(cmd_exact, exact_args.src);
  exact_args.sink.add_flags(cmd_exact);

  EstimateArgs est_args;
  auto* cmd_estimate = app.add_subcommand("estimate", "numeric dimension estimators");
  add_source_flags(cmd_estimate, est_args.src);
  cmd_estimate->add_option("--method", est_args.method, "box | local | gp | mc")
      ->required()
      ->check(CLI::IsMember({"box", "local", "gp", "mc"}));
  cmd_estimate->add_option("--samples", est_args.samples, "sample count")->default_val(10000);
  cmd_estimate->add_option("--seed", est_args.seed, "RNG seed")->default_val(0);
  cmd_estimate->add_option("--rmin", est_args.rmin, "smallest scale")->default_val(1e-6);
  cmd_estimate->add_option("--rmax", est_args.rmax, "largest scale")->default_val(1e-1);
  cmd_estimate->add_option("--rsteps", est_args.rsteps, "schedule length")->default_val(24);
  cmd_estimate->add_option("--delta", est_args.delta, "mass fraction to discard")
      ->default_val(0.0);
  est_args.sink.add_flags(cmd_estimate);

  TvArgs tv_args;
  auto* cmd_tv = app.add_subcommand("tv", "total variation distance or distance series");
  cmd_tv->add_option("--a", tv_args.path_a, "first measure document");
  cmd_tv->add_option("--b", tv_args.path_b, "second measure document");
  cmd_tv->add_option("--example", tv_args.src.example, "example name for the distance series");
  cmd_tv->add_option("--horizon", tv_args.horizon, "series length")->default_val(50);
  cmd_tv->add_option("--tol", tv_args.tol, "certification tolerance")->default_val(0.05);
  tv_args.sink.add_flags(cmd_tv);

  ConvergeArgs conv_args;
  auto* cmd_converge = app.add_subcommand("converge", "finite-horizon convergence verdict");
  add_source_flags(cmd_converge, conv_args.src);
  cmd_converge->add_option("--mode", conv_args.mode, "weak | setwise | tv")
      ->default_val("tv")
      ->check(CLI::IsMember({"weak", "setwise", "tv"}));
  cmd_converge->add_option("--horizon", conv_args.horizon, "sequence horizon")->default_val(50);
  cmd_converge->add_option("--tol", conv_args.tol, "certification tolerance")->default_val(0.05);
  conv_args.sink.add_flags(cmd_converge);

  VerifyArgs verify_args;
  auto* cmd_verify = app.add_subcommand("verify", "check the example ledger");
  cmd_verify->add_option("names", verify_args.names, "example names");
  cmd_verify->add_flag("--all", verify_args.all, "verify every example");
  cmd_verify->add_option("--horizon", verify_args.horizon, "sequence horizon")->default_val(50);
  cmd_verify->add_option("--tol", verify_args.tol, "claim tolerance")->default_val(0.05);
  cmd_verify->add_option("--a", verify_args.a, "tail-lump parameter for ex7")->default_val(0.5);
  cmd_verify->add_option("--seed", verify_args.seed, "RNG seed")->default_val(0);
  verify_args.sink.add_flags(cmd_verify);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return kExitInputError;
  }

  try {
    if (cmd_exact->parsed()) return run_exact(exact_args);
    if (cmd_estimate->parsed()) return run_estimate(est_args);
    if (cmd_tv->parsed()) return run_tv(tv_args);
    if (cmd_converge->parsed()) return run_converge(conv_args);
    if (cmd_verify->parsed()) return run_verify(verify_args);
  } catch (const Error& e) {
    std::fprintf(stderr, "error (%s): %s\n", errc_name(e.code()), e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitEstimatorError;
  }
  return kExitInputError;
}
