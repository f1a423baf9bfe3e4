#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "dimlab/io.hpp"
#include "dimlab/measure.hpp"
#include "dimlab/tv_metrics.hpp"

using namespace dimlab;
namespace fs = std::filesystem;

namespace {

Errc code_of(const std::function<void()>& body) {
  try {
    body();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a dimlab::Error");
  return Errc::invalid_argument;
}

fs::path temp_dir() {
  fs::path dir = fs::temp_directory_path() / "dimlab_io_test";
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("shipped documents parse and survive a serialize parse cycle") {
  fs::path docs = fs::path(DIMLAB_SOURCE_DIR) / "docs" / "examples";
  REQUIRE(fs::exists(docs));
  int seen = 0;
  for (const auto& entry : fs::directory_iterator(docs)) {
    if (entry.path().extension() != ".json") continue;
    ++seen;
    const std::string text = read_text_file(entry.path().string());
    SymbolicMeasure mu = parse_measure_document(text);
    const std::string once = serialize_measure_document(mu);
    SymbolicMeasure back = parse_measure_document(once);
    CHECK(serialize_measure_document(back) == once);
    CHECK(tv_distance(mu, back) == doctest::Approx(0.0).epsilon(1e-15));
  }
  CHECK(seen >= 8);
}

TEST_CASE("doubles survive the round trip bit for bit") {
  SymbolicMeasure mu = mix(
      {1.0, 1.0},
      {SymbolicMeasure::atoms({{0.1, 1.0 / 3}, {0.30000000000000004, 0.25}}),
       SymbolicMeasure::piecewise({DensityPiece{0.5, 0.7, 1.0 / 7}})});
  SymbolicMeasure back = parse_measure_document(serialize_measure_document(mu));
  CHECK(serialize_measure_document(back) == serialize_measure_document(mu));
  CHECK(cdf(back, 0.1) == cdf(mu, 0.1));
  CHECK(cdf(back, 0.30000000000000004) == cdf(mu, 0.30000000000000004));
  CHECK(back.total_mass() == mu.total_mass());
}

TEST_CASE("format double parses back to the same bits") {
  for (double v : {0.1, 1.0 / 3, 1e300, 2.2250738585072014e-308, 123456.789,
                   0.30000000000000004, -7.25}) {
    const std::string s = format_double(v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }
  CHECK(format_double(1.0) == "1");
}

TEST_CASE("parse errors carry location and key diagnostics") {
  CHECK(code_of([] { parse_measure_document("{,}"); }) == Errc::parse_error);
  try {
    parse_measure_document("{\n  \"kind\": \"mixture\",\n  \"components\": [\n  !\n]}");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 4") != std::string::npos);
  }

  CHECK(code_of([] { parse_measure_document(R"({"kind":"mixture"})"); }) == Errc::parse_error);
  CHECK(code_of([] {
          parse_measure_document(R"({"kind":"pile","components":[]})");
        }) == Errc::parse_error);
  CHECK(code_of([] {
          parse_measure_document(
              R"({"kind":"mixture","components":[{"kind":"atoms","atoms":[[0,1]],"bogus":3}]})");
        }) == Errc::parse_error);
  CHECK(code_of([] {
          parse_measure_document(
              R"({"kind":"mixture","components":[{"kind":"atoms","atoms":[[0,1,2]]}]})");
        }) == Errc::parse_error);
  CHECK(code_of([] {
          parse_measure_document(
              R"({"kind":"mixture","components":[{"kind":"piecewise","pieces":[{"a":0,"b":1}]}]})");
        }) == Errc::parse_error);
  CHECK(code_of([] {
          parse_measure_document(
              R"({"kind":"mixture","components":[{"kind":"atoms","atoms":[[0,-1]]}]})");
        }) == Errc::invalid_argument);
}

TEST_CASE("csv builders emit the documented columns") {
  ScalingSeries series;
  series.method = "gp";
  series.points = {{0.1, 0.5}, {0.01, 0.0}};
  const std::string csv = csv_scaling(series);
  CHECK(csv.find("log10_r,log10_value") == 0);
  CHECK(csv.find("-inf") != std::string::npos);

  const std::string conv = csv_convergence({1.0, 0.5});
  CHECK(conv.find("n,value") == 0);
  CHECK(conv.find("\n1,1\n") != std::string::npos);
}

TEST_CASE("atomic writes create parents and land complete") {
  fs::path root = temp_dir();
  fs::path target = root / "nested" / "deep" / "out.json";
  fs::remove_all(root / "nested");
  atomic_write_text(target.string(), "payload");
  CHECK(read_text_file(target.string()) == "payload");
  CHECK(!fs::exists(target.string() + ".tmp"));
  fs::remove_all(root);
}

TEST_CASE("measure documents save and load through the filesystem") {
  fs::path root = temp_dir();
  fs::path file = root / "measure.json";
  SymbolicMeasure mu = SymbolicMeasure::atom_family(1.0, 2.0, 1.0, 1, 12);
  save_measure(mu, file.string());
  SymbolicMeasure back = load_measure(file.string());
  CHECK(serialize_measure_document(back) == serialize_measure_document(mu));
  CHECK(code_of([&] { load_measure((root / "missing.json").string()); }) == Errc::io_error);
  fs::remove_all(root);
}

TEST_CASE("canonical serialization spells optional fields deterministically") {
  SymbolicMeasure family = SymbolicMeasure::atom_family(1.0, 2.0, 1.0, 3, 9);
  const std::string text = serialize_measure_document(family);
  CHECK(text.find("\"i_min\": 3") != std::string::npos);
  CHECK(text.find("\"n_max\": 9") != std::string::npos);

  SymbolicMeasure plain = SymbolicMeasure::atom_family(1.0, 2.0, 1.0);
  const std::string plain_text = serialize_measure_document(plain);
  CHECK(plain_text.find("\"i_min\"") == std::string::npos);
  CHECK(plain_text.find("\"n_max\": -1") != std::string::npos);
}
