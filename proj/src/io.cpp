#include "dimlab/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace dimlab {

namespace {

using nlohmann::json;

std::string escape_json(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char ch : s) {
    switch (ch) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(ch) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", ch);
          out += buf;
        } else {
          out += ch;
        }
    }
  }
  return out;
}

std::pair<int, int> line_column(const std::string& text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

[[noreturn]] void doc_fail(const std::string& what) { fail(Errc::parse_error, what); }

void require_keys(const json& obj, const std::vector<std::string>& required,
                  const std::vector<std::string>& optional, const std::string& where) {
  for (const std::string& k : required)
    if (!obj.contains(k)) doc_fail(where + ": missing key \"" + k + "\"");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const std::string& k = it.key();
    bool known = false;
    for (const std::string& r : required) known = known || k == r;
    for (const std::string& o : optional) known = known || k == o;
    if (!known) doc_fail(where + ": unknown key \"" + k + "\"");
  }
}

double as_double(const json& v, const std::string& where) {
  if (!v.is_number()) doc_fail(where + ": expected a number");
  return v.get<double>();
}

long long as_integer(const json& v, const std::string& where) {
  if (!v.is_number_integer()) doc_fail(where + ": expected an integer");
  return v.get<long long>();
}

std::vector<double> as_double_array(const json& v, const std::string& where) {
  if (!v.is_array()) doc_fail(where + ": expected an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& x : v) out.push_back(as_double(x, where));
  return out;
}

MeasureComponent parse_component(const json& comp, std::size_t index) {
  const std::string where = "components[" + std::to_string(index) + "]";
  if (!comp.is_object()) doc_fail(where + ": expected an object");
  if (!comp.contains("kind") || !comp["kind"].is_string())
    doc_fail(where + ": missing string key \"kind\"");
  const std::string kind = comp["kind"].get<std::string>();

  if (kind == "atoms") {
    require_keys(comp, {"kind", "atoms"}, {}, where);
    if (!comp["atoms"].is_array()) doc_fail(where + ".atoms: expected an array");
    AtomList al;
    for (const auto& pair : comp["atoms"]) {
      if (!pair.is_array() || pair.size() != 2)
        doc_fail(where + ".atoms: each atom is a [location, weight] pair");
      al.atoms.push_back({as_double(pair[0], where + ".atoms"), as_double(pair[1], where + ".atoms")});
    }
    return al;
  }
  if (kind == "atom_family") {
    require_keys(comp, {"kind", "p", "q", "c", "n_max"}, {"i_min"}, where);
    AtomFamily f;
    f.p = as_double(comp["p"], where + ".p");
    f.q = as_double(comp["q"], where + ".q");
    f.c = as_double(comp["c"], where + ".c");
    f.i_max = as_integer(comp["n_max"], where + ".n_max");
    if (comp.contains("i_min")) f.i_min = as_integer(comp["i_min"], where + ".i_min");
    return f;
  }
  if (kind == "piecewise") {
    require_keys(comp, {"kind", "pieces"}, {}, where);
    if (!comp["pieces"].is_array()) doc_fail(where + ".pieces: expected an array");
    PiecewiseDensity pd;
    for (const auto& piece : comp["pieces"]) {
      if (!piece.is_object()) doc_fail(where + ".pieces: expected objects");
      require_keys(piece, {"a", "b", "height"}, {}, where + ".pieces");
      pd.pieces.push_back({as_double(piece["a"], where + ".pieces.a"),
                           as_double(piece["b"], where + ".pieces.b"),
                           as_double(piece["height"], where + ".pieces.height")});
    }
    return pd;
  }
  if (kind == "self_similar") {
    require_keys(comp, {"kind", "ratios", "offsets", "weights"}, {"mass"}, where);
    std::vector<double> ratios = as_double_array(comp["ratios"], where + ".ratios");
    std::vector<double> offsets = as_double_array(comp["offsets"], where + ".offsets");
    std::vector<double> weights = as_double_array(comp["weights"], where + ".weights");
    double mass = comp.contains("mass") ? as_double(comp["mass"], where + ".mass") : 1.0;
    SelfSimilar ss{Ifs(std::move(ratios), std::move(offsets)), std::move(weights), mass};
    return ss;
  }
  doc_fail(where + ": unknown component kind \"" + kind + "\"");
}

}  // namespace

// ---------------------------------------------------------------------------
// JsonValue
// ---------------------------------------------------------------------------

JsonValue JsonValue::null() { return JsonValue{}; }

JsonValue JsonValue::boolean(bool b) {
  JsonValue v;
  v.kind_ = Kind::Bool;
  v.b_ = b;
  return v;
}

JsonValue JsonValue::integer(long long i) {
  JsonValue v;
  v.kind_ = Kind::Int;
  v.i_ = i;
  return v;
}

JsonValue JsonValue::number(double d) {
  JsonValue v;
  v.kind_ = Kind::Num;
  v.d_ = d;
  return v;
}

JsonValue JsonValue::string(std::string s) {
  JsonValue v;
  v.kind_ = Kind::Str;
  v.s_ = std::move(s);
  return v;
}

JsonValue JsonValue::array() {
  JsonValue v;
  v.kind_ = Kind::Arr;
  return v;
}

JsonValue JsonValue::object() {
  JsonValue v;
  v.kind_ = Kind::Obj;
  return v;
}

void JsonValue::push(JsonValue v) {
  if (kind_ != Kind::Arr) fail(Errc::invalid_argument, "push on a non-array JSON value");
  arr_.push_back(std::move(v));
}

void JsonValue::set(const std::string& key, JsonValue v) {
  if (kind_ != Kind::Obj) fail(Errc::invalid_argument, "set on a non-object JSON value");
  obj_.emplace_back(key, std::move(v));
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void JsonValue::dump_to(std::string& out, int indent, int depth) const {
  const std::string pad(static_cast<std::size_t>(indent) * static_cast<std::size_t>(depth + 1),
                        ' ');
  const std::string close_pad(static_cast<std::size_t>(indent) * static_cast<std::size_t>(depth),
                              ' ');
  switch (kind_) {
    case Kind::Null: out += "null"; break;
    case Kind::Bool: out += b_ ? "true" : "false"; break;
    case Kind::Int: out += std::to_string(i_); break;
    case Kind::Num: out += format_double(d_); break;
    case Kind::Str:
      out += '"';
      out += escape_json(s_);
      out += '"';
      break;
    case Kind::Arr: {
      if (arr_.empty()) {
        out += "[]";
        break;
      }
      out += "[\n";
      for (std::size_t i = 0; i < arr_.size(); ++i) {
        out += pad;
        arr_[i].dump_to(out, indent, depth + 1);
        if (i + 1 < arr_.size()) out += ',';
        out += '\n';
      }
      out += close_pad;
      out += ']';
      break;
    }
    case Kind::Obj: {
      if (obj_.empty()) {
        out += "{}";
        break;
      }
      out += "{\n";
      for (std::size_t i = 0; i < obj_.size(); ++i) {
        out += pad;
        out += '"';
        out += escape_json(obj_[i].first);
        out += "\": ";
        obj_[i].second.dump_to(out, indent, depth + 1);
        if (i + 1 < obj_.size()) out += ',';
        out += '\n';
      }
      out += close_pad;
      out += '}';
      break;
    }
  }
}

std::string JsonValue::dump(int indent) const {
  std::string out;
  dump_to(out, indent, 0);
  out += '\n';
  return out;
}

// ---------------------------------------------------------------------------
// Measure documents
// ---------------------------------------------------------------------------

SymbolicMeasure parse_measure_document(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    auto [line, col] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    fail(Errc::parse_error, "line " + std::to_string(line) + ", column " + std::to_string(col) +
                                ": " + e.what());
  }
  if (!doc.is_object()) doc_fail("document root must be an object");
  require_keys(doc, {"kind", "components"}, {}, "document");
  if (!doc["kind"].is_string() || doc["kind"].get<std::string>() != "mixture")
    doc_fail("document kind must be \"mixture\"");
  if (!doc["components"].is_array()) doc_fail("\"components\" must be an array");
  std::vector<MeasureComponent> comps;
  comps.reserve(doc["components"].size());
  for (std::size_t i = 0; i < doc["components"].size(); ++i)
    comps.push_back(parse_component(doc["components"][i], i));
  return SymbolicMeasure(std::move(comps));
}

std::string serialize_measure_document(const SymbolicMeasure& mu) {
  JsonValue root = JsonValue::object();
  root.set("kind", JsonValue::string("mixture"));
  JsonValue comps = JsonValue::array();
  for (const MeasureComponent& comp : mu.components()) {
    JsonValue c = JsonValue::object();
    if (const auto* al = std::get_if<AtomList>(&comp)) {
      c.set("kind", JsonValue::string("atoms"));
      JsonValue atoms = JsonValue::array();
      for (const auto& [x, w] : al->atoms) {
        JsonValue pair = JsonValue::array();
        pair.push(JsonValue::number(x));
        pair.push(JsonValue::number(w));
        atoms.push(std::move(pair));
      }
      c.set("atoms", std::move(atoms));
    } else if (const auto* f = std::get_if<AtomFamily>(&comp)) {
      c.set("kind", JsonValue::string("atom_family"));
      c.set("p", JsonValue::number(f->p));
      c.set("q", JsonValue::number(f->q));
      c.set("c", JsonValue::number(f->c));
      c.set("n_max", JsonValue::integer(f->i_max));
      if (f->i_min != 1) c.set("i_min", JsonValue::integer(f->i_min));
    } else if (const auto* pd = std::get_if<PiecewiseDensity>(&comp)) {
      c.set("kind", JsonValue::string("piecewise"));
      JsonValue pieces = JsonValue::array();
      for (const DensityPiece& p : pd->pieces) {
        JsonValue piece = JsonValue::object();
        piece.set("a", JsonValue::number(p.lo));
        piece.set("b", JsonValue::number(p.hi));
        piece.set("height", JsonValue::number(p.height));
        pieces.push(std::move(piece));
      }
      c.set("pieces", std::move(pieces));
    } else if (const auto* ss = std::get_if<SelfSimilar>(&comp)) {
      c.set("kind", JsonValue::string("self_similar"));
      JsonValue ratios = JsonValue::array(), offsets = JsonValue::array(),
                weights = JsonValue::array();
      for (double r : ss->ifs.ratios()) ratios.push(JsonValue::number(r));
      for (double o : ss->ifs.offsets()) offsets.push(JsonValue::number(o));
      for (double w : ss->weights) weights.push(JsonValue::number(w));
      c.set("ratios", std::move(ratios));
      c.set("offsets", std::move(offsets));
      c.set("weights", std::move(weights));
      c.set("mass", JsonValue::number(ss->mass));
    }
    comps.push(std::move(c));
  }
  root.set("components", std::move(comps));
  return root.dump();
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io_error, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) fail(Errc::io_error, "read failed on " + path);
  return ss.str();
}

void atomic_write_text(const std::string& path, const std::string& text) {
  namespace fs = std::filesystem;
  std::error_code ec;
  const fs::path target(path);
  if (target.has_parent_path()) {
    fs::create_directories(target.parent_path(), ec);
    if (ec) fail(Errc::io_error, "cannot create directory " + target.parent_path().string());
  }
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(Errc::io_error, "cannot open " + tmp.string());
    out << text;
    out.flush();
    if (!out) fail(Errc::io_error, "write failed on " + tmp.string());
  }
  fs::rename(tmp, target, ec);
  if (ec) fail(Errc::io_error, "cannot rename " + tmp.string() + " to " + path);
}

SymbolicMeasure load_measure(const std::string& path) {
  return parse_measure_document(read_text_file(path));
}

void save_measure(const SymbolicMeasure& mu, const std::string& path) {
  atomic_write_text(path, serialize_measure_document(mu));
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

std::string csv_scaling(const ScalingSeries& series) {
  std::string out = "log10_r,log10_value\n";
  for (const auto& [r, v] : series.points) {
    out += format_double(std::log10(r));
    out += ',';
    out += v > 0 ? format_double(std::log10(v)) : "-inf";
    out += '\n';
  }
  return out;
}

std::string csv_convergence(const std::vector<double>& series) {
  std::string out = "n,value\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    out += std::to_string(i + 1);
    out += ',';
    out += format_double(series[i]);
    out += '\n';
  }
  return out;
}

std::string csv_claims(const VerifyReport& report) {
  std::string out = "example,claim,pass,margin,basis,detail\n";
  auto csv_quote = [](const std::string& s) {
    std::string q = "\"";
    for (char ch : s) {
      if (ch == '"') q += "\"\"";
      else q += ch;
    }
    q += '"';
    return q;
  };
  for (const VerifyClaim& c : report.claims) {
    out += report.example;
    out += ',';
    out += csv_quote(c.description);
    out += ',';
    out += c.pass ? "1" : "0";
    out += ',';
    out += format_double(c.margin);
    out += ',';
    out += csv_quote(c.basis);
    out += ',';
    out += csv_quote(c.detail);
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON views of library types
// ---------------------------------------------------------------------------

JsonValue json_of_dimension_table(const DimensionTable& t) {
  JsonValue out = JsonValue::object();
  const auto entries = t.as_array();
  const auto& labels = DimensionTable::names();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    JsonValue e = JsonValue::object();
    e.set("status", JsonValue::string(entries[i].exact() ? "exact" : "unsupported"));
    if (entries[i].exact()) e.set("value", JsonValue::number(entries[i].value));
    out.set(labels[i], std::move(e));
  }
  return out;
}

JsonValue json_of_scaling_series(const ScalingSeries& s) {
  JsonValue out = JsonValue::object();
  out.set("method", JsonValue::string(s.method));
  out.set("delta", JsonValue::number(s.delta));
  out.set("samples", JsonValue::integer(s.samples));
  out.set("seed", JsonValue::integer(static_cast<long long>(s.seed)));
  JsonValue pts = JsonValue::array();
  for (const auto& [r, v] : s.points) {
    JsonValue p = JsonValue::array();
    p.push(JsonValue::number(r));
    p.push(JsonValue::number(v));
    pts.push(std::move(p));
  }
  out.set("points", std::move(pts));
  return out;
}

JsonValue json_of_estimate(const DimensionEstimate& e) {
  JsonValue out = JsonValue::object();
  out.set("slope", JsonValue::number(e.slope));
  out.set("std_error", JsonValue::number(e.std_error));
  JsonValue win = JsonValue::array();
  win.push(JsonValue::number(e.window.first));
  win.push(JsonValue::number(e.window.second));
  out.set("window", std::move(win));
  if (!e.note.empty()) out.set("note", JsonValue::string(e.note));
  out.set("series", json_of_scaling_series(e.series));
  return out;
}

JsonValue json_of_test_set(const BorelTestSet& s) {
  JsonValue out = JsonValue::object();
  out.set("description", JsonValue::string(s.describe()));
  JsonValue ivs = JsonValue::array();
  for (const Interval& iv : s.intervals()) {
    JsonValue one = JsonValue::object();
    one.set("lo", JsonValue::number(iv.lo));
    one.set("hi", JsonValue::number(iv.hi));
    one.set("closed_lo", JsonValue::boolean(iv.closed_lo));
    one.set("closed_hi", JsonValue::boolean(iv.closed_hi));
    ivs.push(std::move(one));
  }
  out.set("intervals", std::move(ivs));
  JsonValue pts = JsonValue::array();
  for (double x : s.points()) pts.push(JsonValue::number(x));
  out.set("points", std::move(pts));
  if (s.skeleton_tag()) out.set("skeleton", JsonValue::string(s.skeleton_tag()->description));
  if (s.co_attractor()) out.set("attractor_complement", JsonValue::boolean(true));
  return out;
}

JsonValue json_of_verdict(const ConvergenceVerdict& v) {
  JsonValue out = JsonValue::object();
  out.set("mode", JsonValue::string(v.mode));
  out.set("status", JsonValue::string(verdict_status_name(v.status)));
  out.set("horizon", JsonValue::integer(v.horizon));
  out.set("tol", JsonValue::number(v.tol));
  if (!v.certificate.empty()) out.set("certificate", JsonValue::string(v.certificate));
  if (v.witness) {
    out.set("witness", json_of_test_set(*v.witness));
    out.set("witness_gap", JsonValue::number(v.witness_gap));
  }
  JsonValue series = JsonValue::array();
  for (double d : v.series) series.push(JsonValue::number(d));
  out.set("series", std::move(series));
  return out;
}

JsonValue json_of_verify_report(const VerifyReport& r) {
  JsonValue out = JsonValue::object();
  out.set("example", JsonValue::string(r.example));
  out.set("basis", JsonValue::string(r.basis));
  out.set("all_pass", JsonValue::boolean(r.all_pass()));
  JsonValue claims = JsonValue::array();
  for (const VerifyClaim& c : r.claims) {
    JsonValue one = JsonValue::object();
    one.set("claim", JsonValue::string(c.description));
    one.set("pass", JsonValue::boolean(c.pass));
    one.set("margin", JsonValue::number(c.margin));
    one.set("basis", JsonValue::string(c.basis));
    if (!c.detail.empty()) one.set("detail", JsonValue::string(c.detail));
    claims.push(std::move(one));
  }
  out.set("claims", std::move(claims));
  return out;
}

JsonValue json_of_semicontinuity(const SemicontinuityReport& r) {
  JsonValue out = JsonValue::object();
  out.set("sequence", JsonValue::string(r.sequence));
  out.set("certified_mode",
          r.certified_mode.empty() ? JsonValue::null() : JsonValue::string(r.certified_mode));
  out.set("ok", JsonValue::boolean(r.ok()));
  JsonValue rows = JsonValue::array();
  for (const SemicontinuityRow& row : r.rows) {
    JsonValue one = JsonValue::object();
    one.set("mapping", JsonValue::string(row.mapping));
    one.set("direction", JsonValue::string(row.direction));
    one.set("verdict", JsonValue::string(semi_verdict_name(row.verdict)));
    if (row.verdict != SemiVerdict::NotApplicable || !row.note.empty()) {
      one.set("proxy", JsonValue::number(row.proxy));
      one.set("limit", JsonValue::number(row.limit));
      one.set("margin", JsonValue::number(row.margin));
    }
    if (!row.note.empty()) one.set("note", JsonValue::string(row.note));
    rows.push(std::move(one));
  }
  out.set("rows", std::move(rows));
  return out;
}

}  // namespace dimlab
