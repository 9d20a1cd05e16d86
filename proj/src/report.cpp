#include "tentfield/report.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "tentfield/errors.hpp"

namespace tentfield {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

constexpr char kMagic[8] = {'T', 'F', 'F', 'I', 'E', 'L', 'D', '1'};

static_assert(std::endian::native == std::endian::little, "field container assumes little endian");

}  // namespace

void Table::add(std::vector<Cell> row) {
  if (row.size() != columns.size()) throw std::invalid_argument("table " + name + ": row width differs from header");
  rows.push_back(std::move(row));
}

std::string Table::csv() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << csv_quote(columns[i]);
  os << "\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) os << ",";
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) os << format_double(v);
            else if constexpr (std::is_same_v<T, long long>) os << v;
            else os << csv_quote(v);
          },
          r[i]);
    }
    os << "\n";
  }
  return os.str();
}

const char* to_string(Status s) {
  switch (s) {
    case Status::Pass: return "pass";
    case Status::Fail: return "fail";
    case Status::Constant: return "constant";
  }
  return "fail";
}

void Report::pass(const std::string& name, json value, std::string detail) {
  checks.push_back({name, Status::Pass, std::move(value), std::move(detail)});
}

void Report::fail(const std::string& name, json value, std::string detail) {
  checks.push_back({name, Status::Fail, std::move(value), std::move(detail)});
}

void Report::check(const std::string& name, bool ok, json value, std::string detail) {
  checks.push_back({name, ok ? Status::Pass : Status::Fail, std::move(value), std::move(detail)});
}

void Report::constant(const std::string& name, double value, std::string detail) {
  checks.push_back({name, Status::Constant, value, std::move(detail)});
}

void Report::add(const CheckResult& r) {
  json v = {{"trials", r.trials}, {"violations", r.violations}, {"worst_margin", r.worst_margin}};
  if (!r.witness.empty()) v["witness"] = r.witness;
  check(r.name, r.passed(), v, r.note);
}

void Report::merge(const Report& other) {
  for (const auto& c : other.checks) checks.push_back(c);
  for (const auto& t : other.tables) tables.push_back(t);
  for (auto it = other.artifacts.begin(); it != other.artifacts.end(); ++it) artifacts[it.key()] = it.value();
}

const ReportEntry* Report::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

bool Report::passed() const {
  for (const auto& c : checks)
    if (c.status == Status::Fail) return false;
  return true;
}

json Report::to_json() const {
  json cs = json::array();
  for (const auto& c : checks) {
    json e = {{"name", c.name}, {"status", to_string(c.status)}};
    if (!c.value.is_null()) e["value"] = c.value;
    if (!c.detail.empty()) e["detail"] = c.detail;
    cs.push_back(e);
  }
  json ts = json::array();
  for (const auto& t : tables) ts.push_back({{"name", t.name}, {"columns", t.columns}, {"rows", t.rows.size()}});
  return {{"command", command}, {"meta", meta},       {"status", passed() ? "pass" : "fail"},
          {"exit_code", exit_code()}, {"checks", cs}, {"tables", ts},
          {"artifacts", artifacts}};
}

std::vector<std::string> Report::write(const std::string& dir) const {
  fs::create_directories(dir);
  std::vector<std::string> files;
  auto put = [&](const std::string& name, const std::string& text) {
    fs::path p = fs::path(dir) / name;
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << text;
    files.push_back(p.string());
  };
  put(command + ".json", to_json().dump(2) + "\n");
  for (const auto& t : tables) put(command + "_" + t.name + ".csv", t.csv());
  return files;
}

void save_field(const std::string& path, const Field& F, const json& extra) {
  json betas = json::array();
  for (const auto& s : F.betas.samples)
    betas.push_back({s.beta[0], s.beta[1], s.beta[2], s.d, s.nearest[0], s.nearest[1], s.nearest[2], s.weight});
  json h = {{"format", "tentfield-field"},
            {"version", 1},
            {"dtype", "complex128"},
            {"order", "row-major"},
            {"shape", {F.betas.size(), F.alpha.n}},
            {"alpha", {{"a0", F.alpha.a0}, {"h", F.alpha.h}, {"n", F.alpha.n}}},
            {"cell_area", F.betas.cell_area},
            {"beta_columns", {"b1", "b2", "b3", "d", "g1", "g2", "g3", "weight"}},
            {"betas", betas}};
  if (!extra.is_null()) h["extra"] = extra;
  std::string text = h.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  std::uint64_t len = text.size();
  out.write(kMagic, 8);
  out.write(reinterpret_cast<const char*>(&len), 8);
  out.write(text.data(), static_cast<std::streamsize>(len));
  static_assert(sizeof(cplx) == 16);
  out.write(reinterpret_cast<const char*>(F.values.data()),
            static_cast<std::streamsize>(F.values.size() * sizeof(cplx)));
  if (!out) throw std::runtime_error("short write on " + path);
}

Field load_field(const std::string& path, json* header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open field file " + path, ConfigIssue::General, "bessel.field_file");
  char magic[8];
  std::uint64_t len = 0;
  in.read(magic, 8);
  in.read(reinterpret_cast<char*>(&len), 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0 || len > (1ull << 32))
    throw ConfigError(path + ": not a field container", ConfigIssue::Parse, "bessel.field_file");
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  json h;
  try {
    h = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": bad header: " + e.what(), ConfigIssue::Parse, "bessel.field_file");
  }
  if (h.value("dtype", "") != "complex128" || h.value("order", "") != "row-major")
    throw ConfigError(path + ": unsupported dtype or order", ConfigIssue::Parse, "bessel.field_file");
  AlphaGrid a{h["alpha"]["a0"].get<double>(), h["alpha"]["h"].get<double>(), h["alpha"]["n"].get<std::size_t>()};
  BetaSet b;
  b.cell_area = h["cell_area"].get<double>();
  for (const auto& r : h["betas"])
    b.samples.push_back({PlaneVector(r[0], r[1], r[2]), r[3].get<double>(), PlaneVector(r[4], r[5], r[6]),
                         r[7].get<double>()});
  auto shape = h["shape"].get<std::vector<std::size_t>>();
  if (shape.size() != 2 || shape[0] != b.size() || shape[1] != a.n)
    throw ConfigError(path + ": shape disagrees with the grids", ConfigIssue::Parse, "bessel.field_file");
  Field F(a, std::move(b));
  in.read(reinterpret_cast<char*>(F.values.data()), static_cast<std::streamsize>(F.values.size() * sizeof(cplx)));
  if (!in) throw ConfigError(path + ": truncated data", ConfigIssue::Parse, "bessel.field_file");
  if (header) *header = std::move(h);
  return F;
}

}  // namespace tentfield
