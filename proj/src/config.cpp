#include "tentfield/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "tentfield/errors.hpp"
#include "tentfield/geometry_suite.hpp"

namespace tentfield {

const char* to_string(ConfigIssue issue) {
  switch (issue) {
    case ConfigIssue::General: return "general";
    case ConfigIssue::Parse: return "parse";
    case ConfigIssue::UnknownField: return "unknown_field";
    case ConfigIssue::FieldType: return "field_type";
    case ConfigIssue::ExponentRange: return "exponent_range";
    case ConfigIssue::ExponentSum: return "exponent_sum";
    case ConfigIssue::Smoothness: return "smoothness";
    case ConfigIssue::ConeAngle: return "cone_angle";
    case ConfigIssue::Grid: return "grid";
    case ConfigIssue::Curve: return "curve";
  }
  return "general";
}

namespace {

using nlohmann::json;

// Reads members of one JSON object, rejecting keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where("") + ": expected an object", ConfigIssue::FieldType, path_);
  }
  ~Section() noexcept(false) {
    if (std::uncaught_exceptions()) return;
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key()))
        throw ConfigError("unknown config field '" + where(it.key()) + "'", ConfigIssue::UnknownField,
                          where(it.key()));
  }

  template <class T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError("config field '" + where(key) + "' has the wrong type", ConfigIssue::FieldType,
                        where(key));
    }
  }

  const json* child(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string where(const std::string& key) const {
    if (path_.empty()) return key;
    return key.empty() ? path_ : path_ + "." + key;
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read(const json& j, const std::string& path, CurveSpec& c) {
  Section s(j, path);
  s.get("kind", c.kind);
  s.get("cone", c.cone);
  s.get("uv", c.uv);
  s.get("half_length", c.half_length);
  s.get("segments", c.segments);
  s.get("tail", c.tail);
  s.get("seed", c.seed);
  s.get("file", c.file);
}

void read(const json& j, const std::string& path, MultiplierChoice& m) {
  Section s(j, path);
  s.get("name", m.name);
  if (auto p = s.child("params")) m.params = *p;
}

void read(const json& j, const std::string& path, AlphaGrid& g) {
  Section s(j, path);
  s.get("a0", g.a0);
  s.get("h", g.h);
  s.get("n", g.n);
}

json write(const CurveSpec& c) {
  return {{"kind", c.kind}, {"cone", c.cone}, {"uv", c.uv}, {"half_length", c.half_length},
          {"segments", c.segments}, {"tail", c.tail}, {"seed", c.seed}, {"file", c.file}};
}
json write(const MultiplierChoice& m) { return {{"name", m.name}, {"params", m.params}}; }
json write(const AlphaGrid& g) { return {{"a0", g.a0}, {"h", g.h}, {"n", g.n}}; }

void check_curve(const CurveSpec& c, const std::string& field) {
  static const std::set<std::string> kinds{"line", "point", "random", "file"};
  if (!kinds.count(c.kind))
    throw ConfigError("curve kind '" + c.kind + "' is not one of line, point, random, file",
                      ConfigIssue::Curve, field + ".kind");
  if (c.cone < 1 || c.cone > 3)
    throw ConfigError("curve cone index must be 1, 2 or 3", ConfigIssue::Curve, field + ".cone");
  if (c.kind == "file" && c.file.empty())
    throw ConfigError("curve kind 'file' needs a file path", ConfigIssue::Curve, field + ".file");
  if (c.kind == "random" && c.segments < 1)
    throw ConfigError("random curve needs at least one segment", ConfigIssue::Curve, field + ".segments");
}

void check_alpha(const AlphaGrid& g, const std::string& field) {
  if (!(g.h > 0) || g.n < 2)
    throw ConfigError("alpha grid needs h > 0 and n >= 2", ConfigIssue::Grid, field);
}

void positive(double v, const std::string& field) {
  if (!(v > 0)) throw ConfigError("config field '" + field + "' must be positive", ConfigIssue::Grid, field);
}

}  // namespace

void validate(const ExperimentConfig& c) {
  constexpr double pi = std::numbers::pi;
  for (int i = 0; i < 3; ++i)
    if (!(c.p[i] > 2.0) || !std::isfinite(c.p[i]))
      throw ConfigError("exponent p" + std::to_string(i + 1) + " = " + std::to_string(c.p[i]) +
                            " must satisfy 2 < p < infinity",
                        ConfigIssue::ExponentRange, "p");
  double sum = 1.0 / c.p[0] + 1.0 / c.p[1] + 1.0 / c.p[2];
  if (std::abs(sum - 1.0) > 1e-12) {
    std::ostringstream os;
    os.precision(17);
    os << "exponents must satisfy 1/p1 + 1/p2 + 1/p3 = 1, got " << sum;
    throw ConfigError(os.str(), ConfigIssue::ExponentSum, "p");
  }
  if (!(c.s > 1.0) || !std::isfinite(c.s))
    throw ConfigError("smoothness s must exceed 1", ConfigIssue::Smoothness, "s");
  if (!(c.theta0 >= 0.0 && c.theta0 < pi / 6.0))
    throw ConfigError("theta0 must lie in [0, pi/6)", ConfigIssue::ConeAngle, "theta0");

  check_curve(c.curve, "curve");
  check_curve(c.form.curve, "form.curve");
  check_curve(c.bessel.curve, "bessel.curve");
  if (c.bessel.lattice_levels < 0)
    throw ConfigError("bessel.lattice_levels must be >= 0", ConfigIssue::Grid, "bessel.lattice_levels");
  check_alpha(c.alpha, "alpha_grid");
  check_alpha(c.bessel.alpha, "bessel.alpha_grid");
  positive(c.beta.grid.h, "beta_grid.h");
  if (c.beta.grid.nu == 0 || c.beta.grid.nv == 0)
    throw ConfigError("beta grid must be nonempty", ConfigIssue::Grid, "beta_grid");
  if (c.beta.d_min < 0) throw ConfigError("beta_grid.d_min must be >= 0", ConfigIssue::Grid, "beta_grid.d_min");
  if (c.window.n < 8) throw ConfigError("window grid needs n >= 8", ConfigIssue::Grid, "window_grid.n");
  positive(c.window.extent, "window_grid.extent");
  if (c.kernel.n < 8) throw ConfigError("kernel grid needs n >= 8", ConfigIssue::Grid, "kernel_grid.n");
  positive(c.kernel.half_width, "kernel_grid.half_width");
  if (c.eps < 0) throw ConfigError("eps must be >= 0", ConfigIssue::Grid, "eps");
  for (double l : c.lambda) positive(l, "lambda");
  if (c.lattice_levels < 0) throw ConfigError("lattice_levels must be >= 0", ConfigIssue::Grid, "lattice_levels");
  if (c.truncation_A < 0) throw ConfigError("truncation_A must be >= 0", ConfigIssue::Grid, "truncation_A");

  if (c.hormander.rings < 0 || c.hormander.directions < 1)
    throw ConfigError("hormander rings >= 0 and directions >= 1", ConfigIssue::Grid, "hormander");
  if (c.form.identity_n < 8 || c.form.alpha_n < 8 || c.form.beta_n < 2 || c.form.kernel_n < 8)
    throw ConfigError("form grids are too small", ConfigIssue::Grid, "form");
  positive(c.form.alpha_length, "form.alpha_length");
  positive(c.form.beta_extent, "form.beta_extent");
  positive(c.form.tent_alpha_length, "form.tent_alpha_length");
  positive(c.form.tent_beta_extent, "form.tent_beta_extent");
  if (c.bessel.signal != "power_law" && c.bessel.signal != "bursts")
    throw ConfigError("bessel.signal must be power_law or bursts", ConfigIssue::General, "bessel.signal");
  if (c.bessel.lambda_steps < 2 && c.lambda.empty())
    throw ConfigError("bessel.lambda_steps must be >= 2", ConfigIssue::Grid, "bessel.lambda_steps");
  positive(c.bessel.gamma_spacing, "bessel.gamma_spacing");
  for (double r : c.weak.ratios)
    if (!(r >= 1.0)) throw ConfigError("weak.ratios are a1/a2 >= 1", ConfigIssue::Grid, "weak.ratios");
  for (double a : c.weak.a2) positive(a, "weak.a2");
  for (double a : c.weak.a3_fraction)
    if (!(a > 0 && a <= 1)) throw ConfigError("weak.a3_fraction must lie in (0, 1]", ConfigIssue::Grid, "weak.a3_fraction");
  positive(c.weak.length, "weak.length");
  if (c.weak.n < 16) throw ConfigError("weak.n must be >= 16", ConfigIssue::Grid, "weak.n");
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  {
    Section s(j, "");
    s.get("theta0", c.theta0);
    s.get("s", c.s);
    s.get("p", c.p);
    s.get("seed", c.seed);
    s.get("threads", c.threads);
    s.get("out", c.out);
    if (auto v = s.child("curve")) read(*v, "curve", c.curve);
    if (auto v = s.child("curve_file")) {
      if (!v->is_string()) throw ConfigError("config field 'curve_file' has the wrong type", ConfigIssue::FieldType, "curve_file");
      c.curve.kind = "file";
      c.curve.file = v->get<std::string>();
    }
    if (auto v = s.child("multiplier")) read(*v, "multiplier", c.multiplier);
    s.get("eps", c.eps);
    if (auto v = s.child("alpha_grid")) read(*v, "alpha_grid", c.alpha);
    if (auto v = s.child("beta_grid")) {
      Section b(*v, "beta_grid");
      b.get("u", c.beta.grid.u_center);
      b.get("v", c.beta.grid.v_center);
      b.get("h", c.beta.grid.h);
      b.get("nu", c.beta.grid.nu);
      b.get("nv", c.beta.grid.nv);
      b.get("d_min", c.beta.d_min);
    }
    if (auto v = s.child("window_grid")) {
      Section w(*v, "window_grid");
      w.get("n", c.window.n);
      w.get("extent", c.window.extent);
    }
    if (auto v = s.child("kernel_grid")) {
      Section w(*v, "kernel_grid");
      w.get("n", c.kernel.n);
      w.get("half_width", c.kernel.half_width);
    }
    s.get("lambda", c.lambda);
    s.get("lattice_levels", c.lattice_levels);
    s.get("truncation_A", c.truncation_A);
    if (auto v = s.child("geometry")) {
      Section g(*v, "geometry");
      g.get("configs", c.geometry.configs);
      g.get("apollonius_points", c.geometry.apollonius_points);
      g.get("constant_samples", c.geometry.constant_samples);
    }
    if (auto v = s.child("hormander")) {
      Section h(*v, "hormander");
      h.get("rings", c.hormander.rings);
      h.get("directions", c.hormander.directions);
      h.get("centers", c.hormander.centers);
      h.get("random_multipliers", c.hormander.random_multipliers);
      h.get("beta_samples", c.hormander.beta_samples);
      h.get("refine", c.hormander.refine);
    }
    if (auto v = s.child("form")) {
      Section f(*v, "form");
      auto& F = c.form;
      if (auto w = f.child("curve")) read(*w, "form.curve", F.curve);
      if (auto w = f.child("multiplier")) read(*w, "form.multiplier", F.multiplier);
      f.get("identity_n", F.identity_n);
      f.get("alpha_n", F.alpha_n);
      f.get("alpha_length", F.alpha_length);
      f.get("beta_n", F.beta_n);
      f.get("beta_extent", F.beta_extent);
      f.get("kernel_n", F.kernel_n);
      f.get("refine", F.refine);
      f.get("tents", F.tents);
      f.get("tent_kernel_n", F.tent_kernel_n);
      f.get("tent_alpha_n", F.tent_alpha_n);
      f.get("tent_alpha_length", F.tent_alpha_length);
      f.get("tent_beta_n", F.tent_beta_n);
      f.get("tent_beta_extent", F.tent_beta_extent);
      f.get("tent_d_min", F.tent_d_min);
    }
    if (auto v = s.child("selection")) {
      Section f(*v, "selection");
      f.get("fields", c.selection.fields);
      f.get("bursts", c.selection.bursts);
      f.get("mutations", c.selection.mutations);
      f.get("scaling", c.selection.scaling);
    }
    if (auto v = s.child("bessel")) {
      Section f(*v, "bessel");
      auto& B = c.bessel;
      if (auto w = f.child("curve")) read(*w, "bessel.curve", B.curve);
      if (auto w = f.child("alpha_grid")) read(*w, "bessel.alpha_grid", B.alpha);
      f.get("lattice_levels", B.lattice_levels);
      f.get("signal", B.signal);
      f.get("decay", B.decay);
      f.get("bursts", B.bursts);
      f.get("lambda_steps", B.lambda_steps);
      f.get("gamma_spacing", B.gamma_spacing);
      f.get("field_file", B.field_file);
      f.get("save_field", B.save_field);
    }
    if (auto v = s.child("weak")) {
      Section f(*v, "weak");
      auto& W = c.weak;
      f.get("ratios", W.ratios);
      f.get("a2", W.a2);
      f.get("a3_fraction", W.a3_fraction);
      f.get("trials", W.trials);
      f.get("length", W.length);
      f.get("n", W.n);
      f.get("refine", W.refine);
    }
  }
  validate(c);
  return c;
}

json to_json(const ExperimentConfig& c) {
  const auto& F = c.form;
  const auto& B = c.bessel;
  const auto& W = c.weak;
  const auto& H = c.hormander;
  return {
      {"theta0", c.theta0},
      {"s", c.s},
      {"p", c.p},
      {"seed", c.seed},
      {"threads", c.threads},
      {"out", c.out},
      {"curve", write(c.curve)},
      {"multiplier", write(c.multiplier)},
      {"eps", c.eps},
      {"alpha_grid", write(c.alpha)},
      {"beta_grid",
       {{"u", c.beta.grid.u_center}, {"v", c.beta.grid.v_center}, {"h", c.beta.grid.h},
        {"nu", c.beta.grid.nu}, {"nv", c.beta.grid.nv}, {"d_min", c.beta.d_min}}},
      {"window_grid", {{"n", c.window.n}, {"extent", c.window.extent}}},
      {"kernel_grid", {{"n", c.kernel.n}, {"half_width", c.kernel.half_width}}},
      {"lambda", c.lambda},
      {"lattice_levels", c.lattice_levels},
      {"truncation_A", c.truncation_A},
      {"geometry",
       {{"configs", c.geometry.configs}, {"apollonius_points", c.geometry.apollonius_points},
        {"constant_samples", c.geometry.constant_samples}}},
      {"hormander",
       {{"rings", H.rings}, {"directions", H.directions}, {"centers", H.centers},
        {"random_multipliers", H.random_multipliers}, {"beta_samples", H.beta_samples},
        {"refine", H.refine}}},
      {"form",
       {{"curve", write(F.curve)}, {"multiplier", write(F.multiplier)}, {"identity_n", F.identity_n},
        {"alpha_n", F.alpha_n}, {"alpha_length", F.alpha_length}, {"beta_n", F.beta_n},
        {"beta_extent", F.beta_extent}, {"kernel_n", F.kernel_n}, {"refine", F.refine},
        {"tents", F.tents}, {"tent_kernel_n", F.tent_kernel_n}, {"tent_alpha_n", F.tent_alpha_n},
        {"tent_alpha_length", F.tent_alpha_length}, {"tent_beta_n", F.tent_beta_n},
        {"tent_beta_extent", F.tent_beta_extent}, {"tent_d_min", F.tent_d_min}}},
      {"selection",
       {{"fields", c.selection.fields}, {"bursts", c.selection.bursts},
        {"mutations", c.selection.mutations}, {"scaling", c.selection.scaling}}},
      {"bessel",
       {{"curve", write(B.curve)}, {"alpha_grid", write(B.alpha)},
        {"lattice_levels", B.lattice_levels}, {"signal", B.signal}, {"decay", B.decay},
        {"bursts", B.bursts}, {"lambda_steps", B.lambda_steps}, {"gamma_spacing", B.gamma_spacing},
        {"field_file", B.field_file}, {"save_field", B.save_field}}},
      {"weak",
       {{"ratios", W.ratios}, {"a2", W.a2}, {"a3_fraction", W.a3_fraction}, {"trials", W.trials},
        {"length", W.length}, {"n", W.n}, {"refine", W.refine}}},
  };
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path, ConfigIssue::Parse);
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what(), ConfigIssue::Parse);
  }
  return config_from_json(j);
}

SingularCurve curve_from_json(const json& j) {
  auto fail = [](const std::string& msg, const std::string& field) {
    throw ConfigError("curve: " + msg, ConfigIssue::Curve, field);
  };
  if (!j.is_object()) fail("expected an object", "");
  int cone = 0;
  double theta0 = 0.0;
  try {
    cone = j.at("cone_index").get<int>();
    theta0 = j.at("theta0").get<double>();
  } catch (const json::exception&) {
    fail("needs integer cone_index and numeric theta0", "cone_index");
  }
  if (cone < 1 || cone > 3) fail("cone_index must be 1, 2 or 3", "cone_index");
  if (!(theta0 >= 0.0 && theta0 < std::numbers::pi / 6.0)) fail("theta0 must lie in [0, pi/6)", "theta0");
  std::string basis = j.value("basis", std::string("xyz"));
  if (basis != "xyz" && basis != "uv") fail("basis must be xyz or uv", "basis");
  std::string mode = j.value("mode", std::string("polyline"));
  if (mode != "polyline" && mode != "points") fail("mode must be polyline or points", "mode");
  if (!j.contains("points") || !j["points"].is_array() || j["points"].empty())
    fail("needs a nonempty points array", "points");

  std::vector<PlaneVector> pts;
  std::size_t dim = basis == "uv" ? 2 : 3;
  for (std::size_t i = 0; i < j["points"].size(); ++i) {
    const auto& p = j["points"][i];
    if (!p.is_array() || p.size() != dim || !std::all_of(p.begin(), p.end(), [](const json& x) { return x.is_number(); }))
      fail("point " + std::to_string(i) + " must be " + std::to_string(dim) + " numbers", "points");
    if (dim == 2) {
      pts.push_back(PlaneBasis::from_uv(p[0].get<double>(), p[1].get<double>()));
    } else {
      PlaneVector v(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
      if (std::abs(v.sum()) > 1e-9 * std::max(1.0, v.norm()))
        fail("point " + std::to_string(i) + " does not sum to zero", "points");
      pts.push_back(project_to_plane(v));
    }
  }
  if (auto v = SingularCurve::first_cone_violation(pts, cone, theta0)) {
    std::ostringstream os;
    os << "points " << v->first << " and " << v->second << " violate the cone condition ("
       << v->lhs << " < " << v->rhs << ")";
    fail(os.str(), "points");
  }
  return SingularCurve(std::move(pts), cone, theta0,
                       mode == "points" ? CurveMode::PointCloud : CurveMode::Polyline);
}

SingularCurve load_curve(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open curve file " + path, ConfigIssue::Curve, "curve.file");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what(), ConfigIssue::Parse, "curve.file");
  }
  try {
    return curve_from_json(j);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what(), e.issue, e.field);
  }
}

SingularCurve build_curve(const CurveSpec& cs, double theta0) {
  PlaneVector c = PlaneBasis::from_uv(cs.uv[0], cs.uv[1]);
  if (cs.kind == "line") {
    PlaneVector ax = cone_axis(cs.cone);
    return SingularCurve({c - ax * cs.half_length, c + ax * cs.half_length}, cs.cone, theta0);
  }
  if (cs.kind == "point") return SingularCurve({c}, cs.cone, theta0);
  if (cs.kind == "random") {
    std::mt19937_64 rng(cs.seed);
    return random_cone_curve(rng, cs.cone, theta0, cs.segments, cs.tail).translated(c);
  }
  if (cs.kind == "file") return load_curve(cs.file);
  throw ConfigError("unknown curve kind " + cs.kind, ConfigIssue::Curve, "curve.kind");
}

MultiplierSpec build_multiplier(const MultiplierChoice& m) {
  try {
    return builtin(m.name, m.params);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("multiplier '" + m.name + "': " + e.what(), ConfigIssue::General, "multiplier");
  }
}

}  // namespace tentfield
