#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "tentfield/bumps.hpp"
#include "tentfield/geometry.hpp"
#include "tentfield/modelform.hpp"
#include "tentfield/multiplier.hpp"

namespace tentfield {

// Where the singular curve comes from:
//   line   straight line through `uv` along the cone axis of `cone`
//   point  the single point `uv`
//   random random_cone_curve(seed, cone, theta0, segments, tail)
//   file   JSON curve file, see load_curve
struct CurveSpec {
  std::string kind = "line";
  int cone = 3;
  std::array<double, 2> uv{0.0, 0.0};
  double half_length = 1000.0;
  int segments = 4;
  double tail = 50.0;
  std::uint64_t seed = 1;
  std::string file;
};

struct MultiplierChoice {
  std::string name = "bht_sign";
  nlohmann::json params = nlohmann::json::object();
};

struct BetaGridSpec {
  PlaneGrid grid{0.0, 0.0, 0.0625, 16, 16};
  double d_min = 0.1;  // samples closer to the curve are dropped
};

struct GeometryParams {
  std::size_t configs = 10000;
  std::size_t apollonius_points = 10000;
  std::size_t constant_samples = 100;  // theta0 values across [0, pi/6)
};

struct HormanderParams {
  int rings = 4;            // ring radii 2^-rings .. 2^rings around each center
  int directions = 16;
  std::vector<double> centers{0.0, 3.0};  // positions along the curve axis (line curves)
  std::size_t random_multipliers = 20;
  std::size_t beta_samples = 50;
  bool refine = true;  // repeat with doubled window grid and beta density
};

struct FormParams {
  CurveSpec curve{"point", 1, {0.35, -0.25}, 1000.0, 4, 50.0, 1, ""};
  MultiplierChoice multiplier{"point_mikhlin", {{"exponent", 1}}};
  std::size_t identity_n = 256;
  std::size_t alpha_n = 128;
  double alpha_length = 16.0;
  std::size_t beta_n = 64;
  double beta_extent = 2.8;
  std::size_t kernel_n = 64;
  bool refine = true;
  // tent estimate
  std::size_t tents = 100;
  std::size_t tent_kernel_n = 32;
  std::size_t tent_alpha_n = 512;
  double tent_alpha_length = 64.0;
  std::size_t tent_beta_n = 16;
  double tent_beta_extent = 4.0;
  double tent_d_min = 0.7;
};

struct SelectionParams {
  std::size_t fields = 100;
  int bursts = 6;
  bool mutations = true;
  bool scaling = false;  // also run the Bessel lambda sweep
};

struct BesselParams {
  CurveSpec curve{"random", 1, {0.0, 0.0}, 1000.0, 4, 50.0, 7, ""};
  AlphaGrid alpha{-4096.0, 0.5, 16384};
  int lattice_levels = 6;
  std::string signal = "power_law";  // power_law | bursts
  double decay = 0.5;                // power_law: |f| ~ (1 + |x| / 8)^-decay
  int bursts = 12;
  std::size_t lambda_steps = 4;      // lambda = G 2^-1 .. G 2^-steps, G the global size
  double gamma_spacing = 0.4;        // lattice gammas every spacing * beta step
  std::string field_file;            // read the field instead of embedding a signal
  bool save_field = false;
};

struct WeakParams {
  std::vector<double> ratios{1.0, 4.0, 16.0, 64.0};
  std::vector<double> a2{0.5, 1.0};
  std::vector<double> a3_fraction{1.0, 0.25};
  std::size_t trials = 5;
  double length = 128.0;
  std::size_t n = 4096;
  bool refine = true;
};

struct ExperimentConfig {
  double theta0 = 0.1;
  double s = 1.25;
  std::array<double, 3> p{3.0, 3.0, 3.0};
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::string out = "tentfield-out";

  CurveSpec curve;
  MultiplierChoice multiplier;
  double eps = 0.125;  // bump parameter for field experiments; 0 uses the derived constant
  AlphaGrid alpha{-256.0, 0.5, 1024};
  BetaGridSpec beta;
  WindowGrid window;
  KernelGrid kernel;
  std::vector<double> lambda;  // explicit lambda sweep; empty means automatic
  int lattice_levels = 8;
  double truncation_A = 0.0;   // 0 picks the smallest A reaching every cell

  GeometryParams geometry;
  HormanderParams hormander;
  FormParams form;
  SelectionParams selection;
  BesselParams bessel;
  WeakParams weak;
};

// Throws ConfigError with a ConfigIssue and the offending field.
void validate(const ExperimentConfig& c);

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& c);
ExperimentConfig parse_config(const std::string& path);

// Curve JSON: {"cone_index": j, "theta0": t, "points": [[x1,x2,x3], ...]} or with
// "basis": "uv" and 2-D points; optional "mode": "polyline" | "points".
SingularCurve load_curve(const std::string& path);
SingularCurve curve_from_json(const nlohmann::json& j);
SingularCurve build_curve(const CurveSpec& cs, double theta0);
MultiplierSpec build_multiplier(const MultiplierChoice& m);

}  // namespace tentfield
