#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "tentfield/check.hpp"
#include "tentfield/geometry.hpp"

namespace tentfield {

// Random polyline in the cone K_j(theta0): `segments` short pieces with
// tangent angles inside (-0.9 theta0, 0.9 theta0) about the cone axis, closed
// off by two straight tails of length `tail` so that the middle part behaves
// like a piece of an unbounded curve.
SingularCurve random_cone_curve(std::mt19937_64& rng, int j, double theta0, int segments,
                                double tail = 1e3);

// Uniformly chosen point on the segments of a polyline; with skip_tails the first and
// last segments (the tails of random_cone_curve) are excluded.
PlaneVector random_curve_point(std::mt19937_64& rng, const SingularCurve& curve,
                               bool skip_tails = true);

struct GeometrySuiteOptions {
  double theta0 = 0.1;
  std::size_t configs = 10000;        // randomized configurations per property
  std::size_t apollonius_points = 10000;
  std::uint64_t seed = 1;
  std::optional<SingularCurve> curve;  // fixed curve instead of random ones
  double tol = 1e-9;
};

std::vector<CheckResult> run_geometry_suite(const GeometrySuiteOptions& opt);

}  // namespace tentfield
