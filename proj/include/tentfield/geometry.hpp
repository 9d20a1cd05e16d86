#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace tentfield {

// Point of R^3; used for elements of the plane V = {x1+x2+x3 = 0}.
struct PlaneVector {
  std::array<double, 3> c{0.0, 0.0, 0.0};

  PlaneVector() = default;
  PlaneVector(double x1, double x2, double x3) : c{x1, x2, x3} {}

  double operator[](std::size_t i) const { return c[i]; }
  double& operator[](std::size_t i) { return c[i]; }

  // 1-based coordinate access, matching the index j in {1,2,3}
  double coord(int j) const { return c[static_cast<std::size_t>(j - 1)]; }

  PlaneVector operator+(const PlaneVector& o) const;
  PlaneVector operator-(const PlaneVector& o) const;
  PlaneVector operator*(double s) const;
  double dot(const PlaneVector& o) const;
  double norm() const;
  double sum() const { return c[0] + c[1] + c[2]; }
  bool on_plane(double tol = 1e-12) const;
};

inline PlaneVector operator*(double s, const PlaneVector& v) { return v * s; }

// Orthonormal basis of V used for every grid and FFT on the plane.
struct PlaneBasis {
  static const PlaneVector u1;  // (1,-1,0)/sqrt2
  static const PlaneVector u2;  // (1,1,-2)/sqrt6

  static std::array<double, 2> to_uv(const PlaneVector& v);
  static PlaneVector from_uv(double a, double b);
};

PlaneVector project_to_plane(const PlaneVector& v);
PlaneVector unit_axis(int j);  // e_j in R^3
// unit vector along P_V e_j, and the unit vector of V orthogonal to it
PlaneVector cone_axis(int j);
PlaneVector cone_normal(int j);

struct ConstantPack {
  double theta0 = 0.0;
  double theta1 = 0.0;
  double delta0 = 0.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
  double rho = 0.0;
  double eps = 0.0;
  double c_s = 4.0;
  double c_f = 0.0;
  double c = 0.0;
  int M = 0;

  // constant of the scale comparison used for wave packets with overlapping windows
  double lacunary_c() const;
  // list of violated invariants, empty when all hold
  std::vector<std::string> check_invariants() const;
};

ConstantPack derive_constants(double theta0);

enum class CurveMode { Polyline, PointCloud };

struct NearestPoint {
  double distance = 0.0;
  PlaneVector point;
};

struct ConePairViolation {
  std::size_t first = 0;
  std::size_t second = 0;
  double lhs = 0.0;
  double rhs = 0.0;
};

// Sampled Lipschitz curve inside one cone K_j(theta0).  Samples are kept
// sorted by their j-th coordinate.
class SingularCurve {
 public:
  SingularCurve(std::vector<PlaneVector> samples, int cone_index, double theta0,
                CurveMode mode = CurveMode::Polyline);

  const std::vector<PlaneVector>& samples() const { return samples_; }
  int cone_index() const { return cone_index_; }
  double theta0() const { return theta0_; }
  CurveMode mode() const { return mode_; }
  std::size_t size() const { return samples_.size(); }

  NearestPoint nearest(const PlaneVector& beta) const;
  double distance(const PlaneVector& beta) const { return nearest(beta).distance; }

  // Extreme points (in coordinate j) of the curve inside the slab lo <= x_j <= hi.
  // Polyline mode clips segments against the slab; point-cloud mode uses samples.
  std::optional<std::pair<PlaneVector, PlaneVector>> slab_extremes(int j, double lo,
                                                                   double hi) const;

  // Curve points whose j-th coordinate lies in [lo, hi]: samples plus slab crossings.
  std::vector<PlaneVector> points_in_slab(int j, double lo, double hi) const;

  SingularCurve translated(const PlaneVector& shift) const;
  SingularCurve scaled(double factor) const;

  static std::optional<ConePairViolation> first_cone_violation(
      const std::vector<PlaneVector>& samples, int cone_index, double theta0,
      double slack = 1e-12);

 private:
  std::vector<PlaneVector> samples_;
  int cone_index_;
  double theta0_;
  CurveMode mode_;
};

bool cone_membership(const PlaneVector& beta, const PlaneVector& gamma, int j,
                     const ConstantPack& k);

// W_{gamma,t} with the distance d_Gamma(beta) supplied by the caller
bool whitney_membership(const PlaneVector& beta, const PlaneVector& gamma, double t,
                        double d_beta, const ConstantPack& k);
bool whitney_membership(const PlaneVector& beta, const PlaneVector& gamma, double t,
                        const SingularCurve& curve, const ConstantPack& k);

enum class Side { Below, Above };  // (W\U)^{<j} and (W\U)^{>j}

bool half_whitney_membership(const PlaneVector& beta, const PlaneVector& gamma, double t,
                             double d_beta, const ConstantPack& k, int j, Side side);
bool half_whitney_membership(const PlaneVector& beta, const PlaneVector& gamma, double t,
                             const SingularCurve& curve, const ConstantPack& k, int j,
                             Side side);

struct Ball {
  std::vector<double> center;
  double radius = 0.0;
  bool contains(const std::vector<double>& y) const;
};

// {y : |y - x0| < r |y - x1|}
Ball apollonius_ball(const std::vector<double>& x0, const std::vector<double>& x1, double r);
bool in_apollonius_set(const std::vector<double>& y, const std::vector<double>& x0,
                       const std::vector<double>& x1, double r);
bool apollonius_inclusion_hypothesis(const std::vector<double>& x0,
                                     const std::vector<double>& x1,
                                     const std::vector<double>& x2, double r);

struct Interval {
  double center = 0.0;
  double length = 1.0;
  double lo() const { return center - 0.5 * length; }
  double hi() const { return center + 0.5 * length; }
  bool contains(double x) const { return x >= lo() && x <= hi(); }
  Interval scaled(double f) const { return {center, length * f}; }
};

struct TentRegion {
  Interval I;
  PlaneVector gamma;
};

bool tent_region_membership(double alpha, const PlaneVector& beta, double d_beta,
                            const TentRegion& T, const ConstantPack& k);
// variant region (I e_i + e_i^perp) x W for a lifted time triple
bool tent_region_membership(const std::array<double, 3>& alpha, const PlaneVector& beta,
                            double d_beta, const TentRegion& T, int i,
                            const ConstantPack& k);

}  // namespace tentfield
