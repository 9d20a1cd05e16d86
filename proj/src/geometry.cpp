#include "tentfield/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace tentfield {

namespace {
const double kSqrt6over3 = std::sqrt(6.0) / 3.0;
}

PlaneVector PlaneVector::operator+(const PlaneVector& o) const {
  return {c[0] + o.c[0], c[1] + o.c[1], c[2] + o.c[2]};
}
PlaneVector PlaneVector::operator-(const PlaneVector& o) const {
  return {c[0] - o.c[0], c[1] - o.c[1], c[2] - o.c[2]};
}
PlaneVector PlaneVector::operator*(double s) const { return {c[0] * s, c[1] * s, c[2] * s}; }
double PlaneVector::dot(const PlaneVector& o) const {
  return c[0] * o.c[0] + c[1] * o.c[1] + c[2] * o.c[2];
}
double PlaneVector::norm() const { return std::sqrt(dot(*this)); }

bool PlaneVector::on_plane(double tol) const {
  double mag = std::max({std::abs(c[0]), std::abs(c[1]), std::abs(c[2])});
  return std::abs(sum()) <= tol * mag;
}

const PlaneVector PlaneBasis::u1{1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0), 0.0};
const PlaneVector PlaneBasis::u2{1.0 / std::sqrt(6.0), 1.0 / std::sqrt(6.0),
                                 -2.0 / std::sqrt(6.0)};

std::array<double, 2> PlaneBasis::to_uv(const PlaneVector& v) {
  return {v.dot(u1), v.dot(u2)};
}

PlaneVector PlaneBasis::from_uv(double a, double b) { return u1 * a + u2 * b; }

PlaneVector project_to_plane(const PlaneVector& v) {
  double m = v.sum() / 3.0;
  return {v[0] - m, v[1] - m, v[2] - m};
}

PlaneVector unit_axis(int j) {
  if (j < 1 || j > 3) throw std::out_of_range("axis index must be 1, 2 or 3");
  PlaneVector e;
  e[static_cast<std::size_t>(j - 1)] = 1.0;
  return e;
}

PlaneVector cone_axis(int j) { return project_to_plane(unit_axis(j)) * (1.0 / kSqrt6over3); }

PlaneVector cone_normal(int j) {
  int a = j % 3 + 1, b = (j + 1) % 3 + 1;
  return (unit_axis(a) - unit_axis(b)) * (1.0 / std::sqrt(2.0));
}

ConstantPack derive_constants(double theta0) {
  constexpr double pi = std::numbers::pi;
  if (!(theta0 >= 0.0 && theta0 < pi / 6.0))
    throw std::domain_error("theta0 must lie in [0, pi/6)");
  ConstantPack k;
  k.theta0 = theta0;
  k.theta1 = pi / 18.0 - theta0 / 3.0;
  k.delta0 = kSqrt6over3 * std::cos(theta0 + pi / 3.0);
  k.delta1 = std::sin(k.theta1);
  k.delta2 = kSqrt6over3 * std::cos(pi / 3.0 + theta0 + k.theta1);
  k.rho = (k.delta2 - k.delta1) / (1.0 + k.delta1);
  k.eps = k.delta1 * k.rho * k.rho / 2.0;
  k.c_s = 4.0;
  k.c_f = 11.0 / k.delta2;
  k.c = std::max(3.0 * k.c_s, 1.0 / k.delta1);
  double bound = 3.0 * k.c_f / (2.0 * k.delta0 * (1.0 - k.delta1));
  k.M = static_cast<int>(std::floor(bound)) + 1;
  return k;
}

double ConstantPack::lacunary_c() const {
  double w = 4.0 * eps / 10.0;
  return (w + 1.0 / delta1) / (delta2 - w);
}

std::vector<std::string> ConstantPack::check_invariants() const {
  constexpr double pi = std::numbers::pi;
  std::vector<std::string> bad;
  if (!(theta0 >= 0.0 && theta0 < pi / 6.0)) bad.push_back("theta0 range");
  if (!(pi / 3.0 + theta0 + theta1 < pi / 2.0)) bad.push_back("angle sum below pi/2");
  if (!(delta1 < delta2)) bad.push_back("delta1 < delta2");
  if (!(std::sin(theta1) < kSqrt6over3 * std::cos(pi / 3.0 + theta0 + theta1)))
    bad.push_back("sin(theta1) bound");
  if (!(rho > 0.0 && rho < 1.0)) bad.push_back("rho in (0,1)");
  if (!(eps > 0.0)) bad.push_back("eps positive");
  if (!(4.0 * eps / 10.0 < rho)) bad.push_back("window width below rho");
  if (!(delta0 > 0.0)) bad.push_back("delta0 positive");
  if (!(static_cast<double>(M) > 3.0 * c_f / (2.0 * delta0 * (1.0 - delta1)) &&
        static_cast<double>(M - 1) <= 3.0 * c_f / (2.0 * delta0 * (1.0 - delta1))))
    bad.push_back("M least integer");
  return bad;
}

// ---------------------------------------------------------------------------

std::optional<ConePairViolation> SingularCurve::first_cone_violation(
    const std::vector<PlaneVector>& samples, int cone_index, double theta0, double slack) {
  double ct = std::cos(theta0);
  for (std::size_t a = 0; a < samples.size(); ++a) {
    for (std::size_t b = a + 1; b < samples.size(); ++b) {
      PlaneVector d = samples[b] - samples[a];
      double len = d.norm();
      double lhs = std::abs(d.coord(cone_index));
      double rhs = kSqrt6over3 * len * ct;
      if (!(lhs > rhs + slack * len) || len == 0.0) return ConePairViolation{a, b, lhs, rhs};
    }
  }
  return std::nullopt;
}

SingularCurve::SingularCurve(std::vector<PlaneVector> samples, int cone_index, double theta0,
                             CurveMode mode)
    : samples_(std::move(samples)), cone_index_(cone_index), theta0_(theta0), mode_(mode) {
  constexpr double pi = std::numbers::pi;
  if (cone_index < 1 || cone_index > 3)
    throw std::invalid_argument("cone_index must be 1, 2 or 3");
  if (!(theta0 >= 0.0 && theta0 < pi / 6.0))
    throw std::invalid_argument("theta0 must lie in [0, pi/6)");
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (!samples_[i].on_plane()) {
      std::ostringstream os;
      os << "sample " << i << " does not sum to zero";
      throw std::invalid_argument(os.str());
    }
  }
  if (auto v = first_cone_violation(samples_, cone_index, theta0)) {
    std::ostringstream os;
    os << "cone condition violated by samples " << v->first << " and " << v->second
       << " (|<d,e_j>| = " << v->lhs << ", bound = " << v->rhs << ")";
    throw std::invalid_argument(os.str());
  }
  int j = cone_index_;
  std::sort(samples_.begin(), samples_.end(),
            [j](const PlaneVector& a, const PlaneVector& b) { return a.coord(j) < b.coord(j); });
}

NearestPoint SingularCurve::nearest(const PlaneVector& beta) const {
  if (samples_.empty()) throw std::domain_error("distance to an empty curve");
  int j = cone_index_;
  NearestPoint best{std::numeric_limits<double>::infinity(), samples_.front()};
  auto consider = [&](const PlaneVector& p) {
    double d = (beta - p).norm();
    double tol = 1e-14 * std::max(1.0, d);
    if (d < best.distance - tol ||
        (std::abs(d - best.distance) <= tol && p.coord(j) < best.point.coord(j))) {
      best.distance = d;
      best.point = p;
    }
  };
  if (mode_ == CurveMode::PointCloud || samples_.size() == 1) {
    for (const auto& p : samples_) consider(p);
    return best;
  }
  for (std::size_t s = 0; s + 1 < samples_.size(); ++s) {
    const PlaneVector& a = samples_[s];
    PlaneVector ab = samples_[s + 1] - a;
    double len2 = ab.dot(ab);
    double t = len2 > 0.0 ? (beta - a).dot(ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    consider(a + ab * t);
  }
  return best;
}

std::optional<std::pair<PlaneVector, PlaneVector>> SingularCurve::slab_extremes(int j, double lo,
                                                                                double hi) const {
  if (samples_.empty() || lo > hi) return std::nullopt;
  if (mode_ == CurveMode::PointCloud || samples_.size() == 1) {
    std::optional<PlaneVector> mn, mx;
    for (const auto& p : samples_) {
      double x = p.coord(j);
      if (x < lo || x > hi) continue;
      if (!mn || x < mn->coord(j)) mn = p;
      if (!mx || x > mx->coord(j)) mx = p;
    }
    if (!mn) return std::nullopt;
    return std::make_pair(*mn, *mx);
  }
  // clip every segment to the slab; the curve need not be monotone in coordinate j
  std::optional<PlaneVector> mn, mx;
  auto take = [&](const PlaneVector& p) {
    if (!mn || p.coord(j) < mn->coord(j)) mn = p;
    if (!mx || p.coord(j) > mx->coord(j)) mx = p;
  };
  for (std::size_t i = 0; i + 1 < samples_.size(); ++i) {
    const PlaneVector& p = samples_[i];
    const PlaneVector& q = samples_[i + 1];
    double a = p.coord(j), b = q.coord(j);
    double x0 = std::max(lo, std::min(a, b)), x1 = std::min(hi, std::max(a, b));
    if (x0 > x1) continue;
    auto at = [&](double x) {
      if (b == a) return p;
      double t = std::clamp((x - a) / (b - a), 0.0, 1.0);
      return p + (q - p) * t;
    };
    take(at(x0));
    take(at(x1));
  }
  if (!mn) return std::nullopt;
  return std::make_pair(*mn, *mx);
}

std::vector<PlaneVector> SingularCurve::points_in_slab(int j, double lo, double hi) const {
  std::vector<PlaneVector> out;
  for (const auto& p : samples_)
    if (p.coord(j) >= lo && p.coord(j) <= hi) out.push_back(p);
  if (mode_ == CurveMode::Polyline && samples_.size() > 1) {
    if (auto ex = slab_extremes(j, lo, hi)) {
      auto push_unique = [&](const PlaneVector& p) {
        for (const auto& q : out)
          if ((q - p).norm() <= 1e-14 * std::max(1.0, p.norm())) return;
        out.push_back(p);
      };
      push_unique(ex->first);
      push_unique(ex->second);
    }
  }
  std::sort(out.begin(), out.end(),
            [j](const PlaneVector& a, const PlaneVector& b) { return a.coord(j) < b.coord(j); });
  return out;
}

SingularCurve SingularCurve::translated(const PlaneVector& shift) const {
  std::vector<PlaneVector> s;
  s.reserve(samples_.size());
  for (const auto& p : samples_) s.push_back(p + shift);
  return SingularCurve(std::move(s), cone_index_, theta0_, mode_);
}

SingularCurve SingularCurve::scaled(double factor) const {
  std::vector<PlaneVector> s;
  s.reserve(samples_.size());
  for (const auto& p : samples_) s.push_back(p * factor);
  return SingularCurve(std::move(s), cone_index_, theta0_, mode_);
}

// ---------------------------------------------------------------------------

bool cone_membership(const PlaneVector& beta, const PlaneVector& gamma, int j,
                     const ConstantPack& k) {
  PlaneVector d = beta - gamma;
  return std::abs(d.coord(j)) <= k.delta2 * d.norm();
}

bool whitney_membership(const PlaneVector& beta, const PlaneVector& gamma, double t,
                        double d_beta, const ConstantPack& k) {
  double r = (beta - gamma).norm();
  return t <= r && r <= d_beta / k.delta1;
}

bool whitney_membership(const PlaneVector& beta, const PlaneVector& gamma, double t,
                        const SingularCurve& curve, const ConstantPack& k) {
  return whitney_membership(beta, gamma, t, curve.distance(beta), k);
}

bool half_whitney_membership(const PlaneVector& beta, const PlaneVector& gamma, double t,
                             double d_beta, const ConstantPack& k, int j, Side side) {
  if (!whitney_membership(beta, gamma, t, d_beta, k)) return false;
  if (cone_membership(beta, gamma, j, k)) return false;
  return side == Side::Below ? beta.coord(j) < gamma.coord(j) : beta.coord(j) > gamma.coord(j);
}

bool half_whitney_membership(const PlaneVector& beta, const PlaneVector& gamma, double t,
                             const SingularCurve& curve, const ConstantPack& k, int j,
                             Side side) {
  return half_whitney_membership(beta, gamma, t, curve.distance(beta), k, j, side);
}

// ---------------------------------------------------------------------------

namespace {
double dist(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("point dimensions differ");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}
}  // namespace

bool Ball::contains(const std::vector<double>& y) const { return dist(y, center) < radius; }

Ball apollonius_ball(const std::vector<double>& x0, const std::vector<double>& x1, double r) {
  if (!(r > 0.0 && r < 1.0)) throw std::domain_error("apollonius ratio must lie in (0,1)");
  if (x0.size() != x1.size()) throw std::invalid_argument("point dimensions differ");
  double q = 1.0 - r * r;
  Ball b;
  b.center.resize(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) b.center[i] = (x0[i] - r * r * x1[i]) / q;
  b.radius = r * dist(x0, x1) / q;
  return b;
}

bool in_apollonius_set(const std::vector<double>& y, const std::vector<double>& x0,
                       const std::vector<double>& x1, double r) {
  return dist(y, x0) < r * dist(y, x1);
}

bool apollonius_inclusion_hypothesis(const std::vector<double>& x0,
                                     const std::vector<double>& x1,
                                     const std::vector<double>& x2, double r) {
  if (!(r > 0.0 && r < 1.0)) throw std::domain_error("apollonius ratio must lie in (0,1)");
  return r * dist(x2, x1) <= dist(x2, x0) - dist(x1, x0);
}

// ---------------------------------------------------------------------------

bool tent_region_membership(double alpha, const PlaneVector& beta, double d_beta,
                            const TentRegion& T, const ConstantPack& k) {
  if (!T.I.contains(alpha)) return false;
  return whitney_membership(beta, T.gamma, 1.0 / T.I.length, d_beta, k);
}

bool tent_region_membership(const std::array<double, 3>& alpha, const PlaneVector& beta,
                            double d_beta, const TentRegion& T, int i, const ConstantPack& k) {
  if (i < 1 || i > 3) throw std::out_of_range("variant index must be 1, 2 or 3");
  if (!T.I.contains(alpha[static_cast<std::size_t>(i - 1)])) return false;
  return whitney_membership(beta, T.gamma, 1.0 / T.I.length, d_beta, k);
}

}  // namespace tentfield
