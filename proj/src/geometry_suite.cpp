#include "tentfield/geometry_suite.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace tentfield {

namespace {

double uniform(std::mt19937_64& rng, double a, double b) {
  return std::uniform_real_distribution<double>(a, b)(rng);
}

double log_uniform(std::mt19937_64& rng, double a, double b) {
  return std::exp(uniform(rng, std::log(a), std::log(b)));
}

PlaneVector direction(int j, double phi) {
  return cone_axis(j) * std::cos(phi) + cone_normal(j) * std::sin(phi);
}

PlaneVector random_offset(std::mt19937_64& rng, int j, double rmin, double rmax) {
  return direction(j, uniform(rng, 0.0, 2.0 * std::numbers::pi)) * log_uniform(rng, rmin, rmax);
}

std::string str(const PlaneVector& v) {
  std::ostringstream os;
  os.precision(12);
  os << "(" << v[0] << "," << v[1] << "," << v[2] << ")";
  return os.str();
}

// slack of beta in W_{gamma,t}: >= 0 iff member
double whitney_slack(const PlaneVector& beta, const PlaneVector& gamma, double t, double d_beta,
                     const ConstantPack& k) {
  double r = (beta - gamma).norm();
  return std::min(r - t, d_beta / k.delta1 - r);
}

double scale_tol(double tol, double s) { return tol * std::max(1.0, s); }

std::optional<PlaneVector> curve_point_at(const SingularCurve& c, int j, double x) {
  auto ex = c.slab_extremes(j, x, x);
  if (!ex) return std::nullopt;
  return ex->first;
}

}  // namespace

SingularCurve random_cone_curve(std::mt19937_64& rng, int j, double theta0, int segments,
                                double tail) {
  double lim = 0.9 * theta0;
  std::vector<PlaneVector> pts;
  PlaneVector p = PlaneBasis::from_uv(uniform(rng, -0.5, 0.5), uniform(rng, -0.5, 0.5));
  double first = uniform(rng, -lim, lim);
  pts.push_back(p - direction(j, first) * tail);
  pts.push_back(p);
  double phi = first;
  for (int s = 0; s < segments; ++s) {
    phi = uniform(rng, -lim, lim);
    p = p + direction(j, phi) * uniform(rng, 0.05, 0.5);
    pts.push_back(p);
  }
  pts.push_back(p + direction(j, phi) * tail);
  for (auto& q : pts) q = project_to_plane(q);
  return SingularCurve(std::move(pts), j, theta0);
}

PlaneVector random_curve_point(std::mt19937_64& rng, const SingularCurve& curve,
                               bool skip_tails) {
  const auto& s = curve.samples();
  if (s.size() < 2) return s.at(0);
  std::size_t lo = 0, hi = s.size() - 1;  // segment range [lo, hi)
  if (skip_tails && s.size() >= 4) {
    lo = 1;
    hi = s.size() - 2;
  }
  std::vector<double> w;
  for (std::size_t i = lo; i < hi; ++i) w.push_back((s[i + 1] - s[i]).norm());
  std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
  std::size_t i = lo + pick(rng);
  return s[i] + (s[i + 1] - s[i]) * uniform(rng, 0.0, 1.0);
}

std::vector<CheckResult> run_geometry_suite(const GeometrySuiteOptions& opt) {
  std::mt19937_64 rng(opt.seed);
  ConstantPack k = derive_constants(opt.theta0);
  const double tol = opt.tol;
  const std::size_t n = opt.configs;

  std::vector<SingularCurve> curves;
  if (opt.curve) {
    curves.push_back(*opt.curve);
  } else {
    for (int c = 0; c < 24; ++c)
      curves.push_back(random_cone_curve(rng, 1 + c % 3, opt.theta0, 16));
  }
  auto curve_for = [&](std::size_t i) -> const SingularCurve& { return curves[i % curves.size()]; };
  bool distinct_ok = curves.front().size() >= 2;
  bool skip_tails = !opt.curve;

  std::vector<CheckResult> out;

  {
    CheckResult r{"projection"};
    for (std::size_t i = 0; i < n; ++i) {
      PlaneVector v(uniform(rng, -5, 5), uniform(rng, -5, 5), uniform(rng, -5, 5));
      PlaneVector w(uniform(rng, -5, 5), uniform(rng, -5, 5), uniform(rng, -5, 5));
      double a = uniform(rng, -3, 3);
      PlaneVector pv = project_to_plane(v);
      double idem = (project_to_plane(pv) - pv).norm();
      double lin = (project_to_plane(v * a + w) - (pv * a + project_to_plane(w))).norm();
      double margin = std::min({v.norm() - pv.norm(), -idem, -lin, -std::abs(pv.sum())});
      if (r.record(margin, scale_tol(tol, v.norm() + w.norm()))) r.witness = str(v);
    }
    out.push_back(r);
  }

  {
    CheckResult r{"cone_separation"};
    if (distinct_ok) {
      for (std::size_t i = 0; i < n; ++i) {
        const auto& c = curve_for(i);
        PlaneVector g = random_curve_point(rng, c, skip_tails);
        PlaneVector h = random_curve_point(rng, c, skip_tails);
        PlaneVector d = g - h;
        double len = d.norm();
        if (len == 0.0) continue;
        double m = std::min({std::abs(d[0]), std::abs(d[1]), std::abs(d[2])}) - k.delta0 * len;
        if (r.record(m, scale_tol(tol, len))) r.witness = str(g) + " " + str(h);
      }
    }
    out.push_back(r);
  }

  {
    CheckResult r{"curve_lipschitz"};
    for (std::size_t i = 0; i < n; ++i) {
      const auto& c = curve_for(i);
      int j = c.cone_index();
      PlaneVector g = random_curve_point(rng, c, skip_tails);
      PlaneVector b1 = g + random_offset(rng, j, 1e-3, 3.0);
      PlaneVector b2 = b1 + random_offset(rng, j, 1e-3, 3.0);
      double m = (b1 - b2).norm() - std::abs(c.distance(b1) - c.distance(b2));
      if (r.record(m, scale_tol(tol, (b1 - b2).norm()))) r.witness = str(b1) + " " + str(b2);
    }
    out.push_back(r);
  }

  {
    CheckResult ball{"apollonius_ball_equals_set"};
    CheckResult inc{"apollonius_inclusion"};
    std::size_t done = 0;
    while (done < n) {
      std::size_t dim = 2 + done % 2;
      std::vector<double> x0(dim), x1(dim), x2(dim);
      for (auto& x : x0) x = uniform(rng, -1, 1);
      for (auto& x : x1) x = uniform(rng, -1, 1);
      double r = uniform(rng, 0.05, 0.95);
      double len01 = 0.0;
      for (std::size_t a = 0; a < dim; ++a) len01 += (x1[a] - x0[a]) * (x1[a] - x0[a]);
      len01 = std::sqrt(len01);
      if (len01 < 1e-3) continue;
      double ext = uniform(rng, 0.0, 2.0);
      for (std::size_t a = 0; a < dim; ++a)
        x2[a] = x1[a] + ext * (x1[a] - x0[a]) / len01 + uniform(rng, -0.3, 0.3) * ext;
      if (!apollonius_inclusion_hypothesis(x0, x1, x2, r)) continue;
      ++done;
      Ball b1 = apollonius_ball(x0, x1, r);
      Ball b2 = apollonius_ball(x0, x2, r);
      double box = 1.5 * b1.radius + 1e-9;
      std::vector<double> y(dim);
      for (std::size_t p = 0; p < opt.apollonius_points; ++p) {
        for (std::size_t a = 0; a < dim; ++a) y[a] = b1.center[a] + uniform(rng, -box, box);
        double dy0 = 0, dy1 = 0, dc1 = 0, dc2 = 0;
        for (std::size_t a = 0; a < dim; ++a) {
          dy0 += (y[a] - x0[a]) * (y[a] - x0[a]);
          dy1 += (y[a] - x1[a]) * (y[a] - x1[a]);
          dc1 += (y[a] - b1.center[a]) * (y[a] - b1.center[a]);
          dc2 += (y[a] - b2.center[a]) * (y[a] - b2.center[a]);
        }
        double set_slack = r * std::sqrt(dy1) - std::sqrt(dy0);  // > 0 iff in the set
        double ball_slack = b1.radius - std::sqrt(dc1);          // > 0 iff in the ball
        if (std::abs(set_slack) > tol && std::abs(ball_slack) > tol) {
          double m = ((set_slack > 0) == (ball_slack > 0)) ? 0.0 : -1.0;
          if (ball.record(m, tol)) ball.witness = "dim " + std::to_string(dim);
        }
        if (ball_slack > 0) {
          double m = b2.radius - std::sqrt(dc2);
          if (inc.record(m, scale_tol(tol, b2.radius))) inc.witness = "dim " + std::to_string(dim);
        }
      }
    }
    out.push_back(ball);
    out.push_back(inc);
  }

  {
    CheckResult r{"cone_in_whitney"};
    std::size_t done = 0, guard = 0;
    while (done < n && guard++ < 100 * n + 100) {
      const auto& c = curve_for(guard);
      int j = c.cone_index();
      PlaneVector g = random_curve_point(rng, c, skip_tails);
      PlaneVector b = g + random_offset(rng, j, 1e-3, 3.0);
      if (!cone_membership(b, g, j, k)) continue;
      ++done;
      double m = c.distance(b) / k.delta1 - (b - g).norm();
      if (r.record(m, scale_tol(tol, (b - g).norm()))) r.witness = str(b) + " " + str(g);
    }
    out.push_back(r);
  }

  {
    CheckResult r{"whitney_order"};
    if (distinct_ok) {
      for (std::size_t i = 0; i < n; ++i) {
        const auto& c = curve_for(i);
        int j = c.cone_index();
        std::array<PlaneVector, 3> g{random_curve_point(rng, c, skip_tails),
                                     random_curve_point(rng, c, skip_tails),
                                     random_curve_point(rng, c, skip_tails)};
        std::sort(g.begin(), g.end(),
                  [j](const PlaneVector& a, const PlaneVector& b) { return a.coord(j) < b.coord(j); });
        double m = (g[2] - g[0]).norm() - (g[1] - g[0]).norm() - k.delta1 * (g[2] - g[1]).norm();
        for (int a = 1; a <= 3; ++a) {
          if (a == j) continue;
          double p = (g[1].coord(a) - g[0].coord(a)) * (g[2].coord(a) - g[1].coord(a));
          m = std::min(m, p);
        }
        if (r.record(m, scale_tol(tol, (g[2] - g[0]).norm())))
          r.witness = str(g[0]) + " " + str(g[1]) + " " + str(g[2]);
      }
    }
    out.push_back(r);
  }

  {
    CheckResult r{"whitney_cover"};
    std::size_t done = 0, guard = 0;
    while (distinct_ok && done < n && guard++ < 200 * n + 100) {
      const auto& c = curve_for(guard);
      int j = c.cone_index();
      double t = log_uniform(rng, 0.02, 2.0);
      PlaneVector g = random_curve_point(rng, c, skip_tails);
      double w = k.delta0 * (1.0 - k.delta1) * t;
      double x1 = g.coord(j) + uniform(rng, 0.0, 1.0) * w;
      double x2 = g.coord(j) + uniform(rng, 0.0, 1.0) * (x1 - g.coord(j));
      auto g1 = curve_point_at(c, j, x1);
      auto g2 = curve_point_at(c, j, x2);
      if (!g1 || !g2) continue;
      PlaneVector b = *g2 + random_offset(rng, j, t, 30.0 * t);
      double db = c.distance(b);
      if (!whitney_membership(b, *g2, t, db, k)) continue;
      ++done;
      double m = std::max(whitney_slack(b, g, k.delta1 * t, db, k),
                          whitney_slack(b, *g1, k.delta1 * t, db, k));
      if (r.record(m, scale_tol(tol, (b - g).norm())))
        r.witness = "beta " + str(b) + " gamma " + str(g) + " t " + std::to_string(t);
    }
    out.push_back(r);
  }

  {
    CheckResult r{"whitney_separation"};
    std::size_t done = 0, guard = 0;
    while (distinct_ok && done < n && guard++ < 400 * n + 100) {
      const auto& c = curve_for(guard);
      int j = c.cone_index();
      double t = log_uniform(rng, 0.02, 2.0);
      PlaneVector g = random_curve_point(rng, c, skip_tails);
      PlaneVector b = g + random_offset(rng, j, t, 30.0 * t);
      if (!(b.coord(j) < g.coord(j))) continue;
      double db = c.distance(b);
      if (!whitney_membership(b, g, t, db, k) || cone_membership(b, g, j, k)) continue;
      PlaneVector g1 = random_curve_point(rng, c, skip_tails);
      if (!(g1.coord(j) > g.coord(j))) continue;
      PlaneVector b1 = g1 + random_offset(rng, j, 1e-3, 30.0 * t);
      double db1 = c.distance(b1);
      if (!whitney_membership(b1, g1, 0.0, db1, k) ||
          whitney_membership(b1, g, k.delta1 * t, db1, k))
        continue;
      ++done;
      double m = std::abs(b.coord(j) - b1.coord(j)) - k.rho * (db + db1);
      if (r.record(m, scale_tol(tol, db + db1))) r.witness = "beta " + str(b) + " beta' " + str(b1);
    }
    out.push_back(r);
  }

  for (auto& r : out)
    if (r.trials == 0) r.note = "no samples";
  return out;
}

}  // namespace tentfield
