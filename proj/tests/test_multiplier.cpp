#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "tentfield/errors.hpp"
#include "tentfield/multiplier.hpp"

using namespace tentfield;
using std::numbers::pi;

namespace {
// Hankel-transform quadrature of the radial window (scipy, closed-form plateau part)
constexpr double kPhiL2 = 0.26187730284868377;
constexpr double kPhiH1 = 1.2962648;
constexpr double kPhiH125 = 2.6497605;
constexpr double kPhiH15 = 5.9135840;

SingularCurve bht_line() {
  PlaneVector ax = cone_axis(3);
  return SingularCurve({ax * -1000.0, ax * 1000.0}, 3, 0.1);
}

std::vector<cplx> window_samples(const WindowGrid& g, const BumpProfile& b) {
  std::vector<cplx> out(g.n * g.n);
  for (std::size_t a = 0; a < g.n; ++a)
    for (std::size_t c = 0; c < g.n; ++c) out[a * g.n + c] = b.Phi_uv(g.coord(a), g.coord(c));
  return out;
}

std::vector<cplx> random_smooth(std::mt19937_64& rng, const WindowGrid& g, int modes) {
  std::normal_distribution<> n(0, 1);
  std::vector<std::array<double, 4>> terms;
  for (int i = 0; i < modes; ++i) terms.push_back({n(rng), n(rng), 4 * n(rng), 4 * n(rng)});
  std::vector<cplx> out(g.n * g.n);
  for (std::size_t a = 0; a < g.n; ++a)
    for (std::size_t c = 0; c < g.n; ++c) {
      double x = g.coord(a), y = g.coord(c);
      double env = std::exp(-(x * x + y * y) / (2 * 0.04 * 0.04));
      cplx v = 0.0;
      for (auto& t : terms) v += cplx(t[0], t[1]) * std::polar(1.0, 2 * pi * (t[2] * x + t[3] * y));
      out[a * g.n + c] = env * v;
    }
  return out;
}
}  // namespace

TEST_CASE("builtin multipliers evaluate pointwise") {
  PlaneVector xi(0.3, -0.1, -0.2);
  CHECK(builtin("one")(xi) == cplx(1.0));
  CHECK(builtin("zero")(xi) == cplx(0.0));
  CHECK(bht_sign()(xi) == cplx(1.0));
  CHECK(bht_sign()(PlaneVector(-0.3, 0.1, 0.2)) == cplx(-1.0));
  CHECK(bht_sign()(PlaneVector(0.5, 0.5, -1.0)) == cplx(0.0));

  auto lip = builtin("lip_difference", {{"tau", 1.0}});
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<> u(-5, 5);
  for (int i = 0; i < 200; ++i) {
    PlaneVector p = PlaneBasis::from_uv(u(rng), u(rng));
    CHECK(std::abs(lip(p)) == doctest::Approx(1.0).epsilon(1e-14));
    double t = p[0] - p[1];
    CHECK(std::arg(lip(p)) == doctest::Approx(std::arg(std::polar(1.0, std::log(std::abs(t))))));
  }

  PlaneVector c = PlaneBasis::from_uv(0.4, -0.2);
  auto pm = builtin("point_mikhlin", {{"exponent", 2}, {"center", {0.4, -0.2}}});
  PlaneVector off = PlaneBasis::from_uv(0.3, 0.7);
  CHECK(std::abs(pm(c + off) - pm(c + off * 17.0)) < 1e-14);
  CHECK(std::abs(pm(c + PlaneBasis::from_uv(0, 1)) - cplx(-1.0)) < 1e-14);

  CHECK_THROWS_AS(builtin("nonesuch"), ConfigError);
}

TEST_CASE("grid multiplier interpolates bilinearly") {
  PlaneGrid g{0.0, 0.0, 0.5, 5, 5};
  std::vector<cplx> v(g.size());
  for (std::size_t a = 0; a < g.nu; ++a)
    for (std::size_t b = 0; b < g.nv; ++b) v[a * g.nv + b] = cplx(2 * g.u(a) - g.v(b) + 1, g.v(b));
  auto m = MultiplierSpec::from_grid(g, v);
  PlaneVector p = PlaneBasis::from_uv(0.13, -0.71);
  CHECK(std::abs(m(p) - cplx(2 * 0.13 + 0.71 + 1, -0.71)) < 1e-12);
  CHECK(m(PlaneBasis::from_uv(5, 0)) == cplx(0.0));
  v[3] = cplx(NAN, 0);
  CHECK_THROWS_AS(MultiplierSpec::from_grid(g, v), std::invalid_argument);
}

TEST_CASE("localize constants and sign pattern") {
  auto b = build_bumps(0.1);
  WindowGrid g;
  auto line = bht_line();
  PlaneVector beta = cone_normal(3) * 2.0 + cone_axis(3) * 0.7;
  auto one = localize(multiplier_one(), beta, line, g, b);
  auto win = window_samples(g, b);
  for (std::size_t i = 0; i < one.size(); ++i) CHECK(one[i] == win[i]);
  for (auto v : localize(multiplier_zero(), beta, line, g, b)) CHECK(v == cplx(0.0));

  double d = line.distance(beta);
  auto sg = localize(bht_sign(), beta, line, g, b);
  for (std::size_t a = 0; a < g.n; ++a)
    for (std::size_t c = 0; c < g.n; ++c) {
      PlaneVector x = beta + PlaneBasis::from_uv(d * g.coord(a), d * g.coord(c));
      double s = x[0] > x[1] ? 1.0 : -1.0;
      CHECK(sg[a * g.n + c] == cplx(s * win[a * g.n + c].real()));
    }
  CHECK_THROWS_AS(localize(bht_sign(), cone_axis(3) * 2.0, line, g, b), std::domain_error);
}

TEST_CASE("sobolev norm of the window") {
  auto b = build_bumps(0.1);
  WindowGrid g;
  auto w = window_samples(g, b);
  double h = g.step();
  double l2 = 0;
  for (auto v : w) l2 += std::norm(v);
  CHECK(sobolev_norm(w, g.n, h, 0.0) == doctest::Approx(std::sqrt(l2) * h).epsilon(1e-12));
  CHECK(sobolev_norm(w, g.n, h, 0.0) == doctest::Approx(kPhiL2).epsilon(1e-4));
  CHECK(sobolev_norm(w, g.n, h, 1.0) == doctest::Approx(kPhiH1).epsilon(2e-3));
  CHECK(sobolev_norm(w, g.n, h, 1.25) == doctest::Approx(kPhiH125).epsilon(2e-3));
  CHECK(sobolev_norm(w, g.n, h, 1.5) == doctest::Approx(kPhiH15).epsilon(2e-3));

  WindowGrid fine{4 * g.n, g.extent};
  auto wf = window_samples(fine, b);
  double coarse = sobolev_norm(w, g.n, h, 1.5);
  double refined = sobolev_norm(wf, fine.n, fine.step(), 1.5);
  CHECK(std::abs(coarse - refined) / refined < 1e-3);

  double prev = 0;
  for (double s : {0.0, 0.5, 1.0, 1.25, 1.5, 2.0}) {
    double v = sobolev_norm(w, g.n, h, s);
    CHECK(v >= prev);
    prev = v;
  }
  std::vector<cplx> zero(g.n * g.n, 0.0);
  CHECK(sobolev_norm(zero, g.n, h, 1.5) == 0.0);
}

TEST_CASE("hormander norm of constants and the sign multiplier") {
  auto b = build_bumps(0.1);
  WindowGrid g;
  auto line = bht_line();
  auto betas = ring_samples({PlaneVector{}, cone_axis(3) * 3.0}, 4, 16, line);
  CHECK(betas.size() == 2 * 9 * 16);
  for (const auto& x : betas) CHECK(line.distance(x) > 0);

  auto one = hormander_norm(multiplier_one(), line, 1.25, betas, g, b);
  double lo = *std::min_element(one.values.begin(), one.values.end());
  CHECK((one.sup - lo) / one.sup < 1e-8);
  CHECK(one.sup == doctest::Approx(kPhiH125).epsilon(2e-3));
  CHECK(hormander_norm(multiplier_zero(), line, 1.25, betas, g, b).sup == 0.0);

  // the window never reaches the line, so sgn localizes to +-Phi
  auto sg = hormander_norm(bht_sign(), line, 1.25, betas, g, b);
  CHECK(sg.sup == doctest::Approx(one.sup).epsilon(1e-12));
  CHECK_THROWS_AS(hormander_norm(bht_sign(), line, 1.25, {}, g, b), std::domain_error);
}

TEST_CASE("hormander norm homogeneity and translation covariance") {
  auto b = build_bumps(0.1);
  WindowGrid g{64, 0.4};
  PlaneVector g0 = PlaneBasis::from_uv(0.2, 0.1);
  SingularCurve point({g0}, 1, 0.1);
  auto m = point_mikhlin(3, g0);
  auto betas = ring_samples({g0}, 3, 8, point);
  double base = hormander_norm(m, point, 1.25, betas, g, b).sup;
  CHECK(base > 0);
  cplx c(3, -4);
  CHECK(hormander_norm(m.scaled(c), point, 1.25, betas, g, b).sup ==
        doctest::Approx(5 * base).epsilon(1e-12));

  PlaneVector shift = PlaneBasis::from_uv(1.5, -2.25);
  auto moved = point.translated(shift);
  std::vector<PlaneVector> mb;
  for (auto& x : betas) mb.push_back(x + shift);
  double tr = hormander_norm(m.translated(shift), moved, 1.25, mb, g, b).sup;
  CHECK(tr == doctest::Approx(base).epsilon(1e-9));

  // a point singularity of degree 0 localizes identically at every scale
  auto h = hormander_norm(m, point, 1.25, betas, g, b);
  double lo = *std::min_element(h.values.begin(), h.values.end());
  CHECK((h.sup - lo) / h.sup < 1e-6);
}

TEST_CASE("sobolev algebra constant is stable under refinement") {
  std::mt19937_64 rng(11);
  double worst[2] = {0, 0};
  for (int trial = 0; trial < 6; ++trial) {
    std::mt19937_64 r1(rng()), r2(rng());
    for (int level = 0; level < 2; ++level) {
      WindowGrid g{static_cast<std::size_t>(64 << level), 0.4};
      auto rr1 = r1, rr2 = r2;
      auto f = random_smooth(rr1, g, 3), k = random_smooth(rr2, g, 3);
      std::vector<cplx> p(f.size());
      for (std::size_t i = 0; i < f.size(); ++i) p[i] = f[i] * k[i];
      double s = 1.25, h = g.step();
      double C = sobolev_norm(p, g.n, h, s) / (sobolev_norm(f, g.n, h, s) * sobolev_norm(k, g.n, h, s));
      worst[level] = std::max(worst[level], C);
    }
  }
  CHECK(worst[0] > 0);
  CHECK(std::abs(worst[0] - worst[1]) / worst[1] < 0.05);
}
