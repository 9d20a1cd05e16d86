#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "tentfield/bumps.hpp"
#include "tentfield/errors.hpp"

using namespace tentfield;
using std::numbers::pi;

namespace {
// mpmath, 30 digits
constexpr double kZ = 0.443993816168079437823048921171;
constexpr double kEta0 = 0.828568839869105151664159062986;
constexpr double kTilde0145 = 0.877032716722670921914265974437;
constexpr double kCdf03 = 0.740907974643807986995583213652;
// scipy quadrature of |inverse FT of eta~| over |u| < 300
constexpr double kPhiL1 = 2.188090850577342;

std::vector<cplx> random_trig(std::mt19937_64& rng, const AlphaGrid& g, int kmax) {
  std::normal_distribution<> n(0, 1);
  std::vector<cplx> f(g.n, 0.0);
  for (int k = -kmax; k <= kmax; ++k) {
    cplx c(n(rng), n(rng));
    for (std::size_t i = 0; i < g.n; ++i)
      f[i] += c * std::polar(1.0, 2 * pi * k * g.at(i) / g.length());
  }
  return f;
}
}  // namespace

TEST_CASE("eta normalization and values") {
  auto b = build_bumps(0.1, 1024);
  CHECK(b.normalization() == doctest::Approx(kZ).epsilon(1e-13));
  CHECK(b.eta(0.0) == doctest::Approx(kEta0).epsilon(1e-13));
  CHECK(b.eta(1.0) == 0.0);
  auto eta = [&](double x) { return b.eta(x); };
  double I = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(eta, -1.0, 1.0, 15, 1e-14);
  CHECK(std::abs(I - 1.0) < 1e-10);
  CHECK(b.eta_cdf(0.3) == doctest::Approx(kCdf03).epsilon(1e-11));
  CHECK(b.eta_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-13));
}

TEST_CASE("eta tilde plateau and support") {
  auto b = build_bumps(0.1, 1024);
  CHECK(b.eta_tilde(0.0) == 1.0);
  CHECK(b.eta_tilde(0.1) == 1.0);
  CHECK(b.eta_tilde(0.14) == 1.0);
  CHECK(b.eta_tilde(-0.14) == 1.0);
  CHECK(b.eta_tilde(0.16) == 0.0);
  CHECK(b.eta_tilde(0.2) == 0.0);
  CHECK(b.eta_tilde(0.15) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(b.eta_tilde(0.145) == doctest::Approx(kTilde0145).epsilon(1e-11));
  double prev = 1.0;
  for (int i = 0; i <= 200; ++i) {
    double v = b.eta_tilde(0.14 + i * 1e-4);
    CHECK(v <= prev + 1e-15);
    prev = v;
  }
  CHECK(b.Phi(PlaneBasis::from_uv(0.06, 0.08)) == 1.0);
  CHECK(b.Phi_uv(0.2, 0.0) == 0.0);
}

TEST_CASE("phi hat plateau, support and resolution guard") {
  double eps = 7.0e-4;
  auto b = build_bumps(eps, 1024);
  CHECK(b.phi_hat(eps / 10.0) == 1.0);
  CHECK(b.phi_hat(-0.2 * eps) == 1.0);
  CHECK(b.phi_hat(0.4 * eps) == 0.0);
  CHECK(b.plateau_samples() >= 8);
  CHECK_NOTHROW(build_bumps(eps, 80));
  CHECK_THROWS_AS(build_bumps(eps, 60), ConfigError);
  CHECK_THROWS_AS(build_bumps(0.0, 1024), ConfigError);
}

TEST_CASE("phi by inverse FFT matches the direct sum") {
  double eps = 0.05;
  auto b = build_bumps(eps, 256);
  auto s = b.phi_samples();
  REQUIRE(s.size() == 256);
  for (std::size_t i = 0; i < s.size(); ++i) {
    double t = (static_cast<double>(i) - 128.0) * b.phi_time_step();
    CHECK(std::abs(s[i] - b.phi(t)) < 1e-13);
  }
  // phi(0) is the integral of phi^, i.e. 2 eps times the integral of eta~ (= 0.3)
  // the Riemann sum converges slowly across the steep edges of eta~
  auto mid = build_bumps(eps, 1024);
  auto fine = build_bumps(eps, 4096);
  double e1 = std::abs(mid.phi(0.0) / (0.6 * eps) - 1.0);
  double e2 = std::abs(fine.phi(0.0) / (0.6 * eps) - 1.0);
  CHECK(e1 < 1e-4);
  CHECK(e2 < e1);
  // real and even
  CHECK(b.phi(3.7) == doctest::Approx(b.phi(-3.7)));
}

TEST_CASE("phi L1 norm is scale free and above one") {
  auto a = build_bumps(0.1, 1024);
  auto c = build_bumps(0.001, 1024);
  CHECK(a.phi_l1() == doctest::Approx(c.phi_l1()).epsilon(1e-9));
  CHECK(a.phi_l1() == doctest::Approx(kPhiL1).epsilon(5e-3));
  CHECK(a.phi_l1() > 1.0);
}

TEST_CASE("partition normalizer symmetries") {
  auto b = build_bumps(0.125, 1024);
  PlaneVector g0{0, 0, 0};
  SingularCurve point({g0}, 1, 0.1);
  PartitionWeights pw(b, point, 64);
  double x1 = pw.normalizer(PlaneBasis::from_uv(1.0, 0.0));
  double x2 = pw.normalizer(PlaneBasis::from_uv(0.6, 0.8));
  double x3 = pw.normalizer(PlaneBasis::from_uv(0.0, 3.0));
  CHECK(x1 == doctest::Approx(x2).epsilon(1e-3));
  CHECK(x1 == doctest::Approx(x3).epsilon(1e-3));
  CHECK(x1 > 0.0);
  CHECK_THROWS_AS(pw.normalizer(g0), std::domain_error);

  PlaneVector ax = cone_axis(3);
  SingularCurve line({ax * -1000.0, ax * 1000.0}, 3, 0.1);
  PartitionWeights pl(b, line, 64);
  double l1 = pl.normalizer(cone_normal(3) * 0.5);
  double l2 = pl.normalizer(cone_normal(3) * -2.0 + ax * 0.3);
  CHECK(l1 == doctest::Approx(l2).epsilon(1e-3));
}

TEST_CASE("partition of unity on a fine beta grid") {
  auto b = build_bumps(0.125, 1024);
  PlaneVector g0{0, 0, 0};
  SingularCurve point({g0}, 1, 0.1);
  PartitionWeights pw(b, point, 96);
  PlaneVector x = PlaneBasis::from_uv(0.7, -0.4);
  double dx = point.distance(x);
  auto uv = PlaneBasis::to_uv(x);
  PlaneGrid grid{uv[0], uv[1], 0.0006 * dx, 72, 72};
  REQUIRE(pw.covered_by(grid, x));
  auto betas = BetaSet::from_grid(grid, point);
  double direct = pw.normalizer(x);
  double on_grid = pw.normalizer_on(betas, x);
  // sum over the grid of chi~_beta(x) mu(cell) is on_grid / direct
  CHECK(on_grid / direct == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("normalizer gradient scales like 1/d") {
  auto b = build_bumps(0.125, 1024);
  std::mt19937_64 rng(2);
  std::vector<PlaneVector> pts;
  PlaneVector p{0, 0, 0};
  for (int i = 0; i < 6; ++i) {
    double phi = std::uniform_real_distribution<>(-0.08, 0.08)(rng);
    p = p + (cone_axis(1) * std::cos(phi) + cone_normal(1) * std::sin(phi)) * 0.4;
    pts.push_back(p);
  }
  SingularCurve c(pts, 1, 0.1);
  PartitionWeights pw(b, c, 48);
  double worst = 0.0, lo = 1e300;
  for (double d : {0.05, 0.2, 0.8}) {
    PlaneVector x = pts[2] + cone_normal(1) * d;
    double dx = c.distance(x), hstep = 1e-3 * dx;
    double X = pw.normalizer(x);
    double gu = (pw.normalizer(x + PlaneBasis::u1 * hstep) - pw.normalizer(x - PlaneBasis::u1 * hstep)) / (2 * hstep);
    double gv = (pw.normalizer(x + PlaneBasis::u2 * hstep) - pw.normalizer(x - PlaneBasis::u2 * hstep)) / (2 * hstep);
    worst = std::max(worst, std::hypot(gu, gv) * dx / X);
    lo = std::min(lo, X);
  }
  CHECK(lo > 0.0);
  CHECK(worst < 5.0);
}

TEST_CASE("embed pure frequency and disjoint support") {
  double eps = 0.125;
  auto b = build_bumps(eps, 1024);
  AlphaGrid g{-64.0, 0.125, 1024};
  double L = g.length();
  double xi0 = 37.0 / L;
  std::vector<cplx> f(g.n);
  for (std::size_t i = 0; i < g.n; ++i) f[i] = std::polar(1.0, 2 * pi * xi0 * g.at(i));
  PlaneVector g0{0, 0, 0};
  SingularCurve point({g0}, 2, 0.1);
  std::vector<PlaneVector> pts;
  for (int i = 0; i < 12; ++i) pts.push_back(PlaneBasis::from_uv(0.3 + 0.05 * i, 0.2 - 0.04 * i));
  auto betas = BetaSet::from_points(pts, point, 1e-4);
  auto F = embed(f, 2, g, betas, b);
  double err = 0.0;
  for (std::size_t ib = 0; ib < betas.size(); ++ib) {
    double w = b.phi_hat((xi0 - betas[ib].beta.coord(2)) / betas[ib].d);
    for (std::size_t i = 0; i < g.n; ++i)
      err = std::max(err, std::abs(F.at(ib, i) - w * std::polar(1.0, 2 * pi * xi0 * g.at(i))));
  }
  CHECK(err < 1e-12);

  // frequency far from every window
  double xi1 = 400.0 / L;
  for (std::size_t i = 0; i < g.n; ++i) f[i] = std::polar(1.0, 2 * pi * xi1 * g.at(i));
  auto F1 = embed(f, 2, g, betas, b);
  double mx = 0.0;
  for (auto v : F1.values) mx = std::max(mx, std::abs(v));
  CHECK(mx <= 1e-12);

  AlphaGrid tiny{0.0, 0.125, 16};
  CHECK_THROWS_AS(embed(std::vector<cplx>(16, 1.0), 2, tiny, betas, b), ConfigError);
}

TEST_CASE("embed is bounded by ||phi||_1 ||f||_inf") {
  auto b = build_bumps(0.125, 1024);
  AlphaGrid g{0.0, 0.25, 4096};
  std::mt19937_64 rng(9);
  PlaneVector g0{0, 0, 0};
  SingularCurve point({g0}, 1, 0.1);
  PlaneGrid pg{0.5, 0.5, 0.1, 10, 10};
  auto betas = BetaSet::from_grid(pg, point);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<cplx> f(g.n);
    std::uniform_real_distribution<> u(-1, 1);
    double finf = 0.0;
    for (auto& v : f) {
      v = cplx(u(rng), u(rng));
      finf = std::max(finf, std::abs(v));
    }
    auto F = embed(f, 1, g, betas, b);
    double mx = 0.0;
    for (auto v : F.values) mx = std::max(mx, std::abs(v));
    CHECK(mx <= b.phi_l1() * finf);
  }
}

TEST_CASE("wave packet pairing reproduces the embedding") {
  double eps = 0.125;
  std::size_t nb = 1024;
  auto b = build_bumps(eps, nb);
  // grid whose period matches the profile's own periodization at scale d
  double d = 0.5;
  double L = static_cast<double>(nb) / (4.0 * eps * d);
  AlphaGrid g{0.0, L / 4096.0, 4096};
  BetaSample s;
  s.d = d;
  s.beta = cone_axis(1) * (150.0 / L / cone_axis(1).coord(1));
  REQUIRE(std::abs(s.beta.coord(1) * L - 150.0) < 1e-9);
  BetaSet bs;
  bs.samples = {s};
  std::mt19937_64 rng(4);
  std::vector<cplx> f = random_trig(rng, g, 200);
  auto F = embed(f, 1, g, bs, b);
  double scale = 0.0, err = 0.0;
  for (std::size_t ia : {0u, 100u, 2047u, 3000u}) {
    double a = g.at(ia);
    auto psi = wave_packet(a, s, 1, g, b);
    cplx ip = pair_bilinear(f, psi, g.h);
    err = std::max(err, std::abs(ip - F.at(0, ia)));
    scale = std::max(scale, std::abs(F.at(0, ia)));
  }
  CHECK(scale > 1e-3);
  CHECK(err / scale < 1e-8);

  // L1 norm of a packet equals ||phi||_1
  AlphaGrid fine{-2000.0, 0.05, 80000};
  auto psi = wave_packet(0.0, s, 1, fine, b);
  double l1 = 0.0;
  for (auto v : psi) l1 += std::abs(v) * fine.h;
  CHECK(l1 == doctest::Approx(b.phi_l1()).epsilon(2e-3));
}

TEST_CASE("local and global sizes") {
  auto k = derive_constants(0.1);
  auto b = build_bumps(0.125, 1024);
  PlaneVector g0{0, 0, 0};
  SingularCurve point({g0}, 1, 0.1);
  PlaneGrid pg{0.0, 0.0, 0.25, 12, 12};
  auto betas = BetaSet::from_grid(pg, point);
  AlphaGrid ag{0.0, 0.5, 64};
  Field F(ag, betas);
  SizeQuery q{{8.0, 4.0}, g0, 0.25, 1};
  CHECK(local_size(F, q, k) == 0.0);

  // one nonzero cell with value v inside the region and off the cone
  std::size_t ib = 0;
  for (; ib < betas.size(); ++ib) {
    const auto& s = betas[ib];
    if (s.weight > 0 && whitney_membership(s.beta, g0, 0.25, s.d, k) &&
        !cone_membership(s.beta, g0, 1, k))
      break;
  }
  REQUIRE(ib < betas.size());
  double v = 3.0;
  F.at(ib, 16) = v;  // alpha = 8
  double expect = std::max(std::sqrt(v * v * ag.h * betas[ib].weight / 4.0), v);
  CHECK(local_size(F, q, k) == doctest::Approx(expect));
  F.at(ib, 16) = 0.01;
  double w = std::sqrt(0.01 * 0.01 * ag.h * betas[ib].weight / 4.0);
  CHECK(local_size(F, q, k) == doctest::Approx(std::max(w, 0.01)));

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<> u(0, 1);
  for (auto& x : F.values) x = cplx(u(rng), u(rng));
  double prev = 0.0;
  for (double t : {2.0, 1.0, 0.5, 0.25, 0.0}) {
    SizeQuery qt{{8.0, 4.0}, g0, t, 1};
    double s = local_size(F, qt, k);
    CHECK(s >= prev);
    prev = s;
  }

  std::vector<PlaneVector> gammas{g0};
  auto lat = TentLattice::dyadic(0.0, 32.0, 3, gammas);
  CHECK(lat.intervals.size() == 15);
  auto gs = global_size(F, 1, lat, k);
  double brute = 0.0;
  for (const auto& I : lat.intervals) brute = std::max(brute, local_size(F, {I, g0, 1.0 / I.length, 1}, k));
  CHECK(gs.value == doctest::Approx(brute).epsilon(1e-12));
  auto finer = TentLattice::dyadic(0.0, 32.0, 5, gammas);
  CHECK(global_size(F, 1, finer, k).value >= gs.value);
  Field Z(ag, betas);
  CHECK(global_size(Z, 1, lat, k).value == 0.0);
}
