#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "tentfield/errors.hpp"
#include "tentfield/modelform.hpp"

using namespace tentfield;
using std::numbers::pi;

namespace {

std::vector<cplx> gaussian(const AlphaGrid& g, double x0, double sigma, double c) {
  std::vector<cplx> f(g.n);
  for (std::size_t n = 0; n < g.n; ++n) {
    double x = g.at(n);
    f[n] = std::exp(-pi * (x - x0) * (x - x0) / (sigma * sigma)) * std::polar(1.0, 2 * pi * c * x);
  }
  return f;
}

std::vector<cplx> band_limited(std::mt19937_64& rng, const AlphaGrid& g, int kmax) {
  std::normal_distribution<> n(0, 1);
  std::vector<cplx> f(g.n, 0.0);
  for (int k = -kmax; k <= kmax; ++k) {
    cplx c(n(rng), n(rng));
    for (std::size_t i = 0; i < g.n; ++i) f[i] += c * std::polar(1.0, 2 * pi * k * g.at(i) / g.length());
  }
  return f;
}

BetaSample sample_at(const PlaneVector& b, const SingularCurve& c) {
  auto np = c.nearest(b);
  return {b, np.distance, np.point, 1.0};
}

}  // namespace

TEST_CASE("annulus index is right closed and partitions radii") {
  PlaneVector u = PlaneBasis::u1;
  CHECK(annulus_index(PlaneVector{}, 3.0) == 0);
  CHECK(annulus_index(u * 2.0, 1.0) == 1);
  CHECK(annulus_index(u * 1.0, 1.0) == 0);
  CHECK(annulus_index(u * 4.0, 1.0) == 2);
  CHECK(annulus_index(u * (4.0 * (1 + 1e-12)), 1.0) == 3);
  CHECK(annulus_index(u * 0.5, 8.0) == 2);
  // the diagonal part of alpha is ignored
  CHECK(annulus_index(std::array<double, 3>{1.0, -1.0, 7.0}, 1.0) ==
        annulus_index(std::array<double, 3>{1.0 - 7.0 / 3, -1.0 - 7.0 / 3, 7.0 - 7.0 / 3}, 1.0));

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<> lr(-4, 12);
  for (int i = 0; i < 2000; ++i) {
    double x = std::exp2(lr(rng));
    int k = annulus_index(PlaneBasis::u2 * x, 1.0);
    if (x <= 1) {
      CHECK(k == 0);
    } else {
      CHECK(x > std::ldexp(1.0, k - 1));
      CHECK(x <= std::ldexp(1.0, k));
    }
  }
}

TEST_CASE("direct trilinear form with m = 1 is sqrt3 times the product integral") {
  std::mt19937_64 rng(7);
  AlphaGrid g{-3.0, 6.0 / 256, 256};
  for (int trial = 0; trial < 5; ++trial) {
    auto f1 = band_limited(rng, g, 20), f2 = band_limited(rng, g, 20), f3 = band_limited(rng, g, 20);
    cplx direct = trilinear_direct(multiplier_one(), f1, f2, f3, g);
    cplx time = 0.0;
    for (std::size_t n = 0; n < g.n; ++n) time += f1[n] * f2[n] * f3[n];
    time *= std::sqrt(3.0) * g.h;
    CHECK(std::abs(direct - time) / std::abs(time) < 1e-12);
  }
}

TEST_CASE("direct trilinear form is multilinear and translation invariant") {
  AlphaGrid g{-8.0, 0.125, 128};
  auto f1 = gaussian(g, 0.5, 2, 0.3), f2 = gaussian(g, -0.3, 2, -0.1), f3 = gaussian(g, 0, 2, -0.2);
  auto m = point_mikhlin(1, PlaneBasis::from_uv(0.35, -0.25));
  cplx base = trilinear_direct(m, f1, f2, f3, g);
  cplx c(0.7, -1.3);
  std::vector<cplx> cf(f1);
  for (auto& v : cf) v *= c;
  CHECK(std::abs(trilinear_direct(m, cf, f2, f3, g) - c * base) < 1e-12 * std::abs(base));

  // a cyclic shift by whole samples is an exact translation on the lattice
  auto shift = [](std::vector<cplx> v, std::size_t s) {
    std::rotate(v.begin(), v.begin() + s, v.end());
    return v;
  };
  cplx moved = trilinear_direct(m, shift(f1, 9), shift(f2, 9), shift(f3, 9), g);
  CHECK(std::abs(moved - base) < 1e-12 * std::abs(base));
}

TEST_CASE("kernel slice against independent window quadrature") {
  auto bumps = build_bumps(0.05, 1024);
  PlaneVector g0 = PlaneBasis::from_uv(0.2, 0.1);
  SingularCurve pt({g0}, 1, 0.1);
  PartitionWeights pw(bumps, pt);
  auto b = sample_at(g0 + PlaneBasis::from_uv(0.6, -0.3), pt);

  auto K0 = kernel_from_multiplier(multiplier_zero(), b, pw);
  for (auto v : K0.demod) CHECK(v == cplx(0.0));
  CHECK(kernel_condition_ratio(K0, 1.25) == 0.0);

  // for a point curve X is constant on the window
  double X = pw.normalizer(b.beta);
  double w = bumps.eps() * b.d;
  auto radial = [&](auto&& g) {
    using boost::math::quadrature::gauss_kronrod;
    auto inner = [&](double r) {
      auto ang = [&](double th) { return g(r, th); };
      return gauss_kronrod<double, 61>::integrate(ang, 0.0, 2 * pi, 8, 1e-13) * r;
    };
    return gauss_kronrod<double, 61>::integrate(inner, 0.0, 0.16 * w, 10, 1e-13);
  };
  auto chi = [&](double r) { return bumps.eta_tilde(r / w); };
  double one_mass = radial([&](double r, double) { return chi(r); }) / X;
  auto K1 = kernel_from_multiplier(multiplier_one(), b, pw);
  CHECK(K1.mass().real() == doctest::Approx(one_mass).epsilon(1e-3));
  CHECK(std::abs(K1.mass().imag()) < 1e-12 * one_mass);

  auto m = point_mikhlin(2, g0);
  auto bu = PlaneBasis::to_uv(b.beta);
  double mr = radial([&](double r, double th) {
    return (chi(r) * m(PlaneBasis::from_uv(bu[0] + r * std::cos(th), bu[1] + r * std::sin(th)))).real();
  }) / X;
  auto Km = kernel_from_multiplier(m, b, pw);
  CHECK(Km.mass().real() == doctest::Approx(mr).epsilon(1e-3));

  // K(alpha, beta) against a plain double sum over the window samples
  KernelGrid kg;
  for (auto [p, q] : {std::pair<std::size_t, std::size_t>{32, 32}, {40, 21}, {5, 60}}) {
    PlaneVector a = Km.alpha(p, q);
    cplx acc = 0.0;
    for (std::size_t s = 0; s < kg.n; ++s)
      for (std::size_t t = 0; t < kg.n; ++t) {
        double zu = (s - 0.5 * kg.n) * Km.dz, zv = (t - 0.5 * kg.n) * Km.dz;
        PlaneVector x = b.beta + PlaneBasis::from_uv(zu, zv);
        double c = chi(std::hypot(zu, zv));
        if (c == 0) continue;
        acc += c / X * m(x) * std::polar(1.0, -2 * pi * a.dot(x));
      }
    acc *= Km.dz * Km.dz;
    CHECK(std::abs(Km.kernel(p, q) - acc) < 2e-3 * std::abs(Km.mass()));
  }
}

TEST_CASE("kernel condition ratio is dilation invariant") {
  auto bumps = build_bumps(0.05, 1024);
  PlaneVector g0 = PlaneBasis::from_uv(0.2, 0.1);
  auto m = point_mikhlin(1, g0);
  PlaneVector beta = g0 + PlaneBasis::from_uv(0.6, -0.3);
  double ref = 0;
  for (double lam : {1.0, 3.0, 0.25}) {
    SingularCurve pt({g0 * lam}, 1, 0.1);
    PartitionWeights pw(bumps, pt);
    auto K = kernel_from_multiplier(m.dilated(lam), sample_at(beta * lam, pt), pw);
    double r = kernel_condition_ratio(K, 1.25);
    if (lam == 1.0) ref = r;
    CHECK(r == doctest::Approx(ref).epsilon(1e-9));
  }
  CHECK(ref > 0);
}

TEST_CASE("packet table matches the embedded field") {
  auto bumps = build_bumps(0.1, 1024);
  PlaneVector g0 = PlaneBasis::from_uv(-2.0, 0.0);
  SingularCurve pt({g0}, 1, 0.1);
  // both sides are periodizations; the slow packet tails need long periods
  AlphaGrid g{-2048.0, 0.25, 16384};
  auto f = gaussian(g, 0.4, 1.0, 0.2);
  auto betas = BetaSet::from_points({g0 + PlaneBasis::from_uv(1.1, 0.3)}, pt, 1.0);
  const auto& b = betas[0];
  for (int j = 1; j <= 3; ++j) {
    Field F = embed(f, j, g, betas, bumps);
    double w = bumps.eps() * b.d;
    auto T = packet_table(f, g, j, b, bumps, 0.0, 0.0625 / w, 16384);
    double scale = 0;
    for (std::size_t n = 0; n < g.n; ++n) scale = std::max(scale, std::abs(F.at(0, n)));
    for (std::size_t n = 7900; n < 8500; n += 23) {
      double x = g.at(n);
      cplx e = T.at(x) * std::polar(1.0, 2 * pi * b.beta.coord(j) * x);
      CHECK(std::abs(e - F.at(0, n)) < 1e-6 * scale);
    }
  }
}

TEST_CASE("model form vanishes with a zero multiplier or a zero input") {
  auto bumps = build_bumps(0.05, 1024);
  PlaneVector g0 = PlaneBasis::from_uv(0.35, -0.25);
  SingularCurve pt({g0}, 1, 0.1);
  PartitionWeights pw(bumps, pt);
  AlphaGrid g{-8.0, 0.125, 128};
  std::array<std::vector<cplx>, 3> f{gaussian(g, 0.5, 2, 0.3), gaussian(g, -0.3, 2, -0.1),
                                     gaussian(g, 0, 2, -0.2)};
  auto betas = BetaSet::from_grid(PlaneGrid{0, 0, 0.35, 8, 8}, pt);
  CHECK(model_form_evaluate(multiplier_zero(), f, g, betas, pw).value == cplx(0.0));
  auto f0 = f;
  f0[1].assign(g.n, 0.0);
  auto r = model_form_evaluate(point_mikhlin(1, g0), f0, g, betas, pw);
  CHECK(r.value == cplx(0.0));
  CHECK(r.betas_used == 0);
}

TEST_CASE("model form agrees with the direct form on a coarse grid") {
  auto bumps = build_bumps(derive_constants(0.1).eps, 1024);
  PlaneVector g0 = PlaneBasis::from_uv(0.35, -0.25);
  SingularCurve pt({g0}, 1, 0.1);
  PartitionWeights pw(bumps, pt);
  AlphaGrid g{-8.0, 0.125, 128};
  std::array<std::vector<cplx>, 3> f{gaussian(g, 0.5, 2, 0.3), gaussian(g, -0.3, 2, -0.1),
                                     gaussian(g, 0, 2, -0.2)};
  auto m = point_mikhlin(1, g0);
  cplx direct = trilinear_direct(m, f[0], f[1], f[2], g);
  auto c = PlaneBasis::to_uv(PlaneVector(0.3, -0.1, -0.2));
  auto betas = BetaSet::from_grid(PlaneGrid{c[0], c[1], 2.8 / 32, 32, 32}, pt);
  auto r = model_form_evaluate(m, f, g, betas, pw);
  // 1e-2 at this beta grid; the acceptance run uses 64^2 and 128^2
  CHECK(std::abs(r.value - direct) / std::abs(direct) < 2e-2);
}

TEST_CASE("tent estimate bookkeeping") {
  auto k = derive_constants(0.1);
  auto bumps = build_bumps(0.125, 1024);
  PlaneVector g0 = PlaneBasis::from_uv(0.0, 0.0);
  SingularCurve pt({g0}, 1, 0.1);
  PartitionWeights pw(bumps, pt);
  AlphaGrid g{-8.0, 0.125, 128};
  std::array<std::vector<cplx>, 3> f{gaussian(g, 0.5, 2, 0.3), gaussian(g, -0.3, 2, -0.1),
                                     gaussian(g, 0, 2, -0.2)};
  auto betas = BetaSet::from_grid(PlaneGrid{0.05, 0.05, 0.1, 16, 16}, pt);
  ModelFormOptions opt;
  opt.kernel.n = 32;
  TentRegion T{{0.3, 2.0}, g0};
  std::array<double, 3> sizes{1.0, 1.0, 1.0};
  auto m = point_mikhlin(1, g0);
  auto est = tent_estimate_ratio(m, f, g, betas, pw, T, 1, sizes, 1.25, k, opt);
  CHECK(est.betas > 0);
  CHECK(est.lhs > 0);
  CHECK(est.support_checked > 0);
  CHECK(est.support_violations == 0);
  CHECK(est.ratio == doctest::Approx(est.lhs / 2.0));
  CHECK(est.envelope[0] == 1.0);
  CHECK(est.envelope[2] == doctest::Approx(3.0 * std::pow(2.0, -0.5)));
  double sum = 0;
  for (double v : est.per_k) sum += v;
  CHECK(sum == doctest::Approx(est.lhs));

  auto zero = f;
  zero[2].assign(g.n, 0.0);
  CHECK(tent_estimate_ratio(m, zero, g, betas, pw, T, 1, sizes, 1.25, k, opt).lhs == 0.0);
  CHECK_THROWS_AS(tent_estimate_ratio(m, f, g, betas, pw, T, 1, {1.0, 0.0, 1.0}, 1.25, k, opt),
                  DegenerateInput);
}
