#include "tentfield/bumps.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <numbers>
#include <sstream>

#include "tentfield/errors.hpp"
#include "tentfield/parallel.hpp"

namespace tentfield {

namespace {

constexpr std::size_t kCdfCells = 4096;

double eta_raw(double x) {
  double q = 1.0 - x * x;
  return q > 0.0 ? std::exp(-1.0 / q) : 0.0;
}

}  // namespace

BumpProfile::BumpProfile(double eps, std::size_t resolution) : eps_(eps), n_(resolution) {
  if (!(eps > 0.0)) throw ConfigError("bump scale eps must be positive");
  if (resolution < 2 || resolution % 2 != 0) throw ConfigError("bump resolution must be even");
  h_ = 4.0 * eps_ / static_cast<double>(n_);
  if (plateau_samples() < 8) {
    std::ostringstream os;
    os << "bump resolution " << n_ << " leaves " << plateau_samples()
       << " samples across the plateau of phi^ (need 8)";
    throw ConfigError(os.str());
  }

  boost::math::quadrature::tanh_sinh<double> ts;
  z_ = ts.integrate(eta_raw, -1.0, 1.0);

  cdf_.assign(kCdfCells + 1, 0.0);
  double w = 2.0 / kCdfCells;
  for (std::size_t i = 0; i < kCdfCells; ++i) {
    double a = -1.0 + i * w;
    double piece = boost::math::quadrature::gauss<double, 20>::integrate(eta_raw, a, a + w);
    cdf_[i + 1] = cdf_[i] + piece;
  }
  double total = cdf_.back();
  for (auto& g : cdf_) g /= total;

  for (std::size_t k = 0;; ++k) {
    double v = phi_hat(k * h_);
    if (v == 0.0) break;
    hat_pos_.push_back(v);
  }

  // ||phi||_1 is scale free; integrate |phi| with a step well below its oscillation
  // scale, over a quarter of the periodization length
  double step = 1.0 / (40.0 * eps_);
  double reach = static_cast<double>(n_) / (16.0 * eps_);
  std::size_t m = static_cast<std::size_t>(reach / step);
  double acc = 0.5 * std::abs(phi(0.0));
  for (std::size_t i = 1; i <= m; ++i) acc += std::abs(phi(i * step));
  phi_l1_ = 2.0 * acc * step;
}

double BumpProfile::eta(double x) const { return eta_raw(x) / z_; }

double BumpProfile::eta_cdf(double x) const {
  if (x <= -1.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double w = 2.0 / kCdfCells;
  double pos = (x + 1.0) / w;
  std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(pos), kCdfCells - 1);
  double a = -1.0 + i * w;
  double s = (x - a) / w;
  double g0 = cdf_[i], g1 = cdf_[i + 1];
  double d0 = eta(a) * w, d1 = eta(a + w) * w;
  double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * g0 + (s3 - 2 * s2 + s) * d0 + (-2 * s3 + 3 * s2) * g1 +
         (s3 - s2) * d1;
}

double BumpProfile::eta_tilde(double x) const {
  double ax = std::abs(x);
  if (ax <= kTildePlateau) return 1.0;
  if (ax >= kTildeSupport) return 0.0;
  return eta_cdf(100.0 * (ax + 0.15)) - eta_cdf(100.0 * (ax - 0.15));
}

double BumpProfile::Phi_uv(double a, double b) const { return eta_tilde(std::hypot(a, b)); }

std::size_t BumpProfile::plateau_samples() const {
  double r = plateau_radius();
  return 2 * static_cast<std::size_t>(std::floor(r / h_ + 1e-12)) + 1;
}

double BumpProfile::phi(double x) const {
  double acc = 0.0;
  for (std::size_t k = 1; k < hat_pos_.size(); ++k)
    acc += hat_pos_[k] * std::cos(2.0 * std::numbers::pi * x * k * h_);
  return h_ * (hat_pos_.empty() ? 0.0 : hat_pos_[0] + 2.0 * acc);
}

std::vector<double> BumpProfile::phi_samples() const {
  std::vector<cplx> buf(n_);
  for (std::size_t k = 0; k < n_; ++k) buf[k] = phi_hat(fft_freq_index(k, n_) * h_);
  Fft1d fft(n_);
  fft.backward(buf);
  std::vector<double> out(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    std::size_t src = (i + n_ / 2) % n_;  // time index i - N/2
    out[i] = h_ * buf[src].real();
  }
  return out;
}

BumpProfile build_bumps(double eps, std::size_t resolution) { return BumpProfile(eps, resolution); }

// ---------------------------------------------------------------------------

BetaSet BetaSet::from_grid(const PlaneGrid& grid, const SingularCurve& curve) {
  BetaSet out;
  out.cell_area = grid.h * grid.h;
  out.samples.resize(grid.size());
  double diam = grid.h * std::sqrt(2.0);
  parallel_for(grid.nu, [&](std::size_t iu) {
    for (std::size_t iv = 0; iv < grid.nv; ++iv) {
      BetaSample& s = out.samples[iu * grid.nv + iv];
      s.beta = grid.point(iu, iv);
      auto np = curve.nearest(s.beta);
      s.d = np.distance;
      s.nearest = np.point;
      s.weight = s.d < diam ? 0.0 : out.cell_area / (s.d * s.d);
    }
  });
  return out;
}

BetaSet BetaSet::from_points(const std::vector<PlaneVector>& pts, const SingularCurve& curve,
                             double cell_area) {
  BetaSet out;
  out.cell_area = cell_area;
  double diam = std::sqrt(2.0 * cell_area);
  for (const auto& p : pts) {
    BetaSample s;
    s.beta = p;
    auto np = curve.nearest(p);
    s.d = np.distance;
    s.nearest = np.point;
    s.weight = s.d < diam ? 0.0 : cell_area / (s.d * s.d);
    out.samples.push_back(s);
  }
  return out;
}

// ---------------------------------------------------------------------------

PartitionWeights::PartitionWeights(const BumpProfile& bumps, const SingularCurve& curve,
                                   std::size_t quad)
    : bumps_(bumps), curve_(curve), quad_(quad) {}

double PartitionWeights::chi_beta(const PlaneVector& beta, double d_beta,
                                  const PlaneVector& x) const {
  if (!(d_beta > 0.0)) return 0.0;
  return chi((x - beta).norm() / d_beta);
}

double PartitionWeights::normalizer(const PlaneVector& x) const {
  double dx = curve_.distance(x);
  if (!(dx > 0.0)) throw std::domain_error("normalizer evaluated on the singular curve");
  double e = bumps_.eps();
  // beta = x + e d(x) z; windows reaching x have |z| below R
  double R = BumpProfile::kTildeSupport / (1.0 - BumpProfile::kTildeSupport * e) * (1.0 + 1e-9);
  double hz = 2.0 * R / static_cast<double>(quad_);
  double acc = 0.0;
  for (std::size_t a = 0; a < quad_; ++a) {
    double za = -R + (a + 0.5) * hz;
    for (std::size_t b = 0; b < quad_; ++b) {
      double zb = -R + (b + 0.5) * hz;
      double rz = std::hypot(za, zb);
      if (rz > R) continue;
      PlaneVector beta = x + PlaneBasis::from_uv(za, zb) * (e * dx);
      double db = curve_.distance(beta);
      if (!(db > 0.0)) continue;
      double q = dx / db;
      acc += bumps_.eta_tilde(rz * q) * q * q;
    }
  }
  return e * e * acc * hz * hz;
}

double PartitionWeights::normalizer_on(const BetaSet& betas, const PlaneVector& x) const {
  double acc = 0.0;
  for (const auto& s : betas.samples) {
    if (s.weight == 0.0) continue;
    acc += chi_beta(s.beta, s.d, x) * s.weight;
  }
  return acc;
}

bool PartitionWeights::covered_by(const PlaneGrid& grid, const PlaneVector& x) const {
  double dx = curve_.distance(x);
  double e = bumps_.eps();
  double reach = BumpProfile::kTildeSupport * e * dx / (1.0 - BumpProfile::kTildeSupport * e);
  auto uv = PlaneBasis::to_uv(x);
  double ulo = grid.u(0) - 0.5 * grid.h, uhi = grid.u(grid.nu - 1) + 0.5 * grid.h;
  double vlo = grid.v(0) - 0.5 * grid.h, vhi = grid.v(grid.nv - 1) + 0.5 * grid.h;
  return uv[0] - reach >= ulo && uv[0] + reach <= uhi && uv[1] - reach >= vlo &&
         uv[1] + reach <= vhi;
}

// ---------------------------------------------------------------------------

Field embed(const std::vector<cplx>& f, int j, const AlphaGrid& alpha, const BetaSet& betas,
            const BumpProfile& bumps) {
  if (f.size() != alpha.n) throw std::invalid_argument("f is not sampled on the alpha grid");
  double L = alpha.length();
  double dmin = std::numeric_limits<double>::infinity();
  for (const auto& s : betas.samples)
    if (s.d > 0.0) dmin = std::min(dmin, s.d);
  if (std::isfinite(dmin) && 2.0 * bumps.support_radius() * dmin * L < 4.0) {
    std::ostringstream os;
    os << "alpha grid of length " << L << " cannot resolve the widest packet (d = " << dmin
       << ", eps = " << bumps.eps() << ")";
    throw ConfigError(os.str());
  }
  Field F(alpha, betas);
  std::size_t n = alpha.n;
  Fft1d fft(n);
  std::vector<cplx> fhat(f);
  fft.forward(fhat);
  parallel_for(betas.size(), [&](std::size_t ib) {
    const auto& s = betas[ib];
    if (!(s.d > 0.0)) return;
    double bj = s.beta.coord(j);
    std::vector<cplx> g(n);
    bool any = false;
    for (std::size_t k = 0; k < n; ++k) {
      double xi = fft_freq_index(k, n) / L;
      double w = bumps.phi_hat((xi - bj) / s.d);
      if (w != 0.0) {
        g[k] = fhat[k] * w;
        any = true;
      }
    }
    if (!any) return;
    fft.backward(g);
    for (std::size_t i = 0; i < n; ++i) F.at(ib, i) = g[i] / static_cast<double>(n);
  });
  return F;
}

std::vector<cplx> wave_packet(double alpha, const BetaSample& beta, int j, const AlphaGrid& grid,
                              const BumpProfile& bumps) {
  std::vector<cplx> out(grid.n);
  double bj = beta.beta.coord(j);
  for (std::size_t i = 0; i < grid.n; ++i) {
    double x = grid.at(i) - alpha;
    out[i] = std::polar(beta.d * bumps.phi(beta.d * x), -2.0 * std::numbers::pi * bj * x);
  }
  return out;
}

cplx pair_bilinear(const std::vector<cplx>& f, const std::vector<cplx>& g, double h) {
  if (f.size() != g.size()) throw std::invalid_argument("pairing of different lengths");
  cplx acc = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) acc += f[i] * g[i];
  return acc * h;
}

// ---------------------------------------------------------------------------

TentLattice TentLattice::dyadic(double a0, double length, int levels,
                                std::vector<PlaneVector> gammas) {
  TentLattice L;
  for (int l = 0; l <= levels; ++l) {
    std::size_t count = std::size_t{1} << l;
    double len = length / static_cast<double>(count);
    for (std::size_t m = 0; m < count; ++m) L.intervals.push_back({a0 + (m + 0.5) * len, len});
  }
  L.gammas = std::move(gammas);
  return L;
}

namespace {

// alpha-grid index range [lo, hi] of points inside the closed interval I
std::pair<long, long> index_range(const AlphaGrid& g, const Interval& I) {
  double tol = 1e-9 * g.h;
  long lo = static_cast<long>(std::ceil((I.lo() - g.a0 - tol) / g.h));
  long hi = static_cast<long>(std::floor((I.hi() - g.a0 + tol) / g.h));
  lo = std::max(lo, 0L);
  hi = std::min(hi, static_cast<long>(g.n) - 1);
  return {lo, hi};
}

}  // namespace

double local_size(const Field& F, const SizeQuery& q, const ConstantPack& k,
                  const std::vector<std::uint8_t>* removed) {
  auto [lo, hi] = index_range(F.alpha, q.I);
  double l2 = 0.0, linf = 0.0;
  for (std::size_t ib = 0; ib < F.betas.size(); ++ib) {
    const auto& s = F.betas[ib];
    if (!whitney_membership(s.beta, q.gamma, q.t, s.d, k)) continue;
    bool off_cone = !cone_membership(s.beta, q.gamma, q.j, k);
    for (long ia = lo; ia <= hi; ++ia) {
      std::size_t idx = ib * F.alpha.n + static_cast<std::size_t>(ia);
      if (removed && (*removed)[idx]) continue;
      double v = std::abs(F.values[idx]);
      linf = std::max(linf, v);
      if (off_cone) l2 += v * v * F.alpha.h * s.weight;
    }
  }
  return std::max(std::sqrt(l2 / q.I.length), linf);
}

GlobalSize global_size(const Field& F, int j, const TentLattice& lattice, const ConstantPack& k,
                       const std::vector<std::uint8_t>* removed) {
  std::size_t nb = F.betas.size(), ni = lattice.intervals.size(), na = F.alpha.n;
  std::vector<double> sum(nb * ni, 0.0), mx(nb * ni, 0.0);
  std::vector<std::pair<long, long>> ranges(ni);
  for (std::size_t i = 0; i < ni; ++i) ranges[i] = index_range(F.alpha, lattice.intervals[i]);
  parallel_for(nb, [&](std::size_t ib) {
    std::vector<double> prefix(na + 1, 0.0), absv(na, 0.0);
    for (std::size_t ia = 0; ia < na; ++ia) {
      std::size_t idx = ib * na + ia;
      double v = (removed && (*removed)[idx]) ? 0.0 : std::abs(F.values[idx]);
      absv[ia] = v;
      prefix[ia + 1] = prefix[ia] + v * v;
    }
    for (std::size_t i = 0; i < ni; ++i) {
      auto [lo, hi] = ranges[i];
      if (lo > hi) continue;
      sum[ib * ni + i] = prefix[hi + 1] - prefix[lo];
      mx[ib * ni + i] = *std::max_element(absv.begin() + lo, absv.begin() + hi + 1);
    }
  });
  std::vector<GlobalSize> best(lattice.gammas.size());
  parallel_for(lattice.gammas.size(), [&](std::size_t g) {
    const PlaneVector& gamma = lattice.gammas[g];
    std::vector<double> r(nb);
    std::vector<char> upper(nb), off(nb);
    for (std::size_t ib = 0; ib < nb; ++ib) {
      const auto& s = F.betas[ib];
      r[ib] = (s.beta - gamma).norm();
      upper[ib] = r[ib] <= s.d / k.delta1;
      off[ib] = !cone_membership(s.beta, gamma, j, k);
    }
    GlobalSize b;
    b.gamma = g;
    for (std::size_t i = 0; i < ni; ++i) {
      const Interval& I = lattice.intervals[i];
      double t = 1.0 / I.length;
      double l2 = 0.0, linf = 0.0;
      for (std::size_t ib = 0; ib < nb; ++ib) {
        if (!upper[ib] || r[ib] < t) continue;
        linf = std::max(linf, mx[ib * ni + i]);
        if (off[ib]) l2 += sum[ib * ni + i] * F.betas[ib].weight;
      }
      double v = std::max(std::sqrt(l2 * F.alpha.h / I.length), linf);
      if (v > b.value) {
        b.value = v;
        b.interval = i;
      }
    }
    best[g] = b;
  });
  GlobalSize out;
  for (const auto& b : best)
    if (b.value > out.value) out = b;
  return out;
}

double whitney_l2(const Field& F, const PlaneVector& gamma, int j, const ConstantPack& k) {
  double acc = 0.0;
  for (std::size_t ib = 0; ib < F.betas.size(); ++ib) {
    const auto& s = F.betas[ib];
    if (s.weight == 0.0) continue;
    if (!whitney_membership(s.beta, gamma, 0.0, s.d, k) || cone_membership(s.beta, gamma, j, k))
      continue;
    double row = 0.0;
    for (std::size_t ia = 0; ia < F.alpha.n; ++ia) row += std::norm(F.at(ib, ia));
    acc += row * F.alpha.h * s.weight;
  }
  return std::sqrt(acc);
}

}  // namespace tentfield
