#include "tentfield/modelform.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "tentfield/errors.hpp"
#include "tentfield/fft.hpp"
#include "tentfield/parallel.hpp"

namespace tentfield {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
const double kSqrt3 = std::sqrt(3.0);

// Lagrange weights on the nodes -2..3 at offset mu in [0,1)
std::array<double, 6> lagrange6(double mu) {
  std::array<double, 6> w{};
  for (int k = 0; k < 6; ++k) {
    double num = 1.0, den = 1.0;
    for (int m = 0; m < 6; ++m) {
      if (m == k) continue;
      num *= mu - (m - 2);
      den *= k - m;
    }
    w[k] = num / den;
  }
  return w;
}

// quadratic interpolation of a 3x3 stencil at offsets (x, y) in units of the spacing
double quad_interp(const std::array<double, 9>& s, double x, double y) {
  auto l = [](double t) {
    return std::array<double, 3>{0.5 * t * (t - 1.0), 1.0 - t * t, 0.5 * t * (t + 1.0)};
  };
  auto lx = l(x), ly = l(y);
  double acc = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) acc += lx[a] * ly[b] * s[a * 3 + b];
  return acc;
}

std::size_t next_pow2(double x) {
  std::size_t n = 8;
  while (static_cast<double>(n) < x) n <<= 1;
  return n;
}

}  // namespace

std::array<double, 2> KernelSlice::uv(std::size_t p, std::size_t q) const {
  double h = da();
  return {(static_cast<double>(p) - 0.5 * n) * h, (static_cast<double>(q) - 0.5 * n) * h};
}

PlaneVector KernelSlice::alpha(std::size_t p, std::size_t q) const {
  auto c = uv(p, q);
  return PlaneBasis::from_uv(c[0], c[1]);
}

cplx KernelSlice::kernel(std::size_t p, std::size_t q) const {
  return std::polar(1.0, -kTwoPi * alpha(p, q).dot(beta.beta)) * at(p, q);
}

KernelSlice kernel_from_multiplier(const MultiplierSpec& m, const BetaSample& beta,
                                   const PartitionWeights& pw, const KernelGrid& grid) {
  if (!(beta.d > 0.0)) throw std::domain_error("kernel requested at a point of the singular curve");
  if (grid.n < 4 || grid.n % 2 != 0) throw ConfigError("kernel grid size must be even and >= 4");
  if (grid.half_width < BumpProfile::kTildeSupport)
    throw ConfigError("kernel grid does not cover the window");
  KernelSlice K;
  K.beta = beta;
  K.n = grid.n;
  K.w = pw.eps() * beta.d;
  K.dz = 2.0 * grid.half_width * K.w / static_cast<double>(grid.n);

  double r = pw.window_radius(beta.d);
  auto [bu, bv] = PlaneBasis::to_uv(beta.beta);
  std::array<double, 9> X{};
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      X[a * 3 + b] = pw.normalizer(PlaneBasis::from_uv(bu + (a - 1) * r, bv + (b - 1) * r));

  std::size_t n = grid.n;
  K.demod.assign(n * n, 0.0);
  for (std::size_t p = 0; p < n; ++p) {
    double zu = (static_cast<double>(p) - 0.5 * n) * K.dz;
    for (std::size_t q = 0; q < n; ++q) {
      double zv = (static_cast<double>(q) - 0.5 * n) * K.dz;
      double c = pw.chi(std::hypot(zu, zv) / beta.d);
      if (c == 0.0) continue;
      PlaneVector x = beta.beta + PlaneBasis::from_uv(zu, zv);
      double sign = ((p + q) % 2 == 0) ? 1.0 : -1.0;
      K.demod[p * n + q] = sign * c / quad_interp(X, zu / r, zv / r) * m(x);
    }
  }
  Fft2d fft(n, n);
  fft.forward(K.demod);
  double cell = K.dz * K.dz;
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = 0; q < n; ++q) K.demod[p * n + q] *= ((p + q) % 2 == 0 ? cell : -cell);
  return K;
}

double kernel_condition_ratio(const KernelSlice& K, double s) {
  double d = K.beta.d, acc = 0.0;
  for (std::size_t p = 0; p < K.n; ++p)
    for (std::size_t q = 0; q < K.n; ++q) {
      auto c = K.uv(p, q);
      double r2 = d * d * (c[0] * c[0] + c[1] * c[1]);
      acc += std::pow(1.0 + r2, s) * std::norm(K.at(p, q));
    }
  return std::sqrt(acc) * K.da() / d;
}

int annulus_index(const PlaneVector& alpha, double d_beta) {
  double x = d_beta * project_to_plane(alpha).norm();
  if (x <= 1.0) return 0;
  int e = 0;
  double mant = std::frexp(x, &e);  // x = mant 2^e, mant in [0.5, 1)
  return mant == 0.5 ? e - 1 : e;
}

int annulus_index(const std::array<double, 3>& alpha, double d_beta) {
  return annulus_index(PlaneVector(alpha[0], alpha[1], alpha[2]), d_beta);
}

cplx sampled_transform(const std::vector<cplx>& f, const AlphaGrid& grid, double xi) {
  cplx acc = 0.0;
  cplx rot = std::polar(1.0, -kTwoPi * xi * grid.h);
  cplx ph = std::polar(1.0, -kTwoPi * xi * grid.a0);
  for (std::size_t n = 0; n < f.size(); ++n) {
    acc += f[n] * ph;
    ph *= rot;
  }
  return acc * grid.h;
}

cplx trilinear_direct(const MultiplierSpec& m, const std::vector<cplx>& f1,
                      const std::vector<cplx>& f2, const std::vector<cplx>& f3,
                      const AlphaGrid& grid) {
  std::size_t n = grid.n;
  if (f1.size() != n || f2.size() != n || f3.size() != n)
    throw std::invalid_argument("trilinear_direct: inputs not on the alpha grid");
  double L = grid.length();
  Fft1d fft(n);
  std::array<std::vector<cplx>, 3> hat{f1, f2, f3};
  for (auto& h : hat) {
    fft.forward(h);
    for (std::size_t k = 0; k < n; ++k)
      h[k] *= grid.h * std::polar(1.0, -kTwoPi * fft_freq_index(k, n) / L * grid.a0);
  }
  long lo = -static_cast<long>(n / 2), hi = static_cast<long>((n - 1) / 2);
  auto idx = [n](long k) { return static_cast<std::size_t>((k + static_cast<long>(n)) % static_cast<long>(n)); };
  std::vector<cplx> rows(n, 0.0);
  parallel_for(n, [&](std::size_t r) {
    long k1 = lo + static_cast<long>(r);
    cplx acc = 0.0;
    for (long k2 = lo; k2 <= hi; ++k2) {
      long k3 = -k1 - k2;
      if (k3 < lo || k3 > hi) continue;
      cplx p = hat[0][idx(k1)] * hat[1][idx(k2)] * hat[2][idx(k3)];
      if (p == 0.0) continue;
      acc += m(PlaneVector(k1 / L, k2 / L, k3 / L)) * p;
    }
    rows[r] = acc;
  });
  cplx total = 0.0;
  for (auto v : rows) total += v;
  return kSqrt3 * total / (L * L);
}

cplx PacketTable::at(double x) const {
  double pos = position(x);
  double fl = std::floor(pos);
  long i = static_cast<long>(fl);
  if (i < 2 || i + 3 >= static_cast<long>(v.size())) return 0.0;
  auto w = lagrange6(pos - fl);
  cplx acc = 0.0;
  for (int k = 0; k < 6; ++k) acc += w[k] * v[static_cast<std::size_t>(i - 2 + k)];
  return acc;
}

PacketTable packet_table(const std::vector<cplx>& f, const AlphaGrid& grid, int j,
                         const BetaSample& beta, const BumpProfile& bumps, double center,
                         double step, std::size_t size) {
  if (size < 8 || (size & (size - 1)) != 0) throw ConfigError("packet table size must be a power of two");
  PacketTable t;
  t.dx = step;
  t.x0 = center - 0.5 * static_cast<double>(size) * step;
  t.v.assign(size, 0.0);
  double dzeta = 1.0 / (static_cast<double>(size) * step);
  double bj = beta.beta.coord(j);
  // zeta_m = (m - size/2) dzeta; the window phi^(zeta/d) has compact support
  for (std::size_t m = 0; m < size; ++m) {
    double zeta = (static_cast<double>(m) - 0.5 * size) * dzeta;
    double w = bumps.phi_hat(zeta / beta.d);
    if (w == 0.0) continue;
    cplx e = sampled_transform(f, grid, bj + zeta) * w * std::polar(1.0, kTwoPi * zeta * center);
    t.v[m] = (m % 2 == 0) ? e : -e;
  }
  Fft1d fft(size);
  fft.backward(t.v);
  for (std::size_t k = 0; k < size; ++k) t.v[k] *= (k % 2 == 0 ? dzeta : -dzeta);
  return t;
}

namespace {

struct BetaWork {
  KernelSlice K;
  std::array<PacketTable, 3> E;
  double tmin = 0.0;
  std::size_t nt = 0;
  std::size_t stride = 1;  // table samples per diagonal step
};

// kernel slice plus packet tables around `center` wide enough for |a| <= reach and
// |t - center| <= t_half
BetaWork prepare_beta(const MultiplierSpec& m, const std::array<std::vector<cplx>, 3>& f,
                      const AlphaGrid& grid, const BetaSample& b, const PartitionWeights& pw,
                      const ModelFormOptions& opt, double center, double reach, double t_half) {
  BetaWork W;
  W.K = kernel_from_multiplier(m, b, pw, opt.kernel);
  double dx = opt.table_step / W.K.w;
  double span = 2.0 * (t_half + std::sqrt(2.0 / 3.0) * reach + 8.0 * dx);
  std::size_t size = next_pow2(span / dx);
  if (size > (1u << 22)) throw ConfigError("packet table would exceed 2^22 samples");
  for (int j = 0; j < 3; ++j)
    W.E[j] = packet_table(f[j], grid, j + 1, b, pw.bumps(), center, dx, size);
  W.stride = static_cast<std::size_t>(std::lround(opt.t_step / opt.table_step));
  if (W.stride < 1 || std::abs(W.stride * opt.table_step - opt.t_step) > 1e-12 * opt.t_step)
    throw ConfigError("diagonal step must be a multiple of the packet table step");
  double dt = W.stride * dx;
  W.nt = static_cast<std::size_t>(std::ceil(2.0 * t_half / dt)) + 1;
  W.tmin = center - 0.5 * static_cast<double>(W.nt - 1) * dt;
  return W;
}

// G(a) = sqrt3 int prod E_j(a_j + t) dt on the t-grid tmin + k dx
cplx diagonal_integral(const BetaWork& W, const PlaneVector& a) {
  const double dx = W.E[0].dx;
  std::array<const cplx*, 3> base{};
  std::array<std::array<double, 6>, 3> wts{};
  for (int j = 0; j < 3; ++j) {
    double pos = W.E[j].position(a[static_cast<std::size_t>(j)] + W.tmin);
    double fl = std::floor(pos);
    long i = static_cast<long>(fl);
    long last = i + 3 + static_cast<long>(W.nt * W.stride);
    if (i < 2 || last >= static_cast<long>(W.E[j].v.size()))
      throw std::logic_error("diagonal integral leaves the packet table");
    wts[j] = lagrange6(pos - fl);
    base[j] = W.E[j].v.data() + (i - 2);
  }
  double sr = 0.0, si = 0.0;
  for (std::size_t k = 0; k < W.nt; ++k) {
    double er[3], ei[3];
    for (int j = 0; j < 3; ++j) {
      const cplx* p = base[j] + k * W.stride;
      double r = 0.0, im = 0.0;
      for (int q = 0; q < 6; ++q) {
        r += wts[j][q] * p[q].real();
        im += wts[j][q] * p[q].imag();
      }
      er[j] = r;
      ei[j] = im;
    }
    double pr = er[0] * er[1] - ei[0] * ei[1];
    double pi = er[0] * ei[1] + ei[0] * er[1];
    sr += pr * er[2] - pi * ei[2];
    si += pr * ei[2] + pi * er[2];
  }
  return kSqrt3 * dx * static_cast<double>(W.stride) * cplx(sr, si);
}

}  // namespace

ModelFormResult model_form_evaluate(const MultiplierSpec& m,
                                    const std::array<std::vector<cplx>, 3>& f,
                                    const AlphaGrid& grid, const BetaSet& betas,
                                    const PartitionWeights& pw, const ModelFormOptions& opt) {
  for (const auto& fj : f)
    if (fj.size() != grid.n) throw std::invalid_argument("model_form_evaluate: f not on the alpha grid");
  ModelFormResult res;
  res.per_beta.assign(betas.size(), 0.0);

  std::vector<double> lead(betas.size(), 0.0);
  parallel_for(betas.size(), [&](std::size_t ib) {
    const auto& b = betas[ib];
    if (b.weight == 0.0) return;
    double p = 1.0;
    for (int j = 0; j < 3; ++j) p *= std::abs(sampled_transform(f[j], grid, b.beta.coord(j + 1)));
    lead[ib] = p;
  });
  double top = *std::max_element(lead.begin(), lead.end());
  if (top == 0.0) return res;

  double center = grid.a0 + 0.5 * grid.length();
  std::vector<char> used(betas.size(), 0);
  parallel_for(betas.size(), [&](std::size_t ib) {
    const auto& b = betas[ib];
    if (b.weight == 0.0 || lead[ib] < opt.skip_below * top) return;
    double w = pw.eps() * b.d;
    double reach = opt.a_reach / w + grid.length();
    double t_half = opt.t_reach / w + grid.length();
    BetaWork W = prepare_beta(m, f, grid, b, pw, opt, center, reach, t_half);
    const KernelSlice& K = W.K;
    double r2max = reach * reach, cell = K.da() * K.da();
    cplx g = 0.0;
    for (std::size_t p = 0; p < K.n; ++p)
      for (std::size_t q = 0; q < K.n; ++q) {
        auto c = K.uv(p, q);
        if (c[0] * c[0] + c[1] * c[1] > r2max) continue;
        cplx kv = K.at(p, q);
        if (kv == 0.0) continue;
        g += kv * diagonal_integral(W, PlaneBasis::from_uv(c[0], c[1]));
      }
    res.per_beta[ib] = g * cell * b.weight;
    used[ib] = 1;
  });
  for (std::size_t ib = 0; ib < betas.size(); ++ib) {
    res.value += res.per_beta[ib];
    res.betas_used += used[ib];
  }
  return res;
}

TentEstimate tent_estimate_ratio(const MultiplierSpec& m, const std::array<std::vector<cplx>, 3>& f,
                                 const AlphaGrid& grid, const BetaSet& betas,
                                 const PartitionWeights& pw, const TentRegion& T, int i,
                                 const std::array<double, 3>& sizes, double s,
                                 const ConstantPack& k, const ModelFormOptions& opt) {
  if (i < 1 || i > 3) throw std::invalid_argument("tent estimate index must be 1, 2 or 3");
  for (double v : sizes)
    if (!(v > 0.0)) throw DegenerateInput("tent estimate needs nonzero global sizes");
  TentEstimate out;
  const double len = T.I.length;
  std::vector<std::size_t> members;
  for (std::size_t ib = 0; ib < betas.size(); ++ib) {
    const auto& b = betas[ib];
    if (b.weight > 0.0 && whitney_membership(b.beta, T.gamma, 1.0 / len, b.d, k))
      members.push_back(ib);
  }
  out.betas = members.size();
  out.k_max = 1 << 20;

  struct Partial {
    std::vector<double> per_k;
    std::size_t checked = 0, bad = 0;
    int kmax = 0;
  };
  std::vector<Partial> parts(members.size());
  parallel_for(members.size(), [&](std::size_t mi) {
    const auto& b = betas[members[mi]];
    Partial& P = parts[mi];
    double w = pw.eps() * b.d;
    KernelSlice probe;
    probe.n = opt.kernel.n;
    probe.dz = 2.0 * opt.kernel.half_width * w / static_cast<double>(opt.kernel.n);
    double inscribed = 0.5 * static_cast<double>(probe.n) * probe.da();
    // |a_j - a_i| <= 2 inscribed on the grid corners
    double reach = std::sqrt(6.0) * inscribed;
    BetaWork W = prepare_beta(m, f, grid, b, pw, opt, T.I.center, reach, 0.5 * len);
    const KernelSlice& K = W.K;
    P.kmax = annulus_index(PlaneBasis::from_uv(inscribed, 0.0), b.d);
    std::size_t nt = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::ceil(len / W.E[0].dx)), 4, 512);
    double dt = len / static_cast<double>(nt);
    double cell = K.da() * K.da();
    for (std::size_t p = 0; p < K.n; ++p)
      for (std::size_t q = 0; q < K.n; ++q) {
        double kv = std::abs(K.at(p, q));
        if (kv == 0.0) continue;
        PlaneVector a = K.alpha(p, q);
        double ai = a.coord(i), acc = 0.0;
        for (std::size_t it = 0; it < nt; ++it) {
          double tau = T.I.lo() + (static_cast<double>(it) + 0.5) * dt;
          double prod = 1.0;
          for (int j = 0; j < 3 && prod != 0.0; ++j)
            prod *= std::abs(W.E[j].at(tau + a[static_cast<std::size_t>(j)] - ai));
          acc += prod;
        }
        if (acc == 0.0) continue;
        int kk = annulus_index(a, b.d);
        if (static_cast<std::size_t>(kk) >= P.per_k.size()) P.per_k.resize(kk + 1, 0.0);
        P.per_k[kk] += kSqrt3 * kv * acc * dt * cell * b.weight;
        double spread = std::max({std::abs(a[0] - a[1]), std::abs(a[1] - a[2]), std::abs(a[0] - a[2])});
        ++P.checked;
        if (spread > std::ldexp(1.0, kk + 1) / b.d * (1.0 + 1e-12)) ++P.bad;
      }
  });
  for (const auto& P : parts) {
    if (P.per_k.size() > out.per_k.size()) out.per_k.resize(P.per_k.size(), 0.0);
    for (std::size_t kk = 0; kk < P.per_k.size(); ++kk) out.per_k[kk] += P.per_k[kk];
    out.support_checked += P.checked;
    out.support_violations += P.bad;
    out.k_max = std::min(out.k_max, P.kmax);
  }
  if (members.empty()) out.k_max = 0;
  for (double v : out.per_k) out.lhs += v;
  for (std::size_t kk = 0; kk < out.per_k.size(); ++kk)
    out.envelope.push_back((1.0 + kk) * std::pow(2.0, kk * (1.0 - s)));
  out.ratio = out.lhs / (len * sizes[0] * sizes[1] * sizes[2]);
  return out;
}

}  // namespace tentfield
