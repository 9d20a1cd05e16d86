#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "tentfield/bumps.hpp"
#include "tentfield/geometry.hpp"
#include "tentfield/multiplier.hpp"

namespace tentfield {

// z-grid for the windowed multiplier around one beta; half_width is in units
// of eps d(beta), the window itself has radius 0.16 in these units.
struct KernelGrid {
  std::size_t n = 64;
  double half_width = 0.4;
};

// K(., beta) on the frequency grid dual to the z-grid.  Stored demodulated:
// demod(a) = int m_beta(beta + z) e^{-2 pi i a.z} dz, and K(a, beta) = e^{-2 pi i a.beta} demod(a).
struct KernelSlice {
  BetaSample beta;
  double w = 0.0;   // eps d(beta)
  double dz = 0.0;  // z step
  std::size_t n = 0;
  std::vector<cplx> demod;  // row-major, a = ((p - n/2) da, (q - n/2) da) in (u1,u2)

  double da() const { return 1.0 / (static_cast<double>(n) * dz); }
  std::array<double, 2> uv(std::size_t p, std::size_t q) const;
  PlaneVector alpha(std::size_t p, std::size_t q) const;
  cplx kernel(std::size_t p, std::size_t q) const;
  cplx at(std::size_t p, std::size_t q) const { return demod[p * n + q]; }
  cplx mass() const { return at(n / 2, n / 2); }  // int m_beta dH^2
};

KernelSlice kernel_from_multiplier(const MultiplierSpec& m, const BetaSample& beta,
                                   const PartitionWeights& pw, const KernelGrid& grid = {});

// || (1 + |d a|^2)^{s/2} K(a, beta) ||_{L^2_a(V)} / d
double kernel_condition_ratio(const KernelSlice& K, double s);

// 0 when |d P_V alpha| <= 1, else the k >= 1 with |d P_V alpha| in (2^{k-1}, 2^k]
int annulus_index(const PlaneVector& alpha, double d_beta);
int annulus_index(const std::array<double, 3>& alpha, double d_beta);

// f^(xi) = h sum f_n e^{-2 pi i xi x_n} for samples on `grid`
cplx sampled_transform(const std::vector<cplx>& f, const AlphaGrid& grid, double xi);

// sqrt3 / L^2 sum m(k1/L, k2/L, -(k1+k2)/L) f1^ f2^ f3^ over the lattice of the grid
cplx trilinear_direct(const MultiplierSpec& m, const std::vector<cplx>& f1,
                      const std::vector<cplx>& f2, const std::vector<cplx>& f3,
                      const AlphaGrid& grid);

// Demodulated packet coefficients E(x) = F_j f(x, beta) e^{-2 pi i beta_j x} on a
// uniform x-grid, computed from the transform of the samples of f.
struct PacketTable {
  double x0 = 0.0, dx = 1.0;
  std::vector<cplx> v;

  double position(double x) const { return (x - x0) / dx; }
  // six-point Lagrange interpolation; 0 outside the table
  cplx at(double x) const;
};

PacketTable packet_table(const std::vector<cplx>& f, const AlphaGrid& grid, int j,
                         const BetaSample& beta, const BumpProfile& bumps, double center,
                         double step, std::size_t size);

struct ModelFormOptions {
  KernelGrid kernel;
  double table_step = 0.0625;  // packet table step, units of 1 / (eps d)
  double t_step = 0.5;         // diagonal quadrature step, a multiple of table_step
  double a_reach = 24.0;     // kernel frequencies used, radius in units of 1 / (eps d)
  double t_reach = 48.0;     // diagonal integration half length, same units
  double skip_below = 1e-13; // betas whose |prod f_j^(beta_j)| is below this fraction of the max
};

struct ModelFormResult {
  cplx value{0.0, 0.0};
  std::size_t betas_used = 0;
  std::vector<cplx> per_beta;  // g(beta) * mu-weight, aligned with the beta set
};

// int_V int_{R^3} K(alpha, beta) prod F_j f_j(alpha_j, beta) dalpha dmu(beta), with
// alpha = a + s (1,1,1)/sqrt3 and K computed per beta from m.
ModelFormResult model_form_evaluate(const MultiplierSpec& m,
                                    const std::array<std::vector<cplx>, 3>& f,
                                    const AlphaGrid& grid, const BetaSet& betas,
                                    const PartitionWeights& pw,
                                    const ModelFormOptions& opt = {});

struct TentEstimate {
  double lhs = 0.0;
  double ratio = 0.0;                 // lhs / (|I| prod sizes)
  std::vector<double> per_k;          // lhs split by annulus index
  std::vector<double> envelope;       // (1 + k) 2^{k (1 - s)}
  int k_max = 0;                      // largest index the kernel grid resolves
  std::size_t betas = 0;              // beta samples inside W_{gamma, 1/|I|}
  std::size_t support_checked = 0;    // contributing (a, beta) cells examined
  std::size_t support_violations = 0; // cells breaking |a_j - a_j'| <= 2^{k+1}/d
};

// || K prod F_j ||_{L^1} over (I e_i + e_i^perp) x W_{gamma,1/|I|}, split by annulus
TentEstimate tent_estimate_ratio(const MultiplierSpec& m, const std::array<std::vector<cplx>, 3>& f,
                                 const AlphaGrid& grid, const BetaSet& betas,
                                 const PartitionWeights& pw, const TentRegion& T, int i,
                                 const std::array<double, 3>& sizes, double s,
                                 const ConstantPack& k, const ModelFormOptions& opt = {});

}  // namespace tentfield
