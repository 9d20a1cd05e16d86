#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "tentfield/fft.hpp"
#include "tentfield/geometry.hpp"

namespace tentfield {

// eta, its smoothed indicator eta~, the window Phi on V and the packet
// profile phi with phi^ = eta~(. / 2 eps).
class BumpProfile {
 public:
  static constexpr double kTildePlateau = 0.14;  // eta~ == 1 for |x| <= this
  static constexpr double kTildeSupport = 0.16;  // eta~ == 0 for |x| >= this

  BumpProfile(double eps, std::size_t resolution);

  double eps() const { return eps_; }
  std::size_t resolution() const { return n_; }
  double normalization() const { return z_; }  // integral of exp(-1/(1-x^2)) over [-1,1]

  double eta(double x) const;
  double eta_cdf(double x) const;
  double eta_tilde(double x) const;
  double Phi(const PlaneVector& y) const { return eta_tilde(y.norm()); }
  double Phi_uv(double a, double b) const;

  double phi_hat(double xi) const { return eta_tilde(xi / (2.0 * eps_)); }
  // phi(x) as the Riemann sum of phi^ on the frequency grid of the profile
  double phi(double x) const;
  // phi on the time grid t_n = n / (4 eps), n = -N/2 .. N/2-1, by inverse FFT
  std::vector<double> phi_samples() const;
  double phi_time_step() const { return 1.0 / (4.0 * eps_); }
  double phi_l1() const { return phi_l1_; }

  double plateau_radius() const { return 0.2 * eps_; }
  double support_radius() const { return 0.4 * eps_; }
  // frequency-grid samples of phi^ inside the plateau ball
  std::size_t plateau_samples() const;

 private:
  double eps_;
  std::size_t n_;
  double z_ = 0.0;
  double h_ = 0.0;                  // frequency step 4 eps / N
  std::vector<double> cdf_;         // G at the table nodes
  std::vector<double> hat_pos_;     // phi^(k h), k = 0 .. while nonzero
  double phi_l1_ = 0.0;
};

BumpProfile build_bumps(double eps, std::size_t resolution = 1024);

// Uniform lattice on V in (u1,u2) coordinates, cells centered at the nodes.
struct PlaneGrid {
  double u_center = 0.0, v_center = 0.0;
  double h = 1.0;
  std::size_t nu = 1, nv = 1;

  double u(std::size_t iu) const { return u_center + (static_cast<double>(iu) - 0.5 * (nu - 1.0)) * h; }
  double v(std::size_t iv) const { return v_center + (static_cast<double>(iv) - 0.5 * (nv - 1.0)) * h; }
  PlaneVector point(std::size_t iu, std::size_t iv) const { return PlaneBasis::from_uv(u(iu), v(iv)); }
  std::size_t size() const { return nu * nv; }
};

struct BetaSample {
  PlaneVector beta;
  double d = 0.0;        // d_Gamma(beta)
  PlaneVector nearest;   // gamma(beta)
  double weight = 0.0;   // mu-weight of the cell (area / d^2, 0 near Gamma)
};

// Finite sample of V carrying the Whitney measure mu.
struct BetaSet {
  std::vector<BetaSample> samples;
  double cell_area = 0.0;

  std::size_t size() const { return samples.size(); }
  const BetaSample& operator[](std::size_t i) const { return samples[i]; }

  // cells with d(center) below one cell diameter get weight 0
  static BetaSet from_grid(const PlaneGrid& grid, const SingularCurve& curve);
  static BetaSet from_points(const std::vector<PlaneVector>& pts, const SingularCurve& curve,
                             double cell_area);
};

class PartitionWeights {
 public:
  PartitionWeights(const BumpProfile& bumps, const SingularCurve& curve, std::size_t quad = 96);

  double eps() const { return bumps_.eps(); }
  double chi(double r) const { return bumps_.eta_tilde(r / bumps_.eps()); }
  double chi_beta(const PlaneVector& beta, double d_beta, const PlaneVector& x) const;
  double window_radius(double d_beta) const {
    return BumpProfile::kTildeSupport * bumps_.eps() * d_beta;
  }

  // X_Gamma(x) by quadrature of the windows of all beta near x
  double normalizer(const PlaneVector& x) const;
  // X_Gamma(x) from the windows of a finite beta set (grid version)
  double normalizer_on(const BetaSet& betas, const PlaneVector& x) const;
  double chi_tilde(const PlaneVector& beta, double d_beta, const PlaneVector& x) const {
    return chi_beta(beta, d_beta, x) / normalizer(x);
  }
  // true when the grid's bounding box holds every beta whose window reaches x
  bool covered_by(const PlaneGrid& grid, const PlaneVector& x) const;

  const SingularCurve& curve() const { return curve_; }
  const BumpProfile& bumps() const { return bumps_; }

 private:
  const BumpProfile& bumps_;
  const SingularCurve& curve_;
  std::size_t quad_;
};

struct AlphaGrid {
  double a0 = 0.0;
  double h = 1.0;
  std::size_t n = 1;

  double at(std::size_t i) const { return a0 + static_cast<double>(i) * h; }
  double length() const { return static_cast<double>(n) * h; }
};

// F(alpha, beta) on an alpha grid x beta set, row-major by beta.
struct Field {
  AlphaGrid alpha;
  BetaSet betas;
  std::vector<cplx> values;
  std::vector<std::uint8_t> mask;  // optional, same shape as values

  Field() = default;
  Field(AlphaGrid a, BetaSet b) : alpha(a), betas(std::move(b)), values(alpha.n * betas.size()) {}

  cplx& at(std::size_t ib, std::size_t ia) { return values[ib * alpha.n + ia]; }
  cplx at(std::size_t ib, std::size_t ia) const { return values[ib * alpha.n + ia]; }
  bool has_mask() const { return !mask.empty(); }
  bool in_mask(std::size_t ib, std::size_t ia) const { return mask[ib * alpha.n + ia] != 0; }
};

// F_j f on the given grids; f is sampled on `alpha` and treated as periodic.
Field embed(const std::vector<cplx>& f, int j, const AlphaGrid& alpha, const BetaSet& betas,
            const BumpProfile& bumps);

// phi^j_{alpha,beta} sampled on the alpha grid
std::vector<cplx> wave_packet(double alpha, const BetaSample& beta, int j, const AlphaGrid& grid,
                              const BumpProfile& bumps);

// bilinear pairing  sum f * g * h  (no conjugation)
cplx pair_bilinear(const std::vector<cplx>& f, const std::vector<cplx>& g, double h);

struct TentLattice {
  std::vector<Interval> intervals;
  std::vector<PlaneVector> gammas;

  // dyadic intervals of length L 2^{-l}, l = 0..levels, tiling [a0, a0 + L), crossed with gammas
  static TentLattice dyadic(double a0, double length, int levels, std::vector<PlaneVector> gammas);
  std::size_t size() const { return intervals.size() * gammas.size(); }
};

struct SizeQuery {
  Interval I;
  PlaneVector gamma;
  double t = 0.0;
  int j = 1;
};

// cells marked 1 in `removed` (same shape as F.values) are ignored
double local_size(const Field& F, const SizeQuery& q, const ConstantPack& k,
                  const std::vector<std::uint8_t>* removed = nullptr);

struct GlobalSize {
  double value = 0.0;
  std::size_t interval = 0, gamma = 0;  // argmax in the lattice
};

GlobalSize global_size(const Field& F, int j, const TentLattice& lattice, const ConstantPack& k,
                       const std::vector<std::uint8_t>* removed = nullptr);

// || F ||_{L^2_nu(R x (W_{gamma,0} \ U_gamma^j))}
double whitney_l2(const Field& F, const PlaneVector& gamma, int j, const ConstantPack& k);

}  // namespace tentfield
