#pragma once

#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tentfield/bumps.hpp"
#include "tentfield/geometry.hpp"

namespace tentfield {

// one term c |t|^{i tau} sgn(t)^odd of a profile m~(t)
struct LipTerm {
  cplx coef{1.0, 0.0};
  double tau = 0.0;
  bool odd = false;
};

class MultiplierSpec {
 public:
  using Fn = std::function<cplx(const PlaneVector&)>;

  MultiplierSpec() = default;
  MultiplierSpec(std::string name, Fn fn, std::string smoothness = {})
      : name_(std::move(name)), fn_(std::move(fn)), smoothness_(std::move(smoothness)) {}

  cplx operator()(const PlaneVector& xi) const { return fn_(xi); }
  const std::string& name() const { return name_; }
  const std::string& smoothness() const { return smoothness_; }

  MultiplierSpec scaled(cplx c) const;
  // m(xi - shift)
  MultiplierSpec translated(const PlaneVector& shift) const;
  // m(xi / factor)
  MultiplierSpec dilated(double factor) const;

  // bilinear interpolation of samples on a plane grid, zero outside
  static MultiplierSpec from_grid(const PlaneGrid& grid, std::vector<cplx> values);

 private:
  std::string name_;
  Fn fn_;
  std::string smoothness_;
};

MultiplierSpec multiplier_one();
MultiplierSpec multiplier_zero();
MultiplierSpec bht_sign();  // sgn(xi1 - xi2), 0 on the line
MultiplierSpec lip_difference(std::vector<LipTerm> terms);  // m~(xi1 - xi2)
// ((x + i y)/|x + i y|)^n in (u1,u2) coordinates about `center`
MultiplierSpec point_mikhlin(int exponent, const PlaneVector& center = {});

// names: one, zero, bht_sign, lip_difference {terms:[{re,im,tau,odd}]} or {tau},
// point_mikhlin {exponent, center:[x1,x2,x3]}
MultiplierSpec builtin(const std::string& name, const nlohmann::json& params = {});

// Square sample grid on V used for windowed multipliers: n x n nodes
// y = (k - n/2) * extent / n in each (u1,u2) coordinate.
struct WindowGrid {
  std::size_t n = 256;
  double extent = 0.4;  // supp Phi has radius 0.16
  double step() const { return extent / static_cast<double>(n); }
  double coord(std::size_t k) const { return (static_cast<double>(k) - 0.5 * n) * step(); }
};

// samples of m(beta + d y) Phi(y), row-major (iu * n + iv)
std::vector<cplx> localize(const MultiplierSpec& m, const PlaneVector& beta, double d_beta,
                           const WindowGrid& grid, const BumpProfile& bumps);
std::vector<cplx> localize(const MultiplierSpec& m, const PlaneVector& beta,
                           const SingularCurve& curve, const WindowGrid& grid,
                           const BumpProfile& bumps);

// || (1 + |xi|^2)^{s/2} g^ ||_2 for samples g on an n x n grid of spacing h,
// zero padded by `pad` before the transform
double sobolev_norm(const std::vector<cplx>& g, std::size_t n, double h, double s,
                    std::size_t pad = 2);

struct HormanderResult {
  double sup = 0.0;
  PlaneVector argmax;
  std::vector<double> values;  // per beta sample
};

HormanderResult hormander_norm(const MultiplierSpec& m, const SingularCurve& curve, double s,
                               const std::vector<PlaneVector>& beta_samples,
                               const WindowGrid& grid, const BumpProfile& bumps);

// rings of radii 2^-L .. 2^L in `directions` directions around each center,
// dropped when they land on the curve
std::vector<PlaneVector> ring_samples(const std::vector<PlaneVector>& centers, int L,
                                      int directions, const SingularCurve& curve);

}  // namespace tentfield
