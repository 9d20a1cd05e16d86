#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "tentfield/bumps.hpp"
#include "tentfield/geometry.hpp"
#include "tentfield/multiplier.hpp"

namespace tentfield {

// Cell mask on the (beta, alpha) product grid of a Field, same layout as Field::values.
using Mask = std::vector<std::uint8_t>;

struct Cell {
  std::size_t beta = 0, alpha = 0;
};

// tent with the iteration that produced it
struct Tent {
  TentRegion region;
  std::string origin;  // "linfty", "l2_endpoint", "l2_center"
  int level = 0;       // scale class (linfty) or strip index (l2)
  int strip = 0;       // strip offset i in [-M, M] for linfty tents
  std::size_t parent = 0;  // index of the selected point / triple
};

struct SelectedPoint {
  Cell cell;
  int scale = 0;  // k with 2^k t0 <= d < 2^{k+1} t0
};

struct Triple {
  TentRegion tent;
  std::vector<Cell> cells;
  int strip = 0;
  double l2sq = 0.0;  // ||F||^2_{L^2_nu(S)}
};

// R_{alpha,beta,t}
struct Rectangle {
  double alpha = 0.0, freq = 0.0;  // centers: alpha and gamma(beta)_j
  double time_len = 0.0, freq_len = 0.0;
  bool intersects(const Rectangle& o) const;
};

Rectangle selection_rectangle(double alpha, const PlaneVector& gamma, int j, double t,
                              const ConstantPack& k);

// cells of D_T = I x W_{gamma, 1/|I|} on the field grid are set to 1 in `covered`
void mark_region(const Field& F, const TentRegion& T, const ConstantPack& k, Mask& covered);
Mask covered_cells(const Field& F, const std::vector<Tent>& tents, const ConstantPack& k);

struct LinftyResult {
  std::vector<SelectedPoint> points;
  std::vector<Tent> tents;
  double t0 = 0.0;
};

LinftyResult select_linfty(const Mask& omega, const Field& F, double lambda, int j,
                           const SingularCurve& curve, const ConstantPack& k);

struct L2Options {
  Side side = Side::Below;
  double c_emb = 1.0;   // embedding constant C in t0 = lambda^2 / (2 C^2 ||f||^2)
  double f_norm = 1.0;  // ||f||_{L^2}
  double A = 0.0;       // strip range [-A, A]; 0 picks the smallest A reaching every cell of Omega
};

struct L2Result {
  std::vector<Tent> tents;
  std::vector<Triple> triples;
  double t0 = 0.0;
  double A = 0.0;
  std::size_t strips_visited = 0;
  std::size_t long_triggers = 0;  // triggering intervals with |I| > 1/t0 (C_emb too small)
};

// Candidate tents are the lattice intervals crossed with the lattice gammas; the
// lattice gammas must lie on the curve.
L2Result select_l2(const Mask& omega, const Field& F, double lambda, int j,
                   const SingularCurve& curve, const ConstantPack& k, const TentLattice& lattice,
                   const L2Options& opt);

// |I|^{-1} || 1_{keep} F ||^2_{L^2_nu(I x (W_{gamma,1/|I|} \ U)^{side})}
double half_local_l2sq(const Field& F, const Interval& I, const PlaneVector& gamma, int j,
                       const ConstantPack& k, Side side, const Mask& keep);

// max over the lattice of sqrt(half_local_l2sq) with every cell kept
double max_half_size(const Field& F, const TentLattice& lattice, int j, const ConstantPack& k,
                     Side side);

struct Violation {
  std::string property;
  std::string detail;
  nlohmann::json witness;
};

struct SelectionReport {
  std::string kind;
  std::vector<Violation> violations;
  nlohmann::json stats = nlohmann::json::object();

  bool ok() const { return violations.empty(); }
  std::size_t count(const std::string& property) const;
  nlohmann::json to_json() const;
};

SelectionReport verify_selection_properties(const LinftyResult& out, const Mask& omega,
                                            const Field& F, double lambda, int j,
                                            const SingularCurve& curve, const ConstantPack& k);

SelectionReport verify_selection_properties(const L2Result& out, const Mask& omega,
                                            const Field& F, double lambda, int j,
                                            const SingularCurve& curve, const ConstantPack& k,
                                            const TentLattice& lattice, Side side);

nlohmann::json to_json(const Tent& t);
nlohmann::json to_json(const LinftyResult& r);
nlohmann::json to_json(const L2Result& r);

double l2_norm(const std::vector<cplx>& f, const AlphaGrid& grid);

// max over the lattice gammas and a batch of random g of
// ||F_j g||_{L^2_nu(R x (W_{gamma,0} \ U))} / ||g||_2
double measure_embedding_constant(const AlphaGrid& grid, const BetaSet& betas, int j,
                                  const BumpProfile& bumps, const ConstantPack& k,
                                  const std::vector<PlaneVector>& gammas, std::size_t batch,
                                  std::mt19937_64& rng);

struct BesselOptions {
  double c_emb = 1.0;
  double f_norm = 1.0;
  double A = 0.0;
};

struct BesselResult {
  std::vector<Tent> tents;           // T_inf, then T_left, then T_right
  std::vector<LinftyResult> layers;  // one per dyadic layer (2^{k-1} lambda, 2^k lambda]
  L2Result left, right;
  double total_length = 0.0;
  double c_emb_used = 0.0;
  double residual_size = 0.0;  // global size of 1_{Omega \ U D_T} F on the lattice
  Mask residual;               // Omega \ U D_T
  std::vector<SelectionReport> reports;
};

BesselResult bessel(const Mask& omega, const Field& F, double lambda, int j,
                    const SingularCurve& curve, const ConstantPack& k, const TentLattice& lattice,
                    const BesselOptions& opt);

struct StoppingLevel {
  int n = 0;
  std::size_t tents = 0;
  double length = 0.0;     // sum |I| over T_n
  double size_sum = 0.0;   // sum |I| prod_j S^j(1_{Omega_n} F_j f_j; T)
  std::size_t cells_left = 0;
};

struct StoppingTimeReport {
  std::array<double, 3> a{};  // |E_j| sorted decreasingly
  std::array<int, 3> n{};     // 2^{n_j - 1} < a_j^{-1/2} <= 2^{n_j}
  std::vector<StoppingLevel> levels;
  double tent_sum = 0.0;
  double direct = 0.0;       // |Lambda(f~1, f~2, f~3)|
  double bound = 0.0;        // a1^{-1/2} (2 + log(a1/a2))
  double paper_sum = 0.0;    // 2^{n1} (2 + n2 - n1)
  std::size_t cells_left = 0;
};

struct StoppingTimeOptions {
  int levels_below = 4;  // stop at n1 - levels_below
  double c_emb = 1.0;
};

// Iterated Bessel decomposition for three inputs on a common grid; f_j are
// normalized by |E_j|^{-1/2} with E_j = supp f_j.
StoppingTimeReport stopping_time(const std::array<std::vector<cplx>, 3>& f, const MultiplierSpec& m,
                                 const SingularCurve& curve, const AlphaGrid& grid,
                                 const BetaSet& betas, const TentLattice& lattice,
                                 const BumpProfile& bumps, const ConstantPack& k,
                                 const StoppingTimeOptions& opt = {});

}  // namespace tentfield
