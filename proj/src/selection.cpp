#include "tentfield/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "tentfield/errors.hpp"
#include "tentfield/modelform.hpp"
#include "tentfield/parallel.hpp"

namespace tentfield {

namespace {

constexpr double kRelTol = 1e-12;

std::pair<long, long> alpha_range(const AlphaGrid& g, const Interval& I) {
  double tol = 1e-9 * g.h;
  long lo = static_cast<long>(std::ceil((I.lo() - g.a0 - tol) / g.h));
  long hi = static_cast<long>(std::floor((I.hi() - g.a0 + tol) / g.h));
  return {std::max(lo, 0L), std::min(hi, static_cast<long>(g.n) - 1)};
}

nlohmann::json vec_json(const PlaneVector& v) { return {v[0], v[1], v[2]}; }

nlohmann::json cell_json(const Field& F, const Cell& c) {
  const auto& s = F.betas[c.beta];
  return {{"cell", {c.beta, c.alpha}},
          {"alpha", F.alpha.at(c.alpha)},
          {"beta", vec_json(s.beta)},
          {"d", s.d},
          {"abs_F", std::abs(F.at(c.beta, c.alpha))}};
}

nlohmann::json region_json(const TentRegion& T) {
  return {{"center", T.I.center}, {"length", T.I.length}, {"gamma", vec_json(T.gamma)}};
}

int scale_class(double d, double t0) {
  int k = static_cast<int>(std::floor(std::log2(d / t0)));
  while (k > 0 && std::ldexp(t0, k) > d) --k;
  while (std::ldexp(t0, k + 1) <= d) ++k;
  return std::max(k, 0);
}

bool same_point(const PlaneVector& a, const PlaneVector& b) {
  return (a - b).norm() <= 1e-14 * std::max(1.0, a.norm());
}

Mask level_set(const Mask& omega, const Field& F, double lambda) {
  Mask out(F.values.size(), 0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    double v = std::abs(F.values[i]);
    out[i] = omega[i] && v > lambda && v <= 2 * lambda;
  }
  return out;
}

Mask minus(const Mask& a, const Mask& b) {
  Mask out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] && !b[i];
  return out;
}

void check_shape(const Mask& omega, const Field& F) {
  if (omega.size() != F.values.size()) throw std::invalid_argument("mask shape differs from the field");
}

// Per-beta prefix sums of |F|^2 over the cells kept in `keep`.
struct KeptPrefix {
  std::size_t na = 0;
  std::vector<double> p;

  KeptPrefix(const Field& F, const Mask& keep) : na(F.alpha.n), p(F.betas.size() * (na + 1), 0.0) {
    for (std::size_t ib = 0; ib < F.betas.size(); ++ib)
      for (std::size_t ia = 0; ia < na; ++ia) {
        std::size_t idx = ib * na + ia;
        double v = keep[idx] ? std::norm(F.values[idx]) : 0.0;
        p[ib * (na + 1) + ia + 1] = p[ib * (na + 1) + ia] + v;
      }
  }
  double sum(std::size_t ib, long lo, long hi) const {
    if (lo > hi) return 0.0;
    return p[ib * (na + 1) + static_cast<std::size_t>(hi) + 1] -
           p[ib * (na + 1) + static_cast<std::size_t>(lo)];
  }
};

double half_l2sq(const Field& F, const KeptPrefix& pre, const Interval& I, const PlaneVector& gamma,
                 int j, const ConstantPack& k, Side side) {
  auto [lo, hi] = alpha_range(F.alpha, I);
  if (lo > hi) return 0.0;
  double t = 1.0 / I.length, acc = 0.0;
  for (std::size_t ib = 0; ib < F.betas.size(); ++ib) {
    const auto& s = F.betas[ib];
    if (s.weight == 0.0) continue;
    if (!half_whitney_membership(s.beta, gamma, t, s.d, k, j, side)) continue;
    acc += pre.sum(ib, lo, hi) * s.weight;
  }
  return acc * F.alpha.h / I.length;
}

double strip_width(const ConstantPack& k, double t) { return k.delta0 * (1.0 - k.delta1) * t; }

}  // namespace

bool Rectangle::intersects(const Rectangle& o) const {
  return std::abs(alpha - o.alpha) <= 0.5 * (time_len + o.time_len) &&
         std::abs(freq - o.freq) <= 0.5 * (freq_len + o.freq_len);
}

Rectangle selection_rectangle(double alpha, const PlaneVector& gamma, int j, double t,
                              const ConstantPack& k) {
  return {alpha, gamma.coord(j), k.c_s / t, k.c_f * t};
}

void mark_region(const Field& F, const TentRegion& T, const ConstantPack& k, Mask& covered) {
  auto [lo, hi] = alpha_range(F.alpha, T.I);
  if (lo > hi) return;
  double t = 1.0 / T.I.length;
  for (std::size_t ib = 0; ib < F.betas.size(); ++ib) {
    const auto& s = F.betas[ib];
    if (!whitney_membership(s.beta, T.gamma, t, s.d, k)) continue;
    for (long ia = lo; ia <= hi; ++ia) covered[ib * F.alpha.n + static_cast<std::size_t>(ia)] = 1;
  }
}

Mask covered_cells(const Field& F, const std::vector<Tent>& tents, const ConstantPack& k) {
  Mask m(F.values.size(), 0);
  for (const auto& t : tents) mark_region(F, t.region, k, m);
  return m;
}

LinftyResult select_linfty(const Mask& omega, const Field& F, double lambda, int j,
                           const SingularCurve& curve, const ConstantPack& k) {
  if (!(lambda > 0)) throw std::domain_error("select_linfty: lambda must be positive");
  check_shape(omega, F);
  LinftyResult out;
  std::size_t na = F.alpha.n, nb = F.betas.size();

  double t0 = std::numeric_limits<double>::infinity();
  for (std::size_t ib = 0; ib < nb; ++ib)
    for (std::size_t ia = 0; ia < na; ++ia)
      if (omega[ib * na + ia]) {
        t0 = std::min(t0, F.betas[ib].d);
        break;
      }
  if (!std::isfinite(t0)) return out;
  if (!(t0 > 0)) throw DegenerateInput("select_linfty: Omega touches the curve");
  out.t0 = t0;

  Mask level = level_set(omega, F, lambda);
  std::map<int, std::vector<Cell>> classes;
  for (std::size_t ib = 0; ib < nb; ++ib) {
    int cls = scale_class(F.betas[ib].d, t0);
    for (std::size_t ia = 0; ia < na; ++ia)
      if (level[ib * na + ia]) classes[cls].push_back({ib, ia});
  }

  Mask covered(F.values.size(), 0);
  for (auto& [cls, cells] : classes) {
    double t = std::ldexp(t0, cls);
    std::vector<Cell> cand;
    for (const auto& c : cells)
      if (!covered[c.beta * na + c.alpha]) cand.push_back(c);
    std::sort(cand.begin(), cand.end(), [&](const Cell& a, const Cell& b) {
      if (a.alpha != b.alpha) return a.alpha < b.alpha;
      double ga = F.betas[a.beta].nearest.coord(j), gb = F.betas[b.beta].nearest.coord(j);
      if (ga != gb) return ga < gb;
      return a.beta < b.beta;
    });
    std::vector<Rectangle> accepted;
    std::size_t first_new = out.points.size();
    for (const auto& c : cand) {
      auto R = selection_rectangle(F.alpha.at(c.alpha), F.betas[c.beta].nearest, j, t, k);
      bool free = std::none_of(accepted.begin(), accepted.end(),
                               [&](const Rectangle& o) { return o.intersects(R); });
      if (!free) continue;
      accepted.push_back(R);
      out.points.push_back({c, cls});
    }
    std::size_t first_tent = out.tents.size();
    double w = strip_width(k, t);
    for (std::size_t p = first_new; p < out.points.size(); ++p) {
      const Cell& c = out.points[p].cell;
      double g = F.betas[c.beta].nearest.coord(j);
      Interval I{F.alpha.at(c.alpha), k.c / t};
      // neighbouring closed strips share boundary points; equal tents are kept once
      std::size_t own = out.tents.size();
      auto push = [&](const PlaneVector& gamma, int i) {
        for (std::size_t q = own; q < out.tents.size(); ++q)
          if (same_point(out.tents[q].region.gamma, gamma)) return;
        out.tents.push_back({{I, gamma}, "linfty", cls, i, p});
      };
      for (int i = -k.M; i <= k.M; ++i) {
        auto ex = curve.slab_extremes(j, g + w * (i - 1), g + w * i);
        if (!ex) continue;
        push(ex->first, i);
        push(ex->second, i);
      }
    }
    for (std::size_t q = first_tent; q < out.tents.size(); ++q)
      mark_region(F, out.tents[q].region, k, covered);
  }
  return out;
}

double half_local_l2sq(const Field& F, const Interval& I, const PlaneVector& gamma, int j,
                       const ConstantPack& k, Side side, const Mask& keep) {
  check_shape(keep, F);
  KeptPrefix pre(F, keep);
  return half_l2sq(F, pre, I, gamma, j, k, side);
}

double max_half_size(const Field& F, const TentLattice& lattice, int j, const ConstantPack& k,
                     Side side) {
  KeptPrefix pre(F, Mask(F.values.size(), 1));
  double m = 0.0;
  for (const auto& g : lattice.gammas)
    for (const auto& I : lattice.intervals) m = std::max(m, half_l2sq(F, pre, I, g, j, k, side));
  return std::sqrt(m);
}

L2Result select_l2(const Mask& omega, const Field& F, double lambda, int j,
                   const SingularCurve& curve, const ConstantPack& k, const TentLattice& lattice,
                   const L2Options& opt) {
  if (!(lambda > 0)) throw std::domain_error("select_l2: lambda must be positive");
  if (!(opt.c_emb > 0)) throw std::domain_error("select_l2: embedding constant must be positive");
  if (!(opt.f_norm > 0)) throw std::domain_error("select_l2: ||f|| must be positive");
  check_shape(omega, F);
  L2Result out;
  std::size_t na = F.alpha.n, nb = F.betas.size();
  out.t0 = lambda * lambda / (2.0 * opt.c_emb * opt.c_emb * opt.f_norm * opt.f_norm);

  double A = opt.A;
  if (!(A > 0)) {
    A = 0.0;
    for (std::size_t ib = 0; ib < nb; ++ib)
      for (std::size_t ia = 0; ia < na; ++ia)
        if (omega[ib * na + ia]) {
          const auto& s = F.betas[ib];
          A = std::max(A, std::abs(s.beta.coord(j)) + s.d / k.delta1);
          break;
        }
  }
  out.A = A;
  if (A == 0.0) return out;

  double w = strip_width(k, out.t0);
  double kmax = std::ceil(2 * A / w) + 1;
  std::map<long, std::vector<std::size_t>> strips;  // strip index -> lattice gammas
  for (std::size_t g = 0; g < lattice.gammas.size(); ++g) {
    double x = lattice.gammas[g].coord(j);
    if (x < -A || x > A) continue;
    long s = static_cast<long>(std::floor((x + A) / w)) + 1;
    if (s < 0 || static_cast<double>(s) > kmax) continue;
    strips[s].push_back(g);
  }
  std::vector<long> order;
  for (auto& [s, v] : strips) order.push_back(s);
  if (opt.side == Side::Above) std::reverse(order.begin(), order.end());

  Mask keep = omega;
  double trigger = 0.5 * lambda * lambda;
  for (long s : order) {
    ++out.strips_visited;
    const auto& gs = strips[s];
    KeptPrefix pre(F, keep);
    struct Hit {
      std::size_t interval;
      std::size_t gamma;
    };
    std::vector<Hit> hits;
    for (std::size_t i = 0; i < lattice.intervals.size(); ++i) {
      const Interval& I = lattice.intervals[i];
      double best = -1.0;
      std::size_t arg = 0;
      for (std::size_t g : gs) {
        double v = half_l2sq(F, pre, I, lattice.gammas[g], j, k, opt.side);
        if (v > best) {
          best = v;
          arg = g;
        }
      }
      if (best >= trigger) {
        hits.push_back({i, arg});
        if (I.length * out.t0 > 1.0) ++out.long_triggers;
      }
    }
    if (hits.empty()) continue;

    // Vitali on the 5-fold enlargements, longest first
    std::sort(hits.begin(), hits.end(), [&](const Hit& a, const Hit& b) {
      const Interval& x = lattice.intervals[a.interval];
      const Interval& y = lattice.intervals[b.interval];
      if (x.length != y.length) return x.length > y.length;
      return x.center < y.center;
    });
    std::vector<Hit> chosen;
    for (const auto& h : hits) {
      const Interval& x = lattice.intervals[h.interval];
      bool disjoint = std::all_of(chosen.begin(), chosen.end(), [&](const Hit& c) {
        const Interval& y = lattice.intervals[c.interval];
        return std::abs(x.center - y.center) > 2.5 * (x.length + y.length);
      });
      if (disjoint) chosen.push_back(h);
    }

    // endpoints of the curve inside the strip; the strip's lattice gammas lie on the curve
    double lo = -A + w * static_cast<double>(s - 1), hi = -A + w * static_cast<double>(s);
    double pad = 1e-12 * std::max(1.0, A);
    auto ex = curve.slab_extremes(j, lo - pad, hi + pad);
    PlaneVector gm = lattice.gammas[gs.front()], gp = gm;
    if (ex) {
      gm = ex->first;
      gp = ex->second;
    }
    for (std::size_t g : gs) {
      if (lattice.gammas[g].coord(j) < gm.coord(j)) gm = lattice.gammas[g];
      if (lattice.gammas[g].coord(j) > gp.coord(j)) gp = lattice.gammas[g];
    }

    std::size_t first_tent = out.tents.size();
    for (const auto& h : chosen) {
      const Interval& J = lattice.intervals[h.interval];
      const PlaneVector& gJ = lattice.gammas[h.gamma];
      Triple tr;
      tr.tent = {J, gJ};
      tr.strip = static_cast<int>(s);
      auto [a0, a1] = alpha_range(F.alpha, J);
      for (std::size_t ib = 0; ib < nb; ++ib) {
        const auto& b = F.betas[ib];
        if (!half_whitney_membership(b.beta, gJ, 1.0 / J.length, b.d, k, j, opt.side)) continue;
        for (long ia = a0; ia <= a1; ++ia) {
          std::size_t idx = ib * na + static_cast<std::size_t>(ia);
          if (!keep[idx]) continue;
          tr.cells.push_back({ib, static_cast<std::size_t>(ia)});
          tr.l2sq += std::norm(F.values[idx]) * F.alpha.h * b.weight;
        }
      }
      std::size_t parent = out.triples.size();
      out.triples.push_back(std::move(tr));
      Interval big = J.scaled(25.0 / k.delta1);
      out.tents.push_back({{big, gm}, "l2_endpoint", static_cast<int>(s), 0, parent});
      if (!same_point(gm, gp)) out.tents.push_back({{big, gp}, "l2_endpoint", static_cast<int>(s), 0, parent});
      out.tents.push_back({{J.scaled(1.0 / k.delta1), gJ}, "l2_center", static_cast<int>(s), 0, parent});
    }
    Mask cov(F.values.size(), 0);
    for (std::size_t q = first_tent; q < out.tents.size(); ++q) mark_region(F, out.tents[q].region, k, cov);
    keep = minus(keep, cov);
  }
  return out;
}

std::size_t SelectionReport::count(const std::string& property) const {
  return static_cast<std::size_t>(std::count_if(violations.begin(), violations.end(),
                                                [&](const Violation& v) { return v.property == property; }));
}

nlohmann::json SelectionReport::to_json() const {
  nlohmann::json v = nlohmann::json::array();
  for (const auto& x : violations)
    v.push_back({{"property", x.property}, {"detail", x.detail}, {"witness", x.witness}});
  return {{"kind", kind}, {"ok", ok()}, {"violations", v}, {"stats", stats}};
}

namespace {

// violation lists are capped so a badly broken output stays readable
void add(SelectionReport& r, const std::string& prop, const std::string& detail, nlohmann::json w) {
  if (r.count(prop) < 50) r.violations.push_back({prop, detail, std::move(w)});
  r.stats["violations_" + prop] = r.stats.value("violations_" + prop, 0) + 1;
}

void check_tents(SelectionReport& r, const std::vector<Tent>& tents, const SingularCurve& curve) {
  for (std::size_t i = 0; i < tents.size(); ++i) {
    const auto& T = tents[i].region;
    if (!(T.I.length > 0)) add(r, "tent_valid", "non-positive interval length", {{"tent", i}});
    double d = curve.distance(T.gamma);
    if (d > 1e-9 * std::max(1.0, T.gamma.norm()))
      add(r, "tent_valid", "tent point off the curve", {{"tent", i}, {"distance", d}});
  }
}

}  // namespace

SelectionReport verify_selection_properties(const LinftyResult& out, const Mask& omega,
                                            const Field& F, double lambda, int j,
                                            const SingularCurve& curve, const ConstantPack& k) {
  check_shape(omega, F);
  SelectionReport r;
  r.kind = "linfty";
  std::size_t na = F.alpha.n;
  check_tents(r, out.tents, curve);

  for (std::size_t p = 0; p < out.points.size(); ++p) {
    const Cell& c = out.points[p].cell;
    std::size_t idx = c.beta * na + c.alpha;
    double v = std::abs(F.values[idx]);
    if (!omega[idx]) add(r, "points_in_omega", "selected point outside Omega", cell_json(F, c));
    if (!(v > lambda && v <= 2 * lambda))
      add(r, "points_level", "selected point outside the level set (lambda, 2 lambda]", cell_json(F, c));
  }

  Mask cov = covered_cells(F, out.tents, k);
  Mask level = level_set(omega, F, lambda);
  std::size_t level_cells = 0;
  for (std::size_t idx = 0; idx < level.size(); ++idx) {
    if (!level[idx]) continue;
    ++level_cells;
    if (!cov[idx]) add(r, "covering", "level-set cell outside every D_T", cell_json(F, {idx / na, idx % na}));
  }

  // every point yields between 1 and 2(2M+1) tents of length c / (2^k t0) in [c/d, 2c/d)
  double sum_len = 0.0, sum_inv_d = 0.0, sum_weighted = 0.0;
  for (const auto& t : out.tents) sum_len += t.region.I.length;
  for (const auto& p : out.points) {
    const auto& s = F.betas[p.cell.beta];
    sum_inv_d += 1.0 / s.d;
    sum_weighted += std::norm(F.at(p.cell.beta, p.cell.alpha)) / (s.d * lambda * lambda);
  }
  double upper = 2.0 * (2 * k.M + 1) * 2.0 * k.c * sum_inv_d;
  double lower = k.c * sum_inv_d;
  if (sum_len > upper * (1 + kRelTol))
    add(r, "estimate", "sum |I| above 4 c (2M+1) sum 1/d", {{"sum_len", sum_len}, {"bound", upper}});
  if (sum_len < lower * (1 - kRelTol))
    add(r, "estimate", "sum |I| below c sum 1/d", {{"sum_len", sum_len}, {"bound", lower}});
  if (sum_inv_d > sum_weighted * (1 + kRelTol))
    add(r, "estimate", "sum 1/d above sum |F|^2 / (d lambda^2)",
        {{"sum_inv_d", sum_inv_d}, {"sum_weighted", sum_weighted}});

  std::size_t n = out.points.size();
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) {
      const Cell &ca = out.points[a].cell, &cb = out.points[b].cell;
      const auto &sa = F.betas[ca.beta], &sb = F.betas[cb.beta];
      double dt = std::abs(F.alpha.at(ca.alpha) - F.alpha.at(cb.alpha));
      double df = std::abs(sa.beta.coord(j) - sb.beta.coord(j));
      double need_t = 2.0 * (1.0 / sa.d + 1.0 / sb.d);
      double need_f = k.rho * (sa.d + sb.d);
      if (dt >= need_t * (1 - kRelTol) || df >= need_f * (1 - kRelTol)) continue;
      add(r, "orthogonality", "pair of points with neither time nor frequency separation",
          {{"first", cell_json(F, ca)}, {"second", cell_json(F, cb)}, {"dt", dt}, {"need_t", need_t},
           {"df", df}, {"need_f", need_f}});
    }

  r.stats["points"] = n;
  r.stats["tents"] = out.tents.size();
  r.stats["level_cells"] = level_cells;
  r.stats["sum_len"] = sum_len;
  r.stats["sum_inv_d"] = sum_inv_d;
  r.stats["sum_weighted"] = sum_weighted;
  r.stats["t0"] = out.t0;
  return r;
}

SelectionReport verify_selection_properties(const L2Result& out, const Mask& omega,
                                            const Field& F, double lambda, int j,
                                            const SingularCurve& curve, const ConstantPack& k,
                                            const TentLattice& lattice, Side side) {
  check_shape(omega, F);
  SelectionReport r;
  r.kind = side == Side::Below ? "l2_below" : "l2_above";
  std::size_t na = F.alpha.n;
  check_tents(r, out.tents, curve);

  Mask residual = minus(omega, covered_cells(F, out.tents, k));
  KeptPrefix pre(F, residual);
  double bound = 0.5 * lambda * lambda;
  double worst = 0.0;
  for (std::size_t g = 0; g < lattice.gammas.size(); ++g)
    for (std::size_t i = 0; i < lattice.intervals.size(); ++i) {
      double v = half_l2sq(F, pre, lattice.intervals[i], lattice.gammas[g], j, k, side);
      worst = std::max(worst, v);
      if (v > bound * (1 + kRelTol))
        add(r, "covering", "residual local L2 size above lambda / sqrt2",
            {{"tent", region_json({lattice.intervals[i], lattice.gammas[g]})},
             {"size", std::sqrt(v)}, {"bound", std::sqrt(bound)}});
    }

  double sum_I = 0.0, sum_T = 0.0;
  for (const auto& t : out.tents) sum_T += t.region.I.length;
  for (std::size_t q = 0; q < out.triples.size(); ++q) {
    const auto& tr = out.triples[q];
    double len = tr.tent.I.length;
    sum_I += len;
    for (const auto& c : tr.cells) {
      const auto& s = F.betas[c.beta];
      bool inside = omega[c.beta * na + c.alpha] && tr.tent.I.contains(F.alpha.at(c.alpha)) &&
                    half_whitney_membership(s.beta, tr.tent.gamma, 1.0 / len, s.d, k, j, side);
      if (!inside) {
        add(r, "triple_support", "cell of S outside Omega cap I x (W \\ U)",
            {{"triple", q}, {"cell", cell_json(F, c)}});
        break;
      }
    }
    if (tr.l2sq / len < bound * (1 - kRelTol))
      add(r, "estimate", "triple below the trigger |I|^{-1} ||F||^2_S >= lambda^2 / 2",
          {{"triple", q}, {"value", tr.l2sq / len}, {"bound", bound}});
  }
  // each triple spawns (25/delta1)|I| at one or two endpoints plus (1/delta1)|I|
  double lo = 26.0 / k.delta1 * sum_I, hi = 51.0 / k.delta1 * sum_I;
  if (sum_T < lo * (1 - kRelTol) || sum_T > hi * (1 + kRelTol))
    add(r, "estimate", "sum over tents not within [26, 51] / delta1 times sum over triples",
        {{"sum_tents", sum_T}, {"sum_triples", sum_I}});

  // orthogonality across distinct triples, ordered by gamma_j along the scan
  std::size_t nt = out.triples.size();
  std::vector<std::map<std::size_t, std::vector<double>>> by_beta(nt);
  for (std::size_t q = 0; q < nt; ++q) {
    for (const auto& c : out.triples[q].cells) by_beta[q][c.beta].push_back(F.alpha.at(c.alpha));
    for (auto& [b, v] : by_beta[q]) std::sort(v.begin(), v.end());
  }
  auto min_gap = [](const std::vector<double>& x, const std::vector<double>& y) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t a = 0, b = 0;
    while (a < x.size() && b < y.size()) {
      best = std::min(best, std::abs(x[a] - y[b]));
      if (x[a] < y[b]) ++a;
      else ++b;
    }
    return best;
  };
  for (std::size_t p = 0; p < nt; ++p)
    for (std::size_t q = p + 1; q < nt; ++q) {
      const auto &tp = out.triples[p], &tq = out.triples[q];
      double gp = tp.tent.gamma.coord(j), gq = tq.tent.gamma.coord(j);
      // the scan runs upward in gamma_j for <j and downward for >j
      bool p_first = side == Side::Below ? gp <= gq : gp >= gq;
      bool q_first = side == Side::Below ? gq <= gp : gq >= gp;
      double need_t = std::max(p_first ? 2.0 * tp.tent.I.length : 0.0,
                               q_first ? 2.0 * tq.tent.I.length : 0.0);
      if (p_first && q_first)
        need_t = 2.0 * std::min(tp.tent.I.length, tq.tent.I.length);
      double hull = std::max(0.0, std::max(tp.tent.I.lo() - tq.tent.I.hi(), tq.tent.I.lo() - tp.tent.I.hi()));
      if (hull >= need_t * (1 - kRelTol)) continue;
      for (const auto& [bp, ap] : by_beta[p])
        for (const auto& [bq, aq] : by_beta[q]) {
          const auto &sp = F.betas[bp], &sq = F.betas[bq];
          double df = std::abs(sp.beta.coord(j) - sq.beta.coord(j));
          double need_f = k.rho * (sp.d + sq.d);
          if (df >= need_f * (1 - kRelTol)) continue;
          double dt = min_gap(ap, aq);
          if (dt >= need_t * (1 - kRelTol)) continue;
          add(r, "orthogonality", "cross pair with neither time nor frequency separation",
              {{"triples", {p, q}}, {"beta", {bp, bq}}, {"dt", dt}, {"need_t", need_t}, {"df", df},
               {"need_f", need_f}});
        }
    }

  r.stats["triples"] = nt;
  r.stats["tents"] = out.tents.size();
  r.stats["sum_triples"] = sum_I;
  r.stats["sum_tents"] = sum_T;
  r.stats["worst_residual"] = std::sqrt(worst);
  r.stats["t0"] = out.t0;
  r.stats["long_triggers"] = out.long_triggers;
  return r;
}

nlohmann::json to_json(const Tent& t) {
  auto j = region_json(t.region);
  j["origin"] = t.origin;
  j["level"] = t.level;
  j["strip"] = t.strip;
  j["parent"] = t.parent;
  return j;
}

nlohmann::json to_json(const LinftyResult& r) {
  nlohmann::json pts = nlohmann::json::array(), tents = nlohmann::json::array();
  for (const auto& p : r.points) pts.push_back({p.cell.beta, p.cell.alpha});
  for (const auto& t : r.tents) tents.push_back(to_json(t));
  return {{"t0", r.t0}, {"points", pts}, {"tents", tents}};
}

nlohmann::json to_json(const L2Result& r) {
  nlohmann::json tr = nlohmann::json::array(), tents = nlohmann::json::array();
  for (const auto& x : r.triples) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : x.cells) cells.push_back({c.beta, c.alpha});
    auto j = region_json(x.tent);
    j["strip"] = x.strip;
    j["l2sq"] = x.l2sq;
    j["cells"] = std::move(cells);
    tr.push_back(std::move(j));
  }
  for (const auto& t : r.tents) tents.push_back(to_json(t));
  return {{"t0", r.t0}, {"A", r.A}, {"triples", tr}, {"tents", tents},
          {"long_triggers", r.long_triggers}};
}

double l2_norm(const std::vector<cplx>& f, const AlphaGrid& grid) {
  double s = 0.0;
  for (auto v : f) s += std::norm(v);
  return std::sqrt(s * grid.h);
}

double measure_embedding_constant(const AlphaGrid& grid, const BetaSet& betas, int j,
                                  const BumpProfile& bumps, const ConstantPack& k,
                                  const std::vector<PlaneVector>& gammas, std::size_t batch,
                                  std::mt19937_64& rng) {
  std::normal_distribution<> nd(0.0, 1.0);
  double best = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    std::vector<cplx> g(grid.n);
    for (auto& x : g) x = cplx(nd(rng), nd(rng));
    Field F = embed(g, j, grid, betas, bumps);
    double n = l2_norm(g, grid);
    for (const auto& gm : gammas) best = std::max(best, whitney_l2(F, gm, j, k) / n);
  }
  return best;
}

BesselResult bessel(const Mask& omega, const Field& F, double lambda, int j,
                    const SingularCurve& curve, const ConstantPack& k, const TentLattice& lattice,
                    const BesselOptions& opt) {
  if (!(lambda > 0)) throw std::domain_error("bessel: lambda must be positive");
  check_shape(omega, F);
  BesselResult out;

  double fmax = 0.0;
  for (std::size_t i = 0; i < omega.size(); ++i)
    if (omega[i]) fmax = std::max(fmax, std::abs(F.values[i]));
  for (int layer = 1; std::ldexp(lambda, layer - 1) < fmax; ++layer) {
    double lk = std::ldexp(lambda, layer - 1);
    Mask part = level_set(omega, F, lk);
    auto r = select_linfty(part, F, lk, j, curve, k);
    out.reports.push_back(verify_selection_properties(r, part, F, lk, j, curve, k));
    out.tents.insert(out.tents.end(), r.tents.begin(), r.tents.end());
    out.layers.push_back(std::move(r));
  }
  Mask rest = minus(omega, covered_cells(F, out.tents, k));

  // C raised to the measured Whitney L2 ratio of this field
  double actual = 0.0;
  for (const auto& g : lattice.gammas) actual = std::max(actual, whitney_l2(F, g, j, k) / opt.f_norm);
  out.c_emb_used = std::max(opt.c_emb, actual);
  L2Options lo{Side::Below, out.c_emb_used, opt.f_norm, opt.A};
  out.left = select_l2(rest, F, lambda, j, curve, k, lattice, lo);
  out.reports.push_back(verify_selection_properties(out.left, rest, F, lambda, j, curve, k, lattice, Side::Below));
  rest = minus(rest, covered_cells(F, out.left.tents, k));
  lo.side = Side::Above;
  out.right = select_l2(rest, F, lambda, j, curve, k, lattice, lo);
  out.reports.push_back(verify_selection_properties(out.right, rest, F, lambda, j, curve, k, lattice, Side::Above));
  rest = minus(rest, covered_cells(F, out.right.tents, k));

  out.tents.insert(out.tents.end(), out.left.tents.begin(), out.left.tents.end());
  out.tents.insert(out.tents.end(), out.right.tents.begin(), out.right.tents.end());
  for (const auto& t : out.tents) out.total_length += t.region.I.length;
  Mask removed(rest.size());
  for (std::size_t i = 0; i < rest.size(); ++i) removed[i] = !rest[i];
  out.residual_size = global_size(F, j, lattice, k, &removed).value;
  out.residual = std::move(rest);
  return out;
}

StoppingTimeReport stopping_time(const std::array<std::vector<cplx>, 3>& f, const MultiplierSpec& m,
                                 const SingularCurve& curve, const AlphaGrid& grid,
                                 const BetaSet& betas, const TentLattice& lattice,
                                 const BumpProfile& bumps, const ConstantPack& k,
                                 const StoppingTimeOptions& opt) {
  StoppingTimeReport rep;
  std::array<double, 3> meas{};
  std::array<std::vector<cplx>, 3> ft;
  for (int j = 0; j < 3; ++j) {
    if (f[j].size() != grid.n) throw std::invalid_argument("stopping_time: input size differs from the grid");
    std::size_t count = 0;
    for (auto v : f[j]) count += std::abs(v) > 0;
    meas[j] = static_cast<double>(count) * grid.h;
    if (count == 0) throw DegenerateInput("stopping_time: input with empty support");
    ft[j] = f[j];
    for (auto& v : ft[j]) v /= std::sqrt(meas[j]);
  }
  rep.a = meas;
  std::sort(rep.a.begin(), rep.a.end(), std::greater<>());
  for (int i = 0; i < 3; ++i) {
    double x = 1.0 / std::sqrt(rep.a[i]);
    int n = static_cast<int>(std::ceil(std::log2(x)));
    while (std::ldexp(1.0, n - 1) >= x) --n;
    while (std::ldexp(1.0, n) < x) ++n;
    rep.n[i] = n;
  }
  rep.bound = std::pow(rep.a[0], -0.5) * (2.0 + std::log(rep.a[0] / rep.a[1]));
  rep.paper_sum = std::ldexp(1.0, rep.n[0]) * (2.0 + rep.n[1] - rep.n[0]);

  std::array<Field, 3> F;
  std::array<double, 3> norms{};
  for (int j = 0; j < 3; ++j) {
    F[j] = embed(ft[j], j + 1, grid, betas, bumps);
    norms[j] = l2_norm(ft[j], grid);
  }
  Mask omega(F[0].values.size(), 0);
  for (std::size_t ib = 0; ib < betas.size(); ++ib)
    if (betas[ib].weight > 0)
      for (std::size_t ia = 0; ia < grid.n; ++ia) omega[ib * grid.n + ia] = 1;

  for (int n = rep.n[2]; n >= rep.n[0] - opt.levels_below; --n) {
    StoppingLevel lv;
    lv.n = n;
    std::vector<Tent> tents;
    for (int j = 0; j < 3; ++j) {
      BesselOptions bo{opt.c_emb, norms[j], 0.0};
      auto b = bessel(omega, F[j], std::ldexp(1.0, n - 1), j + 1, curve, k, lattice, bo);
      tents.insert(tents.end(), b.tents.begin(), b.tents.end());
    }
    Mask removed(omega.size());
    for (std::size_t i = 0; i < omega.size(); ++i) removed[i] = !omega[i];
    for (const auto& t : tents) {
      double len = t.region.I.length, prod = len;
      for (int j = 0; j < 3; ++j)
        prod *= local_size(F[j], {t.region.I, t.region.gamma, 1.0 / len, j + 1}, k, &removed);
      lv.length += len;
      lv.size_sum += prod;
    }
    lv.tents = tents.size();
    Mask cov(omega.size(), 0);
    for (const auto& t : tents) mark_region(F[0], t.region, k, cov);
    omega = minus(omega, cov);
    lv.cells_left = static_cast<std::size_t>(std::count(omega.begin(), omega.end(), 1));
    rep.tent_sum += lv.size_sum;
    rep.levels.push_back(lv);
    if (lv.cells_left == 0) break;
  }
  rep.cells_left = rep.levels.empty() ? 0 : rep.levels.back().cells_left;
  rep.direct = std::abs(trilinear_direct(m, ft[0], ft[1], ft[2], grid));
  return rep;
}

}  // namespace tentfield
