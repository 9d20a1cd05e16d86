#include "tentfield/multiplier.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <memory>
#include <stdexcept>

#include "tentfield/errors.hpp"
#include "tentfield/fft.hpp"
#include "tentfield/parallel.hpp"

namespace tentfield {

MultiplierSpec MultiplierSpec::scaled(cplx c) const {
  auto f = fn_;
  return {name_, [f, c](const PlaneVector& xi) { return c * f(xi); }, smoothness_};
}

MultiplierSpec MultiplierSpec::translated(const PlaneVector& shift) const {
  auto f = fn_;
  return {name_, [f, shift](const PlaneVector& xi) { return f(xi - shift); }, smoothness_};
}

MultiplierSpec MultiplierSpec::dilated(double factor) const {
  if (!(factor > 0)) throw std::domain_error("dilation factor must be positive");
  auto f = fn_;
  return {name_, [f, factor](const PlaneVector& xi) { return f(xi * (1.0 / factor)); },
          smoothness_};
}

MultiplierSpec MultiplierSpec::from_grid(const PlaneGrid& grid, std::vector<cplx> values) {
  if (values.size() != grid.size()) throw std::invalid_argument("multiplier grid size mismatch");
  for (const auto& v : values)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw std::invalid_argument("multiplier grid holds a non-finite value");
  auto data = std::make_shared<std::vector<cplx>>(std::move(values));
  auto fn = [grid, data](const PlaneVector& xi) -> cplx {
    auto uv = PlaneBasis::to_uv(xi);
    double fu = (uv[0] - grid.u(0)) / grid.h;
    double fv = (uv[1] - grid.v(0)) / grid.h;
    if (fu < 0 || fv < 0 || fu > grid.nu - 1.0 || fv > grid.nv - 1.0) return 0.0;
    auto iu = std::min(static_cast<std::size_t>(fu), grid.nu > 1 ? grid.nu - 2 : 0);
    auto iv = std::min(static_cast<std::size_t>(fv), grid.nv > 1 ? grid.nv - 2 : 0);
    double tu = grid.nu > 1 ? fu - iu : 0.0, tv = grid.nv > 1 ? fv - iv : 0.0;
    auto at = [&](std::size_t a, std::size_t b) {
      return (*data)[std::min(a, grid.nu - 1) * grid.nv + std::min(b, grid.nv - 1)];
    };
    return (1 - tu) * ((1 - tv) * at(iu, iv) + tv * at(iu, iv + 1)) +
           tu * ((1 - tv) * at(iu + 1, iv) + tv * at(iu + 1, iv + 1));
  };
  return {"grid", fn, "bilinear"};
}

MultiplierSpec multiplier_one() {
  return {"one", [](const PlaneVector&) { return cplx(1.0); }, "constant"};
}

MultiplierSpec multiplier_zero() {
  return {"zero", [](const PlaneVector&) { return cplx(0.0); }, "constant"};
}

MultiplierSpec bht_sign() {
  return {"bht_sign",
          [](const PlaneVector& xi) {
            double t = xi[0] - xi[1];
            return cplx(t > 0 ? 1.0 : (t < 0 ? -1.0 : 0.0));
          },
          "smooth off the line xi1 = xi2"};
}

MultiplierSpec lip_difference(std::vector<LipTerm> terms) {
  auto fn = [terms = std::move(terms)](const PlaneVector& xi) {
    double t = xi[0] - xi[1];
    if (t == 0) return cplx(0.0);
    double l = std::log(std::abs(t));
    cplx acc = 0.0;
    for (const auto& term : terms) {
      cplx v = term.coef * std::polar(1.0, term.tau * l);
      acc += (term.odd && t < 0) ? -v : v;
    }
    return acc;
  };
  return {"lip_difference", fn, "smooth off the line xi1 = xi2"};
}

MultiplierSpec point_mikhlin(int exponent, const PlaneVector& center) {
  auto fn = [exponent, center](const PlaneVector& xi) {
    auto uv = PlaneBasis::to_uv(xi - center);
    double r = std::hypot(uv[0], uv[1]);
    if (r == 0) return cplx(0.0);
    return std::polar(1.0, exponent * std::atan2(uv[1], uv[0]));
  };
  return {"point_mikhlin", fn, "smooth, degree 0 homogeneous off the center"};
}

MultiplierSpec builtin(const std::string& name, const nlohmann::json& params) {
  auto get = [&](const char* key, double def) {
    return params.is_object() && params.contains(key) ? params.at(key).get<double>() : def;
  };
  if (name == "one") return multiplier_one();
  if (name == "zero") return multiplier_zero();
  if (name == "bht_sign") return bht_sign();
  if (name == "lip_difference") {
    std::vector<LipTerm> terms;
    if (params.is_object() && params.contains("terms")) {
      for (const auto& t : params.at("terms"))
        terms.push_back({cplx(t.value("re", 1.0), t.value("im", 0.0)), t.value("tau", 0.0),
                         t.value("odd", false)});
    } else {
      terms.push_back({1.0, get("tau", 1.0), params.is_object() && params.value("odd", false)});
    }
    return lip_difference(std::move(terms));
  }
  if (name == "point_mikhlin") {
    PlaneVector c;
    if (params.is_object() && params.contains("center")) {
      auto v = params.at("center").get<std::vector<double>>();
      if (v.size() == 2) c = PlaneBasis::from_uv(v[0], v[1]);
      else if (v.size() == 3) c = PlaneVector(v[0], v[1], v[2]);
      else throw ConfigError("point_mikhlin center needs 2 or 3 coordinates");
      if (!c.on_plane(1e-9)) throw ConfigError("point_mikhlin center is off the plane");
    }
    return point_mikhlin(static_cast<int>(get("exponent", 1)), c);
  }
  throw ConfigError("unknown multiplier: " + name);
}

std::vector<cplx> localize(const MultiplierSpec& m, const PlaneVector& beta, double d_beta,
                           const WindowGrid& grid, const BumpProfile& bumps) {
  if (!(d_beta > 1e-12 * std::max(1.0, beta.norm())))
    throw std::domain_error("localize: beta lies on the singular curve");
  std::vector<cplx> out(grid.n * grid.n, 0.0);
  for (std::size_t a = 0; a < grid.n; ++a) {
    double y1 = grid.coord(a);
    for (std::size_t b = 0; b < grid.n; ++b) {
      double y2 = grid.coord(b);
      double w = bumps.Phi_uv(y1, y2);
      if (w == 0) continue;
      out[a * grid.n + b] = w * m(beta + PlaneBasis::from_uv(d_beta * y1, d_beta * y2));
    }
  }
  return out;
}

std::vector<cplx> localize(const MultiplierSpec& m, const PlaneVector& beta,
                           const SingularCurve& curve, const WindowGrid& grid,
                           const BumpProfile& bumps) {
  return localize(m, beta, curve.distance(beta), grid, bumps);
}

double sobolev_norm(const std::vector<cplx>& g, std::size_t n, double h, double s,
                    std::size_t pad) {
  if (g.size() != n * n) throw std::invalid_argument("sobolev_norm: grid size mismatch");
  std::size_t P = n * std::max<std::size_t>(pad, 1);
  std::vector<cplx> buf(P * P, 0.0);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) buf[a * P + b] = g[a * n + b];
  Fft2d fft(P, P);
  fft.forward(buf);
  double dxi = 1.0 / (static_cast<double>(P) * h);
  double acc = 0.0;
  for (std::size_t a = 0; a < P; ++a) {
    double x1 = fft_freq_index(a, P) * dxi;
    for (std::size_t b = 0; b < P; ++b) {
      double x2 = fft_freq_index(b, P) * dxi;
      acc += std::norm(buf[a * P + b]) * std::pow(1.0 + x1 * x1 + x2 * x2, s);
    }
  }
  // |g^|^2 = h^4 |DFT|^2, cell dxi^2
  return std::sqrt(acc) * h * h * dxi;
}

HormanderResult hormander_norm(const MultiplierSpec& m, const SingularCurve& curve, double s,
                               const std::vector<PlaneVector>& beta_samples,
                               const WindowGrid& grid, const BumpProfile& bumps) {
  if (beta_samples.empty()) throw std::domain_error("hormander_norm: empty beta sample set");
  HormanderResult r;
  r.values.resize(beta_samples.size());
  parallel_for(beta_samples.size(), [&](std::size_t i) {
    r.values[i] =
        sobolev_norm(localize(m, beta_samples[i], curve, grid, bumps), grid.n, grid.step(), s);
  });
  auto it = std::max_element(r.values.begin(), r.values.end());
  r.sup = *it;
  r.argmax = beta_samples[static_cast<std::size_t>(it - r.values.begin())];
  return r;
}

std::vector<PlaneVector> ring_samples(const std::vector<PlaneVector>& centers, int L,
                                      int directions, const SingularCurve& curve) {
  std::vector<PlaneVector> out;
  for (const auto& c : centers)
    for (int l = -L; l <= L; ++l) {
      double r = std::ldexp(1.0, l);
      for (int k = 0; k < directions; ++k) {
        double th = 2 * std::numbers::pi * (k + 0.5) / directions;
        PlaneVector b = c + PlaneBasis::from_uv(r * std::cos(th), r * std::sin(th));
        if (curve.distance(b) > 1e-9 * r) out.push_back(b);
      }
    }
  return out;
}

}  // namespace tentfield
