#include "porofrac/laws.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace porofrac {

double corey_saturation(double p_c, double R) {
  if (p_c <= 0.0) return 0.0;
  return 1.0 - std::exp(-p_c / R);
}

double corey_saturation_derivative(double p_c, double R) {
  if (p_c <= 0.0) return 0.0;
  return std::exp(-p_c / R) / R;
}

double capillary_energy_corey(double p_c, double R) {
  if (p_c <= 0.0) return 0.0;
  return R - std::exp(-p_c / R) * (R + p_c);
}

namespace {
double simpson(const std::function<double(double)>& f, double a, double b, double fa, double fm,
               double fb, double whole, double tol, int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace

double capillary_energy_quadrature(const std::function<double(double)>& s_nw_derivative,
                                   double p_c, double rel_tol) {
  if (p_c == 0.0) return 0.0;
  auto f = [&](double q) { return q * s_nw_derivative(q); };
  double a = 0.0, b = p_c;
  double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  double tol = rel_tol * (std::abs(whole) + std::abs(p_c) * 1e-30) + 1e-300;
  return simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

double vg_kr_w(double s_w, const VanGenuchtenParams& p) {
  if (s_w < p.s_lr) return 0.0;
  if (s_w > 1.0 - p.s_gr) return 1.0;
  double sb = (s_w - p.s_lr) / (1.0 - p.s_lr - p.s_gr);
  sb = std::clamp(sb, 0.0, 1.0);
  double a = std::pow(sb, 1.0 / p.q);
  double c = 1.0 - std::pow(1.0 - a, p.q);
  return std::sqrt(sb) * c * c;
}

double vg_kr_nw(double s_nw, const VanGenuchtenParams& p) {
  if (s_nw < p.s_gr) return 0.0;
  if (s_nw > 1.0 - p.s_lr) return 1.0;
  double sb = (1.0 - s_nw - p.s_lr) / (1.0 - p.s_lr - p.s_gr);
  sb = std::clamp(sb, 0.0, 1.0);
  double a = std::pow(sb, 1.0 / p.q);
  return std::sqrt(1.0 - sb) * std::pow(1.0 - a, 2.0 * p.q);
}

double vg_kr_w_ds(double s_w, const VanGenuchtenParams& p) {
  if (s_w < p.s_lr || s_w > 1.0 - p.s_gr) return 0.0;
  double span = 1.0 - p.s_lr - p.s_gr;
  double sb = std::clamp((s_w - p.s_lr) / span, 1e-14, 1.0 - 1e-12);
  double a = std::pow(sb, 1.0 / p.q);
  double one_m_a = std::max(1.0 - a, 1e-14);
  double c = 1.0 - std::pow(one_m_a, p.q);
  double dc = std::pow(one_m_a, p.q - 1.0) * std::pow(sb, 1.0 / p.q - 1.0);
  double d = c * c / (2.0 * std::sqrt(sb)) + 2.0 * std::sqrt(sb) * c * dc;
  return d / span;
}

double vg_kr_nw_ds(double s_nw, const VanGenuchtenParams& p) {
  if (s_nw < p.s_gr || s_nw > 1.0 - p.s_lr) return 0.0;
  double span = 1.0 - p.s_lr - p.s_gr;
  double sb = std::clamp((1.0 - s_nw - p.s_lr) / span, 1e-14, 1.0 - 1e-14);
  double a = std::pow(sb, 1.0 / p.q);
  double one_m_a = std::max(1.0 - a, 1e-14);
  double dkr_dsb = -std::pow(one_m_a, 2.0 * p.q) / (2.0 * std::sqrt(1.0 - sb + 1e-14)) -
                   2.0 * std::sqrt(1.0 - sb) * std::pow(one_m_a, 2.0 * p.q - 1.0) *
                       std::pow(sb, 1.0 / p.q - 1.0);
  return dkr_dsb * (-1.0 / span);
}

double kozeny_carman(double phi, double phi0, double k0) {
  double phic = std::clamp(phi, 1e-6, 1.0 - 1e-6);
  return k0 * (1.0 - phi0) * (1.0 - phi0) / (phi0 * phi0 * phi0) * phic * phic * phic /
         ((1.0 - phic) * (1.0 - phic));
}

double RockLaws::kr(double s, Rock rt, bool wetting) const {
  if (rt == Rock::Matrix) return wetting ? vg_kr_w(s, vg) : vg_kr_nw(s, vg);
  return std::clamp(s, 0.0, 1.0);
}

double RockLaws::kr_ds(double s, Rock rt, bool wetting) const {
  if (rt == Rock::Matrix) return wetting ? vg_kr_w_ds(s, vg) : vg_kr_nw_ds(s, vg);
  return (s >= 0.0 && s <= 1.0) ? 1.0 : 0.0;
}

double MaterialTable::inv_m() const {
  if (std::isinf(biot_m)) return 0.0;
  return 1.0 / biot_m;
}

}  // namespace porofrac
