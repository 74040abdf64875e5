#ifndef POROFRAC_LAWS_HPP
#define POROFRAC_LAWS_HPP

#include <functional>

namespace porofrac {

/// Rock types of the hybrid-dimensional model.
enum class Rock { Matrix, Fracture, Damaged };

/// Corey saturation law: s_nw = max(1 - exp(-p_c/R), 0).
double corey_saturation(double p_c, double R);
double corey_saturation_derivative(double p_c, double R);

/// Capillary energy density U(p_c) = \int_0^{p_c} q S_nw'(q) dq for the Corey
/// law; closed form R - exp(-p_c/R)(R + p_c) for p_c >= 0, zero below.
double capillary_energy_corey(double p_c, double R);

/// Generic-law capillary energy via adaptive Simpson quadrature on q*S'(q).
double capillary_energy_quadrature(const std::function<double(double)>& s_nw_derivative,
                                   double p_c, double rel_tol = 1e-10);

struct VanGenuchtenParams {
  double q = 0.328;
  double s_lr = 0.35;  // residual liquid saturation
  double s_gr = 0.0;   // residual gas saturation
};

/// Van Genuchten relative permeabilities, both phases, with the rescaled
/// saturation sbar = (s_w - S_lr)/(1 - S_lr - S_gr).
double vg_kr_w(double s_w, const VanGenuchtenParams& p);
double vg_kr_nw(double s_nw, const VanGenuchtenParams& p);
double vg_kr_w_ds(double s_w, const VanGenuchtenParams& p);      // d kr_w / d s_w
double vg_kr_nw_ds(double s_nw, const VanGenuchtenParams& p);    // d kr_nw / d s_nw

/// Kozeny–Carman permeability update from the reference state (phi0, K0).
double kozeny_carman(double phi, double phi0, double k0);

/// Saturation, mobility and capillary-energy laws per rock type. The matrix
/// uses Van Genuchten relative permeabilities with a Corey saturation law;
/// fractures use linear relative permeabilities; the damaged layer defaults
/// to the fracture laws.
struct RockLaws {
  double r_matrix = 2e8;    // Corey R_m (Pa)
  double r_fracture = 1e2;  // Corey R_f (Pa)
  VanGenuchtenParams vg;
  double mu_w = 1e-3;       // Pa s
  double mu_nw = 1.851e-5;  // Pa s

  double corey_r(Rock rt) const { return rt == Rock::Matrix ? r_matrix : r_fracture; }
  double s_nw(double p_c, Rock rt) const { return corey_saturation(p_c, corey_r(rt)); }
  double ds_nw(double p_c, Rock rt) const {
    return corey_saturation_derivative(p_c, corey_r(rt));
  }
  double capillary_energy(double p_c, Rock rt) const {
    return capillary_energy_corey(p_c, corey_r(rt));
  }
  /// kr as a function of the phase's own saturation (wetting == true takes s_w).
  double kr(double s, Rock rt, bool wetting) const;
  double kr_ds(double s, Rock rt, bool wetting) const;
  /// Mobility eta^alpha(s^alpha) = kr(s^alpha)/mu^alpha.
  double mobility(double s, Rock rt, bool wetting) const {
    return kr(s, rt, wetting) / (wetting ? mu_w : mu_nw);
  }
  double mobility_ds(double s, Rock rt, bool wetting) const {
    return kr_ds(s, rt, wetting) / (wetting ? mu_w : mu_nw);
  }
};

/// Material data shared by the flow, mechanics and coupling layers.
struct MaterialTable {
  double young = 4.857e9;   // E (Pa)
  double poisson = 0.21;    // nu
  double biot_b = 1.0;      // Biot coefficient
  double biot_m = 1e9;      // Biot modulus (Pa); infinity() means 1/M = 0
  double friction = 0.5;    // default friction coefficient
  double k_m0 = 5e-20;      // reference permeability (m^2)
  double phi_m0 = 0.15;     // reference porosity
  double lambda_f = 1e-9;   // normal fracture transmissibility (m)
  double d0 = 1e-3;         // contact-state aperture (m)
  double d_a = 0.0;         // damaged layer thickness (m)
  double phi_a = 0.0;       // damaged layer porosity
  RockLaws laws;

  double inv_m() const;
};

}  // namespace porofrac

#endif
