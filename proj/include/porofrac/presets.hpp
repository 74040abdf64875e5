#ifndef POROFRAC_PRESETS_HPP
#define POROFRAC_PRESETS_HPP

#include <memory>

#include "porofrac/coupling.hpp"
#include "porofrac/mechanics.hpp"

namespace porofrac {

/// Closed-form solution of the single inclined fracture under remote
/// compression: constant normal multiplier and elliptical slip profile.
struct CompressionOracle {
  double sigma_remote = 100e6;        // Pa
  double psi = 20.0 * M_PI / 180.0;   // fracture inclination
  double half_length = 1.0;           // m
  double friction = 1.0 / std::sqrt(3.0);
  double young = 25e9;
  double poisson = 0.25;

  double lambda_n() const { return sigma_remote * std::sin(psi) * std::sin(psi); }
  /// |slip| at arclength tau in [0, 2*half_length] from a tip; the printed
  /// form of the profile in the source is dimensionally inconsistent and is
  /// implemented as the symmetric ellipse sqrt(l^2 - (l - tau)^2).
  double slip(double tau) const {
    double l = half_length;
    double root = l * l - (l - tau) * (l - tau);
    if (root < 0) root = 0;
    return 4.0 * (1.0 - poisson) / young * sigma_remote * std::sin(psi) *
           (std::cos(psi) - friction * std::sin(psi)) * std::sqrt(root);
  }
};

/// Pure contact mechanics benchmark setups (no flow).
struct MechSetup {
  std::shared_ptr<FracturedMesh> mesh;
  MechScenario scenario;
  CompressionOracle oracle;
};

/// Square box (320 m side) with a single 2 m fracture, meshed in the
/// fracture-aligned frame with grading away from the fracture; the remote
/// uniaxial compression is applied as boundary tractions of the rotated
/// stress tensor. n_fracture_faces must be even.
MechSetup make_compression_setup(int n_fracture_faces);

/// 2 m x 1 m domain with six fractures (one with a corner, one touching the
/// boundary, one abutting another), sheared from the top; friction grows
/// near fracture tips. refine = 0 gives the coarsest mesh.
MechSetup make_network_setup(int refine);
int network_fracture_count();

/// Plane-strain drying scenario on a 30 m x 10 m section: liquid-saturated
/// low-permeability matrix, chevron-like fracture network plus a horizontal
/// fracture reaching the dried (left) boundary, gas imposed on the left,
/// liquid pressure and confining traction on the right.
struct DryingSetup {
  std::shared_ptr<FracturedMesh> mesh;
  CoupledScenario scenario;
};
DryingSetup make_drying_setup(ContactMethod contact, CouplingMethod coupling,
                              ModelVariant variant, bool single_phase = false);

}  // namespace porofrac

#endif
