#include <doctest.h>

#include <cmath>

#include "porofrac/laws.hpp"

using namespace porofrac;

TEST_CASE("corey saturation") {
  CHECK(corey_saturation(0.0, 2e8) == 0.0);
  CHECK(corey_saturation(2e8 * std::log(2.0), 2e8) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(corey_saturation(-1e5, 2e8) == 0.0);
  // non-decreasing, in [0,1]
  double prev = -1;
  for (double pc = -1e6; pc < 1e9; pc += 5e7) {
    double s = corey_saturation(pc, 2e8);
    CHECK(s >= prev);
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
    prev = s;
  }
}

TEST_CASE("van Genuchten branches and continuity") {
  VanGenuchtenParams p;  // q = 0.328, S_lr = 0.35, S_gr = 0
  CHECK(vg_kr_w(0.2, p) == 0.0);   // s_w < S_lr
  CHECK(vg_kr_w(1.0, p) == 1.0);   // s_w > 1 - S_gr boundary inclusive via formula
  CHECK(vg_kr_w(1.0, p) == doctest::Approx(std::sqrt(1.0) * 1.0).epsilon(1e-14));
  // interior formula at sbar = 1 gives exactly 1 (continuity at the joint)
  double sw = 1.0 - p.s_gr;
  CHECK(vg_kr_w(sw, p) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(vg_kr_nw(0.0, p) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(vg_kr_nw(0.7, p) == 1.0);  // above 1 - S_lr
  // monotone in between
  double prev = 0.0;
  for (double s = 0.35; s <= 1.0; s += 0.01) {
    double v = vg_kr_w(s, p);
    CHECK(v >= prev - 1e-14);
    prev = v;
  }
  // derivative sanity by finite differences away from the endpoints
  for (double s : {0.45, 0.6, 0.8, 0.95}) {
    double h = 1e-7;
    double fd = (vg_kr_w(s + h, p) - vg_kr_w(s - h, p)) / (2 * h);
    CHECK(vg_kr_w_ds(s, p) == doctest::Approx(fd).epsilon(1e-4));
    double fdn = (vg_kr_nw(s + h, p) - vg_kr_nw(s - h, p)) / (2 * h);
    CHECK(vg_kr_nw_ds(s, p) == doctest::Approx(fdn).epsilon(1e-4));
  }
}

TEST_CASE("capillary energy closed form vs quadrature oracle") {
  const double r = 2e8;
  CHECK(capillary_energy_corey(0.0, r) == 0.0);
  CHECK(capillary_energy_corey(-5e5, r) == 0.0);
  // U(R) = R (1 - 2/e)
  CHECK(capillary_energy_corey(r, r) ==
        doctest::Approx(r * (1.0 - 2.0 / std::exp(1.0))).epsilon(1e-13));
  CHECK(capillary_energy_corey(r, r) == doctest::Approx(0.26424111765711533 * r).epsilon(1e-12));
  // limit p_c -> infinity: U -> R
  CHECK(capillary_energy_corey(1e3 * r, r) == doctest::Approx(r).epsilon(1e-12));
  // adaptive quadrature agrees with the closed form
  auto dsnw = [&](double q) { return corey_saturation_derivative(q, r); };
  for (double pc : {1e6, 5e7, 2e8, 1.3e9}) {
    double uq = capillary_energy_quadrature(dsnw, pc);
    CHECK(uq == doctest::Approx(capillary_energy_corey(pc, r)).epsilon(1e-9));
  }
}

TEST_CASE("kozeny-carman reproduces the reference state") {
  CHECK(kozeny_carman(0.15, 0.15, 5e-20) == doctest::Approx(5e-20).epsilon(1e-14));
  CHECK(kozeny_carman(0.16, 0.15, 5e-20) > 5e-20);
  CHECK(kozeny_carman(0.14, 0.15, 5e-20) < 5e-20);
}

TEST_CASE("rock laws dispatch per rock type") {
  RockLaws laws;
  CHECK(laws.s_nw(1e5, Rock::Matrix) == corey_saturation(1e5, laws.r_matrix));
  CHECK(laws.s_nw(1e2, Rock::Fracture) == corey_saturation(1e2, laws.r_fracture));
  // fracture relative permeability is linear in saturation
  CHECK(laws.kr(0.3, Rock::Fracture, true) == 0.3);
  CHECK(laws.kr(0.3, Rock::Damaged, false) == 0.3);
  CHECK(laws.mobility(0.5, Rock::Fracture, true) == doctest::Approx(0.5 / 1e-3));
  CHECK(laws.mobility(0.5, Rock::Fracture, false) == doctest::Approx(0.5 / 1.851e-5));
}

TEST_CASE("infinite Biot modulus drops the storage term") {
  MaterialTable mat;
  mat.biot_m = std::numeric_limits<double>::infinity();
  CHECK(mat.inv_m() == 0.0);
  mat.biot_m = 1e9;
  CHECK(mat.inv_m() == doctest::Approx(1e-9));
}
