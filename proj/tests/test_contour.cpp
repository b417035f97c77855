// Analytic parametrisation gamma = Theta_+^{-1} o Psi_+ and the interpolating family.
#include "doctest.h"

#include "contourgas/contour.hpp"
#include "contourgas/equilibrium.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

using namespace cg;

namespace {
const cplx kG = 0.15 * std::polar(1.0, PI / 4.0);
OneCutSolution quartic() { return solve_one_cut_homotopy(ComplexPolynomial({0.0, 0.0, 1.0, 0.0, kG})); }
}  // namespace

TEST_CASE("Psi_+ closed form, endpoints and derivative") {
    CHECK(psi_plus(0.0) == doctest::Approx(0.0));
    CHECK(psi_plus(0.5) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(psi_plus(1.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(psi_plus(1.2), NumError);
    const double x = 0.3, h = 1e-6;
    CHECK((psi_plus(x + h) - psi_plus(x - h)) / (2 * h) == doctest::Approx(8.0 / PI * std::sqrt(x * (1 - x))).epsilon(1e-8));
    for (double y : {0.05, 0.4, 0.6, 0.97}) CHECK(std::abs(psi_plus_analytic(y) - psi_plus(y)) < 1e-14);
}

TEST_CASE("quadratic case: gamma is affine") {
    auto sol = solve_one_cut(ComplexPolynomial({0.0, 0.0, 1.0}), -1.3, 0.8);
    auto fam = analytic_param(sol);
    for (double x : {-0.05, 0.0, 0.25, 0.5, 1.0, 1.05}) {
        CHECK(std::abs(fam.gamma(1.0, x) - cplx(2 * x - 1, 0.0)) < 1e-13);
        CHECK(std::abs(fam.dgamma(1.0, x) - 2.0) < 1e-11);
    }
    CHECK(theta_plus(sol, 0.0) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("Theta_+(gamma(x)) = Psi_+(x) on a rotated quartic") {
    auto sol = quartic();
    auto fam = analytic_param(sol);
    CHECK(fam.chart_mismatch < 1e-10);
    CHECK(std::abs(fam.gamma(1.0, 0.0) - sol.zeta1) < 1e-13);
    CHECK(std::abs(fam.gamma(1.0, 1.0) - sol.zeta2) < 1e-13);
    for (int k = 1; k < 20; ++k) {
        const double x = k / 20.0;
        CHECK(theta_plus(sol, fam.gamma(1.0, x)) == doctest::Approx(psi_plus(x)).epsilon(1e-11));
    }
    // beyond the endpoints both sides carry the same 3/2-power branch point: compare Theta^2 with Psi^2
    for (double x : {-0.08, 1.08}) {
        const cplx a = theta_plus_analytic(sol, fam.gamma(1.0, x)), b = psi_plus_analytic(x);
        const cplx ea = x < 0 ? a : 1.0 - a, eb = x < 0 ? b : 1.0 - b;
        CHECK(std::abs(ea * ea - eb * eb) < 1e-11);
    }
    // off the support the value is not real
    CHECK_THROWS_AS(theta_plus(sol, fam.gamma(1.0, 0.5) + cplx(0.0, 0.2)), NumError);
}

TEST_CASE("interpolating family: endpoints fixed, affine at t = 0, derivatives consistent") {
    auto sol = quartic();
    auto fam = analytic_param(sol);
    for (double t : {0.0, 0.3, 0.7, 1.0}) {
        CHECK(std::abs(fam.gamma(t, 0.0) - sol.zeta1) < 1e-13);
        CHECK(std::abs(fam.gamma(t, 1.0) - sol.zeta2) < 1e-13);
        const double x = 0.37, h = 1e-5;
        CHECK(std::abs((fam.gamma(t, x + h) - fam.gamma(t, x - h)) / (2 * h) - fam.dgamma(t, x)) < 1e-8);
        CHECK(std::abs((fam.dgamma(t, x + h) - fam.dgamma(t, x - h)) / (2 * h) - fam.d2gamma(t, x)) < 1e-7);
        CHECK(std::abs((fam.d2gamma(t, x + h) - fam.d2gamma(t, x - h)) / (2 * h) - fam.d3gamma(t, x)) < 1e-6);
        if (t > 0.0 && t < 1.0)
            CHECK(std::abs((fam.gamma(t + h, x) - fam.gamma(t - h, x)) / (2 * h) - fam.dt_gamma(t, x)) < 1e-8);
        // inverse
        const cplx z = fam.gamma(t, cplx(0.6, 0.01));
        CHECK(std::abs(fam.inverse(t, z) - cplx(0.6, 0.01)) < 1e-12);
    }
    for (double x : {0.1, 0.5, 0.9}) CHECK(std::abs(fam.gamma(0.0, x) - (sol.zeta1 + sol.D() * x)) < 1e-13);
}

TEST_CASE("bi-Lipschitz bounds along the family") {
    auto sol = quartic();
    auto fam = analytic_param(sol);
    for (double t : {0.0, 0.5, 1.0}) {
        auto b = bilipschitz_check(fam.at(t), 80);
        CHECK(b.lower > 0.5);
        CHECK(b.upper < 4.0);
    }
    auto aff = bilipschitz_check(affine_curve(-1.0, 1.0, 0.0, 1.0), 10);
    CHECK(aff.lower == doctest::Approx(2.0));
    CHECK(aff.upper == doctest::Approx(2.0));
}

TEST_CASE("curve CSV output") {
    const std::string path = "test_contour_curve.csv";
    write_curve_csv(affine_curve(-1.0, 1.0, 0.0, 1.0), path, 3);
    std::ifstream is(path);
    std::string line;
    std::getline(is, line);
    CHECK(line == "x,re,im,dre,dim");
    std::getline(is, line);
    CHECK(line == "0,-1,0,2,0");
    std::remove(path.c_str());
}
