// One-cut equilibrium measures: endpoint equations, densities, V_t / R_t / S_t,
// Frostman conditions, complex energy and entropy.
#include "doctest.h"

#include "contourgas/equilibrium.hpp"

#include <cmath>

using namespace cg;

namespace {
const cplx kG = 0.15 * std::polar(1.0, PI / 4.0);
ComplexPolynomial quartic_V() { return ComplexPolynomial({0.0, 0.0, 1.0, 0.0, kG}); }

// semicircle on [-R, R] centred at 0 with density (2/(pi R^2)) sqrt(R^2-x^2):
// U(x) = -\int ln|x-y| dmu(y)
double semicircle_U(double x, double R) {
    const double u = std::abs(x);
    if (u <= R) return -(u * u / (R * R) - 0.5 + std::log(R / 2.0));
    const double s = std::sqrt(u * u - R * R);
    return -((u * u - u * s) / (R * R) + std::log((u + s) / 2.0) - 0.5);
}
}  // namespace

TEST_CASE("endpoint equations: Gaussian anchors") {
    auto a = solve_one_cut(ComplexPolynomial({0.0, 0.0, 0.5}), -1.0, 1.0);
    CHECK(std::abs(a.zeta1 + std::sqrt(2.0)) < 1e-13);
    CHECK(std::abs(a.zeta2 - std::sqrt(2.0)) < 1e-13);
    REQUIRE(a.S.degree() == 0);
    CHECK(std::abs(a.S.coeffs[0] - 1.0) < 1e-14);

    auto b = solve_one_cut(ComplexPolynomial({0.0, 0.0, 1.0}), -0.7, 1.4);
    CHECK(std::abs(b.zeta1 + 1.0) < 1e-13);
    CHECK(std::abs(b.zeta2 - 1.0) < 1e-13);
    CHECK(std::abs(b.S.coeffs[0] - 2.0) < 1e-13);
    CHECK(b.mass_residual < 1e-12);
    CHECK(std::abs(density(b, 0.0) - 2.0 / PI) < 1e-14);
    CHECK(std::abs(density(b, b.zeta1)) == 0.0);
    CHECK_THROWS_AS(density(b, cplx(0.0, 0.3)), NumError);
}

TEST_CASE("quartic z^4/4: Laurent and loop forms of the endpoint equations agree") {
    auto sol = solve_one_cut(ComplexPolynomial({0.0, 0.0, 0.0, 0.0, 0.25}), -1.5, 1.5);
    // real symmetric solution: zeta^4 = 8/3, S = z^2 + zeta^2/2
    const double a = std::pow(8.0 / 3.0, 0.25);
    CHECK(std::abs(sol.zeta2 - a) < 1e-12);
    CHECK(std::abs(sol.S.coeffs[0] - a * a / 2.0) < 1e-12);
    CHECK(std::abs(sol.S.coeffs[2] - 1.0) < 1e-12);
    CHECK(sol.mass_residual < 1e-10);
    auto loop = endpoint_conditions_loop(sol.dV, sol.zeta1, sol.zeta2);
    CHECK(std::abs(loop.c0) < 1e-12);
    CHECK(std::abs(loop.c1) < 1e-12);
    CHECK(decomposition_residual(sol) < 1e-9);
    auto fam = analytic_param(sol);
    auto rep = frostman_check(sol, fam, {-0.09, 1.09}, {cplx(2.0, 0.0), cplx(-1.7, 0.0)});
    CHECK(rep.on_support_max < 1e-9);
    CHECK(rep.off_support_min > 0.0);
}

TEST_CASE("one-cut solution of a rotated quartic") {
    auto sol = solve_one_cut_homotopy(quartic_V());
    CHECK(sol.laurent_residual < 1e-13);
    CHECK(sol.mass_residual < 1e-10);
    CHECK(decomposition_residual(sol) < 1e-9);
    CHECK(std::abs(sol.zeta1 + sol.zeta2) < 1e-13);  // even potential
    CHECK_THROWS_AS(solve_one_cut(ComplexPolynomial({0.0, 0.0, 1.0}), 0.0, 0.0), NumError);
    auto fam = analytic_param(sol);
    CHECK(s_zero_clearance(sol, fam) > 0.5);
    // density times arc element is real positive
    for (int k = 1; k < 10; ++k) {
        const double x = k / 10.0;
        const cplx v = density(sol, fam.gamma(1.0, x)) * fam.dgamma(1.0, x);
        CHECK(std::abs(v.imag()) < 1e-10);
        CHECK(v.real() == doctest::Approx(8.0 / PI * std::sqrt(x * (1 - x))).epsilon(1e-10));
    }
}

TEST_CASE("Frostman conditions: quadratic against the closed-form semicircle potential") {
    auto sol = solve_one_cut(ComplexPolynomial({0.0, 0.0, 1.0}), -1.0, 1.0);
    auto fam = analytic_param(sol);
    auto rep = frostman_check(sol, fam, {-0.09, 1.09}, {cplx(2.0, 0.0)});
    CHECK(rep.on_support_max < 1e-8);
    CHECK(rep.off_support_min > 0.0);
    CHECK(rep.euler_lagrange_max < 1e-8);
    CHECK(rep.constant == doctest::Approx(1.0 + semicircle_U(-1.0, 1.0)).epsilon(1e-12));
    // potential at z = 2 from the closed form
    CHECK(log_potential(fam, 1.0, 2.0) == doctest::Approx(semicircle_U(2.0, 1.0)).epsilon(1e-10));
    const double phi2 = 4.0 + semicircle_U(2.0, 1.0) - rep.constant;
    CHECK(phi2 > 0.0);
}

TEST_CASE("Frostman conditions on the rotated quartic") {
    auto sol = solve_one_cut_homotopy(quartic_V());
    auto fam = analytic_param(sol);
    auto rep = frostman_check(sol, fam, {-0.1, -0.05, 1.05, 1.1}, {});
    CHECK(rep.on_support_max < 1e-9);
    CHECK(rep.off_support_min > 0.0);
    CHECK(rep.euler_lagrange_max < 1e-8);
}

TEST_CASE("interpolation data: V_1 = V, V_0 quadratic, R_t = S_t^2 (z-zeta1)(z-zeta2)") {
    auto sol = solve_one_cut_homotopy(quartic_V());
    auto fam = analytic_param(sol);
    const cplx c = sol.center(), D = sol.D();
    InterpolationData d1(sol, fam, 1.0), d0(sol, fam, 0.0);
    for (double x : {-0.05, 0.2, 0.5, 0.8, 1.05}) {
        const cplx z1 = d1.gamma(x);
        CHECK(std::abs(d1.Vt_prime(z1) - sol.dV(z1)) < 1e-8);
        CHECK(std::abs(d1.Vt(z1) - sol.V(z1)) < 1e-8);
        CHECK(std::abs(d0.W(x) - 8.0 * (x - 0.5)) < 1e-8);
        const cplx z0 = d0.gamma(x);
        CHECK(std::abs(d0.Vt(z0) - (4.0 / (D * D) * (z0 - c) * (z0 - c) + sol.V(c))) < 1e-8);
        CHECK(std::abs(d1.Rt(z1) - sol.S(z1) * sol.S(z1) * (z1 - sol.zeta1) * (z1 - sol.zeta2)) < 1e-9);
    }
    for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        InterpolationData d(sol, fam, t);
        for (double x : {-0.05, 0.3, 0.999999, 1.0, 1.05}) {
            const cplx z = d.gamma(x), s = d.St_at(x);
            CHECK(std::abs(d.Rt(z) - s * s * (z - sol.zeta1) * (z - sol.zeta2)) < 1e-9);
        }
        CHECK(std::abs(semicircle_pullback(d, 0.5) - 4.0 / PI) < 1e-10);
        CHECK_THROWS_AS(d.Rt(c + cplx(0.0, 3.0)), NumError);
    }
    // quadratic case, any t: R_t = 16 (z-zeta1)(z-zeta2)/D^2
    auto q = solve_one_cut(ComplexPolynomial({0.0, 0.0, 1.0}), -1.0, 1.0);
    auto fq = analytic_param(q);
    InterpolationData dq(q, fq, 0.4);
    const cplx z = 0.3;
    CHECK(std::abs(dq.Rt(z) - 16.0 * (z + 1.0) * (z - 1.0) / 4.0) < 1e-10);
}

TEST_CASE("pullback of V_t' is uniformly bounded in t") {
    auto sol = solve_one_cut_homotopy(quartic_V());
    auto fam = analytic_param(sol);
    auto sup = [&](double t) {
        InterpolationData d(sol, fam, t);
        double m = 0.0;
        for (int k = 0; k <= 40; ++k) m = std::max(m, std::abs(d.W(-0.05 + 1.1 * k / 40.0)));
        return m;
    };
    const double ends = std::max(sup(0.0), sup(1.0));
    for (int k = 1; k < 10; ++k) CHECK(sup(k / 10.0) <= 2.0 * ends);
}

TEST_CASE("effective potential on the t-interpolated curve is t-independent") {
    auto sol = solve_one_cut_homotopy(quartic_V());
    auto fam = analytic_param(sol);
    for (double t : {0.0, 0.5, 1.0}) {
        InterpolationData d(sol, fam, t);
        CHECK(std::abs(effective_potential(d, 0.0).real) < 1e-12);
        for (double x : {-0.08, -0.03, 1.04}) {
            const auto e = effective_potential(d, x);
            CHECK(e.real == doctest::Approx(effective_potential_param(x)).epsilon(1e-7));
            CHECK(e.real > 0.0);
            CHECK(std::abs(e.complex.real() - e.real) < 1e-8);
        }
        CHECK(std::abs(effective_potential(d, 0.4).real) < 1e-9);
        // on the support the complex potential is purely imaginary
        CHECK(std::abs(effective_potential(d, 0.4).complex.real()) < 1e-9);
    }
}

TEST_CASE("complex energy and entropy: Gaussian anchors and real-part consistency") {
    auto q = solve_one_cut(ComplexPolynomial({0.0, 0.0, 1.0}), -1.0, 1.0);
    InterpolationData dq(q, analytic_param(q), 1.0);
    CHECK(std::abs(complex_energy(dq) - (std::log(2.0) + 0.75)) < 1e-10);
    CHECK(std::abs(entropy(dq) - (-0.5 + std::log(PI))) < 1e-12);
    CHECK(std::abs(real_energy(dq) - (std::log(2.0) + 0.75)) < 1e-10);

    auto sol = solve_one_cut_homotopy(quartic_V());
    auto fam = analytic_param(sol);
    for (double t : {0.0, 0.5, 1.0}) {
        InterpolationData d(sol, fam, t);
        CHECK(std::real(complex_energy(d)) == doctest::Approx(real_energy(d)).epsilon(1e-6));
    }
    // t = 0: Gaussian closed forms with complex D
    InterpolationData d0(sol, fam, 0.0);
    const cplx I0 = -std::log(sol.D()) + std::log(4.0) + 2.0 * sol.V(sol.center()) + 0.75;
    CHECK(std::abs(complex_energy(d0) - I0) < 1e-10);
    CHECK(std::abs(log_density_integral(d0) - (0.5 - std::log(PI / 2.0) - std::log(sol.D()))) < 1e-12);
    // entropy via the chord substitution u = sin^2 theta on the t=1 curve
    InterpolationData d1(sol, fam, 1.0);
    const auto& gl = gl_unit(400);
    cplx s = 0.0;
    for (std::size_t k = 0; k < gl.size(); ++k) {
        const double th = 0.5 * PI * gl.nodes[k];
        const double x = std::sin(th) * std::sin(th);
        const cplx rho = 8.0 / PI * std::sqrt(x * (1 - x)) / d1.dgamma(x);
        // d nu = (8/pi) sqrt(x(1-x)) dx, dx = 2 sin cos dtheta
        s += gl.weights[k] * 0.5 * PI * std::log(rho) * 8.0 / PI * std::sqrt(x * (1 - x)) * 2.0 * std::sin(th) * std::cos(th);
    }
    CHECK(std::abs(s - log_density_integral(d1)) < 1e-6);
}

TEST_CASE("variational identity \\int V' f dmu = 1/2 \\iint (f(z)-f(w))/(z-w) dmu dmu") {
    auto sol = solve_one_cut_homotopy(quartic_V());
    auto fam = analytic_param(sol);
    for (double t : {0.0, 0.6, 1.0}) {
        InterpolationData d(sol, fam, t);
        CHECK(std::abs(fidentity_residual(d, [](cplx) { return cplx(1.0); }, [](cplx) { return cplx(0.0); })) < 1e-8);
        CHECK(std::abs(fidentity_residual(d, [](cplx z) { return z; }, [](cplx) { return cplx(1.0); })) < 1e-8);
        CHECK(std::abs(fidentity_residual(d, [](cplx z) { return z * z; }, [](cplx z) { return 2.0 * z; })) < 1e-8);
    }
}

TEST_CASE("time derivative of V_t vanishes for a quadratic potential") {
    auto q = solve_one_cut(ComplexPolynomial({0.0, 0.0, 1.0}), -1.0, 1.0);
    auto fq = analytic_param(q);
    CHECK(std::abs(dt_Vt(q, fq, 0.5, 0.2)) < 1e-9);
}
