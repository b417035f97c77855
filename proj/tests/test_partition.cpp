// Partition functions: Selberg-Mehta closed form, Barnes reduction, large-N
// expansion and tensor quadrature of both models.
#include "doctest.h"

#include "contourgas/partition.hpp"

#include <cmath>

using namespace cg;

namespace {
cplx Vsq(cplx z) { return z * z; }
const cplx kG = 0.15 * std::polar(1.0, PI / 4.0);

// independent 1D oracle: \int e^{-beta z^2} dz by adaptive Simpson on [-12, 12]
double gauss_oracle(double b) {
    const int n = 20000;
    const double a = -12.0, h = 24.0 / n;
    double s = 0.0;
    for (int k = 0; k <= n; ++k) {
        const double x = a + k * h;
        const double w = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
        s += w * std::exp(-b * x * x);
    }
    return s * h / 3.0;
}
}  // namespace

TEST_CASE("Selberg-Mehta anchors") {
    CHECK(selberg_exact(1, 2, -1.0, 1.0, 0.0) == doctest::Approx(std::sqrt(PI / 2.0)).epsilon(1e-13));
    CHECK(selberg_exact(2, 2, -1.0, 1.0, 0.0) == doctest::Approx(PI / 16.0).epsilon(1e-13));
    for (int b : {2, 4, 6, 8}) CHECK(selberg_exact(1, b, -1.0, 1.0, 0.0) == doctest::Approx(gauss_oracle(b)).epsilon(1e-10));
    CHECK_THROWS_AS(selberg_log(2, 3, -1.0, 1.0, 0.0), InvalidBeta);
    CHECK_THROWS_AS(selberg_log(2, 0, -1.0, 1.0, 0.0), InvalidBeta);
    // V(c) shifts ln Z by -beta N^2 V(c)
    CHECK(std::abs(selberg_log(3, 4, -1.0, 1.0, 0.5) - selberg_log(3, 4, -1.0, 1.0, 0.0) + 4.0 * 9.0 * 0.5) < 1e-12);
    // large N stays finite in log space
    CHECK(std::isfinite(std::real(selberg_log(4096, 6, -1.0, 1.0, 0.0))));
}

TEST_CASE("Barnes reduction of factorial products") {
    CHECK(factorial_product_reduce(2, 2) == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(factorial_product_reduce(3, 3) == doctest::Approx(4320.0).epsilon(1e-9));
    for (int n = 1; n <= 12; ++n) CHECK(factorial_product_reduce_log(1, n) == doctest::Approx(factorial_product_log(1, n)).epsilon(1e-12));
    for (int t : {2, 3, 4}) for (int n : {2, 5, 40})
        CHECK(factorial_product_reduce_log(t, n) == doctest::Approx(factorial_product_log(t, n)).epsilon(1e-11));
    for (int N : {1, 7, 50})
        CHECK(std::abs(selberg_log_barnes(N, 4, -1.0, 1.0, 0.0) - selberg_log(N, 4, -1.0, 1.0, 0.0)) < 1e-9 * N * N);
}

TEST_CASE("large-N expansion of the Gaussian partition function") {
    auto rep = selberg_expansion({8, 16, 32, 64, 128}, 2, -1.0, 1.0, 0.0);
    CHECK(std::abs(rep.F_m2 + (std::log(2.0) + 0.75)) < 1e-12);
    CHECK(std::abs(rep.F_m1 - (std::log(2.0 * PI) - 1.0)) < 1e-12);
    CHECK(rep.logN_coefficient == doctest::Approx((3.0 + 1.0 + 1.0) / 12.0));
    CHECK(rep.NlogN_coefficient == 1.0);
    // residuals decrease towards F_0 with O(1/N) increments
    const auto& tb = rep.residual_table;
    for (std::size_t k = 1; k < tb.size(); ++k) CHECK(std::abs(tb[k].residual) < std::abs(tb[k - 1].residual));
    for (std::size_t k = 2; k < tb.size(); ++k) {
        const double d1 = std::abs(tb[k].residual - tb[k - 1].residual);
        const double d0 = std::abs(tb[k - 1].residual - tb[k - 2].residual);
        CHECK(d1 <= d0 / 1.8);
    }
    for (int b : {4, 6}) {
        auto r = selberg_expansion({16, 32, 64, 128}, b, -1.0, 1.0, 0.0);
        const auto& t = r.residual_table;
        for (std::size_t k = 2; k < t.size(); ++k)
            CHECK(std::abs(t[k].residual - t[k - 1].residual) <= 0.6 * std::abs(t[k - 1].residual - t[k - 2].residual));
    }
    // complex endpoints: expansion still matches to O(1/N)
    const cplx z1 = -std::polar(1.2, 0.3), z2 = std::polar(1.2, 0.3);
    auto rc = selberg_expansion({32, 64, 128}, 4, z1, z2, cplx(0.1, 0.2));
    const auto& tc = rc.residual_table;
    CHECK(std::abs(tc[2].residual - tc[1].residual) <= 0.6 * std::abs(tc[1].residual - tc[0].residual));
}

TEST_CASE("F coefficients from the equilibrium module agree with the Gaussian closed forms") {
    auto q = solve_one_cut(ComplexPolynomial({0.0, 0.0, 1.0}), -1.0, 1.0);
    InterpolationData d(q, analytic_param(q), 1.0);
    for (int b : {2, 4}) {
        auto F = f_coefficients(d, b);
        auto rep = selberg_expansion({8}, b, -1.0, 1.0, 0.0);
        CHECK(std::abs(F.F_m2 - rep.F_m2) < 1e-8);
        CHECK(std::abs(F.F_m1 - rep.F_m1) < 1e-8);
    }
    // beta = 2: F_{-1} does not see the entropy
    auto a = f_coefficients(1.0, 0.3, 2), b = f_coefficients(1.0, -4.0, 2);
    CHECK(std::abs(a.F_m1 - b.F_m1) == 0.0);
    // quartic: F_{-2} = -(beta/2) I with I from an independent real double quadrature (real part)
    auto sol = solve_one_cut_homotopy(ComplexPolynomial({0.0, 0.0, 1.0, 0.0, kG}));
    InterpolationData d1(sol, analytic_param(sol), 1.0);
    auto F = f_coefficients(d1, 4);
    CHECK(std::real(F.F_m2) == doctest::Approx(-2.0 * real_energy(d1)).epsilon(1e-6));
}

TEST_CASE("tensor quadrature reproduces Selberg for N <= 3, beta in {2, 4}") {
    for (int b : {2, 4})
        for (int N : {1, 2, 3}) {
            auto r = z_complex_quadrature(N, b, Vsq, truncated_line(-1.0, 1.0, N, b), 1e-9);
            const cplx s = selberg_log(N, b, -1.0, 1.0, 0.0);
            CHECK(std::abs(std::exp(r.log_value - s) - 1.0) < 1e-8);
            CHECK(r.rel_error < 1e-9);
        }
    // complex endpoints: V0 with rotated D along its own chord
    const cplx z1 = -std::polar(1.0, 0.4), z2 = std::polar(1.0, 0.4), Vc(0.2, -0.1);
    auto V0 = [&](cplx z) { return 4.0 / ((z2 - z1) * (z2 - z1)) * z * z + Vc; };
    for (int N : {1, 2, 3}) {
        auto r = z_complex_quadrature(N, 2, V0, truncated_line(z1, z2, N, 2), 1e-9);
        const cplx s = selberg_log(N, 2, z1, z2, Vc);
        CHECK(std::abs(std::exp(r.log_value - s) - 1.0) < 1e-8);
    }
}

TEST_CASE("contour-deformation invariance and the triangle bound") {
    // N = 1, V = z^2 on e^{i pi/8} R equals the real-line value
    const cplx rot = std::polar(1.0, PI / 8.0);
    auto line = affine_curve(-6.0 * rot, 6.0 * rot, 0.0, 1.0);
    auto r = z_complex_quadrature(1, 2, Vsq, line, 1e-10);
    CHECK(std::abs(r.value() - std::sqrt(PI / 2.0)) < 1e-6);
    auto rr = z_real_quadrature(1, 2, Vsq, line, 1e-10);
    CHECK(std::abs(r.value()) <= rr.value().real());
    // N = 2 on the real line: |Z| = Z_real
    auto real_line = truncated_line(-1.0, 1.0, 2, 2);
    auto a = z_complex_quadrature(2, 2, Vsq, real_line), b = z_real_quadrature(2, 2, Vsq, real_line);
    CHECK(std::abs(a.value()) == doctest::Approx(b.value().real()).epsilon(1e-12));
    // curved t = 1 contour of the quartic: 0 < |Z/Z_real| <= 1
    auto sol = solve_one_cut_homotopy(ComplexPolynomial({0.0, 0.0, 1.0, 0.0, kG}));
    auto fam = analytic_param(sol);
    auto V = [&](cplx z) { return sol.V(z); };
    for (int N : {1, 2, 3}) {
        auto c = z_complex_quadrature(N, 2, V, fam.at(1.0), 1e-8);
        auto re = z_real_quadrature(N, 2, V, fam.at(1.0), 1e-8);
        const double ratio = std::abs(c.value()) / re.value().real();
        CHECK(ratio > 0.0);
        CHECK(ratio <= 1.0 + 1e-12);
    }
}

TEST_CASE("refine error when the tolerance cannot be met") {
    CHECK_THROWS_AS(z_complex_quadrature(3, 2, Vsq, truncated_line(-1.0, 1.0, 3, 2), 1e-30, 8), NumError);
}

TEST_CASE("N = 2 phase ratio against the Fredholm expectation") {
    auto sol = solve_one_cut_homotopy(ComplexPolynomial({0.0, 0.0, 1.0, 0.0, kG}));
    auto fam = analytic_param(sol);
    auto V = [&](cplx z) { return sol.V(z); };
    auto c = z_complex_quadrature(2, 2, V, fam.at(1.0), 1e-8);
    auto re = z_real_quadrature(2, 2, V, fam.at(1.0), 1e-8);
    const double ratio = std::abs(c.value()) / re.value().real();
    const InterpolationData data(sol, fam, 1.0);
    const auto fr = fredholm_expectation(fourier_kernels(data, phase_kernels(data), 2), 2);
    CHECK(std::abs(ratio - std::abs(fr.value)) < 0.15 * std::abs(fr.value));
}

// ------------------------------------------------------------ t-interpolation

TEST_CASE("dt lnZ: quadratic potential does not move") {
    auto sol = solve_one_cut(ComplexPolynomial({0.0, 0.0, 1.0}), -1.0, 1.0);
    auto fam = analytic_param(sol);
    for (double t : {0.0, 0.5, 1.0}) CHECK(std::abs(dt_lnZ(sol, fam, t, 10, 4).value) < 1e-6);
}

TEST_CASE("dt lnZ: energy and entropy derivative identities") {
    auto sol = solve_one_cut_homotopy(ComplexPolynomial({0.0, 0.0, 1.0, 0.0, kG}));
    auto fam = analytic_param(sol);
    const int beta = 4;
    const double c = 1.0 / beta - 0.5;
    for (double t : {0.0, 0.3, 0.6, 1.0}) {
        const auto d = dt_lnZ(sol, fam, t, 10, beta);
        const double k = 1e-3;
        const double a = std::max(0.0, t - k), b = std::min(1.0, t + k);
        const InterpolationData da(sol, fam, a), db(sol, fam, b);
        // central (or half-step one-sided) differences, O(k^2) either way at the interior points
        if (a == t - k && b == t + k) {
            const cplx dI = (complex_energy(db) - complex_energy(da)) / (b - a);
            CHECK(std::abs(d.mu_dtV - 0.5 * dI) < 1e-6);
            // entropy() is -\int ln(dmu/dz) dmu
            const cplx dent = -(entropy(db) - entropy(da)) / (b - a);
            CHECK(std::abs(d.expansion.T1 - c * dent) < 1e-5);
        } else {
            const InterpolationData dm(sol, fam, 0.5 * (a + b));
            const double s = (t == 0.0) ? -1.0 : 1.0;
            const double hh = 0.5 * (b - a);
            auto deriv = [&](auto F) { return ((s - 0.5) * F(da) - 2.0 * s * F(dm) + (s + 0.5) * F(db)) / hh; };
            auto E = [](const InterpolationData& x) { return complex_energy(x); };
            auto S = [](const InterpolationData& x) { return -entropy(x); };
            CHECK(std::abs(d.mu_dtV - 0.5 * deriv(E)) < 1e-6);
            CHECK(std::abs(d.expansion.T1 - c * deriv(S)) < 1e-5);
        }
    }
}

TEST_CASE("dt lnZ: t-integral reproduces the F_{-2}, F_{-1} differences") {
    auto sol = solve_one_cut_homotopy(ComplexPolynomial({0.0, 0.0, 1.0, 0.0, kG}));
    auto fam = analytic_param(sol);
    for (int beta : {2, 4}) {
        const cplx P1 = interpolate_lnZ(sol, fam, 1, beta), P2 = interpolate_lnZ(sol, fam, 2, beta),
                   P3 = interpolate_lnZ(sol, fam, 3, beta);
        // P(N) = a N^2 + b N + c exactly
        const cplx a = 0.5 * (P3 - 2.0 * P2 + P1);
        const cplx b = P2 - P1 - 3.0 * a;
        const auto F1 = f_coefficients(InterpolationData(sol, fam, 1.0), beta);
        const auto F0 = f_coefficients(InterpolationData(sol, fam, 0.0), beta);
        CHECK(std::abs(a - (F1.F_m2 - F0.F_m2)) < 1e-6);
        CHECK(std::abs(b - (F1.F_m1 - F0.F_m1)) < 1e-5);
    }
}
