/*
 * equilibrium.hpp -- one-cut equilibrium measures on contours.
 *
 * For a polynomial V the one-cut ansatz is
 *
 *     sqrt(R(z)) = S(z) [(z-zeta1)(z-zeta2)]^{1/2} = V'(z) - \int dmu(w)/(z-w),
 *
 * so with 1/r(z) = z^{-1} sum_k c_k z^{-k},
 *     c_k = 4^{-k} sum_{a+b=k} C(2a,a) C(2b,b) zeta1^a zeta2^b,
 * the endpoints solve the two Laurent conditions at infinity
 *
 *     [z^{-1}] V'/r = sum_m v_m c_m     = 0,
 *     [z^{-2}] V'/r = sum_m v_m c_{m+1} = 1,
 *
 * and S is the polynomial part of V'/r.  The density w.r.t. dz is
 * (1/i pi) sqrt(R)_+ ; pulled back by the analytic parametrisation it is the
 * semicircle (8/pi) sqrt(x(1-x)) on [0,1].
 *
 * Interpolating data (curve gamma_t, potential V_t) are represented in the
 * parameter x:
 *     W_t(x) = V_t'(gamma_t(x)) gamma_t'(x)
 *            = 8(x-1/2) - (8/pi) \int_0^1 sqrt(y(1-y)) [gamma_t'(x)/(gamma_t(y)-gamma_t(x)) - 1/(y-x)] dy,
 *     V_t(gamma_t(x)) = V(c) + \int_{x_c}^x W_t,   c = (zeta1+zeta2)/2,
 *     R_t(gamma_t(x)) = 64 x (x-1) / gamma_t'(x)^2,
 *     S_t(z) = S(z_t) q(t)^{3/2} sqrt((1-x)/(zeta2-z)) sqrt((zeta2-z_t)/(1-tx)),  z_t = gamma(tx).
 *
 * The complex energy and entropy are evaluated on the semicircle in x:
 *     I   = 1/4 + ln 4 - \iint Log Q dnu dnu + 2 \int V(gamma) dnu,   Q = (gamma(x)-gamma(y))/(x-y),
 *     \int ln(dmu/dz) dmu = 1/2 - ln(pi/2) - \int Log gamma' dnu.
 */
#pragma once

#include "contourgas/contour.hpp"
#include "contourgas/numkit.hpp"

#include <memory>
#include <string>
#include <vector>

namespace cg {

struct OneCutSolution {
    ComplexPolynomial V, dV, S;
    cplx zeta1{-1.0, 0.0}, zeta2{1.0, 0.0};
    WeightedGrid support_grid;  // sqrt-weight grid in the chord coordinate u in [0,1]
    double laurent_residual = 0.0;
    double mass_residual = 0.0;
    int iterations = 0;

    cplx D() const { return zeta2 - zeta1; }
    cplx center() const { return 0.5 * (zeta1 + zeta2); }
    cplx r_plus(cplx z) const;
    cplx sqrtR_plus(cplx z) const { return S(z) * r_plus(z); }
    // r with branch ~ z at infinity (valid for |z| > max |zeta|)
    cplx r_far(cplx z) const;
};

struct EndpointResidual {
    cplx c0, c1;  // [z^-1] and [z^-2]-1
};
EndpointResidual endpoint_conditions(const ComplexPolynomial& dV, cplx z1, cplx z2);
// same conditions computed as trapezoid loop integrals on a large circle
EndpointResidual endpoint_conditions_loop(const ComplexPolynomial& dV, cplx z1, cplx z2,
                                          int nodes = 256);
ComplexPolynomial s_polynomial(const ComplexPolynomial& dV, cplx z1, cplx z2);

OneCutSolution solve_one_cut(const ComplexPolynomial& V, cplx seed1, cplx seed2);
// homotopy from the quadratic z^2-type seed in 8 steps
OneCutSolution solve_one_cut_homotopy(const ComplexPolynomial& V);

// dmu/dz on the support arc (domain error off the arc, 0 at the endpoints)
cplx density(const OneCutSolution& sol, cplx z);
// max relative |V' - \int dmu/(z-w) - S r| on a circle enclosing the arc
double decomposition_residual(const OneCutSolution& sol, int nodes = 128);

// ----------------------------------------------------------------- potential theory
// U[mu](gamma(x)) = -\int ln|gamma(x)-gamma(y)| dnu(y) for real x in the strip
double log_potential_on_curve(const CurveFamily& fam, double t, double x, int nq = 256);
// U[mu](z) by direct quadrature (z away from the support)
double log_potential(const CurveFamily& fam, double t, cplx z, int nq = 512);
// closed form \int ln|x-y| dnu_sc(y) for real x
double semicircle_log_integral(double x);

struct FrostmanReport {
    double constant = 0.0;         // C (real part of the equilibrium constant)
    double on_support_max = 0.0;   // max |U + phi - C| on interior nodes
    double off_support_min = 0.0;  // min (U + phi - C) on the supplied points
    double euler_lagrange_max = 0.0;
};
// off-support points given as curve parameters x outside [0,1] and raw points z
FrostmanReport frostman_check(const OneCutSolution& sol, const CurveFamily& fam,
                              const std::vector<double>& x_off, const std::vector<cplx>& z_off);

// ----------------------------------------------------------------- interpolation data
class InterpolationData {
public:
    InterpolationData() = default;
    InterpolationData(const OneCutSolution& sol, const CurveFamily& fam, double t, int nq = 128,
                      int cheb = 96);

    double t() const { return t_; }
    const CurveFamily& family() const { return fam_; }
    const OneCutSolution& solution() const { return sol_; }

    cplx gamma(cplx x) const { return fam_.gamma(t_, x); }
    cplx dgamma(cplx x) const { return fam_.dgamma(t_, x); }
    cplx d2gamma(cplx x) const { return fam_.d2gamma(t_, x); }
    cplx inverse(cplx z) const { return fam_.inverse(t_, z); }

    // pullback W_t(x) = V_t'(gamma_t(x)) gamma_t'(x) (direct quadrature)
    cplx pullback_direct(cplx x) const;
    // Chebyshev representation of the same
    cplx W(cplx x) const { return W_(x); }
    cplx Vpull(cplx x) const { return Vp_(x); }  // V_t(gamma_t(x))

    cplx Vt_prime(cplx z) const;
    cplx Vt(cplx z) const;
    cplx Rt(cplx z) const;
    cplx St(cplx z) const;
    cplx St_at(cplx x) const;  // S_t(gamma_t(x)) from the parameter
    cplx x_center() const { return xc_; }
    // curve parameter of z (domain error outside the analytic strip)
    cplx param(cplx z) const;

private:
    OneCutSolution sol_;
    CurveFamily fam_;
    double t_ = 1.0;
    int nq_ = 128;
    ChebFun W_, Vp_;
    cplx xc_{0.5, 0.0};
    WeightedGrid quad_;
};

// d/dt V_t(z) at fixed z by central differences
cplx dt_Vt(const OneCutSolution& sol, const CurveFamily& fam, double t, cplx z, double h = 1e-4);

// ----------------------------------------------------------------- energies
struct PhiEff {
    double real = 0.0;
    cplx complex{0.0, 0.0};
};
// effective potential at a curve parameter x (real), relative to C
PhiEff effective_potential(const InterpolationData& data, double x);
// closed parameter form 8 \int_0^x sqrt(w) (w-1)^{1/2} dw (real part), for comparison
double effective_potential_param(double x);

cplx complex_energy(const InterpolationData& data, int nq = 128);
// \int ln(dmu/dz) dmu  (note: Ent = -this)
cplx log_density_integral(const InterpolationData& data, int nq = 128);
cplx entropy(const InterpolationData& data, int nq = 128);
// real energy \iint ln 1/|z-w| + 2 \int Re V  by an independent route (Frostman constant)
double real_energy(const InterpolationData& data);

// -1/2 \iint (f(z)-f(w))/(z-w) dmu dmu + \int V' f dmu, parameter quadrature
cplx fidentity_residual(const InterpolationData& data, const std::function<cplx(cplx)>& f,
                        const std::function<cplx(cplx)>& df, int nq = 96);

// density pullback (1/i pi) sqrt(R_t)_+ gamma_t' at x in (0,1)
cplx semicircle_pullback(const InterpolationData& data, double x);

// S_t zeros relative to the support: min distance of zeros of S to gamma([0,1])
double s_zero_clearance(const OneCutSolution& sol, const CurveFamily& fam);

}  // namespace cg
