/*
 * contour.hpp -- parametrised arcs and the interpolating family.
 *
 * With D = zeta2 - zeta1 and u = (z - zeta1)/D, the boundary value of
 * r(z) = [(z-zeta1)(z-zeta2)]^{1/2} on the + side of the support is
 *
 *     r_+(z) = i D sqrt(u) sqrt(1-u),
 *
 * so that
 *
 *     Theta_+(z) = (1/i pi) \int_{zeta1}^z S(w) r_+(w) dw
 *                = (D^2/pi) u^{3/2} A(u),   A(u) = \int_0^1 sqrt(s) S(zeta1 + D u s) sqrt(1-us) ds,
 *     Psi_+(x)   = (8/pi) x^{3/2} B(x),     B(x) = \int_0^1 sqrt(s) sqrt(1-xs) ds.
 *
 * The parametrisation gamma = Theta_+^{-1} o Psi_+ is written gamma(x) = zeta1 + D x q(x);
 * the 3/2 powers cancel and q solves the regular equation
 *
 *     D^2 q^{3/2} A(x q) = 8 B(x)                         (near x = 0)
 *
 * and, with gamma(x) = zeta2 - D y p(y), y = 1-x,
 *
 *     D^2 p^{3/2} A2(y p) = 8 B(y),  A2(v) = \int_0^1 sqrt(s) S(zeta2 - D v s) sqrt(1-vs) ds
 *                                                       (near x = 1).
 *
 * q is stored as a Chebyshev series on the padded interval [-pad, 1+pad].
 * The interpolating family is
 *
 *     gamma_t(x) = zeta1 + (gamma(tx) - zeta1) D / (gamma(t) - zeta1)
 *                = zeta1 + D x q(tx) / q(t),
 *
 * which is affine at t = 0 and equals gamma at t = 1 (q(1) = 1).
 */
#pragma once

#include "contourgas/numkit.hpp"

#include <functional>
#include <string>

namespace cg {

struct OneCutSolution;

struct Curve {
    double a = 0.0, b = 1.0;     // parameter domain
    double analytic_pad = 0.0;   // half-width of the strip where eval is valid
    std::function<cplx(cplx)> eval, deriv1, deriv2;
    cplx operator()(cplx x) const { return eval(x); }
};

Curve affine_curve(cplx z1, cplx z2, double a, double b);

// Psi_+ on [0,1] (domain error outside) and its continuation to the strip
double psi_plus(double x);
cplx psi_plus_analytic(cplx x);

// Theta_+ at a point of the support (domain error if the value is not real)
double theta_plus(const OneCutSolution& sol, cplx z);
cplx theta_plus_analytic(const OneCutSolution& sol, cplx z);

class CurveFamily {
public:
    CurveFamily() = default;
    CurveFamily(cplx z1, cplx z2, ChebFun q, double eps, double pad);
    static CurveFamily affine(cplx z1, cplx z2, double eps, double pad);

    cplx gamma(double t, cplx x) const;
    cplx dgamma(double t, cplx x) const;
    cplx d2gamma(double t, cplx x) const;
    cplx d3gamma(double t, cplx x) const;
    // (gamma_t(y) - gamma_t(x))/(y - x) and gamma_t[x,x,y], stable for y ~ x
    cplx chord(double t, cplx x, cplx y) const;
    cplx chord2(double t, cplx x, cplx y) const;
    // d/dt gamma_t(x)
    cplx dt_gamma(double t, cplx x) const;
    // solve gamma_t(x) = z by Newton (complex x allowed)
    cplx inverse(double t, cplx z) const;

    Curve at(double t) const;
    Curve base() const { return at(1.0); }

    cplx zeta1() const { return z1_; }
    cplx zeta2() const { return z2_; }
    double eps() const { return eps_; }
    double pad() const { return pad_; }
    const ChebFun& q() const { return q_; }
    bool is_affine() const { return affine_; }
    // agreement of the two endpoint charts at x = 1/2 (diagnostic)
    double chart_mismatch = 0.0;

private:
    cplx z1_{-1.0, 0.0}, z2_{1.0, 0.0};
    ChebFun q_, dq_, d2q_, d3q_;
    double eps_ = 0.05, pad_ = 0.1;
    bool affine_ = false;
};

// gamma = Theta_+^{-1} o Psi_+ on [-eps, 1+eps] with analytic pad 2 eps
CurveFamily analytic_param(const OneCutSolution& sol, double eps = 0.05, int cheb_nodes = 96);

struct BiLipschitz {
    double lower = 0.0;
    double upper = 0.0;
};
BiLipschitz bilipschitz_check(const Curve& c, int grid = 200);

// parameter, re, im, re', im'
void write_curve_csv(const Curve& c, const std::string& path, int n = 201);

}  // namespace cg
