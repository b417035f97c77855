#include "contourgas/contour.hpp"

#include "contourgas/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

namespace cg {

namespace {

// \int_0^1 2 s^2 S(base + dd u s^2) sqrt(1 - u s^2) ds and its u-derivative
struct AInt {
    const ComplexPolynomial* S = nullptr;
    ComplexPolynomial dS;
    cplx base, dd;

    cplx value(cplx u) const {
        const auto& g = gl_unit(48);
        std::vector<cplx> v(g.size());
        for (std::size_t k = 0; k < g.size(); ++k) {
            const double s2 = g.nodes[k] * g.nodes[k];
            v[k] = g.weights[k] * 2.0 * s2 * (*S)(base + dd * u * s2) * std::sqrt(1.0 - u * s2);
        }
        return pairwise_sum(v);
    }
    cplx deriv(cplx u) const {
        const auto& g = gl_unit(48);
        std::vector<cplx> v(g.size());
        for (std::size_t k = 0; k < g.size(); ++k) {
            const double s2 = g.nodes[k] * g.nodes[k];
            const cplx w = base + dd * u * s2;
            const cplx r = std::sqrt(1.0 - u * s2);
            v[k] = g.weights[k] * 2.0 * s2 * (dS(w) * dd * s2 * r - (*S)(w) * s2 / (2.0 * r));
        }
        return pairwise_sum(v);
    }
};

cplx b_int(cplx x) {
    const auto& g = gl_unit(48);
    std::vector<cplx> v(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) {
        const double s2 = g.nodes[k] * g.nodes[k];
        v[k] = g.weights[k] * 2.0 * s2 * std::sqrt(1.0 - x * s2);
    }
    return pairwise_sum(v);
}

cplx pow32(cplx q) { return q * std::sqrt(q); }

// D^2 q^{3/2} A(x q) = 8 B(x), Newton with halving
cplx solve_chart(const AInt& A, cplx D2, double x, cplx q) {
    const cplx rhs = 8.0 * b_int(x);
    auto G = [&](cplx qq) { return D2 * pow32(qq) * A.value(x * qq) - rhs; };
    cplx g = G(q);
    for (int it = 0; it < 60; ++it) {
        const cplx sq = std::sqrt(q);
        const cplx dG = D2 * (1.5 * sq * A.value(x * q) + q * sq * x * A.deriv(x * q));
        cplx step = g / dG;
        cplx qn = q - step;
        cplx gn = G(qn);
        int halvings = 0;
        while (std::abs(gn) > std::abs(g) && halvings < 30) {
            step *= 0.5;
            qn = q - step;
            gn = G(qn);
            ++halvings;
        }
        q = qn;
        g = gn;
        if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(q))) return q;
    }
    if (std::abs(g) > 1e-11 * std::max(1.0, std::abs(rhs)))
        throw NumError("analytic_param: chart equation did not converge");
    return q;
}

// root of q^{3/2} = w nearest the positive axis
cplx chart_seed(cplx w) {
    const cplx w2 = w * w;
    cplx best;
    double barg = 1e9;
    for (int k = 0; k < 3; ++k) {
        const cplx c = std::polar(std::cbrt(std::abs(w2)), (std::arg(w2) + 2.0 * PI * k) / 3.0);
        if (std::abs(std::arg(c)) < barg) {
            barg = std::abs(std::arg(c));
            best = c;
        }
    }
    if (std::abs(pow32(best) - w) > 1e-10 * std::abs(w))
        throw NumError("analytic_param: endpoint seed on the wrong sheet");
    return best;
}

}  // namespace

Curve affine_curve(cplx z1, cplx z2, double a, double b) {
    Curve c;
    c.a = a;
    c.b = b;
    c.analytic_pad = 1e300;
    const cplx D = z2 - z1;
    c.eval = [z1, D](cplx x) { return z1 + D * x; };
    c.deriv1 = [D](cplx) { return D; };
    c.deriv2 = [](cplx) { return cplx(0.0); };
    return c;
}

double psi_plus(double x) {
    if (x < 0.0 || x > 1.0) throw NumError("psi_plus: argument outside [0,1]");
    const double th = std::asin(std::sqrt(x));
    return (2.0 * th - 0.5 * std::sin(4.0 * th)) / PI;
}

cplx psi_plus_analytic(cplx x) {
    if (std::real(x) <= 0.5) return (8.0 / PI) * pow32(x) * b_int(x);
    const cplx y = 1.0 - x;
    return 1.0 - (8.0 / PI) * pow32(y) * b_int(y);
}

cplx theta_plus_analytic(const OneCutSolution& sol, cplx z) {
    const cplx D = sol.D();
    const cplx u = (z - sol.zeta1) / D;
    AInt A;
    A.S = &sol.S;
    A.dS = sol.S.derivative();
    if (std::real(u) <= 0.5) {
        A.base = sol.zeta1;
        A.dd = D;
        return D * D / PI * pow32(u) * A.value(u);
    }
    const cplx v = 1.0 - u;
    A.base = sol.zeta2;
    A.dd = -D;
    return 1.0 - D * D / PI * pow32(v) * A.value(v);
}

double theta_plus(const OneCutSolution& sol, cplx z) {
    const cplx v = theta_plus_analytic(sol, z);
    if (std::abs(std::imag(v)) > 1e-8) throw NumError("theta_plus: point is not on the support");
    return std::real(v);
}

// ------------------------------------------------------------------ family

CurveFamily::CurveFamily(cplx z1, cplx z2, ChebFun q, double eps, double pad)
    : z1_(z1), z2_(z2), q_(std::move(q)), eps_(eps), pad_(pad) {
    dq_ = q_.derivative();
    d2q_ = dq_.derivative();
    d3q_ = d2q_.derivative();
}

CurveFamily CurveFamily::affine(cplx z1, cplx z2, double eps, double pad) {
    CurveFamily f(z1, z2, ChebFun::from_coeffs({cplx(1.0)}, -pad, 1.0 + pad), eps, pad);
    f.affine_ = true;
    return f;
}

cplx CurveFamily::gamma(double t, cplx x) const {
    if (affine_) return z1_ + (z2_ - z1_) * x;
    return z1_ + (z2_ - z1_) * x * q_(t * x) / q_(t);
}

// gamma_t = z1 + D p(x)/q(t), p(x) = x q(tx):
//   p[x,y]   = q(ty) + t x q[tx,ty],
//   p[x,x,y] = t q[tx,ty] + t^2 x q[tx,tx,ty]
cplx CurveFamily::chord(double t, cplx x, cplx y) const {
    if (affine_) return z2_ - z1_;
    return (z2_ - z1_) * (q_(t * y) + t * x * q_.divided_difference(t * x, t * y)) / q_(t);
}

cplx CurveFamily::chord2(double t, cplx x, cplx y) const {
    if (affine_) return 0.0;
    const cplx tx = t * x, ty = t * y;
    return (z2_ - z1_) * (t * q_.divided_difference(tx, ty) + t * t * x * q_.divided_difference2(tx, ty)) / q_(t);
}

cplx CurveFamily::dgamma(double t, cplx x) const {
    if (affine_) return z2_ - z1_;
    const cplx tx = t * x;
    return (z2_ - z1_) * (q_(tx) + tx * dq_(tx)) / q_(t);
}

cplx CurveFamily::d2gamma(double t, cplx x) const {
    if (affine_) return 0.0;
    const cplx tx = t * x;
    return (z2_ - z1_) * (2.0 * t * dq_(tx) + t * t * x * d2q_(tx)) / q_(t);
}

cplx CurveFamily::d3gamma(double t, cplx x) const {
    if (affine_) return 0.0;
    const cplx tx = t * x;
    return (z2_ - z1_) * (3.0 * t * t * d2q_(tx) + t * t * t * x * d3q_(tx)) / q_(t);
}

cplx CurveFamily::dt_gamma(double t, cplx x) const {
    if (affine_) return 0.0;
    const cplx tx = t * x, qt = q_(t);
    return (z2_ - z1_) * (x * x * dq_(tx) / qt - x * q_(tx) * dq_(t) / (qt * qt));
}

cplx CurveFamily::inverse(double t, cplx z) const {
    const cplx D = z2_ - z1_;
    cplx x = (z - z1_) / D;
    if (affine_) return x;
    for (int it = 0; it < 80; ++it) {
        const cplx step = (gamma(t, x) - z) / dgamma(t, x);
        x -= step;
        if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(x))) return x;
    }
    if (std::abs(gamma(t, x) - z) > 1e-11 * std::max(1.0, std::abs(z)))
        throw NumError("CurveFamily::inverse: Newton failed");
    return x;
}

Curve CurveFamily::at(double t) const {
    Curve c;
    c.a = -eps_;
    c.b = 1.0 + eps_;
    c.analytic_pad = pad_ - eps_;
    const CurveFamily self = *this;
    c.eval = [self, t](cplx x) { return self.gamma(t, x); };
    c.deriv1 = [self, t](cplx x) { return self.dgamma(t, x); };
    c.deriv2 = [self, t](cplx x) { return self.d2gamma(t, x); };
    return c;
}

CurveFamily analytic_param(const OneCutSolution& sol, double eps, int cheb_nodes) {
    const double pad = 2.0 * eps;
    const cplx D = sol.D(), D2 = D * D;
    AInt A1, A2;
    A1.S = A2.S = &sol.S;
    A1.dS = A2.dS = sol.S.derivative();
    A1.base = sol.zeta1;
    A1.dd = D;
    A2.base = sol.zeta2;
    A2.dd = -D;

    const auto xs = ChebFun::points(cheb_nodes, -pad, 1.0 + pad);  // descending
    std::vector<cplx> qv(xs.size());

    // chart at zeta1: march from x = 0 both ways
    const cplx q0 = solve_chart(A1, D2, 0.0, chart_seed(8.0 / (D2 * sol.S(sol.zeta1))));
    const cplx p0 = solve_chart(A2, D2, 0.0, chart_seed(8.0 / (D2 * sol.S(sol.zeta2))));
    {
        cplx up = q0, down = q0;
        std::vector<int> right, left;
        for (int j = 0; j < static_cast<int>(xs.size()); ++j) {
            if (xs[j] > 0.5) continue;
            (xs[j] >= 0.0 ? right : left).push_back(j);
        }
        // right: ascending x from 0 -> indices descending
        std::sort(right.begin(), right.end(), [&](int a, int b) { return xs[a] < xs[b]; });
        std::sort(left.begin(), left.end(), [&](int a, int b) { return xs[a] > xs[b]; });
        for (int j : right) qv[j] = up = solve_chart(A1, D2, xs[j], up);
        for (int j : left) qv[j] = down = solve_chart(A1, D2, xs[j], down);
    }
    // chart at zeta2 in y = 1 - x
    {
        cplx up = p0, down = p0;
        std::vector<int> right, left;
        for (int j = 0; j < static_cast<int>(xs.size()); ++j) {
            if (xs[j] <= 0.5) continue;
            (xs[j] <= 1.0 ? right : left).push_back(j);
        }
        std::sort(right.begin(), right.end(), [&](int a, int b) { return xs[a] > xs[b]; });
        std::sort(left.begin(), left.end(), [&](int a, int b) { return xs[a] < xs[b]; });
        for (int j : right) {
            const double y = 1.0 - xs[j];
            up = solve_chart(A2, D2, y, up);
            qv[j] = (1.0 - y * up) / xs[j];
        }
        for (int j : left) {
            const double y = 1.0 - xs[j];
            down = solve_chart(A2, D2, y, down);
            qv[j] = (1.0 - y * down) / xs[j];
        }
    }
    CurveFamily fam(sol.zeta1, sol.zeta2, ChebFun::from_values(qv, -pad, 1.0 + pad), eps, pad);

    // agreement of the two charts at x = 1/2
    const cplx qa = solve_chart(A1, D2, 0.5, fam.q()(0.5));
    const cplx pb = solve_chart(A2, D2, 0.5, (1.0 - 0.5 * fam.q()(0.5)) / 0.5);
    fam.chart_mismatch = std::abs(qa - (1.0 - 0.5 * pb) / 0.5);
    if (fam.chart_mismatch > 1e-8) throw NumError("analytic_param: endpoint charts disagree");
    if (fam.q().tail() > 1e-11) throw NumError("analytic_param: Chebyshev series not resolved");
    return fam;
}

BiLipschitz bilipschitz_check(const Curve& c, int grid) {
    BiLipschitz r;
    r.lower = 1e300;
    r.upper = 0.0;
    std::vector<double> xs(grid + 1);
    for (int i = 0; i <= grid; ++i) xs[i] = c.a + (c.b - c.a) * i / grid;
    for (int i = 0; i <= grid; ++i) {
        const double d = std::abs(c.deriv1(xs[i]));
        r.lower = std::min(r.lower, d);
        r.upper = std::max(r.upper, d);
        for (int j = i + 1; j <= grid; ++j) {
            const double q = std::abs(c.eval(xs[i]) - c.eval(xs[j])) / (xs[j] - xs[i]);
            r.lower = std::min(r.lower, q);
            r.upper = std::max(r.upper, q);
        }
    }
    return r;
}

void write_curve_csv(const Curve& c, const std::string& path, int n) {
    std::ofstream os(path);
    if (!os) throw NumError("cannot open " + path);
    os << "x,re,im,dre,dim\n" << std::setprecision(17);
    for (int i = 0; i < n; ++i) {
        const double x = c.a + (c.b - c.a) * i / (n - 1);
        const cplx z = c.eval(x), d = c.deriv1(x);
        os << x << ',' << z.real() << ',' << z.imag() << ',' << d.real() << ',' << d.imag() << '\n';
    }
}

}  // namespace cg
