#include "contourgas/equilibrium.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace cg {

namespace {

double central_binom(int a) {
    double c = 1.0;
    for (int i = 1; i <= a; ++i) c = c * (a + i) / i;
    return c;
}

// c_k and their partial derivatives in zeta1, zeta2
struct LaurentCoeffs {
    std::vector<cplx> c, d1, d2;
};

LaurentCoeffs laurent(cplx z1, cplx z2, int kmax) {
    LaurentCoeffs L;
    L.c.assign(kmax + 1, 0.0);
    L.d1.assign(kmax + 1, 0.0);
    L.d2.assign(kmax + 1, 0.0);
    for (int k = 0; k <= kmax; ++k) {
        const double s = std::pow(0.25, k);
        for (int a = 0; a <= k; ++a) {
            const int b = k - a;
            const double w = s * central_binom(a) * central_binom(b);
            L.c[k] += w * std::pow(z1, a) * std::pow(z2, b);
            if (a > 0) L.d1[k] += w * double(a) * std::pow(z1, a - 1) * std::pow(z2, b);
            if (b > 0) L.d2[k] += w * double(b) * std::pow(z1, a) * std::pow(z2, b - 1);
        }
    }
    return L;
}

const double kSemi = 8.0 / PI;

}  // namespace

cplx OneCutSolution::r_plus(cplx z) const {
    const cplx D = zeta2 - zeta1;
    const cplx u = (z - zeta1) / D;
    return I1 * D * std::sqrt(u) * std::sqrt(1.0 - u);
}

cplx OneCutSolution::r_far(cplx z) const {
    return z * std::sqrt(1.0 - zeta1 / z) * std::sqrt(1.0 - zeta2 / z);
}

EndpointResidual endpoint_conditions(const ComplexPolynomial& dV, cplx z1, cplx z2) {
    const int m = dV.degree();
    const auto L = laurent(z1, z2, m + 1);
    EndpointResidual r{0.0, -1.0};
    for (int k = 0; k <= m; ++k) {
        r.c0 += dV.coeffs[k] * L.c[k];
        r.c1 += dV.coeffs[k] * L.c[k + 1];
    }
    return r;
}

EndpointResidual endpoint_conditions_loop(const ComplexPolynomial& dV, cplx z1, cplx z2, int nodes) {
    OneCutSolution tmp;
    tmp.zeta1 = z1;
    tmp.zeta2 = z2;
    const double R = 2.0 * std::max(std::abs(z1), std::abs(z2)) + 1.0;
    const auto g = make_grid(GridKind::closed_loop_trapezoid, nodes);
    std::vector<cplx> a(nodes), b(nodes);
    for (int k = 0; k < nodes; ++k) {
        const cplx z = std::polar(R, g.nodes[k]);
        // dz/(2 pi i) = z dtheta / (2 pi)
        const cplx f = dV(z) / tmp.r_far(z) * z * g.weights[k] / (2.0 * PI);
        a[k] = f;
        b[k] = f * z;
    }
    return {pairwise_sum(a), pairwise_sum(b) - 1.0};
}

ComplexPolynomial s_polynomial(const ComplexPolynomial& dV, cplx z1, cplx z2) {
    const int m = dV.degree();
    if (m < 1) throw NumError("s_polynomial: V' must have degree >= 1");
    const auto L = laurent(z1, z2, m);
    std::vector<cplx> s(m, 0.0);
    for (int j = 0; j < m; ++j)
        for (int k = j + 1; k <= m; ++k) s[j] += dV.coeffs[k] * L.c[k - 1 - j];
    return ComplexPolynomial(s);
}

OneCutSolution solve_one_cut(const ComplexPolynomial& V, cplx seed1, cplx seed2) {
    OneCutSolution sol;
    sol.V = V;
    sol.dV = V.derivative();
    const auto& dV = sol.dV;
    if (dV.degree() < 1) throw NumError("solve_one_cut: V must have degree >= 2");
    const int m = dV.degree();
    cplx z1 = seed1, z2 = seed2;
    auto resid = [&](cplx a, cplx b) {
        const auto e = endpoint_conditions(dV, a, b);
        return std::max(std::abs(e.c0), std::abs(e.c1));
    };
    double r = resid(z1, z2);
    int it = 0;
    for (; it < 50 && r > 1e-14; ++it) {
        const auto L = laurent(z1, z2, m + 1);
        Eigen::Matrix2cd J;
        Eigen::Vector2cd F;
        J.setZero();
        F << 0.0, -1.0;
        for (int k = 0; k <= m; ++k) {
            F(0) += dV.coeffs[k] * L.c[k];
            F(1) += dV.coeffs[k] * L.c[k + 1];
            J(0, 0) += dV.coeffs[k] * L.d1[k];
            J(0, 1) += dV.coeffs[k] * L.d2[k];
            J(1, 0) += dV.coeffs[k] * L.d1[k + 1];
            J(1, 1) += dV.coeffs[k] * L.d2[k + 1];
        }
        Eigen::Vector2cd step = J.fullPivLu().solve(F);
        if (!step.allFinite()) throw NumError("solve_one_cut: singular Jacobian");
        double lam = 1.0;
        cplx n1 = z1 - step(0), n2 = z2 - step(1);
        double rn = resid(n1, n2);
        for (int h = 0; h < 40 && !(rn < r); ++h) {
            lam *= 0.5;
            n1 = z1 - lam * step(0);
            n2 = z2 - lam * step(1);
            rn = resid(n1, n2);
        }
        const double move = lam * step.norm();
        z1 = n1;
        z2 = n2;
        r = rn;
        if (move < 1e-15 * (1.0 + std::abs(z1) + std::abs(z2))) break;
    }
    if (r > 1e-12) throw NumError("solve_one_cut: Newton did not converge");
    sol.zeta1 = z1;
    sol.zeta2 = z2;
    sol.iterations = it;
    sol.laurent_residual = r;
    sol.S = s_polynomial(dV, z1, z2);
    sol.support_grid = make_grid(GridKind::gauss_chebyshev_sqrt, 64, 0.0, 1.0);
    const cplx D = sol.D();
    std::vector<cplx> mv(sol.support_grid.size());
    for (std::size_t k = 0; k < mv.size(); ++k)
        mv[k] = sol.support_grid.weights[k] * sol.S(z1 + D * sol.support_grid.nodes[k]) * D * D / PI;
    sol.mass_residual = std::abs(pairwise_sum(mv) - 1.0);
    return sol;
}

OneCutSolution solve_one_cut_homotopy(const ComplexPolynomial& V) {
    // V_s = (1-s) z^2 + s V, endpoints -1, 1 at s = 0
    cplx z1 = -1.0, z2 = 1.0;
    std::vector<cplx> quad = {0.0, 0.0, 1.0};
    const std::size_t n = std::max<std::size_t>(V.coeffs.size(), 3);
    for (int step = 1; step <= 8; ++step) {
        const double s = step / 8.0;
        std::vector<cplx> c(n, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            const cplx a = k < quad.size() ? quad[k] : cplx(0.0);
            const cplx b = k < V.coeffs.size() ? V.coeffs[k] : cplx(0.0);
            c[k] = (1.0 - s) * a + s * b;
        }
        const auto sol = solve_one_cut(ComplexPolynomial(c), z1, z2);
        z1 = sol.zeta1;
        z2 = sol.zeta2;
    }
    return solve_one_cut(V, z1, z2);
}

cplx density(const OneCutSolution& sol, cplx z) {
    if (z == sol.zeta1 || z == sol.zeta2) return 0.0;
    const cplx th = theta_plus_analytic(sol, z);
    if (std::abs(std::imag(th)) > 1e-8 || std::real(th) < 0.0 || std::real(th) > 1.0)
        throw NumError("density: point is not on the support arc");
    return sol.sqrtR_plus(z) / (I1 * PI);
}

double decomposition_residual(const OneCutSolution& sol, int nodes) {
    // sqrt(R) = V' - \int dmu(w)/(z-w) against S r on a circle enclosing the arc
    const double R = 2.0 * std::max(std::abs(sol.zeta1), std::abs(sol.zeta2)) + 0.5;
    const auto& g = sol.support_grid;
    const cplx D = sol.D();
    double worst = 0.0;
    for (int k = 0; k < nodes; ++k) {
        const cplx z = std::polar(R, 2.0 * PI * k / nodes);
        std::vector<cplx> v(g.size());
        for (std::size_t j = 0; j < g.size(); ++j) {
            const cplx w = sol.zeta1 + D * g.nodes[j];
            v[j] = g.weights[j] * sol.S(w) * D * D / PI / (z - w);
        }
        const cplx lhs = sol.dV(z) - pairwise_sum(v);
        worst = std::max(worst, std::abs(lhs - sol.S(z) * sol.r_far(z)) / std::max(1.0, std::abs(lhs)));
    }
    return worst;
}

// ------------------------------------------------------------------ potential theory

double semicircle_log_integral(double x) {
    const double R = 0.5, u = std::abs(x - 0.5);
    if (u <= R) return std::log(0.25) + 4.0 * u * u - 0.5;
    const double s = std::sqrt(u * u - R * R);
    return (u * u - u * s) / (R * R) + std::log((u + s) / 2.0) - 0.5;
}

double log_potential_on_curve(const CurveFamily& fam, double t, double x, int nq) {
    const auto g = make_grid(GridKind::gauss_chebyshev_sqrt, nq, 0.0, 1.0);
    std::vector<double> v(nq);
    for (int k = 0; k < nq; ++k) {
        const double y = g.nodes[k];
        const double dq = std::abs(fam.chord(t, x, y));
        v[k] = g.weights[k] * kSemi * std::log(dq);
    }
    return -semicircle_log_integral(x) - pairwise_sum(v);
}

double log_potential(const CurveFamily& fam, double t, cplx z, int nq) {
    const auto g = make_grid(GridKind::gauss_chebyshev_sqrt, nq, 0.0, 1.0);
    std::vector<double> v(nq);
    for (int k = 0; k < nq; ++k) v[k] = g.weights[k] * kSemi * std::log(std::abs(z - fam.gamma(t, g.nodes[k])));
    return -pairwise_sum(v);
}

FrostmanReport frostman_check(const OneCutSolution& sol, const CurveFamily& fam,
                              const std::vector<double>& x_off, const std::vector<cplx>& z_off) {
    FrostmanReport rep;
    auto phi = [&](cplx z) { return std::real(sol.V(z)); };
    rep.constant = phi(sol.zeta1) + log_potential_on_curve(fam, 1.0, 0.0);
    const auto g = make_grid(GridKind::gauss_legendre, 40, 0.02, 0.98);
    for (double x : g.nodes) {
        const double e = log_potential_on_curve(fam, 1.0, x) + phi(fam.gamma(1.0, x)) - rep.constant;
        rep.on_support_max = std::max(rep.on_support_max, std::abs(e));
    }
    // V'(z) - 2 p.v. \int dmu/(z-w) at interior nodes, via the parameter form
    InterpolationData data(sol, fam, 1.0);
    for (double x : g.nodes) {
        const cplx d = fam.dgamma(1.0, x);
        rep.euler_lagrange_max = std::max(
            rep.euler_lagrange_max, std::abs(sol.dV(fam.gamma(1.0, x)) * d - data.pullback_direct(x)) / std::abs(d));
    }
    rep.off_support_min = 1e300;
    for (double x : x_off)
        rep.off_support_min = std::min(
            rep.off_support_min, log_potential_on_curve(fam, 1.0, x) + phi(fam.gamma(1.0, x)) - rep.constant);
    for (cplx z : z_off)
        rep.off_support_min = std::min(rep.off_support_min, log_potential(fam, 1.0, z) + phi(z) - rep.constant);
    return rep;
}

// ------------------------------------------------------------------ interpolation data

InterpolationData::InterpolationData(const OneCutSolution& sol, const CurveFamily& fam, double t,
                                     int nq, int cheb)
    : sol_(sol), fam_(fam), t_(t), nq_(nq) {
    quad_ = make_grid(GridKind::gauss_chebyshev_sqrt, nq, 0.0, 1.0);
    const double lo = -fam.pad(), hi = 1.0 + fam.pad();
    W_ = ChebFun([this](double x) { return pullback_direct(x); }, cheb, lo, hi);
    const ChebFun P = W_.primitive();
    xc_ = fam_.inverse(t_, sol_.center());
    const cplx shift = sol_.V(sol_.center()) - P(xc_);
    auto c = P.coeffs();
    c[0] += shift;
    Vp_ = ChebFun::from_coeffs(c, lo, hi);
}

cplx InterpolationData::pullback_direct(cplx x) const {
    std::vector<cplx> v(quad_.size());
    for (std::size_t k = 0; k < quad_.size(); ++k) {
        const double y = quad_.nodes[k];
        // gamma'(x)/(gamma(y) - gamma(x)) - 1/(y - x) = -gamma[x,x,y] / gamma[x,y]
        v[k] = -quad_.weights[k] * fam_.chord2(t_, x, y) / fam_.chord(t_, x, y);
    }
    return 8.0 * (x - 0.5) - kSemi * pairwise_sum(v);
}

cplx InterpolationData::param(cplx z) const {
    const cplx x = inverse(z);
    const double p = fam_.pad();
    if (std::abs(std::imag(x)) > p || std::real(x) < -p || std::real(x) > 1.0 + p)
        throw NumError("interpolation data: point outside the analytic strip");
    return x;
}

cplx InterpolationData::Vt_prime(cplx z) const {
    const cplx x = param(z);
    return W_(x) / dgamma(x);
}

cplx InterpolationData::Vt(cplx z) const { return Vp_(param(z)); }

cplx InterpolationData::Rt(cplx z) const {
    const cplx x = param(z);
    const cplx d = dgamma(x);
    return 64.0 * x * (x - 1.0) / (d * d);
}

cplx InterpolationData::St_at(cplx x) const {
    const cplx z = gamma(x);
    const cplx z2 = sol_.zeta2;
    const cplx tx = t_ * x;
    const cplx zt = fam_.gamma(1.0, tx);
    // a = (1-x)/(zeta2 - z), b = (zeta2 - z_t)/(1 - t x), with 0/0 guards
    const cplx a = std::abs(1.0 - x) < 1e-6 ? 1.0 / dgamma(0.5 * (1.0 + x)) : (1.0 - x) / (z2 - z);
    const cplx b = std::abs(1.0 - tx) < 1e-6 ? fam_.dgamma(1.0, 0.5 * (1.0 + tx)) : (z2 - zt) / (1.0 - tx);
    const cplx qt = fam_.q()(t_);
    return sol_.S(zt) * qt * std::sqrt(qt) * std::sqrt(a * b);
}

cplx InterpolationData::St(cplx z) const { return St_at(param(z)); }

cplx dt_Vt(const OneCutSolution& sol, const CurveFamily& fam, double t, cplx z, double h) {
    auto V = [&](double s) { return InterpolationData(sol, fam, s).Vt(z); };
    if (t - h < 0.0) return (-3.0 * V(t) + 4.0 * V(t + h) - V(t + 2.0 * h)) / (2.0 * h);
    if (t + h > 1.0) return (3.0 * V(t) - 4.0 * V(t - h) + V(t - 2.0 * h)) / (2.0 * h);
    return (V(t + h) - V(t - h)) / (2.0 * h);
}

// ------------------------------------------------------------------ energies

double effective_potential_param(double x) {
    if (x >= 0.0 && x <= 1.0) return 0.0;
    const double d = x < 0.0 ? -x : x - 1.0;
    // y = -s^2 (or 1 + s^2): 8 \int_0^{sqrt d} 2 s^2 sqrt(1 + s^2) ds
    const double r = std::sqrt(d);
    const auto& g = gl_unit(40);
    double s = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        const double u = r * g.nodes[k];
        s += g.weights[k] * r * 2.0 * u * u * std::sqrt(1.0 + u * u);
    }
    return 8.0 * s;
}

PhiEff effective_potential(const InterpolationData& data, double x) {
    const auto& fam = data.family();
    const double t = data.t();
    PhiEff out;
    const double C = std::real(data.Vpull(0.0)) + log_potential_on_curve(fam, t, 0.0);
    out.real = std::real(data.Vpull(x)) + log_potential_on_curve(fam, t, x) - C;
    // complex version: V_t - \int Log(z - w) dmu, anchored at zeta1
    const auto g = make_grid(GridKind::gauss_chebyshev_sqrt, 256, 0.0, 1.0);
    std::vector<cplx> v(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) {
        const double y = g.nodes[k];
        const cplx qx = fam.chord(t, x, y);
        const cplx q0 = fam.chord(t, 0.0, y);
        v[k] = g.weights[k] * kSemi * (std::log(qx) - std::log(q0));
    }
    out.complex = data.Vpull(x) - data.Vpull(0.0) - pairwise_sum(v) -
                  (semicircle_log_integral(x) - semicircle_log_integral(0.0));
    return out;
}

cplx complex_energy(const InterpolationData& data, int nq) {
    const auto g = make_grid(GridKind::gauss_chebyshev_sqrt, nq, 0.0, 1.0);
    std::vector<cplx> gv(nq), dv(nq);
    for (int k = 0; k < nq; ++k) {
        gv[k] = data.gamma(g.nodes[k]);
        dv[k] = data.dgamma(g.nodes[k]);
    }
    std::vector<cplx> rows(nq), vt(nq);
    for (int i = 0; i < nq; ++i) {
        std::vector<cplx> row(nq);
        for (int j = 0; j < nq; ++j) {
            const cplx Q = (i == j) ? dv[i] : (gv[i] - gv[j]) / (g.nodes[i] - g.nodes[j]);
            if (std::abs(std::arg(Q)) > PI - 0.1)
                throw NumError("complex_energy: divided difference near the branch cut of Log");
            row[j] = g.weights[j] * kSemi * std::log(Q);
        }
        rows[i] = g.weights[i] * kSemi * pairwise_sum(row);
        vt[i] = g.weights[i] * kSemi * data.Vpull(g.nodes[i]);
    }
    return 0.25 + std::log(4.0) - pairwise_sum(rows) + 2.0 * pairwise_sum(vt);
}

cplx log_density_integral(const InterpolationData& data, int nq) {
    const auto g = make_grid(GridKind::gauss_chebyshev_sqrt, nq, 0.0, 1.0);
    std::vector<cplx> v(nq);
    for (int k = 0; k < nq; ++k) {
        const cplx d = data.dgamma(g.nodes[k]);
        if (std::abs(std::arg(d)) > PI - 0.1)
            throw NumError("log_density_integral: gamma' near the branch cut of Log");
        v[k] = g.weights[k] * kSemi * std::log(d);
    }
    return 0.5 - std::log(PI / 2.0) - pairwise_sum(v);
}

cplx entropy(const InterpolationData& data, int nq) { return -log_density_integral(data, nq); }

double real_energy(const InterpolationData& data) {
    // I = C + \int Re V dmu with C = Re V(zeta1) + U(zeta1)
    const auto& fam = data.family();
    const double C = std::real(data.Vpull(0.0)) + log_potential_on_curve(fam, data.t(), 0.0);
    const auto g = make_grid(GridKind::gauss_chebyshev_sqrt, 128, 0.0, 1.0);
    std::vector<double> v(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) v[k] = g.weights[k] * kSemi * std::real(data.Vpull(g.nodes[k]));
    return C + pairwise_sum(v);
}

cplx fidentity_residual(const InterpolationData& data, const std::function<cplx(cplx)>& f,
                        const std::function<cplx(cplx)>& df, int nq) {
    const auto g = make_grid(GridKind::gauss_chebyshev_sqrt, nq, 0.0, 1.0);
    std::vector<cplx> z(nq), fz(nq), lin(nq), rows(nq);
    for (int k = 0; k < nq; ++k) {
        z[k] = data.gamma(g.nodes[k]);
        fz[k] = f(z[k]);
        lin[k] = g.weights[k] * kSemi * data.W(g.nodes[k]) / data.dgamma(g.nodes[k]) * fz[k];
    }
    for (int i = 0; i < nq; ++i) {
        std::vector<cplx> row(nq);
        for (int j = 0; j < nq; ++j)
            row[j] = g.weights[j] * kSemi * ((i == j) ? df(z[i]) : (fz[i] - fz[j]) / (z[i] - z[j]));
        rows[i] = g.weights[i] * kSemi * pairwise_sum(row);
    }
    return pairwise_sum(lin) - 0.5 * pairwise_sum(rows);
}

cplx semicircle_pullback(const InterpolationData& data, double x) {
    const cplx z = data.gamma(x);
    return data.St_at(x) * data.solution().r_plus(z) * data.dgamma(x) / (I1 * PI);
}

double s_zero_clearance(const OneCutSolution& sol, const CurveFamily& fam) {
    if (sol.S.degree() < 1) return 1e300;
    const auto roots = poly_roots(sol.S);
    double best = 1e300;
    for (int i = 0; i <= 400; ++i) {
        const cplx z = fam.gamma(1.0, i / 400.0);
        for (const auto& r : roots) best = std::min(best, std::abs(z - r));
    }
    return best;
}

}  // namespace cg
