#include "contourgas/partition.hpp"

#include <cmath>

namespace cg {

void require_even_beta(int beta) {
    if (beta <= 0 || beta % 2 != 0) throw InvalidBeta("beta must be a positive even integer");
}

// ------------------------------------------------------------ Selberg-Mehta

namespace {

cplx selberg_common(int N, int beta, cplx z1, cplx z2, cplx Vc, double factorial_part) {
    require_even_beta(beta);
    if (N < 1) throw NumError("selberg: N must be >= 1");
    const double b = beta, n = N;
    const double E = n * (1.0 - b / 2.0) + b * n * n / 2.0;
    return 0.5 * n * std::log(2.0 * PI) + E * std::log((z2 - z1) / std::sqrt(8.0 * n * b)) -
           b * n * n * Vc - n * std::lgamma(b / 2.0 + 1.0) + factorial_part;
}

}  // namespace

cplx selberg_log(int N, int beta, cplx zeta1, cplx zeta2, cplx V_center) {
    double f = 0.0;
    for (int j = 1; j <= N; ++j) f += std::lgamma(beta * j / 2.0 + 1.0);
    return selberg_common(N, beta, zeta1, zeta2, V_center, f);
}

cplx selberg_log_barnes(int N, int beta, cplx zeta1, cplx zeta2, cplx V_center) {
    require_even_beta(beta);
    // prod_{j=1}^N (beta j/2)! = prod_{j=1}^{n-1} (t j)!, n = N+1, t = beta/2
    return selberg_common(N, beta, zeta1, zeta2, V_center, factorial_product_reduce_log(beta / 2, N + 1));
}

double selberg_exact(int N, int beta, double zeta1, double zeta2, double V_center) {
    return std::exp(std::real(selberg_log(N, beta, zeta1, zeta2, V_center)));
}

double factorial_product_log(int t, int n) {
    double s = 0.0;
    for (int j = 1; j <= n - 1; ++j) s += std::lgamma(double(t) * j + 1.0);
    return s;
}

double factorial_product_reduce_log(int t, int n) {
    if (t < 1 || n < 1) throw NumError("factorial_product_reduce: t, n must be >= 1");
    const double tt = t;
    double s = -0.5 * n * (tt - 1.0) * std::log(tt);
    double sf = 0.0;  // sum_{j=1}^{tn-1} ln j!
    for (int j = 1; j <= t * n - 1; ++j) sf += std::lgamma(j + 1.0);
    s += sf / tt;
    for (int p = 1; p <= t - 1; ++p) {
        const double r = p / tt;
        s += (1.0 - r) * (std::lgamma(r) - std::lgamma(r + n));
    }
    return s;
}

double factorial_product_reduce(int t, int n) { return std::exp(factorial_product_reduce_log(t, n)); }

// ------------------------------------------------------------ expansion

FCoefficients f_coefficients(cplx energy, cplx log_density, int beta) {
    require_even_beta(beta);
    const double b = beta;
    FCoefficients F;
    F.F_m2 = -(b / 2.0) * energy;
    F.F_m1 = (b / 2.0 - 1.0) * (log_density + std::log(b / 2.0)) + (b / 2.0) * (std::log(2.0 * PI) - 1.0) -
             std::lgamma(b / 2.0);
    return F;
}

FCoefficients f_coefficients(const InterpolationData& data, int beta) {
    return f_coefficients(complex_energy(data), log_density_integral(data), beta);
}

cplx gaussian_energy(cplx zeta1, cplx zeta2, cplx V_center) {
    return -std::log(zeta2 - zeta1) + std::log(4.0) + 2.0 * V_center + 0.75;
}

cplx gaussian_log_density(cplx zeta1, cplx zeta2) {
    return 0.5 - std::log(PI / 2.0) - std::log(zeta2 - zeta1);
}

cplx predicted_lnZ(int N, int beta, const FCoefficients& F) {
    const double n = N, b = beta;
    return F.F_m2 * n * n + 0.5 * b * n * std::log(n) + F.F_m1 * n +
           (3.0 + b / 2.0 + 2.0 / b) / 12.0 * std::log(n);
}

ExpansionReport selberg_expansion(const std::vector<int>& Ns, int beta, cplx zeta1, cplx zeta2,
                                  cplx V_center) {
    require_even_beta(beta);
    ExpansionReport rep;
    rep.beta = beta;
    const auto F = f_coefficients(gaussian_energy(zeta1, zeta2, V_center), gaussian_log_density(zeta1, zeta2), beta);
    rep.F_m2 = F.F_m2;
    rep.F_m1 = F.F_m1;
    rep.logN_coefficient = (3.0 + beta / 2.0 + 2.0 / beta) / 12.0;
    rep.NlogN_coefficient = beta / 2.0;
    for (int N : Ns) {
        ExpansionRow row;
        row.N = N;
        row.lnZ_exact = selberg_log(N, beta, zeta1, zeta2, V_center);
        row.lnZ_pred = predicted_lnZ(N, beta, F);
        row.residual = row.lnZ_exact - row.lnZ_pred;
        rep.residual_table.push_back(row);
    }
    return rep;
}

// ------------------------------------------------------------ tensor quadrature

Curve truncated_line(cplx zeta1, cplx zeta2, int N, int beta) {
    const double s = 1.0 / std::sqrt(8.0 * N * beta);
    return affine_curve(zeta1, zeta2, -6.0 * s, 1.0 + 6.0 * s);
}

namespace {

// sum over strictly increasing index tuples of prod pair * prod w
cplx ordered_sum(int N, const std::vector<cplx>& w, const std::vector<cplx>& P) {
    const int M = static_cast<int>(w.size());
    std::vector<cplx> outer(M, 0.0);
    parallel_for(static_cast<std::size_t>(M), [&](std::size_t i0) {
        std::vector<int> idx(N);
        idx[0] = static_cast<int>(i0);
        std::vector<cplx> acc;
        // depth-first enumeration with partial products
        std::function<void(int, cplx)> rec = [&](int level, cplx part) {
            if (level == N) {
                acc.push_back(part);
                return;
            }
            for (int j = idx[level - 1] + 1; j < M; ++j) {
                cplx v = part * w[j];
                for (int l = 0; l < level; ++l) v *= P[static_cast<std::size_t>(idx[l]) * M + j];
                idx[level] = j;
                rec(level + 1, v);
            }
        };
        rec(1, w[i0]);
        outer[i0] = pairwise_sum(acc);
    });
    return pairwise_sum(outer);
}

QuadratureResult tensor_partition(int N, int beta, const std::function<cplx(cplx)>& V, const Curve& curve,
                                  double tol, int M0, bool real_model) {
    require_even_beta(beta);
    if (N < 1 || N > 5) throw NumError("tensor quadrature: 1 <= N <= 5");
    const int Mmax = (N <= 2) ? 512 : (N == 3 ? 192 : 96);
    auto run = [&](int M) {
        const auto g = make_grid(GridKind::gauss_legendre, M, curve.a, curve.b);
        std::vector<cplx> lw(M), z(M);
        double shift = -1e300;
        for (int k = 0; k < M; ++k) {
            z[k] = curve.eval(g.nodes[k]);
            const cplx d = curve.deriv1(g.nodes[k]);
            const cplx v = V(z[k]);
            lw[k] = real_model ? cplx(-double(N) * beta * std::real(v) + std::log(std::abs(d)), 0.0)
                               : -double(N) * beta * v + std::log(d);
            lw[k] += std::log(g.weights[k]);
            shift = std::max(shift, std::real(lw[k]));
        }
        std::vector<cplx> w(M), P(static_cast<std::size_t>(M) * M);
        for (int k = 0; k < M; ++k) w[k] = std::exp(lw[k] - shift);
        for (int i = 0; i < M; ++i)
            for (int j = 0; j < M; ++j) {
                const cplx d = z[i] - z[j];
                P[static_cast<std::size_t>(i) * M + j] =
                    real_model ? cplx(std::pow(std::abs(d), beta), 0.0) : std::pow(d, beta);
            }
        // symmetric integrand vanishing on diagonals: N! x ordered sum
        const cplx s = ordered_sum(N, w, P) * std::exp(std::lgamma(N + 1.0));
        return cplx(N * shift, 0.0) + std::log(s);
    };
    int M = M0;
    cplx a = run(M);
    for (;;) {
        const cplx b = run(2 * M);
        const double err = std::abs(std::exp(b - a) - 1.0);
        if (err <= tol) return {b, err, 2 * M};
        if (2 * M >= Mmax) throw NumError("tensor quadrature: Richardson estimate above tolerance, refine");
        M *= 2;
        a = b;
    }
}

}  // namespace

QuadratureResult z_complex_quadrature(int N, int beta, const std::function<cplx(cplx)>& V, const Curve& curve,
                                      double tol, int M0) {
    return tensor_partition(N, beta, V, curve, tol, M0, false);
}

QuadratureResult z_real_quadrature(int N, int beta, const std::function<cplx(cplx)>& V, const Curve& curve,
                                   double tol, int M0) {
    return tensor_partition(N, beta, V, curve, tol, M0, true);
}

cplx tensor_sum(int N, const std::vector<double>& x, const std::vector<cplx>& w,
                const std::function<cplx(double, double)>& pair) {
    const int M = static_cast<int>(x.size());
    std::vector<cplx> P(static_cast<std::size_t>(M) * M);
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j) P[static_cast<std::size_t>(i) * M + j] = pair(x[i], x[j]);
    // full (unordered) tensor sum
    std::vector<cplx> acc;
    std::vector<int> idx(N, 0);
    std::function<void(int, cplx)> rec = [&](int level, cplx part) {
        if (level == N) {
            acc.push_back(part);
            return;
        }
        for (int j = 0; j < M; ++j) {
            cplx v = part * w[j];
            for (int l = 0; l < level; ++l) v *= P[static_cast<std::size_t>(idx[l]) * M + j];
            idx[level] = j;
            rec(level + 1, v);
        }
    };
    rec(0, 1.0);
    return pairwise_sum(acc);
}

// ------------------------------------------------------------ t-interpolation

DtLnZ dt_lnZ(const OneCutSolution& sol, const CurveFamily& fam, double t, int N, int beta, double h) {
    require_even_beta(beta);
    const InterpolationData data(sol, fam, t);
    double t0 = t - h, t1 = t + h;
    if (t0 < 0.0) t0 = 0.0, t1 = 2.0 * h;
    if (t1 > 1.0) t1 = 1.0, t0 = 1.0 - 2.0 * h;
    const InterpolationData lo(sol, fam, t0), mid(sol, fam, 0.5 * (t0 + t1)), hi(sol, fam, t1);
    const bool central = (t0 == t - h);
    // second order at the ends: derivative of the quadratic through t0, mid, t1
    auto dtV = [&, central](cplx z) {
        if (central) return (hi.Vt(z) - lo.Vt(z)) / (2.0 * h);
        const double s = (t - t0) / h - 1.0;  // position in units of h around mid
        return ((s - 0.5) * lo.Vt(z) - 2.0 * s * mid.Vt(z) + (s + 0.5) * hi.Vt(z)) / h;
    };
    DtLnZ out;
    const auto g = make_grid(GridKind::gauss_chebyshev_sqrt, 128, 0.0, 1.0);
    std::vector<cplx> v(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) v[k] = (8.0 / PI) * g.weights[k] * dtV(data.gamma(g.nodes[k]));
    out.mu_dtV = pairwise_sum(v);
    out.expansion = one_stat_expansion(data, dtV, beta);
    const double Nd = N;
    out.value = -double(beta) * Nd * Nd * (out.mu_dtV + out.expansion.c1 / Nd + out.expansion.c2 / (Nd * Nd));
    return out;
}

cplx interpolate_lnZ(const OneCutSolution& sol, const CurveFamily& fam, int N, int beta, int nodes) {
    const auto g = make_grid(GridKind::gauss_legendre, nodes, 0.0, 1.0);
    std::vector<cplx> v(g.size());
    parallel_for(g.size(), [&](std::size_t k) { v[k] = g.weights[k] * dt_lnZ(sol, fam, g.nodes[k], N, beta).value; });
    return pairwise_sum(v);
}

}  // namespace cg
