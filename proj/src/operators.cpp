#include "contourgas/operators.hpp"

#include <cmath>

namespace cg {

namespace {
const double kSemi = 8.0 / PI;
}

OperatorGrid OperatorGrid::make(int n) {
    OperatorGrid g;
    g.x2 = make_grid(GridKind::gauss_chebyshev_sqrt, n, 0.0, 1.0);
    const int m = (n % 2 == 0) ? n : n + 1;
    g.s1 = make_grid(GridKind::inverse_sqrt, m, 0.0, 1.0);
    g.lam = barycentric_weights(g.x2);
    g.E.resize(m, n);
    for (int k = 0; k < m; ++k) {
        const auto row = barycentric_row(g.x2.nodes, g.lam, g.s1.nodes[k]);
        for (int j = 0; j < n; ++j) g.E(k, j) = row[j];
    }
    const auto D = diff_matrix(g.x2.nodes, g.lam);
    g.D.resize(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g.D(i, j) = D[static_cast<std::size_t>(i) * n + j];
    g.nu.resize(n);
    for (int j = 0; j < n; ++j) g.nu(j) = kSemi * g.x2.weights[j];
    return g;
}

Eigen::VectorXcd OperatorGrid::sample(const std::function<cplx(double)>& f) const {
    Eigen::VectorXcd v(n());
    for (int i = 0; i < n(); ++i) v(i) = f(x2.nodes[i]);
    return v;
}

cplx OperatorGrid::interpolate(const Eigen::VectorXcd& f, cplx x) const {
    std::vector<cplx> fv(f.data(), f.data() + f.size());
    return barycentric_eval(x2.nodes, lam, fv, x);
}

// ------------------------------------------------------------ real master operator

// gamma'(y)/(gamma(x) - gamma(y)) - 1/(x - y) = -gamma[y,y,x] / gamma[y,x]
double real_tau(const InterpolationData& data, double x, double y) {
    const auto& fam = data.family();
    return std::real(-fam.chord2(data.t(), y, x) / fam.chord(data.t(), y, x));
}

Eigen::MatrixXd airfoil_inverse(const OperatorGrid& grid) {
    const int n = grid.n(), m = grid.m();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        const double x = grid.x2.nodes[i];
        double diag = 0.0;
        for (int k = 0; k < m; ++k) {
            const double c = 1.0 / (8.0 * m * (grid.s1.nodes[k] - x));
            A.row(i) += c * grid.E.row(k);
            diag -= c;
        }
        A(i, i) += diag;
    }
    return A;
}

Eigen::MatrixXd airfoil_forward(const OperatorGrid& grid) {
    const int n = grid.n();
    Eigen::MatrixXd F = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        const double x = grid.x2.nodes[i];
        F(i, i) += 8.0 * (x - 0.5);
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double c = grid.nu(j) / (x - grid.x2.nodes[j]);
            F(i, i) -= c;
            F(i, j) += c;
        }
        F.row(i) -= grid.nu(i) * grid.D.row(i);
    }
    return F;
}

double airfoil_residual(int n, int kmax) {
    const auto grid = OperatorGrid::make(n);
    const auto F = airfoil_forward(grid);
    double worst = 0.0;
    for (int k = 1; k <= kmax; ++k) {
        Eigen::VectorXd u(n), t(n);
        for (int i = 0; i < n; ++i) {
            const double th = std::acos(2.0 * grid.x2.nodes[i] - 1.0);
            u(i) = std::sin(k * th) / std::sin(th);
            t(i) = std::cos(k * th);
        }
        worst = std::max(worst, (F * u - 4.0 * t).cwiseAbs().maxCoeff());
    }
    return worst;
}

DiscretizedOperator real_master(const InterpolationData& data, int n) {
    DiscretizedOperator op;
    op.is_real = true;
    op.grid = OperatorGrid::make(n);
    const auto& g = op.grid;
    const auto& x = g.x2.nodes;
    // Xi = Delta_J + T; T is smooth, Delta_J carries the singular part exactly
    Eigen::MatrixXd T(n, n);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t ii) {
        const int i = static_cast<int>(ii);
        for (int j = 0; j < n; ++j) T(i, j) = g.nu(j) * real_tau(data, x[i], x[j]);
    });
    const Eigen::MatrixXd F = airfoil_forward(g) + T;

    const Eigen::MatrixXd Ainv = airfoil_inverse(g);
    const Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n, n) + Ainv * T;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
    op.resolvent_det = std::abs(lu.determinant());
    if (!(op.resolvent_det > 1e-12)) throw NumError("real_master: near-singular resolvent");
    const Eigen::MatrixXd Xinv = lu.solve(Ainv);
    // K[g] = K_J[g - T Xinv g]
    const Eigen::RowVectorXd kJ = Eigen::RowVectorXd::Constant(g.m(), 1.0 / g.m()) * g.E;
    const Eigen::RowVectorXd kr = kJ * (Eigen::MatrixXd::Identity(n, n) - T * Xinv);
    op.forward = F.cast<cplx>();
    op.inverse = Xinv.cast<cplx>();
    op.k_row = kr.cast<cplx>();
    return op;
}

cplx real_inverse_at(const InterpolationData& data, const DiscretizedOperator& op,
                     const std::function<cplx(double)>& g, const Eigen::VectorXcd& f, double x) {
    const auto& grid = op.grid;
    const int n = grid.n(), m = grid.m();
    // h = g - T f at x and at the first-kind nodes
    auto Tf = [&](double s) {
        cplx acc = 0.0;
        for (int j = 0; j < n; ++j) acc += grid.nu(j) * real_tau(data, s, grid.x2.nodes[j]) * f(j);
        return acc;
    };
    const cplx hx = g(x) - Tf(x);
    std::vector<cplx> v(m);
    for (int k = 0; k < m; ++k) {
        const double s = grid.s1.nodes[k];
        if (s == x) throw NumError("real_inverse_at: evaluation point on a quadrature node");
        v[k] = (g(s) - Tf(s) - hx) / (8.0 * m * (s - x));
    }
    return pairwise_sum(v);
}

Eigen::VectorXcd real_master_apply(const InterpolationData& data, const Eigen::VectorXcd& f, int n) {
    return real_master(data, n).apply(f);
}

Eigen::VectorXcd real_master_inverse(const InterpolationData& data, const Eigen::VectorXcd& g, int n) {
    return real_master(data, n).inverse_apply(g);
}

// ------------------------------------------------------------ complex master operator

DiscretizedOperator complex_master(const InterpolationData& data, int n) {
    DiscretizedOperator op;
    op.grid = OperatorGrid::make(n);
    const auto& g = op.grid;
    const int m = g.m();
    const auto& x = g.x2.nodes;
    std::vector<cplx> z(n), d1(n), Vp(n), S(n);
    for (int i = 0; i < n; ++i) {
        z[i] = data.gamma(x[i]);
        d1[i] = data.dgamma(x[i]);
        Vp[i] = data.W(x[i]) / d1[i];
        S[i] = data.St_at(x[i]);
        if (std::abs(S[i]) < 1e-12) throw NumError("complex_master: degenerate density (S_t vanishes on the grid)");
    }
    std::vector<cplx> zs(m), ws(m);
    for (int k = 0; k < m; ++k) {
        const double s = g.s1.nodes[k];
        zs[k] = data.gamma(s);
        const cplx d = data.dgamma(s);
        ws[k] = data.St_at(s) * d * d / (8.0 * m);
    }
    Eigen::MatrixXcd F = Eigen::MatrixXcd::Zero(n, n), Inv = Eigen::MatrixXcd::Zero(n, n);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t ii) {
        const int i = static_cast<int>(ii);
        F(i, i) += Vp[i];
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const cplx c = g.nu(j) / (z[i] - z[j]);
            F(i, i) -= c;
            F(i, j) += c;
        }
        for (int j = 0; j < n; ++j) F(i, j) -= g.nu(i) * g.D(i, j) / d1[i];
        cplx diag = 0.0;
        for (int k = 0; k < m; ++k) {
            const cplx c = ws[k] / (zs[k] - z[i]) / S[i];
            for (int j = 0; j < n; ++j) Inv(i, j) += c * g.E(k, j);
            diag -= c;
        }
        Inv(i, i) += diag;
    });
    Eigen::RowVectorXcd kr = Eigen::RowVectorXcd::Zero(n);
    for (int k = 0; k < m; ++k) kr += ws[k] * g.E.row(k).cast<cplx>();
    op.forward = F;
    op.inverse = Inv;
    op.k_row = kr;
    return op;
}

cplx complex_inverse_at(const InterpolationData& data, const OperatorGrid& grid,
                        const std::function<cplx(cplx)>& g, cplx z) {
    const int m = grid.m();
    const cplx x = data.param(z);
    const cplx S = data.St_at(x);
    if (std::abs(S) < 1e-12) throw NumError("complex_inverse_at: degenerate density");
    const cplx gz = g(z);
    std::vector<cplx> v(m);
    for (int k = 0; k < m; ++k) {
        const double s = grid.s1.nodes[k];
        const cplx zs = data.gamma(s), d = data.dgamma(s);
        v[k] = (g(zs) - gz) / (zs - z) * data.St_at(s) * d * d / (8.0 * m);
    }
    return pairwise_sum(v) / S;
}

cplx k_functional_loop(const OneCutSolution& sol, const std::function<cplx(cplx)>& g, int nodes) {
    const double R = 2.0 * std::max(std::abs(sol.zeta1), std::abs(sol.zeta2)) + 1.0;
    std::vector<cplx> v(nodes);
    for (int k = 0; k < nodes; ++k) {
        const cplx z = std::polar(R, 2.0 * PI * k / nodes);
        // dz / (2 i pi) = z dtheta / (2 pi)
        v[k] = g(z) / sol.r_far(z) * z / double(nodes);
    }
    return pairwise_sum(v);
}

Eigen::VectorXcd complex_master_apply(const InterpolationData& data, const Eigen::VectorXcd& f, int n) {
    return complex_master(data, n).apply(f);
}

Eigen::VectorXcd complex_master_inverse(const InterpolationData& data, const Eigen::VectorXcd& g, int n) {
    return complex_master(data, n).inverse_apply(g);
}

cplx k_functional(const DiscretizedOperator& op, const Eigen::VectorXcd& g) { return op.k(g); }

}  // namespace cg
