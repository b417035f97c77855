// Gaussian law, phase kernels, Fredholm expectation, finite-rank oracle,
// one-statistic expansion and small-N loop equations.
#include "doctest.h"

#include "contourgas/fluctuations.hpp"
#include "contourgas/partition.hpp"

#include <cmath>
#include <random>

using namespace cg;

namespace {
const cplx kG = 0.15 * std::polar(1.0, PI / 4.0);

struct Setup {
    OneCutSolution sol;
    CurveFamily fam;
    Setup(const OneCutSolution& s, CurveFamily f) : sol(s), fam(std::move(f)) {}
    InterpolationData at(double t) const { return InterpolationData(sol, fam, t); }
};

Setup& quartic() {
    static Setup s = [] {
        auto sol = solve_one_cut_homotopy(ComplexPolynomial({0.0, 0.0, 1.0, 0.0, kG}));
        return Setup(sol, analytic_param(sol));
    }();
    return s;
}
// V = z^2 on the real line (affine family, valid on all of R)
Setup& gaussian() {
    static Setup s = [] {
        auto sol = solve_one_cut(ComplexPolynomial({0.0, 0.0, 1.0}), -1.0, 1.0);
        return Setup(sol, CurveFamily::affine(sol.zeta1, sol.zeta2, 0.05, 0.1));
    }();
    return s;
}

RealFn fx = [](double x) { return cplx(x); };
RealFn fx2 = [](double x) { return cplx(x * x); };

// E[Nx] at GbE (weight e^{-N beta z^2}) from the scaling identity
// E[sum z_i^2] = (N + beta N (N-1)/2) / (2 N beta)
double gbe_second_moment(int N, int beta) { return (N + 0.5 * beta * N * (N - 1)) / (2.0 * N * beta) / N; }
}  // namespace

// ------------------------------------------------------------ Gaussian law

TEST_CASE("chi cutoff: plateaus, support and smoothness") {
    const double e = 0.05, ep = 0.1;
    for (double x : {-0.05, 0.0, 0.3, 1.0, 1.05}) CHECK(chi_cutoff(x, e, ep) == doctest::Approx(1.0).epsilon(1e-15));
    for (double x : {-0.1, -0.2, 1.1, 1.5}) CHECK(chi_cutoff(x, e, ep) == 0.0);
    double prev = 0.0;
    for (int k = 0; k <= 100; ++k) {
        const double x = -0.1 + 0.05 * k / 100.0;
        const double c = chi_cutoff(x, e, ep);
        CHECK(c >= prev - 1e-15);
        prev = c;
    }
    CHECK(chi_cutoff(-0.075, e, ep) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("clt: affine curve gives V[x] = 1/(8 beta) and zero mean") {
    for (Setup* s : {&gaussian(), &quartic()}) {
        const auto data = s->at(0.0);
        for (int beta : {2, 4, 6}) {
            GaussianLaw law(data, beta);
            CHECK(std::abs(law.variance(fx) - 1.0 / (8.0 * beta)) < 1e-10);
            CHECK(std::abs(law.mean(fx)) < 1e-10);
            CHECK(law.cov(fx, fx) == law.variance(fx));
        }
    }
    CHECK(std::abs(clt_cov(gaussian().at(0.0), fx, fx, 2) - 1.0 / 16.0) < 1e-10);
}

TEST_CASE("clt: beta = 2 kills the mean; covariance symmetric; grid stable") {
    auto& q = quartic();
    for (double t : {0.0, 0.5, 1.0}) {
        const auto data = q.at(t);
        GaussianLaw l2(data, 2);
        CHECK(std::abs(l2.mean(fx2)) < 1e-14);
        CHECK(std::abs(l2.mean([](double x) { return cplx(std::cos(3 * x)); })) < 1e-14);
        GaussianLaw l4(data, 4), l4b(data, 4, 96);
        RealFn g = [](double x) { return cplx(std::sin(2 * x) + x * x * x); };
        CHECK(std::abs(l4.cov(fx2, g) - l4.cov(g, fx2)) < 1e-10);
        CHECK(std::abs(l4.cov(fx2, g) - l4b.cov(fx2, g)) < 1e-10);
        CHECK(std::abs(l4.mean(g) - l4b.mean(g)) < 1e-10);
        // mean is real for real f
        CHECK(std::abs(l4.mean(g).imag()) < 1e-14);
        if (t > 0.0) CHECK(std::abs(l4.mean(fx2)) > 1e-6);
    }
}

TEST_CASE("clt: variance positive on random smooth real functions") {
    auto& q = quartic();
    std::mt19937_64 rng(11);
    std::normal_distribution<double> nd;
    for (double t : {0.0, 0.5, 1.0}) {
        GaussianLaw law(q.at(t), 4);
        for (int r = 0; r < 50; ++r) {
            std::vector<double> c(6);
            for (auto& v : c) v = nd(rng);
            RealFn f = [c](double x) {
                return cplx(c[0] * x + c[1] * x * x + c[2] * std::sin(3 * x) + c[3] * std::cos(5 * x) +
                            c[4] * std::exp(x) + c[5] * std::sin(9 * x));
            };
            CHECK(law.variance(f).real() >= -1e-9);
            CHECK(std::abs(law.variance(f).imag()) < 1e-12);
        }
    }
}

TEST_CASE("wick moments: recursion and small cases") {
    GaussianLaw l2(gaussian().at(0.0), 2);
    CHECK(wick_moments({}, l2) == cplx(1.0));
    CHECK(std::abs(wick_moments({fx, fx}, l2) - 1.0 / 16.0) < 1e-10);

    GaussianLaw law(quartic().at(1.0), 4);
    RealFn f3 = [](double x) { return cplx(std::cos(2 * x)); };
    CHECK(wick_moments({fx2}, law) == law.mean(fx2));
    const cplx m1 = law.mean(fx), m2 = law.mean(fx2), m3 = law.mean(f3);
    const cplx c12 = law.cov(fx, fx2), c13 = law.cov(fx, f3), c23 = law.cov(fx2, f3);
    CHECK(std::abs(wick_moments({fx, fx2, f3}, law) - (m1 * m2 * m3 + m1 * c23 + m2 * c13 + m3 * c12)) < 1e-12);
    // centred fourth moment at beta = 2 (zero means): three pairings
    GaussianLaw lc(quartic().at(1.0), 2);
    const cplx a = lc.cov(fx, fx2), b = lc.cov(fx, f3), c = lc.cov(fx2, f3), vx = lc.variance(fx);
    CHECK(std::abs(wick_moments({fx, fx2, f3, fx}, lc) - (a * lc.cov(f3, fx) + b * lc.cov(fx2, fx) + vx * c)) < 1e-12);
    (void)b;
}

// ------------------------------------------------------------ phase kernels

TEST_CASE("phase kernels: vanish for affine curves, symmetric, diagonal") {
    for (Setup* s : {&gaussian(), &quartic()}) {
        const auto pk = phase_kernels(s->at(0.0));
        for (double x : {-0.09, 0.0, 0.4, 1.07})
            for (double y : {-0.03, 0.5, 1.0}) CHECK(std::abs(pk.a(x, y)) < 1e-14);
        CHECK(std::abs(pk.p(0.3)) < 1e-14);
    }
    const auto data = quartic().at(1.0);
    const auto pk = phase_kernels(data);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> ud(-0.12, 1.12);
    double amax = 0.0;
    for (int r = 0; r < 200; ++r) {
        const double x = ud(rng), y = ud(rng);
        CHECK(pk.a(x, y) == doctest::Approx(pk.a(y, x)).epsilon(1e-13));
        amax = std::max(amax, std::abs(pk.a(x, y)));
        // direct quotient, away from the diagonal
        if (std::abs(x - y) > 1e-3) {
            const double direct = std::arg((data.gamma(x) - data.gamma(y)) / (x - y)) - pk.branch_shift;
            const double chi = chi_cutoff(x, pk.eps, pk.eps_prime) * chi_cutoff(y, pk.eps, pk.eps_prime);
            CHECK(std::abs(pk.a(x, y) - chi * direct) < 1e-10);
        }
    }
    CHECK(amax > 1e-3);
    for (double x : {-0.08, 0.0, 0.25, 0.9, 1.06}) {
        const double c = chi_cutoff(x, pk.eps, pk.eps_prime);
        CHECK(std::abs(pk.a(x, x) - c * c * (std::arg(data.dgamma(x)) - pk.branch_shift)) < 1e-12);
        CHECK(std::abs(pk.a(x, x) - c * pk.p(x)) < 1e-12);
    }
}

TEST_CASE("phase exponent: matches the centred double integral") {
    const auto pk = phase_kernels(quartic().at(1.0));
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ud(-0.03, 1.03);
    std::vector<double> x(7);
    for (auto& v : x) v = ud(rng);
    const int N = 7, beta = 4;
    // independent: nu by a midpoint theta rule
    const int K = 3000;
    std::vector<double> y(K), wy(K);
    for (int k = 0; k < K; ++k) {
        const double th = PI * (k + 0.5) / K;
        y[k] = 0.5 * (1.0 - std::cos(th));
        wy[k] = (8.0 / PI) * 0.25 * std::sin(th) * std::sin(th) * (PI / K);
    }
    double ll = 0.0, ln = 0.0, pl = 0.0, pn = 0.0;
    for (int i = 0; i < N; ++i) {
        pl += pk.p(x[i]) / N;
        for (int j = 0; j < N; ++j) ll += pk.a(x[i], x[j]) / (N * N);
        for (int k = 0; k < K; ++k) ln += wy[k] * pk.a(x[i], y[k]) / N;
    }
    for (int k = 0; k < K; ++k) pn += wy[k] * pk.p(y[k]);
    const double lin = pl - pn;
    const cplx G = phase_exponent(pk, x, beta);
    CHECK(std::abs(G.real()) == 0.0);
    // the nu x nu constant is checked separately below
    const double quad = ll - 2.0 * ln + pk.a_nunu;
    CHECK(std::abs(G.imag() - (0.5 * beta * N * N * quad + N * (1.0 - 0.5 * beta) * lin)) < 1e-6);
    CHECK(std::abs(pk.p_nu - pn) < 1e-6);
    // real line: identically zero
    const auto pk0 = phase_kernels(gaussian().at(1.0));
    CHECK(std::abs(phase_exponent(pk0, x, beta)) < 1e-12);
}

TEST_CASE("phase kernels: nu-integrals against an independent rule") {
    const auto pk = phase_kernels(quartic().at(1.0));
    const int K = 4000;
    double nn = 0.0;
    std::vector<double> y(K / 10), wy(K / 10);
    for (int k = 0; k < K / 10; ++k) {
        const double th = PI * (k + 0.5) / (K / 10);
        y[k] = 0.5 * (1.0 - std::cos(th));
        wy[k] = (8.0 / PI) * 0.25 * std::sin(th) * std::sin(th) * (PI / (K / 10));
    }
    for (double x : {-0.07, 0.2, 0.77, 1.02}) {
        double s = 0.0;
        for (std::size_t k = 0; k < y.size(); ++k) s += wy[k] * pk.a(x, y[k]);
        CHECK(std::abs(chi_cutoff(x, pk.eps, pk.eps_prime) * pk.a_nu(x).real() - s) < 1e-8);
    }
    for (std::size_t k = 0; k < y.size(); ++k)
        for (std::size_t l = 0; l < y.size(); ++l) nn += wy[k] * wy[l] * pk.a(y[k], y[l]);
    CHECK(std::abs(nn - pk.a_nunu) < 1e-8);
}

// ------------------------------------------------------------ Fourier kernels

TEST_CASE("fourier kernels: trivial cases, symmetries, Parseval") {
    {
        const auto d0 = gaussian().at(1.0);
        const auto kp = fourier_kernels(d0, phase_kernels(d0), 2, 64, 128);
        CHECK(kp.A.cwiseAbs().maxCoeff() < 1e-14);
        CHECK(kp.P.cwiseAbs().maxCoeff() < 1e-14);
        CHECK(std::abs(fredholm_expectation(kp, 2).value - 1.0) < 1e-12);
    }
    const auto data = quartic().at(1.0);
    const auto pk = phase_kernels(data);
    const auto kp = fourier_kernels(data, pk, 4);
    const int K = static_cast<int>(kp.grid.nodes.size());
    CHECK(K == 256);
    CHECK(kp.grid.L == doctest::Approx(16.0 / 1.1));
    CHECK(kp.edge_ratio < edge_tolerance);
    double d1 = 0.0, d2 = 0.0, d3 = 0.0;
    for (int k = 0; k < K; ++k) {
        d3 = std::max(d3, std::abs(kp.m(K - 1 - k) - std::conj(kp.m(k))));
        for (int l = 0; l < K; ++l) {
            d1 = std::max(d1, std::abs(std::conj(kp.A(k, l)) - kp.A(l, k)));
            d2 = std::max(d2, std::abs(kp.A(l, k) - kp.A(K - 1 - k, K - 1 - l)));
        }
    }
    CHECK(d1 < 1e-14);
    CHECK(d2 < 1e-12);
    CHECK(d3 < 1e-10);
    CHECK(kp.b_hermitian_defect < 1e-10);
    CHECK(kp.b_min_eigenvalue > -1e-10);

    // P(0) = \int p by an independent midpoint rule (even K: use the odd grid)
    const auto kpo = fourier_kernels(data, pk, 4, 65, 128);
    double ip = 0.0;
    const int Q = 20000;
    for (int k = 0; k < Q; ++k) ip += pk.p(-0.1 + 1.2 * (k + 0.5) / Q) * 1.2 / Q;
    CHECK(std::abs(kpo.grid.nodes[32]) < 1e-14);
    CHECK(std::abs(kpo.P(32) - ip) < 1e-9);
    // zero frequency: the constant has no fluctuation
    CHECK(kpo.B.row(32).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(kpo.m(32)) < 1e-12);

    // Parseval on a frequency window wide enough to hold the kernel
    const auto kpw = fourier_kernels(data, pk, 4, 512, 192, 256, 32.0);
    CHECK(std::abs(kpw.parseval_space - kpw.parseval_freq) < 1e-6);
}

TEST_CASE("fourier kernels: too small a frequency window is rejected") {
    const auto data = quartic().at(1.0);
    CHECK_THROWS_AS(fourier_kernels(data, phase_kernels(data), 2, 32, 128, 256, 2.0), GridTooSmall);
}

// ------------------------------------------------------------ Fredholm formula

namespace {
// random instance respecting xi_{-k} = conj xi_k: real data in the X frame
struct Instance {
    Eigen::MatrixXcd A, B;
    Eigen::VectorXcd mu, lam;
};
Eigen::MatrixXcd frame(int n) {
    Eigen::MatrixXcd J = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
    const double r = 1.0 / std::sqrt(2.0);
    for (int k = 1; k <= n; ++k) {
        const int p = srank_index(k, n), q = srank_index(-k, n);
        J(p, p) = r;
        J(p, q) = r;
        J(q, q) = -I1 * r;
        J(q, p) = I1 * r;
    }
    return J;
}
Instance random_instance(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    const int d = 2 * n;
    Eigen::MatrixXd G(d, d), S(d, d);
    Eigen::VectorXd m(d), l(d);
    for (int i = 0; i < d; ++i) {
        m(i) = nd(rng);
        l(i) = nd(rng);
        for (int j = 0; j < d; ++j) {
            G(i, j) = nd(rng) / std::sqrt(double(d));
            S(i, j) = nd(rng) / std::sqrt(double(d));
        }
    }
    const Eigen::MatrixXd Bt = G * G.transpose();
    const Eigen::MatrixXd At = 0.5 * (S + S.transpose());
    const auto J = frame(n);
    Instance in;
    in.B = J.adjoint() * Bt.cast<cplx>() * J;
    in.A = J.adjoint() * At.cast<cplx>() * J;
    in.mu = J.adjoint() * m.cast<cplx>();
    in.lam = J.adjoint() * l.cast<cplx>();
    return in;
}
}  // namespace

TEST_CASE("fredholm formula: trivial cases") {
    const int d = 4;
    std::mt19937_64 rng(9);
    auto in = random_instance(2, rng);
    const Eigen::MatrixXcd Z = Eigen::MatrixXcd::Zero(d, d);
    const Eigen::VectorXcd z = Eigen::VectorXcd::Zero(d);
    CHECK(std::abs(fredholm_formula(Z, in.B, z, z, 2.0).value - 1.0) < 1e-15);
    // A = 0: Gaussian characteristic function
    const cplx cf = std::exp(I1 * in.lam.dot(in.mu) - 0.5 * in.lam.dot(in.B * in.lam));
    CHECK(std::abs(fredholm_formula(Z, in.B, in.mu, in.lam, 2.0).value - cf) < 1e-13);
    CHECK(std::abs(finite_rank_oracle(in.B, in.mu, Z, in.lam, 2.0) - cf) < 1e-13);
}

TEST_CASE("fredholm formula agrees with the real-variable oracle") {
    std::mt19937_64 rng(2024);
    for (int n : {1, 2}) {
        for (int r = 0; r < 20; ++r) {
            auto in = random_instance(n, rng);
            for (double s : {0.5, 2.0}) {
                const auto fr = fredholm_formula(in.A, in.B, in.mu, in.lam, s);
                const cplx orc = finite_rank_oracle(in.B, in.mu, in.A, in.lam, s);
                CHECK(std::abs(fr.value - orc) < 1e-10);
                CHECK(std::abs(fr.det) >= 1.0 - 1e-12);
                CHECK(fr.det_modulus_min >= 1.0 - 1e-12);
            }
        }
    }
}

TEST_CASE("finite-rank oracle: unit covariance against Monte Carlo") {
    const Eigen::MatrixXcd Id = Eigen::MatrixXcd::Identity(2, 2);
    const Eigen::VectorXcd z = Eigen::VectorXcd::Zero(2);
    const cplx exact = 1.0 / (1.0 - I1);
    CHECK(std::abs(finite_rank_oracle(Id, z, Id, z, 1.0) - exact) < 1e-14);
    CHECK(std::abs(fredholm_formula(Id, Id, z, z, 1.0).value - exact) < 1e-14);
    const auto mc = finite_rank_mc(Id, z, Id, z, 1.0, 1000000, 77);
    CHECK(mc.std_error > 0.0);
    CHECK(std::abs(mc.mean - exact) < 3.0 * mc.std_error * std::sqrt(2.0));

    std::mt19937_64 rng(4);
    auto in = random_instance(2, rng);
    const auto mc2 = finite_rank_mc(in.B, in.mu, in.A, in.lam, 0.7, 400000, 5);
    CHECK(std::abs(mc2.mean - finite_rank_oracle(in.B, in.mu, in.A, in.lam, 0.7)) < 4.0 * mc2.std_error);
}

TEST_CASE("finite-rank oracle: input validation") {
    const Eigen::MatrixXcd Id = Eigen::MatrixXcd::Identity(2, 2);
    const Eigen::VectorXcd z = Eigen::VectorXcd::Zero(2);
    CHECK_THROWS_AS(finite_rank_oracle(-Id, z, Id, z, 1.0), NumError);
    Eigen::MatrixXcd bad = Id;
    bad(0, 1) = 0.3;  // E[xi_{-1} conj xi_1] must be conj of E[xi_1 conj xi_{-1}] -- breaks the symmetry
    bad(1, 0) = 0.3 * I1;
    CHECK_THROWS_AS(finite_rank_oracle(bad, z, Id, z, 1.0), NumError);
    CHECK(srank_index(-2, 2) == 0);
    CHECK(srank_index(-1, 2) == 1);
    CHECK(srank_index(1, 2) == 2);
    CHECK(srank_index(2, 2) == 3);
    CHECK_THROWS(srank_index(0, 2));
}

TEST_CASE("wick consistency: lambda-Hessian of the oracle gives Psi({f1, f2})") {
    GaussianLaw law(quartic().at(0.5), 4);
    const double m1 = law.mean(fx).real(), m2 = law.mean(fx2).real();
    const double C11 = law.variance(fx).real(), C22 = law.variance(fx2).real(), C12 = law.cov(fx, fx2).real();
    // xi_1 = G1 + i G2, xi_{-1} = conj; index -1 -> 0, 1 -> 1
    Eigen::MatrixXcd B(2, 2);
    B(1, 1) = B(0, 0) = C11 + C22;
    B(1, 0) = cplx(C11 - C22, 2.0 * C12);
    B(0, 1) = std::conj(B(1, 0));
    Eigen::VectorXcd mu(2);
    mu(1) = cplx(m1, m2);
    mu(0) = cplx(m1, -m2);
    const Eigen::MatrixXcd Z = Eigen::MatrixXcd::Zero(2, 2);
    // <lam, xi> = 2 (a G1 + b G2) for lam_1 = a + ib
    auto Phi = [&](double a, double b) {
        Eigen::VectorXcd l(2);
        l(1) = cplx(a, b);
        l(0) = cplx(a, -b);
        return finite_rank_oracle(B, mu, Z, l, 1.0);
    };
    const double h = 1e-3;
    const cplx mixed = (Phi(h, h) - Phi(h, -h) - Phi(-h, h) + Phi(-h, -h)) / (4.0 * h * h);
    const cplx second = -0.25 * mixed;  // E[G1 G2]
    const cplx psi = wick_moments({fx, fx2}, law);
    CHECK(std::abs(psi - (m1 * m2 + C12)) < 1e-14);
    CHECK(std::abs(second - psi) < 1e-6 * std::max(1.0, std::abs(psi)));
}

// ------------------------------------------------------------ Fredholm expectation

TEST_CASE("fredholm expectation: determinant modulus, grid stability, A = 0 limit") {
    auto& q = quartic();
    for (double t : {0.0, 0.5, 1.0}) {
        const auto data = q.at(t);
        const auto pk = phase_kernels(data);
        const auto kp = fourier_kernels(data, pk, 2);
        const auto kp2 = fourier_kernels(data, pk, 2, 511);  // every other node shared, spacing halved
        const auto r1 = fredholm_expectation(kp, 2), r2 = fredholm_expectation(kp2, 2);
        CHECK(std::abs(r1.det) >= 1.0 - 1e-9);
        CHECK(std::abs(r2.det) >= 1.0 - 1e-9);
        CHECK(std::abs(r1.value - r2.value) < 1e-6);
        CHECK(std::abs(r1.value) <= 1.0 + 1e-12);
    }
    // A = 0: exp(i <lam, m> - 1/2 <lam, B lam>) with lam = p_coeff P
    const auto data = q.at(1.0);
    auto kp = fourier_kernels(data, phase_kernels(data), 4);
    kp.A.setZero();
    const int K = static_cast<int>(kp.grid.nodes.size());
    Eigen::VectorXcd w(K);
    for (int k = 0; k < K; ++k) w(k) = kp.grid.weights[k];
    const Eigen::VectorXcd wP = w.cwiseProduct(kp.P);
    for (double pc : {-1.0, 4.0}) {
        const cplx expect = std::exp(I1 * pc * wP.dot(kp.m) - 0.5 * pc * pc * wP.dot(kp.B * wP));
        CHECK(std::abs(fredholm_expectation(kp, 4, pc).value - expect) < 1e-12);
    }
    CHECK(std::abs(fredholm_expectation(kp, 4).value - fredholm_expectation(kp, 4, -1.0).value) == 0.0);
}

// ------------------------------------------------------------ one linear statistic

TEST_CASE("one-stat expansion: beta = 2 prefactors vanish") {
    for (double t : {0.0, 1.0}) {
        const auto os = one_stat_expansion(quartic().at(t), [](cplx z) { return z * z * z + std::exp(z); }, 2);
        CHECK(std::abs(os.T1) < 1e-12);
        CHECK(std::abs(os.T2) < 1e-12);
        CHECK(std::abs(os.T3) < 1e-12);
        CHECK(std::abs(os.c1_literal - os.c1 - os.T3) < 1e-14);
    }
}

TEST_CASE("one-stat expansion: Gaussian ensemble exact moments") {
    const auto data = gaussian().at(1.0);
    for (int beta : {2, 4, 6}) {
        // f = z^2/4: c1 = 1/(8 beta) - 1/16, c2 = 0
        const auto q2 = one_stat_expansion(data, [](cplx z) { return 0.25 * z * z; }, beta);
        CHECK(std::abs(q2.c1 - (1.0 / (8.0 * beta) - 1.0 / 16.0)) < 1e-12);
        CHECK(std::abs(q2.c2) < 1e-10);
        // second moment from the scaling identity, every N
        for (int N : {2, 5, 40})
            CHECK(std::abs(0.25 + 4.0 * (q2.c1 / double(N) + q2.c2 / double(N * N)) - gbe_second_moment(N, beta)) < 1e-12);
        // f = z^4: E[L_N(z^4)] is exactly quadratic in 1/N; compare against tensor quadrature
        auto f = [](cplx z) { return z * z * z * z; };
        const auto q4 = one_stat_expansion(data, f, beta);
        for (int N : {2, 3}) {
            const auto curve = truncated_line(data.solution().zeta1, data.solution().zeta2, N, beta);
            const auto tm = real_model_marginals(N, beta, data.solution().V, curve, 96);
            std::vector<cplx> u;
            for (double x : tm.x) u.push_back(f(curve.eval(x)));
            const cplx centred = tm.one_body(u) / double(N) - 0.125;
            CHECK(std::abs(centred - q4.c1 / double(N) - q4.c2 / double(N * N)) < 1e-9);
        }
    }
}

TEST_CASE("one-stat expansion: residual decays for a non-polynomial statistic") {
    const auto data = gaussian().at(1.0);
    const int beta = 4;
    auto f = [](cplx z) { return std::cos(2.0 * z) + z * z * z * z; };
    const auto os = one_stat_expansion(data, f, beta);
    // nu-mean by an independent fine rule on [-1,1]
    cplx mu_f = 0.0;
    const int K = 4000;
    for (int k = 0; k < K; ++k) {
        const double th = PI * (k + 0.5) / K;
        mu_f += f(std::cos(th)) * (2.0 / PI) * std::sin(th) * std::sin(th) * (PI / K);
    }
    std::vector<double> res;
    for (int N : {2, 3, 4}) {
        const auto curve = truncated_line(data.solution().zeta1, data.solution().zeta2, N, beta);
        const auto tm = real_model_marginals(N, beta, data.solution().V, curve, N < 4 ? 96 : 64);
        std::vector<cplx> u;
        for (double x : tm.x) u.push_back(f(curve.eval(x)));
        const cplx E = tm.one_body(u) / double(N) - mu_f;
        res.push_back(std::abs(E - os.c1 / double(N) - os.c2 / double(N * N)));
        // first-order truncation is strictly worse
        CHECK(std::abs(E - os.c1 / double(N)) > res.back());
    }
    CHECK(res[1] < res[0]);
    CHECK(res[2] < res[1]);
    CHECK(res[2] * 64.0 < res[0] * 8.0 * 1.5);  // at least ~N^-3 between N = 2 and 4
}

TEST_CASE("one-stat expansion: entropy-derivative lemma on the quartic family") {
    auto& q = quartic();
    const int beta = 4;
    const double c = 1.0 / beta - 0.5;
    for (double t : {0.3, 0.7}) {
        const double h = 1e-4;
        const InterpolationData dp(q.sol, q.fam, t + h), dm(q.sol, q.fam, t - h);
        auto dtV = [&](cplx z) { return (dp.Vt(z) - dm.Vt(z)) / (2.0 * h); };
        const auto os = one_stat_expansion(q.at(t), dtV, beta);
        // -d/dt \int Log gamma_t' dnu by central differences
        const auto g = make_grid(GridKind::gauss_chebyshev_sqrt, 128, 0.0, 1.0);
        auto ent = [&](double s) {
            cplx acc = 0.0;
            for (std::size_t k = 0; k < g.size(); ++k)
                acc += (8.0 / PI) * g.weights[k] * std::log(q.fam.dgamma(s, g.nodes[k]));
            return acc;
        };
        const double k = 1e-3;
        const cplx dent = -(ent(t + k) - ent(t - k)) / (2.0 * k);
        CHECK(std::abs(os.T1 - c * dent) < 1e-6);
    }
}

// ------------------------------------------------------------ loop equations

TEST_CASE("loop equation: Gaussian ensemble on the real line") {
    const auto data = gaussian().at(1.0);
    const auto& sol = data.solution();
    RealFn F = [](double x) { return cplx(8.0 * x * (x - 0.5) - 1.0); };  // Xi[x]
    const auto c2 = loop_equation_check(2, 2, data, truncated_line(sol.zeta1, sol.zeta2, 2, 2), F);
    CHECK(std::abs(c2.residual) < 1e-6);
    const auto c3 = loop_equation_check(3, 2, data, truncated_line(sol.zeta1, sol.zeta2, 3, 2), F);
    CHECK(std::abs(c3.residual) < 1e-5);
    const auto cc = loop_equation_check(2, 2, data, truncated_line(sol.zeta1, sol.zeta2, 2, 2),
                                        [](double) { return cplx(2.5); });
    CHECK(std::abs(cc.lhs) < 1e-12);
    CHECK(std::abs(cc.rhs) < 1e-12);
    // non-trivial sides: beta = 4 and a non-polynomial statistic
    RealFn G = [](double x) { return cplx(std::cos(3.0 * x) + x * x * x); };
    for (int N : {2, 3}) {
        const auto lc = loop_equation_check(N, 4, data, truncated_line(sol.zeta1, sol.zeta2, N, 4), G);
        CHECK(std::abs(lc.lhs) > 1e-3);
        CHECK(std::abs(lc.residual) < 1e-8);
    }
}

TEST_CASE("tensor marginals: Gaussian second moment") {
    const auto& sol = gaussian().sol;
    for (int beta : {2, 4})
        for (int N : {1, 2, 3}) {
            const auto curve = truncated_line(sol.zeta1, sol.zeta2, N, beta);
            const auto tm = real_model_marginals(N, beta, [](cplx z) { return z * z; }, curve, 96);
            double tot = 0.0;
            for (double p : tm.p1) tot += p;
            CHECK(tot == doctest::Approx(1.0).epsilon(1e-14));
            std::vector<cplx> u;
            for (double x : tm.x) u.push_back(std::norm(curve.eval(x)));
            CHECK(std::abs(tm.one_body(u) / double(N) - gbe_second_moment(N, beta)) < 1e-10);
        }
}
