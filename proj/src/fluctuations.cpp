#include "contourgas/fluctuations.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <numeric>
#include <cmath>
#include <random>

namespace cg {

namespace {
const double kSemi = 8.0 / PI;

// nu(h) for h on [0,1], independent of any operator grid
cplx semicircle_mean(const std::function<cplx(double)>& h, int n = 128) {
    const auto g = make_grid(GridKind::gauss_chebyshev_sqrt, n, 0.0, 1.0);
    std::vector<cplx> v(n);
    for (int i = 0; i < n; ++i) v[i] = kSemi * g.weights[i] * h(g.nodes[i]);
    return pairwise_sum(v);
}
}  // namespace

// ------------------------------------------------------------ Gaussian law

GaussianLaw::GaussianLaw(const InterpolationData& data, int beta, int nodes)
    : beta_(beta), op_(real_master(data, nodes)) {
    const auto& g = op_.grid;
    const int n = g.n();
    // R = Re(gamma''/gamma') + d/dx
    Eigen::MatrixXd R = g.D;
    for (int i = 0; i < n; ++i) {
        const double x = g.x2.nodes[i];
        R(i, i) += std::real(data.d2gamma(x) / data.dgamma(x));
    }
    const double c = 1.0 / beta - 0.5;
    mean_row_ = c * (g.nu * R).cast<cplx>() * op_.inverse;
}

cplx GaussianLaw::cov_nodal(const Eigen::VectorXcd& f, const Eigen::VectorXcd& g) const {
    const Eigen::VectorXcd fp = grid().D.cast<cplx>() * f;
    return cov_nodal(f, fp, g);
}

cplx GaussianLaw::cov_nodal(const Eigen::VectorXcd&, const Eigen::VectorXcd& fprime,
                            const Eigen::VectorXcd& g) const {
    const Eigen::VectorXcd h = op_.inverse * g;
    cplx acc = 0.0;
    for (int i = 0; i < grid().n(); ++i) acc += grid().nu(i) * fprime(i) * h(i);
    return acc / double(beta_);
}

cplx clt_mean(const InterpolationData& data, const RealFn& f, int beta, int nodes) {
    return GaussianLaw(data, beta, nodes).mean(f);
}

cplx clt_cov(const InterpolationData& data, const RealFn& f, const RealFn& g, int beta, int nodes) {
    return GaussianLaw(data, beta, nodes).cov(f, g);
}

// Psi over subsets encoded as bitmasks; C already carries 1/beta
cplx wick_moments(const std::vector<RealFn>& fs, const GaussianLaw& law) {
    const int k = static_cast<int>(fs.size());
    if (k == 0) return 1.0;
    if (k > 20) throw NumError("wick_moments: too many functions");
    std::vector<Eigen::VectorXcd> v;
    for (const auto& f : fs) v.push_back(law.grid().sample(f));
    std::vector<cplx> m(k);
    Eigen::MatrixXcd C(k, k);
    for (int i = 0; i < k; ++i) {
        m[i] = law.mean_nodal(v[i]);
        for (int j = 0; j < k; ++j) C(i, j) = law.cov_nodal(v[i], v[j]);
    }
    const std::size_t full = std::size_t(1) << k;
    std::vector<cplx> psi(full, 0.0);
    psi[0] = 1.0;
    for (std::size_t S = 1; S < full; ++S) {
        int top = 63 - __builtin_clzll(static_cast<unsigned long long>(S));
        const std::size_t rest = S & ~(std::size_t(1) << top);
        cplx acc = m[top] * psi[rest];
        for (int q = 0; q < top; ++q)
            if (rest & (std::size_t(1) << q)) acc += C(q, top) * psi[rest & ~(std::size_t(1) << q)];
        psi[S] = acc;
    }
    return psi[full - 1];
}

// ------------------------------------------------------------ phase kernels

namespace {
// e^{-1/u} / (e^{-1/u} + e^{-1/(1-u)}), 0 for u <= 0, 1 for u >= 1
double smooth_step(double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    const double a = std::exp(-1.0 / u), b = std::exp(-1.0 / (1.0 - u));
    return a / (a + b);
}
}  // namespace

double chi_cutoff(double x, double eps, double eps_prime) {
    const double w = eps_prime - eps;
    return smooth_step((x + eps_prime) / w) * smooth_step((1.0 + eps_prime - x) / w);
}

PhaseKernels phase_kernels(const InterpolationData& data, double eps, double eps_prime) {
    const auto& fam = data.family();
    PhaseKernels pk;
    pk.eps = eps > 0.0 ? eps : fam.eps();
    pk.eps_prime = eps_prime > 0.0 ? eps_prime : fam.pad();
    if (!(pk.eps_prime > pk.eps)) throw NumError("phase_kernels: need eps' > eps");
    // reference direction: the chord zeta2 - zeta1 (the t = 0 value of every quotient)
    pk.branch_shift = std::arg(fam.zeta2() - fam.zeta1());
    const cplx rot = std::polar(1.0, -pk.branch_shift);
    const double t = data.t();
    const double e = pk.eps, ep = pk.eps_prime;
    auto branch = [](cplx z) {
        const double a = std::arg(z);
        if (std::abs(a) > PI - 0.2) throw NumError("phase_kernels: branch tracking failed (arg near the cut)");
        return a;
    };
    // analytic parts (no cutoff)
    auto a_raw = [fam, t, rot, branch](double x, double y) { return branch(fam.chord(t, x, y) * rot); };
    auto p_raw = [fam, t, rot, branch](double x) { return branch(fam.dgamma(t, x) * rot); };
    pk.a = [a_raw, e, ep](double x, double y) {
        const double cx = chi_cutoff(x, e, ep), cy = chi_cutoff(y, e, ep);
        if (cx == 0.0 || cy == 0.0) return 0.0;
        return cx * cy * a_raw(x, y);
    };
    pk.p = [p_raw, e, ep](double x) {
        const double c = chi_cutoff(x, e, ep);
        return c == 0.0 ? 0.0 : c * p_raw(x);
    };
    // chi = 1 on supp nu, so \int a(x,y) dnu(y) = chi(x) \int a_raw(x,y) dnu(y)
    const auto g = make_grid(GridKind::gauss_chebyshev_sqrt, 96, 0.0, 1.0);
    auto anu_raw = [&](double x) {
        std::vector<double> v(g.size());
        for (std::size_t k = 0; k < g.size(); ++k) v[k] = kSemi * g.weights[k] * a_raw(x, g.nodes[k]);
        return cplx(pairwise_sum(v), 0.0);
    };
    pk.a_nu = ChebFun(anu_raw, 64, -ep, 1.0 + ep);
    std::vector<double> v(g.size()), w(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) {
        v[k] = kSemi * g.weights[k] * std::real(pk.a_nu(g.nodes[k]));
        w[k] = kSemi * g.weights[k] * p_raw(g.nodes[k]);
    }
    pk.a_nunu = pairwise_sum(v);
    pk.p_nu = pairwise_sum(w);
    return pk;
}

cplx phase_exponent(const PhaseKernels& pk, const std::vector<double>& x, int beta) {
    const int N = static_cast<int>(x.size());
    std::vector<double> aa(static_cast<std::size_t>(N) * N), a1(N), p1(N);
    for (int i = 0; i < N; ++i) {
        const double ci = chi_cutoff(x[i], pk.eps, pk.eps_prime);
        a1[i] = ci * std::real(pk.a_nu(x[i]));
        p1[i] = pk.p(x[i]);
        for (int j = 0; j < N; ++j) aa[static_cast<std::size_t>(i) * N + j] = pk.a(x[i], x[j]);
    }
    const double Nd = N;
    const double quad = pairwise_sum(aa) / (Nd * Nd) - 2.0 * pairwise_sum(a1) / Nd + pk.a_nunu;
    const double lin = pairwise_sum(p1) / Nd - pk.p_nu;
    return I1 * (0.5 * beta * Nd * Nd * quad + Nd * (1.0 - 0.5 * beta) * lin);
}

FrequencyGrid FrequencyGrid::uniform(double L, int K) {
    if (K < 2) throw NumError("FrequencyGrid: need at least 2 nodes");
    FrequencyGrid g;
    g.L = L;
    const double h = 2.0 * L / (K - 1);
    for (int k = 0; k < K; ++k) {
        g.nodes.push_back(-L + h * k);
        g.weights.push_back((k == 0 || k == K - 1) ? 0.5 * h : h);
    }
    return g;
}

KernelPair fourier_kernels(const InterpolationData& data, const PhaseKernels& pk, int beta, int K, int op_nodes,
                           int space_nodes, double L) {
    KernelPair kp;
    if (L <= 0.0) L = 16.0 / (1.0 + pk.eps_prime);
    kp.grid = FrequencyGrid::uniform(L, K);
    const auto& xi = kp.grid.nodes;

    // ---- A, P by Gauss-Legendre on [-eps', 1+eps']
    const auto s = make_grid(GridKind::gauss_legendre, space_nodes, -pk.eps_prime, 1.0 + pk.eps_prime);
    const int S = space_nodes;
    Eigen::MatrixXd a(S, S);
    Eigen::VectorXd p(S);
    parallel_for(static_cast<std::size_t>(S), [&](std::size_t ii) {
        const int i = static_cast<int>(ii);
        p(i) = pk.p(s.nodes[i]);
        for (int j = 0; j <= i; ++j) a(i, j) = pk.a(s.nodes[i], s.nodes[j]);
    });
    for (int i = 0; i < S; ++i)
        for (int j = i + 1; j < S; ++j) a(i, j) = a(j, i);
    Eigen::MatrixXcd E(K, S);
    for (int k = 0; k < K; ++k)
        for (int q = 0; q < S; ++q) E(k, q) = s.weights[q] * std::polar(1.0, -2.0 * PI * xi[k] * s.nodes[q]);
    kp.A = E * a.cast<cplx>() * E.adjoint();
    kp.P = E * p.cast<cplx>();

    double sp = 0.0, fq = 0.0;
    for (int i = 0; i < S; ++i)
        for (int j = 0; j < S; ++j) sp += s.weights[i] * s.weights[j] * a(i, j) * a(i, j);
    for (int k = 0; k < K; ++k)
        for (int l = 0; l < K; ++l) fq += kp.grid.weights[k] * kp.grid.weights[l] * std::norm(kp.A(k, l));
    kp.parseval_space = sp;
    kp.parseval_freq = fq;

    // decay: kernel on the outer ring relative to its global maximum
    double amax = 0.0, aring = 0.0, wmax = 0.0, wring = 0.0;
    for (int k = 0; k < K; ++k)
        for (int l = 0; l < K; ++l) {
            const double v = std::abs(kp.A(k, l));
            const double w = v * std::pow(1.0 + std::abs(xi[k]), 4) * std::pow(1.0 + std::abs(xi[l]), 4);
            amax = std::max(amax, v);
            wmax = std::max(wmax, w);
            if (k == 0 || l == 0 || k == K - 1 || l == K - 1) {
                aring = std::max(aring, v);
                wring = std::max(wring, w);
            }
        }
    // identically vanishing phase (real-slope chord): nothing to resolve
    const bool trivial = amax < 1e-14;
    kp.edge_ratio = trivial ? 0.0 : aring / amax;
    kp.weighted_decay = trivial ? 0.0 : wring / wmax;
    if (kp.edge_ratio > edge_tolerance)
        throw GridTooSmall("fourier_kernels: phase kernel not decayed at the frequency cutoff, enlarge L");

    // ---- B, m from the Gaussian law on exponentials
    GaussianLaw law(data, beta, op_nodes);
    const auto& g = law.grid();
    const int n = g.n();
    Eigen::MatrixXcd Fm(n, K), Fp(n, K), Gp(n, K);
    for (int k = 0; k < K; ++k)
        for (int i = 0; i < n; ++i) {
            const double x = g.x2.nodes[i];
            const cplx em = std::polar(1.0, -2.0 * PI * xi[k] * x);
            Fm(i, k) = em;
            Fp(i, k) = g.nu(i) * (-2.0 * PI * I1 * xi[k]) * em;
            Gp(i, k) = std::conj(em);
        }
    kp.B = (Fp.transpose() * (law.op().inverse * Gp)) / double(beta);
    kp.m = (law.mean_row() * Fm).transpose();

    kp.b_hermitian_defect = (kp.B - kp.B.adjoint()).cwiseAbs().maxCoeff() / std::max(1.0, kp.B.cwiseAbs().maxCoeff());
    kp.B = 0.5 * (kp.B + kp.B.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(kp.B, Eigen::EigenvaluesOnly);
    kp.b_min_eigenvalue = es.eigenvalues().minCoeff();
    if (kp.b_min_eigenvalue < -1e-8 * std::max(1.0, es.eigenvalues().maxCoeff()))
        throw NumError("fourier_kernels: covariance kernel B is not positive semidefinite");
    return kp;
}

// ------------------------------------------------------------ Fredholm expectation

namespace {
// Hermitian PSD square root (negative round-off clipped)
Eigen::MatrixXcd psd_sqrt(const Eigen::MatrixXcd& B, const char* who) {
    const Eigen::MatrixXcd H = 0.5 * (B + B.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
    const auto& ev = es.eigenvalues();
    const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
    Eigen::VectorXd r(ev.size());
    for (int i = 0; i < ev.size(); ++i) {
        if (ev(i) < -1e-9 * scale) throw NumError(std::string(who) + ": covariance is not positive semidefinite");
        r(i) = std::sqrt(std::max(0.0, ev(i)));
    }
    return es.eigenvectors() * r.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
}
}  // namespace

FredholmResult fredholm_formula(const Eigen::MatrixXcd& A, const Eigen::MatrixXcd& B, const Eigen::VectorXcd& mu,
                                const Eigen::VectorXcd& lam, double s) {
    const int n = static_cast<int>(A.rows());
    FredholmResult res;
    const double an = std::max(1.0, A.cwiseAbs().maxCoeff());
    const bool hermitian = (A - A.adjoint()).cwiseAbs().maxCoeff() <= 1e-12 * an;
    cplx sqrt_det = 1.0, det = 1.0;
    res.det_modulus_min = 1e300;
    if (hermitian) {
        const Eigen::MatrixXcd R = psd_sqrt(B, "fredholm_formula");
        Eigen::MatrixXcd K = R * A * R;
        K = 0.5 * (K + K.adjoint()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(K, Eigen::EigenvaluesOnly);
        for (int j = 0; j < n; ++j) {
            const cplx f = 1.0 - I1 * s * es.eigenvalues()(j);
            det *= f;
            sqrt_det *= std::sqrt(f);
            res.det_modulus_min = std::min(res.det_modulus_min, std::abs(f));
        }
    } else {
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(B * A, false);
        for (int j = 0; j < n; ++j) {
            const cplx f = 1.0 - I1 * s * es.eigenvalues()(j);
            // principal branch per factor is the continuation from s = 0 only off the negative axis
            if (f.real() <= 0.0) throw NumError("fredholm_formula: determinant branch ambiguous, refine the grid");
            det *= f;
            sqrt_det *= std::sqrt(f);
            res.det_modulus_min = std::min(res.det_modulus_min, std::abs(f));
        }
    }
    const Eigen::MatrixXcd M = Eigen::MatrixXcd::Identity(n, n) - I1 * s * B * A;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(M);
    const Eigen::VectorXcd Rmu = lu.solve(mu);
    const Eigen::VectorXcd RBl = lu.solve(B * lam);
    const cplx expo = 0.5 * I1 * s * mu.dot(A * Rmu) + I1 * lam.dot(Rmu) - 0.5 * lam.dot(RBl);
    res.det = det;
    res.value = std::exp(expo) / sqrt_det;
    return res;
}

FredholmResult fredholm_expectation(const KernelPair& kp, int beta) {
    return fredholm_expectation(kp, beta, 1.0 - 0.5 * beta);
}

FredholmResult fredholm_expectation(const KernelPair& kp, int beta, double p_coeff) {
    const int K = static_cast<int>(kp.grid.nodes.size());
    Eigen::VectorXd w(K);
    for (int k = 0; k < K; ++k) w(k) = std::sqrt(kp.grid.weights[k]);
    const Eigen::MatrixXcd A = w.cast<cplx>().asDiagonal() * kp.A * w.cast<cplx>().asDiagonal();
    const Eigen::MatrixXcd B = w.cast<cplx>().asDiagonal() * kp.B * w.cast<cplx>().asDiagonal();
    const Eigen::VectorXcd m = w.cast<cplx>().cwiseProduct(kp.m);
    const Eigen::VectorXcd lam = p_coeff * w.cast<cplx>().cwiseProduct(kp.P);
    Eigen::MatrixXcd Ah = 0.5 * (A + A.adjoint());
    auto res = fredholm_formula(Ah, B, m, lam, double(beta));
    if (std::abs(res.det) < 1.0 - 1e-9) throw NumError("fredholm_expectation: |det(1 - i beta B A)| < 1");
    return res;
}

// ------------------------------------------------------------ finite-rank oracle

int srank_index(int k, int n) {
    if (k == 0 || k < -n || k > n) throw NumError("srank_index: index outside S_n");
    return k < 0 ? k + n : k + n - 1;
}

namespace {
// X = J xi:  X_k = (xi_k + xi_{-k})/sqrt2,  X_{-k} = (xi_{-k} - xi_k)/(sqrt2 i),  k = 1..n
Eigen::MatrixXcd real_frame(int n) {
    Eigen::MatrixXcd J = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
    const double r = 1.0 / std::sqrt(2.0);
    for (int k = 1; k <= n; ++k) {
        const int p = srank_index(k, n), q = srank_index(-k, n);
        J(p, p) = r;
        J(p, q) = r;
        J(q, q) = r / I1;
        J(q, p) = -r / I1;
    }
    return J;
}

struct RealForm {
    Eigen::MatrixXd A, L;
    Eigen::VectorXd mu;
    Eigen::VectorXcd lam;
};

RealForm to_real(const Eigen::MatrixXcd& B, const Eigen::VectorXcd& mu, const Eigen::MatrixXcd& A,
                 const Eigen::VectorXcd& lam) {
    const int d = static_cast<int>(B.rows());
    if (d % 2 != 0 || A.rows() != d || mu.size() != d || lam.size() != d)
        throw NumError("finite_rank_oracle: dimensions must be 2n");
    const auto J = real_frame(d / 2);
    RealForm rf;
    const Eigen::MatrixXcd Bt = J * B * J.adjoint();
    const Eigen::MatrixXcd At = J * A * J.adjoint();
    const Eigen::VectorXcd mt = J * mu;
    const double tol = 1e-10 * std::max({1.0, B.cwiseAbs().maxCoeff(), A.cwiseAbs().maxCoeff(), mu.cwiseAbs().maxCoeff()});
    if (Bt.imag().cwiseAbs().maxCoeff() > tol || At.imag().cwiseAbs().maxCoeff() > tol ||
        mt.imag().cwiseAbs().maxCoeff() > tol)
        throw NumError("finite_rank_oracle: inputs violate the conjugation symmetry of the lemma");
    Eigen::MatrixXd Br = Bt.real();
    Br = 0.5 * (Br + Br.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Br);
    const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    Eigen::VectorXd r(d);
    for (int i = 0; i < d; ++i) {
        if (es.eigenvalues()(i) < -1e-9 * scale) throw NumError("finite_rank_oracle: covariance is not positive semidefinite");
        r(i) = std::sqrt(std::max(0.0, es.eigenvalues()(i)));
    }
    rf.L = es.eigenvectors() * r.asDiagonal() * es.eigenvectors().transpose();
    rf.A = 0.5 * (At.real() + At.real().transpose());
    rf.mu = mt.real();
    rf.lam = (J * lam).conjugate();  // <lam, xi> = lam^H J^H X = conj(J lam)^T X
    return rf;
}
}  // namespace

cplx finite_rank_oracle(const Eigen::MatrixXcd& B, const Eigen::VectorXcd& mu, const Eigen::MatrixXcd& A,
                        const Eigen::VectorXcd& lam, double s) {
    const auto rf = to_real(B, mu, A, lam);
    const int d = static_cast<int>(rf.A.rows());
    // X = mu + L Z, Z standard normal
    Eigen::MatrixXd LAL = rf.L * rf.A * rf.L;
    LAL = 0.5 * (LAL + LAL.transpose()).eval();
    const Eigen::MatrixXcd M = Eigen::MatrixXcd::Identity(d, d) - I1 * s * LAL.cast<cplx>();
    const Eigen::VectorXcd b = I1 * (rf.L.cast<cplx>() * (s * (rf.A * rf.mu).cast<cplx>() + rf.lam));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(LAL, Eigen::EigenvaluesOnly);
    cplx sq = 1.0;
    for (int j = 0; j < d; ++j) sq *= std::sqrt(1.0 - I1 * s * es.eigenvalues()(j));
    const cplx c0 = 0.5 * I1 * s * rf.mu.dot(rf.A * rf.mu) + I1 * (rf.lam.transpose() * rf.mu.cast<cplx>())(0);
    const cplx quad = 0.5 * (b.transpose() * M.partialPivLu().solve(b))(0);
    return std::exp(c0 + quad) / sq;
}

MCEstimate finite_rank_mc(const Eigen::MatrixXcd& B, const Eigen::VectorXcd& mu, const Eigen::MatrixXcd& A,
                          const Eigen::VectorXcd& lam, double s, long samples, std::uint64_t seed) {
    const auto rf = to_real(B, mu, A, lam);
    const int d = static_cast<int>(rf.A.rows());
    const int W = std::max(1, worker_count());
    std::vector<cplx> sum(W, 0.0);
    std::vector<double> sq(W, 0.0);
    parallel_for(static_cast<std::size_t>(W), [&](std::size_t w) {
        std::mt19937_64 rng(seed + 0x9e3779b97f4a7c15ULL * (w + 1));
        std::normal_distribution<double> nd;
        const long lo = samples * static_cast<long>(w) / W, hi = samples * static_cast<long>(w + 1) / W;
        Eigen::VectorXd Z(d);
        cplx acc = 0.0;
        double acc2 = 0.0;
        for (long k = lo; k < hi; ++k) {
            for (int i = 0; i < d; ++i) Z(i) = nd(rng);
            const Eigen::VectorXd X = rf.mu + rf.L * Z;
            const cplx e = std::exp(0.5 * I1 * s * X.dot(rf.A * X) + I1 * (rf.lam.transpose() * X.cast<cplx>())(0));
            acc += e;
            acc2 += std::norm(e);
        }
        sum[w] = acc;
        sq[w] = acc2;
    });
    MCEstimate est;
    est.samples = samples;
    cplx tot = 0.0;
    double tot2 = 0.0;
    for (int w = 0; w < W; ++w) {
        tot += sum[w];
        tot2 += sq[w];
    }
    est.mean = tot / double(samples);
    const double var = std::max(0.0, tot2 / double(samples) - std::norm(est.mean));
    est.std_error = std::sqrt(var / double(samples));
    return est;
}

// ------------------------------------------------------------ one linear statistic

OneStatExpansion one_stat_expansion(const InterpolationData& data, const std::function<cplx(cplx)>& f, int beta,
                                    int nodes) {
    const auto op = complex_master(data, nodes);
    const auto& g = op.grid;
    const int n = g.n();
    std::vector<cplx> z(n);
    Eigen::VectorXcd fv(n), inv_d1(n);
    for (int i = 0; i < n; ++i) {
        z[i] = data.gamma(g.x2.nodes[i]);
        inv_d1(i) = 1.0 / data.dgamma(g.x2.nodes[i]);
        fv(i) = f(z[i]);
    }
    // d/dz on the curve
    const Eigen::MatrixXcd Dz = inv_d1.asDiagonal() * g.D.cast<cplx>();
    const Eigen::RowVectorXcd mu = g.nu.cast<cplx>();
    const Eigen::MatrixXcd& Inv = op.inverse;
    auto noncommutative = [&](const Eigen::VectorXcd& h) {
        const Eigen::VectorXcd hp = Dz * h;
        Eigen::MatrixXcd H(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) H(i, j) = (i == j) ? hp(i) : (h(i) - h(j)) / (z[i] - z[j]);
        return H;
    };
    const double c = 1.0 / beta - 0.5;
    OneStatExpansion out;
    const Eigen::VectorXcd u = Inv * fv;                // Delta^{-1} f
    const Eigen::VectorXcd du = Dz * u;                 // d Delta^{-1} f
    out.T1 = c * (mu * du)(0);
    out.T2 = c * c * (mu * (Dz * (Inv * du)))(0);
    const Eigen::MatrixXcd H = noncommutative(u);       // D Delta^{-1} f
    // variable 1 = rows, variable 2 = columns
    const Eigen::MatrixXcd H2 = (Dz * (Inv * (H * Inv.transpose()))) * Dz.transpose();
    out.T3 = 0.5 * c * c * (mu * H2 * mu.transpose())(0);
    const Eigen::MatrixXcd H4 = (Inv * H) * Dz.transpose();
    const Eigen::MatrixXcd H4lit = (Inv * noncommutative(fv)) * Dz.transpose();
    cplx t4 = 0.0, t4l = 0.0;
    for (int i = 0; i < n; ++i) {
        t4 += mu(i) * H4(i, i);
        t4l += mu(i) * H4lit(i, i);
    }
    out.T4 = t4 / (2.0 * beta);
    out.T4_literal = t4l / (2.0 * beta);
    out.c1 = out.T1;
    out.c2 = out.T2 + out.T3 + out.T4;
    out.c1_literal = out.T1 + out.T3;
    out.c2_literal = out.T2 + out.T4_literal;
    return out;
}

// ------------------------------------------------------------ small-N real model

cplx TensorMarginals::one_body(const std::vector<cplx>& u) const {
    std::vector<cplx> v(u.size());
    for (std::size_t j = 0; j < u.size(); ++j) v[j] = p1[j] * u[j];
    return double(N) * pairwise_sum(v);
}

cplx TensorMarginals::two_body(const Eigen::MatrixXcd& U) const {
    if (N < 2) return 0.0;
    const int M = static_cast<int>(x.size());
    std::vector<cplx> v(static_cast<std::size_t>(M) * M);
    for (int j = 0; j < M; ++j)
        for (int k = 0; k < M; ++k) v[static_cast<std::size_t>(j) * M + k] = p2(j, k) * U(j, k);
    return double(N) * (N - 1) * pairwise_sum(v);
}

TensorMarginals real_model_marginals(int N, int beta, const std::function<cplx(cplx)>& V, const Curve& curve,
                                     int M) {
    if (N < 1) throw NumError("real_model_marginals: N >= 1");
    const auto gl = make_grid(GridKind::gauss_legendre, M, curve.a, curve.b);
    TensorMarginals tm;
    tm.N = N;
    tm.x = gl.nodes;
    std::vector<double> lw(M);
    std::vector<cplx> z(M);
    for (int j = 0; j < M; ++j) {
        z[j] = curve.eval(gl.nodes[j]);
        lw[j] = std::log(gl.weights[j]) - N * beta * std::real(V(z[j])) + std::log(std::abs(curve.deriv1(gl.nodes[j])));
    }
    const double lmax = *std::max_element(lw.begin(), lw.end());
    std::vector<double> w(M);
    for (int j = 0; j < M; ++j) w[j] = std::exp(lw[j] - lmax);
    Eigen::MatrixXd P(M, M);
    for (int j = 0; j < M; ++j)
        for (int k = 0; k < M; ++k) P(j, k) = std::pow(std::abs(z[j] - z[k]), beta);

    tm.p1.assign(M, 0.0);
    if (N == 1) {
        const double Z = std::accumulate(w.begin(), w.end(), 0.0);
        for (int j = 0; j < M; ++j) tm.p1[j] = w[j] / Z;
        tm.p2 = Eigen::MatrixXd::Zero(M, M);
        return tm;
    }
    tm.p2.resize(M, M);
    parallel_for(static_cast<std::size_t>(M), [&](std::size_t jj) {
        const int j0 = static_cast<int>(jj);
        std::vector<int> idx(N);
        idx[0] = j0;
        for (int j1 = 0; j1 < M; ++j1) {
            idx[1] = j1;
            std::vector<double> acc;
            std::function<void(int, double)> rec = [&](int level, double part) {
                if (level == N) {
                    acc.push_back(part);
                    return;
                }
                for (int k = 0; k < M; ++k) {
                    double v = part * w[k];
                    for (int l = 0; l < level; ++l) v *= P(idx[l], k);
                    idx[level] = k;
                    rec(level + 1, v);
                }
            };
            rec(2, w[j0] * w[j1] * P(j0, j1));
            tm.p2(j0, j1) = pairwise_sum(acc);
        }
    });
    const double Z = tm.p2.sum();
    if (!(Z > 0.0) || !std::isfinite(Z)) throw NumError("real_model_marginals: degenerate normalisation");
    tm.p2 /= Z;
    for (int j = 0; j < M; ++j) tm.p1[j] = tm.p2.row(j).sum();
    return tm;
}

namespace {
LoopCheck loop_sides(int N, int beta, const InterpolationData& data, const Curve& curve, const RealFn& F,
                     const TensorMarginals& tm, const ChebFun& h, const ChebFun& hp) {
    const int M = static_cast<int>(tm.x.size());
    auto Rgam = [&](double x) { return std::real(curve.deriv2(x) / curve.deriv1(x)); };
    auto Dh = [&](double x, double y) -> cplx {
        if (x == y) return hp(x) + Rgam(x) * h(x);
        return std::real((curve.deriv1(x) * h(x) - curve.deriv1(y) * h(y)) / (curve.eval(x) - curve.eval(y)));
    };
    // \int D[h](x, y) dnu(y) and its nu-mean
    const auto gy = make_grid(GridKind::gauss_chebyshev_sqrt, 96, 0.0, 1.0);
    auto Dnu = [&](double x) {
        std::vector<cplx> v(gy.size());
        for (std::size_t k = 0; k < gy.size(); ++k) v[k] = kSemi * gy.weights[k] * Dh(x, gy.nodes[k]);
        return pairwise_sum(v);
    };
    const cplx Dnunu = semicircle_mean([&](double x) { return Dnu(x); }, 96);

    std::vector<cplx> Fx(M), diag(M), dnu(M), Rh(M);
    Eigen::MatrixXcd U(M, M);
    for (int j = 0; j < M; ++j) {
        const double x = tm.x[j];
        Fx[j] = F(x);
        Rh[j] = hp(x) + Rgam(x) * h(x);
        diag[j] = Rh[j];
        dnu[j] = Dnu(x);
        for (int k = 0; k < M; ++k) U(j, k) = Dh(x, tm.x[k]);
    }
    const double Nd = N;
    LoopCheck lc;
    lc.lhs = tm.one_body(Fx) / Nd - semicircle_mean(F);
    // E \int\int D dL dL with L = L_N - nu
    const cplx pair = (tm.one_body(diag) + tm.two_body(U)) / (Nd * Nd);
    const cplx quad = pair - 2.0 * tm.one_body(dnu) / Nd + Dnunu;
    lc.rhs = 0.5 * quad + (1.0 / beta - 0.5) * tm.one_body(Rh) / (Nd * Nd);
    lc.residual = lc.lhs - lc.rhs;
    (void)data;
    return lc;
}
}  // namespace

LoopCheck loop_equation_check(int N, int beta, const InterpolationData& data, const Curve& curve, const RealFn& F,
                              int M) {
    const auto op = real_master(data, 64);
    const Eigen::VectorXcd fn = op.inverse_apply(op.grid.sample(F));
    // h = Xi^{-1}[F] continued to the whole integration domain by the inverse formula
    const ChebFun h([&](double x) { return real_inverse_at(data, op, F, fn, x); }, 64, curve.a, curve.b);
    const ChebFun hp = h.derivative();
    const auto lc = loop_sides(N, beta, data, curve, F, real_model_marginals(N, beta, data.solution().V, curve, M), h, hp);
    const auto lc2 =
        loop_sides(N, beta, data, curve, F, real_model_marginals(N, beta, data.solution().V, curve, M + M / 4), h, hp);
    if (std::abs(lc.residual - lc2.residual) > 1e-7 * std::max(1.0, std::abs(lc.lhs)))
        throw NumError("loop_equation_check: tensor quadrature tolerance not met, increase M");
    return lc2;
}

}  // namespace cg
