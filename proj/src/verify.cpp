// Acceptance suite: exact small-N oracles, operator identities, Monte Carlo checks.

#include "contourgas/verify.hpp"

#include "contourgas/contour.hpp"
#include "contourgas/equilibrium.hpp"
#include "contourgas/fluctuations.hpp"
#include "contourgas/numkit.hpp"
#include "contourgas/operators.hpp"
#include "contourgas/partition.hpp"
#include "contourgas/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>

namespace cg {

bool Metric::pass() const {
    if (!std::isfinite(value)) return false;
    if (relation == "near") return std::abs(value - reference) <= tolerance;
    if (relation == "ge") return value >= reference - tolerance;
    return value <= tolerance;
}

bool CheckResult::pass() const {
    if (!error.empty() || metrics.empty()) return false;
    return std::all_of(metrics.begin(), metrics.end(), [](const Metric& m) { return m.pass(); });
}

namespace {

// test potentials: V = z^2 + g z^4 with g = 0.15 e^{i pi/4} on its analytic curve family,
// and V = z^2 on the real line
const cplx kQuarticG = 0.15 * std::polar(1.0, PI / 4.0);

struct Setup {
    OneCutSolution sol;
    CurveFamily fam;
    InterpolationData at(double t) const { return InterpolationData(sol, fam, t); }
};
const Setup& quartic() {
    static const Setup s = [] {
        auto sol = solve_one_cut_homotopy(ComplexPolynomial({0.0, 0.0, 1.0, 0.0, kQuarticG}));
        return Setup{sol, analytic_param(sol)};
    }();
    return s;
}
const Setup& quadratic() {
    static const Setup s = [] {
        auto sol = solve_one_cut(ComplexPolynomial({0.0, 0.0, 1.0}), -1.0, 1.0);
        return Setup{sol, analytic_param(sol)};
    }();
    return s;
}
const Setup& real_line() {
    static const Setup s = [] {
        auto sol = solve_one_cut(ComplexPolynomial({0.0, 0.0, 1.0}), -1.0, 1.0);
        return Setup{sol, CurveFamily::affine(sol.zeta1, sol.zeta2, 0.05, 0.1)};
    }();
    return s;
}

Metric metric(std::string name, double value, double tol, std::string oracle, std::string rel = "le",
              double ref = 0.0) {
    Metric m;
    m.name = std::move(name);
    m.value = value;
    m.tolerance = tol;
    m.oracle = std::move(oracle);
    m.relation = std::move(rel);
    m.reference = ref;
    return m;
}

std::string fmt_t(double t) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", t);
    return buf;
}

// symplectic-type frame taking real coordinates to the S_n indexing
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

CheckResult named(std::string id, std::string title) {
    CheckResult r;
    r.id = std::move(id);
    r.title = std::move(title);
    return r;
}

long scaled(long n, double s) { return std::max(1L, static_cast<long>(std::llround(double(n) * s))); }

}  // namespace

// ------------------------------------------------------------ A1
CheckResult check_selberg_quadrature(const VerifyOptions&) {
    CheckResult r = named("A1", "Selberg closed form against tensor quadrature");
    auto V = [](cplx z) { return z * z; };
    for (int beta : {2, 4})
        for (int N : {1, 2, 3}) {
            const auto q = z_complex_quadrature(N, beta, V, truncated_line(-1.0, 1.0, N, beta), 1e-9);
            const double exact = selberg_exact(N, beta, -1.0, 1.0, 0.0);
            const double rel = std::abs(q.value() / exact - 1.0);
            r.metrics.push_back(metric("rel_error N=" + std::to_string(N) + " beta=" + std::to_string(beta), rel,
                                       N <= 2 ? 1e-6 : 1e-4, "selberg_closed_form"));
        }
    return r;
}

// ------------------------------------------------------------ A2
CheckResult check_expansion(const VerifyOptions&) {
    CheckResult r = named("A2", "large-N expansion coefficients and residual contraction");
    const auto& s = quadratic();
    const auto F = f_coefficients(s.at(1.0), 2);
    r.metrics.push_back(metric("F_-2 (equilibrium)", std::abs(F.F_m2 + (std::log(2.0) + 0.75)), 1e-8,
                               "closed_form -(ln2+3/4)"));
    r.metrics.push_back(metric("F_-1 (equilibrium)", std::abs(F.F_m1 - (std::log(2.0 * PI) - 1.0)), 1e-8,
                               "closed_form ln(2pi)-1"));
    const auto rep = selberg_expansion({8, 16, 32, 64, 128}, 2, -1.0, 1.0, 0.0);
    r.metrics.push_back(metric("F_-2 (gaussian)", std::abs(rep.F_m2 + (std::log(2.0) + 0.75)), 1e-8,
                               "closed_form -(ln2+3/4)"));
    r.metrics.push_back(metric("F_-1 (gaussian)", std::abs(rep.F_m1 - (std::log(2.0 * PI) - 1.0)), 1e-8,
                               "closed_form ln(2pi)-1"));
    const auto& tb = rep.residual_table;
    for (std::size_t k = 1; k + 1 < tb.size(); ++k) {
        const double d0 = std::abs(tb[k].residual - tb[k - 1].residual);
        const double d1 = std::abs(tb[k + 1].residual - tb[k].residual);
        r.metrics.push_back(metric("contraction N=" + std::to_string(tb[k].N), d1 / d0, 0.6, "selberg_exact"));
    }
    return r;
}

// ------------------------------------------------------------ A3
CheckResult check_operator_roundtrips(const VerifyOptions& o) {
    CheckResult r = named("A3", "master operator round trips and the airfoil identity");
    std::mt19937_64 rng(split_seed(o.seed, 301));
    std::normal_distribution<double> nd;
    const auto& s = quartic();
    for (double t : {0.0, 0.5, 1.0}) {
        const auto d = s.at(t);
        const auto X = real_master(d, 64), D = complex_master(d, 64);
        const int n = X.grid.n(), m = D.grid.n();
        const Eigen::VectorXcd one_x = Eigen::VectorXcd::Ones(n), one_z = Eigen::VectorXcd::Ones(m);
        Eigen::VectorXcd z(m);
        for (int i = 0; i < m; ++i) z(i) = d.gamma(D.grid.x2.nodes[i]);
        double ex = 0.0, ez = 0.0;
        for (int rep = 0; rep < 10; ++rep) {
            const int deg = 1 + rep % 5;
            std::vector<double> cr(deg + 1);
            std::vector<cplx> cz(deg + 1);
            for (int k = 0; k <= deg; ++k) {
                cr[k] = nd(rng);
                cz[k] = cplx(nd(rng), nd(rng)) / 2.0;
            }
            const Eigen::VectorXcd g = X.grid.sample([&](double x) {
                double v = 0.0;
                for (int k = deg; k >= 0; --k) v = v * x + cr[k];
                return cplx(v);
            });
            ex = std::max(ex, (X.apply(X.inverse_apply(g)) - (g - X.k(g) * one_x)).cwiseAbs().maxCoeff());
            const ComplexPolynomial P(cz);
            Eigen::VectorXcd h(m);
            for (int i = 0; i < m; ++i) h(i) = P(z(i));
            ez = std::max(ez, (D.apply(D.inverse_apply(h)) - (h - D.k(h) * one_z)).cwiseAbs().maxCoeff());
        }
        r.metrics.push_back(metric("real round trip t=" + fmt_t(t), ex, 1e-7, "identity g - K[g]"));
        r.metrics.push_back(metric("complex round trip t=" + fmt_t(t), ez, 1e-7, "identity g - K[g]"));
    }
    r.metrics.push_back(metric("airfoil identity", airfoil_residual(64, 5), 1e-8, "airfoil_chebyshev"));
    return r;
}

// ------------------------------------------------------------ A4
CheckResult check_pullback(const VerifyOptions&) {
    CheckResult r = named("A4", "semicircle pullback identity");
    const int n = 64;
    for (const Setup* s : {&quadratic(), &quartic()}) {
        double worst = 0.0;
        for (int k = 0; k <= 10; ++k) {
            const auto d = s->at(0.1 * k);
            for (int j = 0; j < n; ++j) {
                const double x = 0.5 * (1.0 - std::cos(PI * (j + 0.5) / n));
                const double sc = 8.0 / PI * std::sqrt(x * (1.0 - x));
                worst = std::max(worst, std::abs(semicircle_pullback(d, x) / sc - 1.0));
            }
        }
        r.metrics.push_back(metric(s == &quadratic() ? "quadratic" : "quartic", worst, 1e-8, "semicircle_density"));
    }
    return r;
}

// ------------------------------------------------------------ A5
CheckResult check_clt(const VerifyOptions& o) {
    CheckResult r = named("A5", "central limit theorem at N = 128");
    r.monte_carlo = true;
    const auto& s = quartic();
    const auto d0 = s.at(0.0);
    for (int beta : {2, 4}) {
        const cplx v = clt_cov(d0, [](double x) { return cplx(x); }, [](double x) { return cplx(x); }, beta);
        r.metrics.push_back(metric("V_0[x] beta=" + std::to_string(beta), std::abs(v - 1.0 / (8.0 * beta)), 1e-8,
                                   "closed_form 1/(8 beta)"));
    }
    const int N = 128;
    int config = 0;
    for (double t : {0.0, 1.0}) {
        const auto d = s.at(t);
        for (int beta : {2, 4}) {
            SamplerConfig cfg;
            cfg.samples_per_chain = scaled(2500, o.sample_scale);
            cfg.seed = split_seed(o.seed, 500 + config++);
            const auto set = run_chains(RealModelTarget::from_data(d, N, beta), cfg);
            const std::string tag = " t=" + fmt_t(t) + " beta=" + std::to_string(beta);
            for (int p : {1, 2}) {
                const std::function<double(double)> f = [p](double x) { return p == 1 ? x : x * x; };
                const RealFn F = [f](double x) { return cplx(f(x)); };
                const auto st = summarize(linear_statistic(set, f));
                const std::string fn = p == 1 ? " f=x" : " f=x^2";
                r.metrics.push_back(metric("mean z" + tag + fn,
                                           std::abs(st.mean - std::real(clt_mean(d, F, beta))) / st.mean_se, 3.0,
                                           "clt_mean"));
                r.metrics.push_back(metric("variance z" + tag + fn,
                                           std::abs(st.variance - std::real(clt_cov(d, F, F, beta))) / st.variance_se,
                                           3.0, "clt_cov"));
                r.metrics.push_back(metric("r_hat" + tag + fn, st.r_hat, 1.05, "gelman_rubin"));
            }
        }
    }
    return r;
}

// ------------------------------------------------------------ A6
CheckResult check_fredholm_identity(const VerifyOptions& o) {
    CheckResult r = named("A6", "Fredholm formula against the finite-rank Gaussian integral");
    std::mt19937_64 rng(split_seed(o.seed, 601));
    std::normal_distribution<double> nd;
    double err = 0.0, det_min = 1e300;
    for (int n : {1, 2})
        for (int rep = 0; rep < 10; ++rep) {
            const int dim = 2 * n;
            Eigen::MatrixXd G(dim, dim), S(dim, dim);
            Eigen::VectorXd mu(dim), lam(dim);
            for (int i = 0; i < dim; ++i) {
                mu(i) = nd(rng);
                lam(i) = nd(rng);
                for (int j = 0; j < dim; ++j) {
                    G(i, j) = nd(rng) / std::sqrt(double(dim));
                    S(i, j) = nd(rng) / std::sqrt(double(dim));
                }
            }
            const auto J = frame(n);
            const Eigen::MatrixXcd B = J.adjoint() * (G * G.transpose()).cast<cplx>() * J;
            const Eigen::MatrixXcd A = J.adjoint() * (0.5 * (S + S.transpose())).cast<cplx>() * J;
            const Eigen::VectorXcd m = J.adjoint() * mu.cast<cplx>(), l = J.adjoint() * lam.cast<cplx>();
            for (double beta : {2.0, 4.0}) {
                const auto fr = fredholm_formula(A, B, m, l, beta);
                err = std::max(err, std::abs(fr.value - finite_rank_oracle(B, m, A, l, beta)));
                det_min = std::min({det_min, std::abs(fr.det), fr.det_modulus_min});
            }
        }
    r.metrics.push_back(metric("max |fredholm - oracle|", err, 1e-9, "finite_rank_gaussian_integral"));
    r.metrics.push_back(metric("min |det(1 - i beta B A)|", det_min, 1e-9, "bound 1", "ge", 1.0));
    return r;
}

// ------------------------------------------------------------ A7
CheckResult check_phase_expectation(const VerifyOptions& o) {
    CheckResult r = named("A7", "phase expectation: Monte Carlo against Fredholm");
    r.monte_carlo = true;
    SamplerConfig cfg;
    cfg.samples_per_chain = scaled(2500, o.sample_scale);
    cfg.seed = split_seed(o.seed, 701);
    const auto line = phase_expectation_mc(real_line().at(1.0), 64, 2, cfg);
    r.metrics.push_back(metric("real line |E - 1|", std::abs(line.value - 1.0), 0.0, "exact 1"));
    const auto d1 = quartic().at(1.0);
    const auto pk = phase_kernels(d1);
    const auto fr = fredholm_expectation(fourier_kernels(d1, pk, 2), 2);
    const auto mc = phase_expectation_mc(d1, 64, 2, cfg);
    r.metrics.push_back(metric("|MC - Fredholm| N=64", std::abs(mc.value - fr.value), 0.1, "fredholm_expectation"));
    r.metrics.push_back(metric("r_hat", mc.r_hat, 1.05, "gelman_rubin"));
    return r;
}

// ------------------------------------------------------------ A8
CheckResult check_loop_equation(const VerifyOptions&) {
    CheckResult r = named("A8", "loop equation residual by tensor quadrature");
    const auto d = real_line().at(1.0);
    const auto& sol = d.solution();
    const RealFn F = [](double x) { return cplx(8.0 * x * (x - 0.5) - 1.0); };
    for (int N : {2, 3}) {
        const auto lc = loop_equation_check(N, 2, d, truncated_line(sol.zeta1, sol.zeta2, N, 2), F);
        r.metrics.push_back(metric("residual N=" + std::to_string(N), std::abs(lc.residual), 1e-5,
                                   "tensor_quadrature"));
    }
    return r;
}

// ------------------------------------------------------------ A9
CheckResult check_concentration(const VerifyOptions& o) {
    CheckResult r = named("A9", "concentration scaling and log-energy positivity");
    r.monte_carlo = true;
    const auto d1 = quartic().at(1.0), d0 = real_line().at(0.0);
    const auto scan = concentration_scan(d1, 2, {32, 64, 128}, [](double x) { return x * x; },
                                         static_cast<int>(scaled(200, o.sample_scale)), split_seed(o.seed, 901));
    r.metrics.push_back(metric("D^2 decay exponent", scan.d2_exponent, 0.3, "band [0.7, 1.3]", "near", 1.0));

    std::mt19937_64 rng(split_seed(o.seed, 902));
    std::uniform_real_distribution<double> pos(-0.05, 1.0), wid(1e-7, 0.05), mass(-1.0, 1.0);
    double lowest = 1e300;
    for (int k = 0; k < 100; ++k) {
        CurveMeasure m;
        double total = 0.0;
        const int nb = 2 + k % 9;
        for (int j = 0; j < nb; ++j) {
            const double lo = pos(rng), w = mass(rng);
            m.boxes.push_back({lo, lo + wid(rng), w});
            total += w;
        }
        if (k % 2) m.nu_coeff = -total;
        else m.boxes.back().mass -= total;
        lowest = std::min(lowest, log_energy(m, k % 3 ? d1 : d0));
    }
    r.metrics.push_back(metric("min log energy (100 measures)", lowest, 1e-10, "positivity", "ge", 0.0));
    return r;
}

// ------------------------------------------------------------ suite
std::vector<std::string> verify_ids() { return {"A1", "A2", "A3", "A4", "A5", "A6", "A7", "A8", "A9"}; }

CheckResult run_check(const std::string& id, const VerifyOptions& o) {
    using Fn = CheckResult (*)(const VerifyOptions&);
    static const std::vector<std::pair<std::string, Fn>> table = {
        {"A1", check_selberg_quadrature}, {"A2", check_expansion},         {"A3", check_operator_roundtrips},
        {"A4", check_pullback},           {"A5", check_clt},               {"A6", check_fredholm_identity},
        {"A7", check_phase_expectation},  {"A8", check_loop_equation},     {"A9", check_concentration}};
    const auto it = std::find_if(table.begin(), table.end(), [&](const auto& e) { return e.first == id; });
    if (it == table.end()) throw std::invalid_argument("unknown check id " + id);
    auto attempt = [&](const VerifyOptions& opt) {
        try {
            return it->second(opt);
        } catch (const std::exception& e) {
            CheckResult c;
            c.id = id;
            c.error = e.what();
            c.monte_carlo = id == "A5" || id == "A7" || id == "A9";
            return c;
        }
    };
    CheckResult res = attempt(o);
    if (res.monte_carlo && !res.pass()) {
        VerifyOptions twice = o;
        twice.sample_scale *= 2.0;
        res = attempt(twice);
        res.attempts = 2;
    }
    return res;
}

std::vector<CheckResult> verify_suite(const VerifyOptions& o) {
    std::vector<CheckResult> out;
    for (const auto& id : verify_ids()) {
        if (!o.only.empty() && std::find(o.only.begin(), o.only.end(), id) == o.only.end()) continue;
        out.push_back(run_check(id, o));
    }
    return out;
}

}  // namespace cg
