#include "contourgas/numkit.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <cstdlib>
#include <exception>
#include <sstream>
#include <thread>

namespace cg {

// ---------------------------------------------------------------- polynomials

ComplexPolynomial::ComplexPolynomial(std::vector<cplx> c) : coeffs(std::move(c)) {
    while (coeffs.size() > 1 && coeffs.back() == cplx(0.0)) coeffs.pop_back();
    if (coeffs.empty()) coeffs.push_back(0.0);
}

cplx ComplexPolynomial::operator()(cplx z) const { return poly_eval(*this, z); }

cplx poly_eval(const ComplexPolynomial& p, cplx z) {
    cplx acc = 0.0;
    for (auto it = p.coeffs.rbegin(); it != p.coeffs.rend(); ++it) acc = acc * z + *it;
    return acc;
}

ComplexPolynomial ComplexPolynomial::derivative() const {
    if (coeffs.size() <= 1) return ComplexPolynomial({0.0});
    std::vector<cplx> d(coeffs.size() - 1);
    for (std::size_t k = 1; k < coeffs.size(); ++k) d[k - 1] = coeffs[k] * double(k);
    return ComplexPolynomial(d);
}

ComplexPolynomial ComplexPolynomial::integral() const {
    std::vector<cplx> d(coeffs.size() + 1, 0.0);
    for (std::size_t k = 0; k < coeffs.size(); ++k) d[k + 1] = coeffs[k] / double(k + 1);
    return ComplexPolynomial(d);
}

std::string ComplexPolynomial::str() const {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t k = 0; k < coeffs.size(); ++k) {
        if (k) os << " + ";
        os << "(" << coeffs[k].real() << "," << coeffs[k].imag() << ")z^" << k;
    }
    return os.str();
}

ComplexPolynomial poly_mul(const ComplexPolynomial& a, const ComplexPolynomial& b) {
    std::vector<cplx> c(a.coeffs.size() + b.coeffs.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.coeffs.size(); ++i)
        for (std::size_t j = 0; j < b.coeffs.size(); ++j) c[i + j] += a.coeffs[i] * b.coeffs[j];
    return ComplexPolynomial(c);
}

std::pair<ComplexPolynomial, AffineMap> poly_normalize(const ComplexPolynomial& p) {
    const int k = p.degree();
    if (k < 2) throw NumError("invalid potential: degree < 2");
    AffineMap m;
    // c a^k = 1/k
    m.scale = std::pow(1.0 / (double(k) * p.leading()), 1.0 / double(k));
    if (std::abs(p.leading() * double(k) - 1.0) < 1e-15) m.scale = 1.0;
    std::vector<cplx> c(p.coeffs.size());
    cplx s = 1.0;
    for (std::size_t j = 0; j < c.size(); ++j) {
        c[j] = p.coeffs[j] * s;
        s *= m.scale;
    }
    m.dropped_constant = c[0];
    c[0] = 0.0;
    c.back() = 1.0 / double(k);
    return {ComplexPolynomial(c), m};
}

std::vector<cplx> poly_roots(const ComplexPolynomial& p) {
    const int k = p.degree();
    if (k < 1) return {};
    Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(k, k);
    for (int i = 1; i < k; ++i) C(i, i - 1) = 1.0;
    for (int i = 0; i < k; ++i) C(i, k - 1) = -p.coeffs[i] / p.leading();
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(C);
    std::vector<cplx> r(k);
    const auto dp = p.derivative();
    for (int i = 0; i < k; ++i) {
        cplx z = es.eigenvalues()[i];
        const cplx d = dp(z);
        if (std::abs(d) > 0.0) z -= p(z) / d;
        r[i] = z;
    }
    std::sort(r.begin(), r.end(), [](cplx a, cplx b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    return r;
}

// ---------------------------------------------------------------- quadrature

std::string grid_kind_name(GridKind k) {
    switch (k) {
        case GridKind::gauss_legendre: return "gauss_legendre";
        case GridKind::gauss_chebyshev_sqrt: return "gauss_chebyshev_sqrt";
        case GridKind::inverse_sqrt: return "inverse_sqrt";
        case GridKind::closed_loop_trapezoid: return "closed_loop_trapezoid";
    }
    return "?";
}

namespace {

// Legendre nodes on [-1,1] by Newton from the Tricomi initial guess
void legendre_rule(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(PI * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = z;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) {
                p1 = z;
                p0 = 1.0;
            }
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) {
                // one more evaluation of dp at converged z
                double q0 = 1.0, q1 = z;
                for (int k = 2; k <= n; ++k) {
                    const double q2 = ((2.0 * k - 1.0) * z * q1 - (k - 1.0) * q0) / k;
                    q0 = q1;
                    q1 = q2;
                }
                if (n == 1) q0 = 1.0, q1 = z;
                dp = n * (z * q1 - q0) / (z * z - 1.0);
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    if (n % 2 == 1) x[n / 2] = 0.0;
}

}  // namespace

const WeightedGrid& gl_unit(int n) {
    static std::map<int, WeightedGrid> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lk(mu);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    WeightedGrid g = make_grid(GridKind::gauss_legendre, n, 0.0, 1.0);
    return cache.emplace(n, std::move(g)).first->second;
}

WeightedGrid make_grid(GridKind kind, int n, double a, double b) {
    if (n < 1) throw NumError("make_grid: node count must be >= 1");
    WeightedGrid g;
    g.kind = kind;
    g.a = a;
    g.b = b;
    g.nodes.resize(n);
    g.weights.resize(n);
    const double h = 0.5 * (b - a);
    switch (kind) {
        case GridKind::gauss_legendre: {
            std::vector<double> x, w;
            legendre_rule(n, x, w);
            for (int i = 0; i < n; ++i) {
                g.nodes[i] = a + h * (1.0 + x[i]);
                g.weights[i] = h * w[i];
            }
            break;
        }
        case GridKind::gauss_chebyshev_sqrt: {
            // zeros of U_n, weight sqrt((x-a)(b-x))
            for (int k = 1; k <= n; ++k) {
                const double th = k * PI / (n + 1);
                const double s = std::sin(th);
                const int i = n - k;  // ascending order
                g.nodes[i] = a + h * (1.0 + std::cos(th));
                g.weights[i] = PI / (n + 1) * s * s * h * h;
            }
            break;
        }
        case GridKind::inverse_sqrt: {
            for (int k = 1; k <= n; ++k) {
                const double th = (2.0 * k - 1.0) * PI / (2.0 * n);
                const int i = n - k;
                g.nodes[i] = a + h * (1.0 + std::cos(th));
                g.weights[i] = PI / n;
            }
            break;
        }
        case GridKind::closed_loop_trapezoid: {
            g.a = 0.0;
            g.b = 2.0 * PI;
            for (int k = 0; k < n; ++k) {
                g.nodes[k] = 2.0 * PI * k / n;
                g.weights[k] = 2.0 * PI / n;
            }
            break;
        }
    }
    return g;
}

std::vector<double> barycentric_weights(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<double> lw(n), sg(n);
    for (std::size_t j = 0; j < n; ++j) {
        double l = 0.0, s = 1.0;
        for (std::size_t k = 0; k < n; ++k) {
            if (k == j) continue;
            const double d = x[j] - x[k];
            l -= std::log(std::abs(d));
            if (d < 0) s = -s;
        }
        lw[j] = l;
        sg[j] = s;
    }
    const double mx = *std::max_element(lw.begin(), lw.end());
    std::vector<double> lam(n);
    for (std::size_t j = 0; j < n; ++j) lam[j] = sg[j] * std::exp(lw[j] - mx);
    return lam;
}

std::vector<double> barycentric_weights(const WeightedGrid& g) {
    const int n = static_cast<int>(g.size());
    std::vector<double> lam(n);
    switch (g.kind) {
        case GridKind::gauss_chebyshev_sqrt:
            for (int k = 1; k <= n; ++k) {
                const double s = std::sin(k * PI / (n + 1));
                lam[n - k] = ((k % 2) ? 1.0 : -1.0) * s * s;
            }
            return lam;
        case GridKind::inverse_sqrt:
            for (int k = 1; k <= n; ++k) {
                lam[n - k] = ((k % 2) ? 1.0 : -1.0) * std::sin((2.0 * k - 1.0) * PI / (2.0 * n));
            }
            return lam;
        default:
            return barycentric_weights(g.nodes);
    }
}

cplx barycentric_eval(const std::vector<double>& x, const std::vector<double>& lam,
                      const std::vector<cplx>& f, cplx z) {
    cplx num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const cplx d = z - x[j];
        if (d == cplx(0.0)) return f[j];
        const cplx c = lam[j] / d;
        num += c * f[j];
        den += c;
    }
    return num / den;
}

std::vector<double> barycentric_row(const std::vector<double>& x, const std::vector<double>& lam,
                                    double z) {
    const std::size_t n = x.size();
    std::vector<double> r(n, 0.0);
    double den = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double d = z - x[j];
        if (d == 0.0) {
            std::fill(r.begin(), r.end(), 0.0);
            r[j] = 1.0;
            return r;
        }
        r[j] = lam[j] / d;
        den += r[j];
    }
    for (auto& v : r) v /= den;
    return r;
}

std::vector<double> diff_matrix(const std::vector<double>& x, const std::vector<double>& lam) {
    const std::size_t n = x.size();
    std::vector<double> D(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double diag = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double v = (lam[j] / lam[i]) / (x[i] - x[j]);
            D[i * n + j] = v;
            diag -= v;
        }
        D[i * n + i] = diag;
    }
    return D;
}

template <class T>
static T pairwise_impl(const T* v, std::size_t n) {
    if (n <= 8) {
        T s = T(0);
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    const std::size_t m = n / 2;
    return pairwise_impl(v, m) + pairwise_impl(v + m, n - m);
}

double pairwise_sum(const double* v, std::size_t n) { return pairwise_impl(v, n); }
cplx pairwise_sum(const cplx* v, std::size_t n) { return pairwise_impl(v, n); }

// ---------------------------------------------------------------- ChebFun

std::vector<double> ChebFun::points(int n, double a, double b) {
    std::vector<double> x(n);
    for (int j = 0; j < n; ++j) x[j] = 0.5 * (a + b) + 0.5 * (b - a) * std::cos((j + 0.5) * PI / n);
    return x;
}

ChebFun ChebFun::from_values(const std::vector<cplx>& fv, double a, double b) {
    const int n = static_cast<int>(fv.size());
    std::vector<cplx> c(n, 0.0);
    for (int k = 0; k < n; ++k) {
        cplx s = 0.0;
        for (int j = 0; j < n; ++j) s += fv[j] * std::cos(k * (j + 0.5) * PI / n);
        c[k] = s * (2.0 / n);
    }
    c[0] *= 0.5;
    return from_coeffs(std::move(c), a, b);
}

ChebFun::ChebFun(const std::function<cplx(double)>& f, int n, double a, double b) {
    const auto x = points(n, a, b);
    std::vector<cplx> fv(n);
    for (int j = 0; j < n; ++j) fv[j] = f(x[j]);
    *this = from_values(fv, a, b);
}

ChebFun ChebFun::from_coeffs(std::vector<cplx> c, double a, double b) {
    ChebFun f;
    f.c_ = std::move(c);
    f.a_ = a;
    f.b_ = b;
    return f;
}

cplx ChebFun::operator()(cplx x) const {
    const cplx u = (2.0 * x - (a_ + b_)) / (b_ - a_);
    cplx b1 = 0.0, b2 = 0.0;
    for (std::size_t k = c_.size(); k-- > 1;) {
        const cplx t = 2.0 * u * b1 - b2 + c_[k];
        b2 = b1;
        b1 = t;
    }
    return u * b1 - b2 + (c_.empty() ? cplx(0.0) : c_[0]);
}

// T_{k+1}[u,v]   = 2 (u T_k[u,v] + T_k(v)) - T_{k-1}[u,v]
// T_{k+1}[u,u,v] = 2 (u T_k[u,u,v] + T_k[u,v]) - T_{k-1}[u,u,v]
cplx ChebFun::divided_difference(cplx x, cplx y) const {
    const double s = 2.0 / (b_ - a_);
    const cplx u = (2.0 * x - (a_ + b_)) / (b_ - a_), v = (2.0 * y - (a_ + b_)) / (b_ - a_);
    cplx Tm = 1.0, T = v, Dm = 0.0, D = 1.0, acc = 0.0;
    for (std::size_t k = 1; k < c_.size(); ++k) {
        acc += c_[k] * D;
        const cplx Tn = 2.0 * v * T - Tm, Dn = 2.0 * (u * D + T) - Dm;
        Tm = T, T = Tn, Dm = D, D = Dn;
    }
    return acc * s;
}

cplx ChebFun::divided_difference2(cplx x, cplx y) const {
    const double s = 2.0 / (b_ - a_);
    const cplx u = (2.0 * x - (a_ + b_)) / (b_ - a_), v = (2.0 * y - (a_ + b_)) / (b_ - a_);
    cplx Tm = 1.0, T = v, Dm = 0.0, D = 1.0, Gm = 0.0, G = 0.0, acc = 0.0;
    for (std::size_t k = 1; k < c_.size(); ++k) {
        acc += c_[k] * G;
        const cplx Tn = 2.0 * v * T - Tm, Dn = 2.0 * (u * D + T) - Dm, Gn = 2.0 * (u * G + D) - Gm;
        Tm = T, T = Tn, Dm = D, D = Dn, Gm = G, G = Gn;
    }
    return acc * s * s;
}

ChebFun ChebFun::derivative() const {
    const std::size_t n = c_.size();
    std::vector<cplx> d(std::max<std::size_t>(n, 1), 0.0);
    if (n >= 2) {
        std::vector<cplx> dd(n + 1, 0.0);
        for (std::size_t k = n - 1; k >= 1; --k) {
            dd[k - 1] = dd[k + 1] + 2.0 * double(k) * c_[k];
            if (k == 1) break;
        }
        dd[0] *= 0.5;
        const double s = 2.0 / (b_ - a_);
        for (std::size_t k = 0; k < n; ++k) d[k] = dd[k] * s;
    }
    return from_coeffs(d, a_, b_);
}

ChebFun ChebFun::primitive() const {
    const std::size_t n = c_.size();
    std::vector<cplx> C(n + 1, 0.0);
    const double s = 0.5 * (b_ - a_);
    auto c = [&](std::size_t k) { return k < n ? c_[k] : cplx(0.0); };
    for (std::size_t k = 1; k <= n; ++k) {
        const cplx ckm1 = (k == 1) ? 2.0 * c(0) : c(k - 1);
        C[k] = s * (ckm1 - c(k + 1)) / (2.0 * double(k));
    }
    ChebFun F = from_coeffs(C, a_, b_);
    const cplx va = F(a_);
    F.c_[0] -= va;
    return F;
}

double ChebFun::tail() const {
    double mx = 0.0;
    for (auto& v : c_) mx = std::max(mx, std::abs(v));
    if (mx == 0.0 || c_.size() < 4) return 0.0;
    const std::size_t n = c_.size();
    const double t = std::max({std::abs(c_[n - 1]), std::abs(c_[n - 2]), std::abs(c_[n - 3])});
    return t / mx;
}

// ---------------------------------------------------------------- branch tracking

BranchTrack track_arg(const std::vector<cplx>& values, double base, std::vector<double> samples) {
    BranchTrack bt;
    if (samples.empty()) {
        samples.resize(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) samples[i] = double(i);
    }
    bt.samples = std::move(samples);
    bt.base_choice = base;
    bt.args.resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] == cplx(0.0)) throw NumError("track_arg: zero sample, branch undefined");
        if (i == 0) {
            // base must agree with the phase of the first sample mod 2pi
            const double a0 = std::arg(values[0]);
            const double k = std::round((base - a0) / (2.0 * PI));
            bt.args[0] = a0 + 2.0 * PI * k;
            continue;
        }
        const double d = std::arg(values[i] / values[i - 1]);
        if (std::abs(d) >= PI * (1.0 - 1e-12))
            throw NumError("track_arg: phase jump >= pi, resolution too coarse");
        bt.args[i] = bt.args[i - 1] + d;
    }
    return bt;
}

std::vector<cplx> track_log(const std::vector<cplx>& values, double base) {
    const auto bt = track_arg(values, base);
    std::vector<cplx> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = cplx(std::log(std::abs(values[i])), bt.args[i]);
    return out;
}

// ---------------------------------------------------------------- log energy

double log_energy_bilinear(double x0, double h, const std::vector<double>& s1,
                           const std::vector<double>& s2) {
    const std::size_t n = s1.size();
    if (s2.size() != n) throw NumError("log_energy: grid mismatch");
    const double m1 = pairwise_sum(s1) * h, m2 = pairwise_sum(s2) * h;
    double scale = 0.0;
    for (std::size_t k = 0; k < n; ++k) scale += (std::abs(s1[k]) + std::abs(s2[k])) * h;
    if (std::abs(m1) > 1e-10 * std::max(1.0, scale) || std::abs(m2) > 1e-10 * std::max(1.0, scale))
        throw NumError("log_energy: net mass is not zero");
    // transform of hat basis: h e^{-i p x_k} sinc^2(p h / 2)
    const double extent = h * double(n + 1);
    const double P = 60.0 / h;
    const double dp = 0.5 * PI / extent;
    const int panels = static_cast<int>(std::ceil(P / dp));
    const auto& gl = gl_unit(8);
    std::vector<double> contrib;
    contrib.reserve(static_cast<std::size_t>(panels) * 8);
    const double xc = x0 + 0.5 * h * double(n - 1);
    for (int pi = 0; pi < panels; ++pi) {
        for (std::size_t q = 0; q < gl.size(); ++q) {
            const double p = (pi + gl.nodes[q]) * dp;
            const cplx step = std::polar(1.0, -p * h);
            cplx e = std::polar(1.0, -p * (x0 - xc));
            cplx a1 = 0.0, a2 = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                a1 += s1[k] * e;
                a2 += s2[k] * e;
                e *= step;
            }
            const double u = 0.5 * p * h;
            const double sc = (u < 1e-8) ? 1.0 : std::sin(u) / u;
            const double f = h * h * sc * sc * sc * sc;
            contrib.push_back(gl.weights[q] * dp * f * std::real(a1 * std::conj(a2)) / p);
        }
    }
    return pairwise_sum(contrib);
}

double log_energy_form(double x0, double h, const std::vector<double>& d1,
                       const std::vector<double>& d2) {
    if (d1.size() != d2.size()) throw NumError("log_energy: grid mismatch");
    std::vector<double> s(d1.size());
    for (std::size_t k = 0; k < s.size(); ++k) s[k] = d1[k] - d2[k];
    return log_energy_bilinear(x0, h, s, s);
}

// ---------------------------------------------------------------- workers

int worker_count() {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw < 1) hw = 1;
    if (const char* env = std::getenv("CONTOUR_GAS_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1) hw = std::min(hw, cap);
    }
    return hw;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const std::size_t T = std::min<std::size_t>(static_cast<std::size_t>(worker_count()), n);
    if (T <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errs(T);
    for (std::size_t t = 0; t < T; ++t)
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = t; i < n; i += T) fn(i);
            } catch (...) {
                errs[t] = std::current_exception();
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

}  // namespace cg
