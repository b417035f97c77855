#include "contourgas/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

namespace cg {

namespace {
const double kSemi = 8.0 / PI;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

double reflect(double y, double a, double b) {
    const double w = b - a;
    // fold into [a, a + 2w) then mirror the upper half
    double u = std::fmod(y - a, 2.0 * w);
    if (u < 0.0) u += 2.0 * w;
    return u <= w ? a + u : a + 2.0 * w - u;
}
}  // namespace

// ------------------------------------------------------------ target
RealModelTarget RealModelTarget::from_data(const InterpolationData& data, int N, int beta) {
    if (N < 1) throw NumError("RealModelTarget: N must be >= 1");
    if (beta < 1) throw NumError("RealModelTarget: beta must be positive");
    RealModelTarget tg;
    tg.N = N;
    tg.beta = beta;
    const double e = data.family().eps();
    tg.a = -e;
    tg.b = 1.0 + e;
    const double nb = double(N) * beta;
    // Chebyshev copies: the walls sit well inside the analytic strip
    auto gam = ChebFun([data](double x) { return data.gamma(x); }, 64, tg.a, tg.b);
    auto lw = ChebFun(
        [data, nb](double x) {
            return cplx(std::log(std::abs(data.dgamma(x))) - nb * std::real(data.Vpull(x)), 0.0);
        },
        96, tg.a, tg.b);
    if (gam.tail() > 1e-13 || lw.tail() > 1e-12) throw NumError("RealModelTarget: Chebyshev copy not resolved");
    tg.gamma = [gam](double x) { return gam(x); };
    tg.log_weight = [lw](double x) { return std::real(lw(x)); };
    return tg;
}

double RealModelTarget::log_density(const std::vector<double>& x) const {
    double s = 0.0;
    const int n = static_cast<int>(x.size());
    std::vector<cplx> g(n);
    for (int i = 0; i < n; ++i) {
        g[i] = gamma(x[i]);
        s += log_weight(x[i]);
    }
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) s += 0.5 * beta * std::log(std::norm(g[i] - g[j]));
    return s;
}

// ------------------------------------------------------------ initialisation
double semicircle_cdf(double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double th = std::acos(1.0 - 2.0 * x);
    return (th - std::sin(th) * std::cos(th)) / PI;
}

std::vector<double> semicircle_quantiles(int N) {
    std::vector<double> q(N);
    for (int k = 0; k < N; ++k) {
        const double target = (k + 0.5) / N;
        // F(theta) = (theta - sin theta cos theta)/pi is monotone on [0, pi]
        double lo = 0.0, hi = PI;
        for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
            const double m = 0.5 * (lo + hi);
            ((m - std::sin(m) * std::cos(m)) / PI < target ? lo : hi) = m;
        }
        q[k] = 0.5 * (1.0 - std::cos(0.5 * (lo + hi)));
    }
    return q;
}

std::uint64_t split_seed(std::uint64_t master, int chain) {
    return splitmix64(master + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(chain + 1));
}

ParticleChain make_chain(const RealModelTarget& target, std::uint64_t seed) {
    ParticleChain c;
    c.positions = semicircle_quantiles(target.N);
    c.beta = target.beta;
    c.rng_seed = seed;
    c.step_scale = 1.0 / target.N;
    c.collective_scale = 0.5 / (target.N * std::sqrt(double(target.beta)));
    return c;
}

void sample_real_model(ParticleChain& chain, const RealModelTarget& target, long sweeps, bool tune,
                       const std::function<void(const std::vector<double>&)>& on_sweep) {
    auto& x = chain.positions;
    const int N = static_cast<int>(x.size());
    if (N != target.N) throw NumError("sample_real_model: chain size does not match the target");
    // deterministic stream per (seed, progress)
    std::mt19937_64 rng(splitmix64(chain.rng_seed ^ static_cast<std::uint64_t>(chain.proposed)));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<cplx> g(N);
    std::vector<double> w(N);
    for (int i = 0; i < N; ++i) {
        g[i] = target.gamma(x[i]);
        w[i] = target.log_weight(x[i]);
    }
    const double hb = 0.5 * target.beta;
    // running sum_{i<j} ln|g_i - g_j|^2, updated by accepted moves
    double pair = 0.0;
    for (int i = 0; i < N; ++i)
        for (int j = i + 1; j < N; ++j) pair += std::log(std::norm(g[i] - g[j]));
    long win_prop = 0, win_acc = 0, col_prop = 0, col_acc = 0;
    std::vector<double> sorted(N), yc(N), wc(N);
    std::vector<cplx> gc(N);
    for (long s = 0; s < sweeps; ++s) {
        for (int i = 0; i < N; ++i) {
            const double y = reflect(x[i] + chain.step_scale * gauss(rng), target.a, target.b);
            const cplx gy = target.gamma(y);
            const double wy = target.log_weight(y);
            double dp = 0.0;
            for (int j = 0; j < N; ++j) {
                if (j == i) continue;
                dp += std::log(std::norm(gy - g[j])) - std::log(std::norm(g[i] - g[j]));
            }
            const double d = wy - w[i] + hb * dp;
            ++chain.proposed;
            ++win_prop;
            if (d >= 0.0 || unif(rng) < std::exp(d)) {
                x[i] = y;
                g[i] = gy;
                w[i] = wy;
                pair += dp;
                ++chain.accepted;
                ++win_acc;
            }
        }
        // collective moves: translation, then dilation about 1/2 (Jacobian e^{N s});
        // proposals leaving the box are rejected
        for (int kind = 0; kind < 2; ++kind) {
            const double z = chain.collective_scale * gauss(rng);
            bool inside = true;
            for (int i = 0; i < N && inside; ++i) {
                yc[i] = kind == 0 ? x[i] + z : 0.5 + std::exp(z) * (x[i] - 0.5);
                inside = yc[i] >= target.a && yc[i] <= target.b;
            }
            ++chain.collective_proposed;
            ++col_prop;
            if (!inside) continue;
            double d = kind == 0 ? 0.0 : N * z;
            for (int i = 0; i < N; ++i) {
                gc[i] = target.gamma(yc[i]);
                wc[i] = target.log_weight(yc[i]);
                d += wc[i] - w[i];
            }
            double pc = 0.0;
            for (int i = 0; i < N; ++i)
                for (int j = i + 1; j < N; ++j) pc += std::log(std::norm(gc[i] - gc[j]));
            d += hb * (pc - pair);
            if (d >= 0.0 || unif(rng) < std::exp(d)) {
                x = yc;
                pair = pc;
                g = gc;
                w = wc;
                ++chain.collective_accepted;
                ++col_acc;
            }
        }
        if (tune && (s + 1) % 20 == 0) {
            const double acc = double(win_acc) / double(win_prop);
            chain.step_scale *= std::exp(2.0 * (acc - chain.target_acceptance));
            chain.step_scale = std::min(chain.step_scale, 4.0 * (target.b - target.a));  // reflection keeps wide steps valid
            const double cacc = double(col_acc) / double(col_prop);
            chain.collective_scale *= std::exp(2.0 * (cacc - chain.target_acceptance));
            win_acc = win_prop = col_acc = col_prop = 0;
        }
        if (on_sweep) {
            sorted = x;
            std::sort(sorted.begin(), sorted.end());
            on_sweep(sorted);
        }
    }
    std::sort(x.begin(), x.end());
}

SampleSet run_chains(const RealModelTarget& target, const SamplerConfig& cfg) {
    if (cfg.chains < 1 || cfg.samples_per_chain < 1) throw NumError("run_chains: empty configuration");
    SampleSet out;
    out.N = target.N;
    out.chains = cfg.chains;
    out.per_chain = cfg.samples_per_chain;
    out.draws.assign(cfg.chains, {});
    out.acceptance.assign(cfg.chains, 0.0);
    out.step.assign(cfg.chains, 0.0);
    const long burn = std::max(100L, static_cast<long>(std::ceil(cfg.burn_in * cfg.samples_per_chain)));
    parallel_for(static_cast<std::size_t>(cfg.chains), [&](std::size_t c) {
        ParticleChain ch = make_chain(target, split_seed(cfg.seed, static_cast<int>(c)));
        ch.target_acceptance = cfg.target_acceptance;
        sample_real_model(ch, target, burn, true);
        ch.proposed = ch.accepted = 0;
        ch.rng_seed = splitmix64(ch.rng_seed + 1);
        auto& d = out.draws[c];
        d.reserve(static_cast<std::size_t>(cfg.samples_per_chain) * target.N);
        sample_real_model(ch, target, cfg.samples_per_chain, false,
                          [&](const std::vector<double>& s) { d.insert(d.end(), s.begin(), s.end()); });
        out.acceptance[c] = ch.acceptance();
        out.step[c] = ch.step_scale;
    });
    // high acceptance with the step at its cap means the proposal is already
    // global (a nearly flat target, e.g. N = 1), not a tuning failure
    const double cap = 4.0 * (target.b - target.a);
    for (int c = 0; c < cfg.chains; ++c) {
        const double a = out.acceptance[c];
        if (a < 0.2 || (a > 0.6 && out.step[c] < cap))
            throw TuningError("run_chains: acceptance " + std::to_string(a) + " outside [0.2, 0.6]");
    }
    return out;
}

// ------------------------------------------------------------ statistics
double gelman_rubin(const std::vector<std::vector<double>>& series) {
    const std::size_t m = series.size();
    if (m < 2) return 1.0;
    const std::size_t n = series[0].size();
    if (n < 2) throw NumError("gelman_rubin: chains too short");
    std::vector<double> means(m), vars(m);
    for (std::size_t c = 0; c < m; ++c) {
        if (series[c].size() != n) throw NumError("gelman_rubin: unequal chain lengths");
        means[c] = std::accumulate(series[c].begin(), series[c].end(), 0.0) / n;
        double v = 0.0;
        for (double y : series[c]) v += (y - means[c]) * (y - means[c]);
        vars[c] = v / (n - 1);
    }
    const double grand = std::accumulate(means.begin(), means.end(), 0.0) / m;
    double B = 0.0;
    for (double mu : means) B += (mu - grand) * (mu - grand);
    B *= double(n) / (m - 1);
    const double W = std::accumulate(vars.begin(), vars.end(), 0.0) / m;
    if (W <= 0.0) return 1.0;
    const double vhat = (n - 1.0) / n * W + B / n;
    return std::sqrt(vhat / W);
}

StatSummary summarize(const std::vector<std::vector<double>>& series, int batches) {
    StatSummary s;
    if (series.empty() || series[0].empty()) throw NumError("summarize: no samples");
    const std::size_t n = series[0].size();
    const std::size_t len = std::max<std::size_t>(1, n / std::max(1, batches));
    const std::size_t nb = n / len;
    double total = 0.0;
    long count = 0;
    for (const auto& c : series) {
        for (double y : c) total += y;
        count += static_cast<long>(c.size());
    }
    s.samples = count;
    s.mean = total / count;
    double v = 0.0;
    for (const auto& c : series)
        for (double y : c) v += (y - s.mean) * (y - s.mean);
    s.variance = v / (count - 1);
    std::vector<double> bm, bv;
    for (const auto& c : series) {
        for (std::size_t b = 0; b < nb; ++b) {
            double m1 = 0.0, m2 = 0.0;
            for (std::size_t k = b * len; k < (b + 1) * len; ++k) {
                m1 += c[k];
                m2 += (c[k] - s.mean) * (c[k] - s.mean);
            }
            bm.push_back(m1 / len);
            bv.push_back(m2 / len);
        }
    }
    auto se = [](const std::vector<double>& v) {
        const double mu = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
        double q = 0.0;
        for (double y : v) q += (y - mu) * (y - mu);
        return std::sqrt(q / (v.size() - 1) / v.size());
    };
    if (bm.size() >= 2) {
        s.mean_se = se(bm);
        s.variance_se = se(bv);
    }
    s.r_hat = gelman_rubin(series);
    return s;
}

double semicircle_expectation(const std::function<double(double)>& f, int n) {
    const auto g = make_grid(GridKind::gauss_chebyshev_sqrt, n, 0.0, 1.0);
    std::vector<double> v(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) v[k] = kSemi * g.weights[k] * f(g.nodes[k]);
    return pairwise_sum(v);
}

std::vector<std::vector<double>> linear_statistic(const SampleSet& s, const std::function<double(double)>& f) {
    const double nuf = semicircle_expectation(f);
    std::vector<std::vector<double>> out(s.chains, std::vector<double>(s.per_chain));
    for (int c = 0; c < s.chains; ++c)
        for (long k = 0; k < s.per_chain; ++k) {
            const double* x = s.sample(c, k);
            double acc = 0.0;
            for (int i = 0; i < s.N; ++i) acc += f(x[i]);
            out[c][k] = acc - s.N * nuf;
        }
    return out;
}

// ------------------------------------------------------------ measures
double CurveMeasure::mass() const {
    double m = nu_coeff;
    for (const auto& b : boxes) m += b.mass;
    return m;
}

Regularized regularize(std::vector<double> positions, int N) {
    if (N < 1 || static_cast<int>(positions.size()) != N) throw NumError("regularize: need N positions");
    std::sort(positions.begin(), positions.end());
    const double h = std::pow(double(N), -3.0);
    Regularized r;
    r.width = std::pow(double(N), -6.0);
    r.x.resize(N);
    r.x[0] = positions[0];
    for (int k = 1; k < N; ++k) r.x[k] = r.x[k - 1] + std::max(positions[k] - positions[k - 1], h);
    return r;
}

CurveMeasure Regularized::measure() const {
    CurveMeasure m;
    const double mass = 1.0 / x.size();
    for (double v : x) m.boxes.push_back({v, v + width, mass});
    return m;
}

double cosine_integral(double x) {
    if (!(x > 0.0)) throw NumError("cosine_integral: argument must be positive");
    constexpr double euler = 0.57721566490153286061;
    if (x <= 2.0) {
        // Ci(x) = gamma + ln x + sum_k (-1)^k x^{2k} / (2k (2k)!)
        double sum = 0.0, term = 1.0;
        for (int k = 1; k < 60; ++k) {
            term *= -x * x / ((2.0 * k - 1.0) * (2.0 * k));
            const double add = term / (2.0 * k);
            sum += add;
            if (std::abs(add) < 1e-18 * std::max(1.0, std::abs(sum))) break;
        }
        return euler + std::log(x) + sum;
    }
    // E1(ix) by Lentz continued fraction; Ci(x) = -Re E1(ix)
    const cplx ix(0.0, x);
    cplx b = ix + 1.0, c = 1.0 / 1e-300, d = 1.0 / b, h = d;
    for (int k = 1; k < 1000; ++k) {
        const double an = -double(k) * k;
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        const cplx del = c * d;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    return -std::real(h * std::exp(-ix));
}

namespace {
// F'' = ln|u|
double F2(double u) { return u == 0.0 ? 0.0 : 0.5 * u * u * std::log(std::abs(u)) - 0.75 * u * u; }

// average of ln|x - y| over two parameter boxes
double box_log_average(const Box& p, const Box& q) {
    const double wp = p.hi - p.lo, wq = q.hi - q.lo;
    const double d = std::abs(0.5 * (p.lo + p.hi) - 0.5 * (q.lo + q.hi));
    if (d > 1e3 * std::max(wp, wq)) return std::log(d);  // O((w/d)^2) below rounding
    const double s = F2(p.hi - q.lo) - F2(p.lo - q.lo) - F2(p.hi - q.hi) + F2(p.lo - q.hi);
    return s / (wp * wq);
}

// -avg ln|gamma(x) - gamma(y)| over two boxes
double box_pair_energy(const Box& p, const Box& q, const InterpolationData& data) {
    const auto& fam = data.family();
    const double t = data.t();
    double chord;
    if (std::max(p.hi - p.lo, q.hi - q.lo) < 1e-4) {
        chord = std::log(std::abs(fam.chord(t, 0.5 * (p.lo + p.hi), 0.5 * (q.lo + q.hi))));
    } else {
        const auto& g = gl_unit(8);
        chord = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i)
            for (std::size_t j = 0; j < g.size(); ++j) {
                const double x = p.lo + (p.hi - p.lo) * g.nodes[i], y = q.lo + (q.hi - q.lo) * g.nodes[j];
                chord += g.weights[i] * g.weights[j] * std::log(std::abs(fam.chord(t, x, y)));
            }
    }
    return -(box_log_average(p, q) + chord);
}

// -avg \int ln|gamma(x) - gamma(y)| dnu(y) over a box = average of the log-potential
double box_nu_energy(const Box& p, const InterpolationData& data) {
    const auto& fam = data.family();
    if (p.hi - p.lo < 1e-4) return log_potential_on_curve(fam, data.t(), 0.5 * (p.lo + p.hi));
    const auto& g = gl_unit(6);
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
        s += g.weights[i] * log_potential_on_curve(fam, data.t(), p.lo + (p.hi - p.lo) * g.nodes[i]);
    return s;
}

double nu_nu_energy(const InterpolationData& data) {
    return semicircle_expectation([&](double x) { return log_potential_on_curve(data.family(), data.t(), x); });
}

void check_measure(const CurveMeasure& d) {
    double scale = std::abs(d.nu_coeff);
    for (const auto& b : d.boxes) {
        if (!(b.hi > b.lo)) throw NumError("log_energy: boxes need hi > lo");
        scale += std::abs(b.mass);
    }
    if (std::abs(d.mass()) > 1e-12 * std::max(1.0, scale))
        throw NumError("log_energy: net mass of the difference is not zero");
}

double energy_direct(const CurveMeasure& d, const InterpolationData& data) {
    const std::size_t nb = d.boxes.size();
    std::vector<double> rows(nb, 0.0);
    parallel_for(nb, [&](std::size_t i) {
        double s = d.boxes[i].mass * box_pair_energy(d.boxes[i], d.boxes[i], data);
        for (std::size_t j = i + 1; j < nb; ++j) s += 2.0 * d.boxes[j].mass * box_pair_energy(d.boxes[i], d.boxes[j], data);
        if (d.nu_coeff != 0.0) s += 2.0 * d.nu_coeff * box_nu_energy(d.boxes[i], data);
        rows[i] = d.boxes[i].mass * s;
    });
    double e = pairwise_sum(rows);
    if (d.nu_coeff != 0.0) e += d.nu_coeff * d.nu_coeff * nu_nu_energy(data);
    return e;
}

// \int_a^inf sinc(u)^2 / u du for a << 1
double sinc2_tail_narrow(double a) {
    static const double C = [] {
        // C = \int_0^1 (sinc^2 - 1)/u du + \int_1^inf sinc^2/u du
        const auto& g = gl_unit(16);
        double s = 0.0;
        for (std::size_t k = 0; k < g.size(); ++k) {
            const double u = g.nodes[k], sn = std::sin(u) / u;
            s += g.weights[k] * (sn * sn - 1.0) / u;
        }
        const double A = 400.0;
        for (double lo = 1.0; lo < A; lo += 0.5)
            for (std::size_t k = 0; k < g.size(); ++k) {
                const double u = lo + 0.5 * g.nodes[k], sn = std::sin(u);
                s += 0.5 * g.weights[k] * sn * sn / (u * u * u);
            }
        // \int_A^inf (1 - cos 2u)/(2u^3) du
        s += 0.25 / (A * A) + std::sin(2.0 * A) / (4.0 * A * A * A);
        return s;
    }();
    return -std::log(a) + C + a * a / 6.0;
}

// \int_P^inf cos(k p)/p^3 dp and \int_P^inf sin(k p)/p^2 dp
double tail_cos3(double k, double P) {
    k = std::abs(k);
    if (k * P < 1e-12) return 0.5 / (P * P);
    const double x = k * P;
    return k * k * (std::cos(x) / (2.0 * x * x) - std::sin(x) / (2.0 * x) + 0.5 * cosine_integral(x));
}
double tail_sin2(double k, double P) {
    if (std::abs(k) * P < 1e-12) return 0.0;
    const double x = std::abs(k) * P;
    return (k > 0 ? 1.0 : -1.0) * std::abs(k) * (std::sin(x) / x - cosine_integral(x));
}

// \int_P^inf cos(g p) sinc(al p) sinc(be p) / p dp  (sinc(u) = sin u / u)
double box_tail(double al, double be, double g, double P) {
    constexpr double narrow = 1e-3;
    const bool na = al * P < narrow, nb = be * P < narrow;
    if (na && nb) return g == 0.0 ? sinc2_tail_narrow(al * P) : -cosine_integral(std::abs(g) * P);
    if (na || nb) {
        const double w = na ? be : al;
        // sin(w p) cos(g p) / (w p^2)
        return (tail_sin2(w + g, P) + tail_sin2(w - g, P)) / (2.0 * w);
    }
    return 0.25 / (al * be) *
           (tail_cos3(al - be + g, P) + tail_cos3(al - be - g, P) - tail_cos3(al + be + g, P) -
            tail_cos3(al + be - g, P));
}

double energy_fourier(const CurveMeasure& d, const InterpolationData& data) {
    // straight pushforward: gamma(x) = gamma(0) + D x
    const double sp = std::abs(data.dgamma(0.5));
    for (double x : {-0.05, 0.0, 0.3, 0.7, 1.0, 1.05})
        if (std::abs(data.d2gamma(x)) > 1e-10 * sp || std::abs(std::abs(data.dgamma(x)) - sp) > 1e-12 * sp)
            throw NumError("log_energy: the Fourier form is implemented for straight pushforwards only");
    const std::size_t nb = d.boxes.size();
    std::vector<double> s(nb), w(nb);
    double lo = 0.0, hi = 1.0, dmin = 1e300;
    for (std::size_t i = 0; i < nb; ++i) {
        s[i] = sp * 0.5 * (d.boxes[i].lo + d.boxes[i].hi);
        w[i] = sp * (d.boxes[i].hi - d.boxes[i].lo);
        lo = std::min(lo, sp * d.boxes[i].lo);
        hi = std::max(hi, sp * d.boxes[i].hi);
    }
    std::vector<std::size_t> order(nb);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto i, auto j) { return s[i] < s[j]; });
    for (std::size_t k = 1; k < nb; ++k) dmin = std::min(dmin, s[order[k]] - s[order[k - 1]]);
    if (!(dmin > 0.0)) throw NumError("log_energy: coincident boxes");
    const double span = hi - lo;
    const double P = std::min(4e5, std::max(2e4, 400.0 / std::min(dmin, 1.0)));
    const double c = d.nu_coeff, half = 0.5 * sp;
    auto dhat2 = [&](double p) {
        cplx v(0.0, 0.0);
        for (std::size_t i = 0; i < nb; ++i) {
            const double u = 0.5 * p * w[i];
            const double sinc = u < 1e-8 ? 1.0 : std::sin(u) / u;
            v += d.boxes[i].mass * sinc * std::polar(1.0, -p * s[i]);
        }
        if (c != 0.0) {
            const double u = p * half;
            const double nu = u < 1e-8 ? 1.0 : 2.0 * std::cyl_bessel_j(1.0, u) / u;
            v += c * nu * std::polar(1.0, -p * half);
        }
        return std::norm(v);
    };
    // panels shorter than a quarter of the fastest oscillation; finer near 0
    const double hp = std::min(0.25, 1.0 / span);
    const std::size_t panels = static_cast<std::size_t>(std::ceil(P / hp));
    const auto& g = gl_unit(8);
    std::vector<double> part(panels);
    parallel_for(panels, [&](std::size_t k) {
        const double a = k * hp;
        double acc = 0.0;
        for (std::size_t q = 0; q < g.size(); ++q) {
            const double p = a + hp * g.nodes[q];
            acc += g.weights[q] * dhat2(p) / p;
        }
        part[k] = hp * acc;
    });
    double e = pairwise_sum(part);
    const double Pend = panels * hp;
    // p > P: box-box terms in closed form; nu terms decay like p^-3/2
    for (std::size_t i = 0; i < nb; ++i) {
        const double mi = d.boxes[i].mass;
        e += mi * mi * box_tail(0.5 * w[i], 0.5 * w[i], 0.0, Pend);
        for (std::size_t j = i + 1; j < nb; ++j)
            e += 2.0 * mi * d.boxes[j].mass * box_tail(0.5 * w[i], 0.5 * w[j], s[i] - s[j], Pend);
    }
    return e;
}
}  // namespace

double log_energy(const CurveMeasure& d, const InterpolationData& data, LogEnergyMethod method) {
    check_measure(d);
    return method == LogEnergyMethod::direct ? energy_direct(d, data) : energy_fourier(d, data);
}

double log_energy_distance(const CurveMeasure& m1, const CurveMeasure& m2, const InterpolationData& data,
                           LogEnergyMethod method) {
    CurveMeasure d;
    d.nu_coeff = m1.nu_coeff - m2.nu_coeff;
    d.boxes = m1.boxes;
    for (auto b : m2.boxes) {
        b.mass = -b.mass;
        d.boxes.push_back(b);
    }
    return log_energy(d, data, method);
}

// ------------------------------------------------------------ scans
ConcentrationScan concentration_scan(const InterpolationData& data, int beta, const std::vector<int>& Ns,
                                     const std::function<double(double)>& f, int repetitions, std::uint64_t seed) {
    if (Ns.size() < 2) throw NumError("concentration_scan: need at least two sizes");
    if (repetitions < 8) throw NumError("concentration_scan: need at least 8 repetitions");
    ConcentrationScan scan;
    const double nuf = semicircle_expectation(f);
    CurveMeasure nu;
    nu.nu_coeff = 1.0;
    for (std::size_t k = 0; k < Ns.size(); ++k) {
        const int N = Ns[k];
        const auto target = RealModelTarget::from_data(data, N, beta);
        SamplerConfig cfg;
        cfg.chains = 4;
        cfg.samples_per_chain = (repetitions + 3) / 4;
        cfg.seed = split_seed(seed, N);
        // retain one configuration every 10 sweeps
        SamplerConfig run = cfg;
        run.samples_per_chain = cfg.samples_per_chain * 10;
        const auto set = run_chains(target, run);
        std::vector<std::vector<double>> lin(cfg.chains), d2(cfg.chains);
        for (int c = 0; c < cfg.chains; ++c)
            for (long s = 0; s < cfg.samples_per_chain; ++s) {
                const double* x = set.sample(c, s * 10 + 9);
                const auto reg = regularize(std::vector<double>(x, x + N), N);
                double acc = 0.0;
                for (double v : reg.x) acc += f(v + 0.5 * reg.width);
                lin[c].push_back(std::abs(acc / N - nuf));
                d2[c].push_back(log_energy_distance(reg.measure(), nu, data));
            }
        const auto sl = summarize(lin, 4), sd = summarize(d2, 4);
        scan.rows.push_back({N, sl.mean, sl.mean_se, sd.mean, sd.mean_se});
    }
    // least squares of ln d2 on ln N
    double mx = 0.0, my = 0.0;
    for (const auto& r : scan.rows) {
        mx += std::log(double(r.N));
        my += std::log(r.d2);
    }
    mx /= scan.rows.size();
    my /= scan.rows.size();
    double sxy = 0.0, sxx = 0.0;
    for (const auto& r : scan.rows) {
        const double u = std::log(double(r.N)) - mx;
        sxy += u * (std::log(r.d2) - my);
        sxx += u * u;
    }
    scan.d2_exponent = -sxy / sxx;
    return scan;
}

EdgeScan edge_density_estimate(const InterpolationData& data, int beta, const std::vector<int>& Ns, long samples,
                               std::uint64_t seed) {
    EdgeScan scan;
    std::vector<std::vector<double>> pooled;
    double wall = 0.0, top = 1.0;
    for (int N : Ns) {
        const auto target = RealModelTarget::from_data(data, N, beta);
        wall = target.a;
        top = target.b;
        SamplerConfig cfg;
        cfg.chains = 4;
        cfg.samples_per_chain = std::max(50L, samples / 4);
        cfg.seed = split_seed(seed, N);
        const auto set = run_chains(target, cfg);
        std::vector<double> all;
        for (const auto& d : set.draws) all.insert(all.end(), d.begin(), d.end());
        pooled.push_back(std::move(all));
    }
    // Gaussian kernel reflected at the wall; one bandwidth for every N, the
    // smallest of 0.005 * 2^k (<= eps/2) with 20 effective points in each run
    const double eps = -wall;
    auto kernel_sum = [&](const std::vector<double>& v, double h) {
        double s = 0.0;
        for (double x : v) {
            const double u = (x - wall) / h;
            if (u < 12.0) s += std::exp(-0.5 * u * u);
        }
        return s;
    };
    double h = 0.005;
    bool widened = false;
    auto enough = [&](double hh) {
        for (const auto& v : pooled)
            if (kernel_sum(v, hh) < 20.0) return false;
        return true;
    };
    while (!enough(h) && 2.0 * h <= 0.5 * eps + 1e-15) {
        h *= 2.0;
        widened = true;
    }
    if (widened) scan.warnings.push_back("edge bandwidth widened to " + std::to_string(h));
    if (!enough(h)) scan.warnings.push_back("fewer than 20 effective points at the wall; increase samples");
    for (std::size_t k = 0; k < Ns.size(); ++k) {
        const auto& all = pooled[k];
        const double total = double(all.size());
        auto count = [&](double lo, double hi) {
            return double(std::count_if(all.begin(), all.end(), [&](double v) { return v >= lo && v < hi; }));
        };
        EdgeRow row;
        row.N = Ns[k];
        row.window = h;
        row.widened = widened;
        const double ks = kernel_sum(all, h);
        if (ks == 0.0) throw SamplingError("edge_density_estimate: no samples near the wall; increase samples");
        row.log_density = std::log(2.0 * ks / (total * h * std::sqrt(2.0 * PI)));
        row.bulk_density = count(0.475, 0.525) / (total * 0.05);
        const int bins = 100;
        const double bw = (top - wall) / bins;
        double mass = 0.0;
        for (int b = 0; b < bins; ++b) {
            const double lo = wall + b * bw;
            const double hi = b + 1 == bins ? std::nextafter(top, 2.0) : lo + bw;
            mass += count(lo, hi) / (total * bw) * bw;
        }
        row.partition_mass = mass;
        scan.rows.push_back(row);
    }
    return scan;
}

PhaseTable::PhaseTable(const PhaseKernels& pk, double a, double b, int n) : pk_(pk), a_(a), b_(b), n_(n) {
    const auto pts = ChebFun::points(n, a, b);
    Eigen::MatrixXd F(n, n), M(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) F(i, j) = pk.a(pts[i], pts[j]);
    for (int j = 0; j < n; ++j) {
        std::vector<cplx> e(n, 0.0);
        e[j] = 1.0;
        const auto cf = ChebFun::from_values(e, a, b).coeffs();
        for (int k = 0; k < n; ++k) M(k, j) = std::real(cf[k]);
    }
    C_ = M * F * M.transpose();
    p_ = ChebFun([&](double x) { return cplx(pk.p(x), 0.0); }, 48, a, b);
    // check on a shifted grid
    for (int i = 0; i < 17; ++i)
        for (int j = 0; j < 17; ++j) {
            const double x = a + (b - a) * (i + 0.37) / 17.0, y = a + (b - a) * (j + 0.61) / 17.0;
            const double u[2] = {x, y};
            Eigen::VectorXd tx(n), ty(n);
            for (int k = 0; k < n; ++k) {
                tx(k) = std::cos(k * std::acos((2.0 * u[0] - a - b) / (b - a)));
                ty(k) = std::cos(k * std::acos((2.0 * u[1] - a - b) / (b - a)));
            }
            table_error = std::max(table_error, std::abs(tx.dot(C_ * ty) - pk.a(x, y)));
        }
}

double PhaseTable::operator()(const double* x, int N, int beta) const {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(n_);
    double a1 = 0.0, p1 = 0.0;
    for (int i = 0; i < N; ++i) {
        if (x[i] < a_ || x[i] > b_) throw NumError("PhaseTable: position outside the table");
        const double s = (2.0 * x[i] - a_ - b_) / (b_ - a_);
        double t0 = 1.0, t1 = s;
        u(0) += 1.0;
        if (n_ > 1) u(1) += s;
        for (int k = 2; k < n_; ++k) {
            const double t2 = 2.0 * s * t1 - t0;
            u(k) += t2;
            t0 = t1;
            t1 = t2;
        }
        a1 += std::real(pk_.a_nu(x[i]));
        p1 += std::real(p_(x[i]));
    }
    const double Nd = N;
    const double quad = u.dot(C_ * u) / (Nd * Nd) - 2.0 * a1 / Nd + pk_.a_nunu;
    return 0.5 * beta * Nd * Nd * quad + Nd * (1.0 - 0.5 * beta) * (p1 / Nd - pk_.p_nu);
}

PhaseMC phase_expectation_mc(const InterpolationData& data, int N, int beta, const SamplerConfig& cfg, double max_se) {
    const auto target = RealModelTarget::from_data(data, N, beta);
    // chi = 1 on the walls' interval, so a is the analytic part there
    const PhaseTable table(phase_kernels(data), target.a, target.b);
    if (table.table_error > 1e-12) throw NumError("phase_expectation_mc: phase table not resolved");
    const auto set = run_chains(target, cfg);
    std::vector<std::vector<double>> re(set.chains), im(set.chains);
    for (int c = 0; c < set.chains; ++c)
        for (long s = 0; s < set.per_chain; ++s) {
            const double g = table(set.sample(c, s), N, beta);
            re[c].push_back(std::cos(g));
            im[c].push_back(std::sin(g));
        }
    const auto sr = summarize(re), si = summarize(im);
    PhaseMC out;
    out.value = {sr.mean, si.mean};
    out.std_error = std::hypot(sr.mean_se, si.mean_se);
    out.samples = sr.samples;
    out.r_hat = std::max(sr.r_hat, si.r_hat);
    if (out.std_error > max_se)
        throw SamplingError("phase_expectation_mc: standard error " + std::to_string(out.std_error) +
                            " above " + std::to_string(max_se) + "; run more sweeps");
    return out;
}

void write_samples_csv(const SampleSet& s, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw NumError("write_samples_csv: cannot open " + path);
    out.precision(17);
    out << "chain,sample";
    for (int i = 0; i < s.N; ++i) out << ",x" << i + 1;
    out << "\n";
    for (int c = 0; c < s.chains; ++c)
        for (long k = 0; k < s.per_chain; ++k) {
            out << c << ',' << k;
            const double* x = s.sample(c, k);
            for (int i = 0; i < s.N; ++i) out << ',' << x[i];
            out << "\n";
        }
}

}  // namespace cg
