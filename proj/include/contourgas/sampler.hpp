/*
 * sampler.hpp -- Metropolis sampling of the real model and empirical-measure diagnostics.
 *
 * Target on [-eps, 1+eps]^N (curve parameter):
 *
 *     P(x) ∝ prod_{i<j} |gamma(x_i) - gamma(x_j)|^beta  prod_i |gamma'(x_i)| e^{-N beta Re V_t(gamma(x_i))}.
 *
 * Single-site Gaussian proposals reflected at the walls (the reflected kernel is
 * still symmetric, so plain Metropolis acceptance keeps detailed balance).
 * Each sweep ends with a rigid translation and a dilation about 1/2 (acceptance
 * carries the Jacobian e^{N s}); these move the slow collective modes.
 * The proposal width is tuned during burn-in toward 35% acceptance and frozen after.
 *
 * Regularised empirical measure: x~_1 = x_1, x~_k = x~_{k-1} + max(x_k - x_{k-1}, N^-3),
 * each point smeared uniformly over [x~_k, x~_k + N^-6] with mass 1/N.
 *
 * Log-energy distance of two measures pushed forward by gamma:
 *
 *     D(m1, m2)^2 = -\int\int ln|z - w| d(m1 - m2)(z) d(m1 - m2)(w)
 *                 = (1/2pi) \int\int |(m1 - m2)^(k)|^2 / |k|^2 d^2k
 *                 = \int_0^inf |(m1 - m2)^(p)|^2 / p dp     (pushforward on a straight line).
 */
#pragma once

#include "contourgas/equilibrium.hpp"
#include "contourgas/fluctuations.hpp"
#include "contourgas/numkit.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace cg {

struct TuningError : NumError {
    using NumError::NumError;
};
struct SamplingError : NumError {
    using NumError::NumError;
};

// ------------------------------------------------------------ target and chains
struct RealModelTarget {
    int N = 0;
    int beta = 2;
    double a = -0.05, b = 1.05;  // reflecting walls
    std::function<cplx(double)> gamma;
    std::function<double(double)> log_weight;  // ln|gamma'| - N beta Re V_t(gamma)

    static RealModelTarget from_data(const InterpolationData& data, int N, int beta);
    double log_density(const std::vector<double>& x) const;
};

struct ParticleChain {
    std::vector<double> positions;  // sorted on output
    int beta = 2;
    std::uint64_t rng_seed = 0;
    double step_scale = 0.0;
    double target_acceptance = 0.35;
    long proposed = 0, accepted = 0;
    // one translation and one dilation proposal per sweep
    double collective_scale = 0.0;
    long collective_proposed = 0, collective_accepted = 0;
    double acceptance() const { return proposed ? double(accepted) / double(proposed) : 0.0; }
};

// semicircle quantiles x_k = F^{-1}((k - 1/2)/N)
std::vector<double> semicircle_quantiles(int N);
double semicircle_cdf(double x);

// per-chain seed: splitmix64 of master + chain index (documented split rule)
std::uint64_t split_seed(std::uint64_t master, int chain);

ParticleChain make_chain(const RealModelTarget& target, std::uint64_t seed);
// sweeps of N single-site moves; tune = adapt the step toward the target acceptance
void sample_real_model(ParticleChain& chain, const RealModelTarget& target, long sweeps, bool tune = false,
                       const std::function<void(const std::vector<double>&)>& on_sweep = {});

struct SamplerConfig {
    int chains = 8;
    long samples_per_chain = 2500;  // retained, one per sweep of N moves
    double burn_in = 0.2;           // fraction of the retained sweeps run first
    double target_acceptance = 0.35;
    std::uint64_t seed = 20240917;
};

struct SampleSet {
    int N = 0;
    int chains = 0;
    long per_chain = 0;
    std::vector<std::vector<double>> draws;  // [chain][sample * N + i], sorted positions
    std::vector<double> acceptance, step;
    const double* sample(int chain, long s) const { return draws[chain].data() + s * N; }
};

SampleSet run_chains(const RealModelTarget& target, const SamplerConfig& cfg);
// chain, sample, x_1..x_N
void write_samples_csv(const SampleSet& s, const std::string& path);

// ------------------------------------------------------------ statistics
struct StatSummary {
    double mean = 0.0, mean_se = 0.0;
    double variance = 0.0, variance_se = 0.0;
    double r_hat = 1.0;
    long samples = 0;
};
// batch means across chains (batches per chain given) and Gelman-Rubin
StatSummary summarize(const std::vector<std::vector<double>>& series, int batches = 20);
double gelman_rubin(const std::vector<std::vector<double>>& series);
// N L_N(f) = sum_i f(x_i) - N nu(f) per sample
std::vector<std::vector<double>> linear_statistic(const SampleSet& s, const std::function<double(double)>& f);
double semicircle_expectation(const std::function<double(double)>& f, int n = 128);

// ------------------------------------------------------------ measures
struct Box {
    double lo = 0.0, hi = 0.0;  // parameter interval (hi > lo)
    double mass = 0.0;
};
// nu_coeff * nu + sum of uniform boxes (in the parameter)
struct CurveMeasure {
    double nu_coeff = 0.0;
    std::vector<Box> boxes;
    double mass() const;
};

struct Regularized {
    std::vector<double> x;
    double width = 0.0;  // N^-6
    CurveMeasure measure() const;
};
Regularized regularize(std::vector<double> positions, int N);

enum class LogEnergyMethod { direct, fourier };
// D^2 of m1 - m2 pushed forward by gamma_t; net mass must vanish
double log_energy_distance(const CurveMeasure& m1, const CurveMeasure& m2, const InterpolationData& data,
                           LogEnergyMethod method = LogEnergyMethod::direct);
// energy of a single zero-mass signed measure
double log_energy(const CurveMeasure& d, const InterpolationData& data, LogEnergyMethod method = LogEnergyMethod::direct);
double cosine_integral(double x);

// ------------------------------------------------------------ scans
struct ConcentrationRow {
    int N = 0;
    double abs_linear = 0.0, abs_linear_se = 0.0;  // E|\int f d(L~_N - nu)|
    double d2 = 0.0, d2_se = 0.0;                  // E D^2(L~_N, nu)
};
struct ConcentrationScan {
    std::vector<ConcentrationRow> rows;
    double d2_exponent = 0.0;  // -slope of ln E D^2 against ln N
};
ConcentrationScan concentration_scan(const InterpolationData& data, int beta, const std::vector<int>& Ns,
                                     const std::function<double(double)>& f, int repetitions, std::uint64_t seed);

struct EdgeRow {
    int N = 0;
    double window = 0.0;       // kernel bandwidth at the wall
    double log_density = 0.0;  // ln rho^(-eps)
    double bulk_density = 0.0; // rho^(1/2)
    double partition_mass = 0.0;  // histogram integral over a partition of the domain
    bool widened = false;
};
struct EdgeScan {
    std::vector<EdgeRow> rows;
    std::vector<std::string> warnings;
};
EdgeScan edge_density_estimate(const InterpolationData& data, int beta, const std::vector<int>& Ns, long samples,
                               std::uint64_t seed);

// G_in / i on [a, b]^N with a tabulated as a 2D Chebyshev series, so that
// sum_ij a(x_i, x_j) = u^T C u with u_k = sum_i T_k(x_i): O(N n + n^2) per configuration
class PhaseTable {
public:
    PhaseTable(const PhaseKernels& pk, double a, double b, int n = 40);
    double operator()(const double* x, int N, int beta) const;
    // max |a - table| on a check grid
    double table_error = 0.0;

private:
    PhaseKernels pk_;
    double a_, b_;
    int n_;
    Eigen::MatrixXd C_;
    ChebFun p_;
};

struct PhaseMC {
    cplx value;
    double std_error = 0.0;
    long samples = 0;
    double r_hat = 1.0;
};
PhaseMC phase_expectation_mc(const InterpolationData& data, int N, int beta, const SamplerConfig& cfg,
                             double max_se = 0.05);

}  // namespace cg
