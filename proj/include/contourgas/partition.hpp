/*
 * partition.hpp -- partition functions of the contour gas
 *
 *     Z_N[V] = \int_{Sigma^N} prod_{a<b} (z_a - z_b)^beta  prod_a e^{-N beta V(z_a)} dz,
 *
 * and of its real cousin (|.|^beta, Re V, |gamma'| dx).
 *
 * Gaussian case.  For V0(z) = 4 (z-c)^2 / D^2 + V(c), D = zeta2 - zeta1, c the midpoint,
 * Mehta's integral gives
 *
 *     ln Z = (N/2) ln 2pi + E ln( D / sqrt(8 N beta) ) - beta N^2 V(c)
 *            - N lnG(beta/2 + 1) + sum_{j=1}^N lnG(beta j/2 + 1),
 *     E    = N (1 - beta/2) + beta N^2 / 2.
 *
 * The last sum is a product of factorials (beta even); it is rewritten with
 *
 *     prod_{j=1}^{n-1} (t j)! = t^{-n(t-1)/2} (prod_{j=1}^{tn-1} j!)^{1/t}
 *                               prod_{p=1}^{t-1} [G(p/t)/G(p/t + n)]^{1-p/t}
 *
 * (G = Gamma) which turns the large-N expansion into Barnes-function asymptotics:
 *
 *     ln Z = F_{-2} N^2 + (beta/2) N ln N + F_{-1} N + (3 + beta/2 + 2/beta)/12 ln N + F_0 + o(1),
 *     F_{-2} = -(beta/2) I[mu],
 *     F_{-1} = (beta/2 - 1)[ \int ln(dmu/dz) dmu + ln(beta/2) ] + (beta/2) ln(2pi/e) - lnG(beta/2).
 *
 * Interpolation in t (V_t, Sigma_t from the quadratic V_0 at t = 0 to V at t = 1):
 *
 *     d/dt ln Z_t = -beta N^2 << d_t V_t >>
 *                 = -beta N^2 [ mu_t(d_t V_t) + c_1/N + c_2/N^2 ] + O(1/N),
 *     mu_t(d_t V_t) = (1/2) dI/dt,     c_1 = (1/beta - 1/2) d/dt \int ln(dmu_t/dz) dmu_t,
 *
 * so \int_0^1 dt reproduces F_{-2} N^2 + F_{-1} N differences and adds the F_0 difference.
 *
 * All values are carried as complex logarithms (log-modulus + phase).
 */
#pragma once

#include "contourgas/contour.hpp"
#include "contourgas/equilibrium.hpp"
#include "contourgas/fluctuations.hpp"
#include "contourgas/numkit.hpp"

#include <functional>
#include <vector>

namespace cg {

struct InvalidBeta : NumError {
    using NumError::NumError;
};
void require_even_beta(int beta);

cplx selberg_log(int N, int beta, cplx zeta1, cplx zeta2, cplx V_center);
double selberg_exact(int N, int beta, double zeta1, double zeta2, double V_center);
// same closed form with the factorial product evaluated through the Barnes reduction
cplx selberg_log_barnes(int N, int beta, cplx zeta1, cplx zeta2, cplx V_center);

// ln prod_{j=1}^{n-1} (t j)!  directly and by the reduction
double factorial_product_log(int t, int n);
double factorial_product_reduce_log(int t, int n);
double factorial_product_reduce(int t, int n);

struct ExpansionRow {
    int N = 0;
    cplx lnZ_exact, lnZ_pred, residual;
};

struct ExpansionReport {
    int beta = 2;
    cplx F_m2, F_m1;
    double logN_coefficient = 0.0;
    double NlogN_coefficient = 0.0;
    std::vector<ExpansionRow> residual_table;
};

struct FCoefficients {
    cplx F_m2, F_m1;
};
// from the energy I and \int ln(dmu/dz) dmu
FCoefficients f_coefficients(cplx energy, cplx log_density, int beta);
FCoefficients f_coefficients(const InterpolationData& data, int beta);

// Gaussian closed forms of I and \int ln(dmu/dz) dmu for the quadratic V0
cplx gaussian_energy(cplx zeta1, cplx zeta2, cplx V_center);
cplx gaussian_log_density(cplx zeta1, cplx zeta2);

cplx predicted_lnZ(int N, int beta, const FCoefficients& F);

ExpansionReport selberg_expansion(const std::vector<int>& Ns, int beta, cplx zeta1, cplx zeta2,
                                  cplx V_center);

// ------------------------------------------------------------ tensor quadrature
struct QuadratureResult {
    cplx log_value;          // ln Z (phase in the imaginary part)
    double rel_error = 0.0;  // |Q_{2M}/Q_M - 1|
    int nodes = 0;           // M used for the reported value
    cplx value() const { return std::exp(log_value); }
};

// affine curve through zeta1, zeta2 extended by 6 standard deviations of
// the single-particle Gaussian weight of V0 (parameter window [-6s, 1+6s])
Curve truncated_line(cplx zeta1, cplx zeta2, int N, int beta);

QuadratureResult z_complex_quadrature(int N, int beta, const std::function<cplx(cplx)>& V,
                                      const Curve& curve, double tol = 1e-8, int M0 = 32);
QuadratureResult z_real_quadrature(int N, int beta, const std::function<cplx(cplx)>& V,
                                   const Curve& curve, double tol = 1e-8, int M0 = 32);

// ------------------------------------------------------------ t-interpolation
struct DtLnZ {
    cplx value;       // -beta N^2 [mu(d_t V_t) + c1/N + c2/N^2]
    cplx mu_dtV;      // mu_t(d_t V_t)
    OneStatExpansion expansion;
};
// d_t V_t by central differences of V_t in t (one-sided at the ends)
DtLnZ dt_lnZ(const OneCutSolution& sol, const CurveFamily& fam, double t, int N, int beta, double h = 1e-4);
// \int_0^1 d/dt ln Z dt by Gauss-Legendre in t: ln Z_V - ln Z_{V_0} through the computed orders
cplx interpolate_lnZ(const OneCutSolution& sol, const CurveFamily& fam, int N, int beta, int nodes = 16);

// parameter-space tensor quadrature of an arbitrary symmetric weight
// prod_{a<b} K(x_a, x_b) prod_a w(x_a) -- exposed for the MC/Fredholm cross-checks
cplx tensor_sum(int N, const std::vector<double>& x, const std::vector<cplx>& w,
                const std::function<cplx(double, double)>& pair);

}  // namespace cg
