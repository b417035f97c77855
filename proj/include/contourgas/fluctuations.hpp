/*
 * fluctuations.hpp -- Gaussian fluctuations of the real model, phase kernels and
 * the Fredholm form of the Gaussian phase expectation.
 *
 * Real model on the parameter interval, nu = semicircle on [0,1]:
 *
 *     m_t[f] = (1/beta - 1/2) nu( R[Xi^{-1} f] ),     R[g] = Re(gamma''/gamma') g + g',
 *     C_t[f,g] = (1/beta) nu( f' Xi^{-1}[g] ),         V_t[f] = C_t[f,f],
 *
 * so that N L_N(f) -> Normal(m_t[f], V_t[f]) with L_N = L_N - nu.
 * Joint Gaussian moments (Wick):
 *
 *     Psi({f_1..f_{k+1}}) = m[f_{k+1}] Psi({f_1..f_k}) + sum_q C[f_q, f_{k+1}] Psi({..} \ f_q).
 *
 * Phase of the complex model relative to the real one:
 *
 *     G_in = (i beta N^2/2) \int\int a_t dL dL + i N (1 - beta/2) \int p_t dL,
 *     a_t(x,y) = chi(x) chi(y) arg[(gamma(x) - gamma(y))/(x - y)],  p_t(x) = chi(x) arg gamma'(x),
 *
 * chi = 1 on [-eps, 1+eps], 0 outside [-eps', 1+eps'].  Fourier side:
 *
 *     A(x,y) = \int\int a(x',y') e^{2 i pi (y y' - x x')},   P(x) = \int p(x') e^{-2 i pi x x'},
 *     B(x,y) = C_t[e^{-2 i pi x .}, e^{2 i pi y .}],        m(x) = m_t[e^{-2 i pi x .}].
 *
 * Gaussian expectation (finite-rank lemma, operators on L^2 of the frequency grid):
 *
 *     E[exp(i s/2 <xi, A xi> + i <lam, xi>)]
 *        = det(1 - i s B A)^{-1/2} exp( i s/2 <mu, A (1 - i s B A)^{-1} mu>
 *                                       + i <lam, (1 - i s B A)^{-1} mu>
 *                                       - 1/2 <lam, (1 - i s B A)^{-1} B lam> ),
 *
 * with s = beta and lam = (1 - beta/2) P for the phase.  The square root is the
 * branch equal to 1 at s = 0: prod_j (1 - i s lambda_j)^{1/2}, lambda_j the
 * eigenvalues of sqrt(B) A sqrt(B).
 *
 * Loop equation (k = 0) of the real model, h = Xi^{-1}[F]:
 *
 *     E[L_N(F)] = 1/2 E[\int\int D[h] dL dL] + (1/N)(1/beta - 1/2) E[L_N(R h)] + boundary,
 *     D[h](x,y) = Re( (gamma'(x) h(x) - gamma'(y) h(y)) / (gamma(x) - gamma(y)) ).
 *
 * One linear statistic of the complex model, f analytic near the support:
 *
 *     <<f>>_{L_N} = T1/N + (T2 + T3 + T4)/N^2 + O(N^-3),
 *     T1 = (1/beta - 1/2)   mu( d Delta^{-1} f ),
 *     T2 = (1/beta - 1/2)^2 mu( d Delta^{-1} d Delta^{-1} f ),
 *     T3 = 1/2 (1/beta - 1/2)^2 mu x mu( d1 Delta1^{-1} d2 Delta2^{-1} [D Delta^{-1} f] ),
 *     T4 = 1/(2 beta) mu( diag d2 Delta1^{-1} [D Delta^{-1} f] ),
 *
 * D the non-commutative derivative (h(z) - h(w))/(z - w).
 */
#pragma once

#include "contourgas/contour.hpp"
#include "contourgas/equilibrium.hpp"
#include "contourgas/numkit.hpp"
#include "contourgas/operators.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <vector>

namespace cg {

using RealFn = std::function<cplx(double)>;

// ------------------------------------------------------------ Gaussian law
class GaussianLaw {
public:
    GaussianLaw(const InterpolationData& data, int beta, int nodes = 64);

    int beta() const { return beta_; }
    const DiscretizedOperator& op() const { return op_; }
    const OperatorGrid& grid() const { return op_.grid; }

    cplx mean(const RealFn& f) const { return mean_nodal(grid().sample(f)); }
    cplx cov(const RealFn& f, const RealFn& g) const { return cov_nodal(grid().sample(f), grid().sample(g)); }
    cplx variance(const RealFn& f) const { return cov(f, f); }
    // versions on nodal values (f' by spectral differentiation)
    cplx mean_nodal(const Eigen::VectorXcd& f) const { return (mean_row_ * f)(0); }
    cplx cov_nodal(const Eigen::VectorXcd& f, const Eigen::VectorXcd& g) const;
    // f' supplied explicitly (used for the exponentials of the kernel pair)
    cplx cov_nodal(const Eigen::VectorXcd& f, const Eigen::VectorXcd& fprime, const Eigen::VectorXcd& g) const;
    // Xi^{-1}[g] on the nodes
    Eigen::VectorXcd solve(const Eigen::VectorXcd& g) const { return op_.inverse_apply(g); }
    const Eigen::RowVectorXcd& mean_row() const { return mean_row_; }

private:
    int beta_;
    DiscretizedOperator op_;
    Eigen::RowVectorXcd mean_row_;
};

cplx clt_mean(const InterpolationData& data, const RealFn& f, int beta, int nodes = 64);
cplx clt_cov(const InterpolationData& data, const RealFn& f, const RealFn& g, int beta, int nodes = 64);

cplx wick_moments(const std::vector<RealFn>& fs, const GaussianLaw& law);

// ------------------------------------------------------------ phase kernels
// C^infinity cutoff: 1 on [-eps, 1+eps], 0 outside [-eps', 1+eps']
double chi_cutoff(double x, double eps, double eps_prime);

struct PhaseKernels {
    double eps = 0.05, eps_prime = 0.1;
    // constant removed from every arg; invisible to G_in because the centred
    // empirical measure has zero mass on the plateau of chi
    double branch_shift = 0.0;
    std::function<double(double, double)> a;
    std::function<double(double)> p;
    // \int a(x, y) dnu(y) and \int\int a dnu dnu
    ChebFun a_nu;
    double a_nunu = 0.0;
    double p_nu = 0.0;
};

PhaseKernels phase_kernels(const InterpolationData& data, double eps = -1.0, double eps_prime = -1.0);

// G_in for a configuration (parameter positions)
cplx phase_exponent(const PhaseKernels& pk, const std::vector<double>& x, int beta);

struct FrequencyGrid {
    std::vector<double> nodes;
    std::vector<double> weights;
    double L = 0.0;
    static FrequencyGrid uniform(double L, int K);
};

struct KernelPair {
    FrequencyGrid grid;
    Eigen::MatrixXcd A, B;
    Eigen::VectorXcd P, m;
    double parseval_space = 0.0, parseval_freq = 0.0;  // \int\int |a|^2 both ways
    // max |A| on the outer ring of the grid / max |A|; above edge_tolerance the
    // kernel is not resolved and a GridTooSmall error is raised
    double edge_ratio = 0.0;
    // same ratio for |A| (1+|x|)^4 (1+|y|)^4 (diagnostic only)
    double weighted_decay = 0.0;
    double b_hermitian_defect = 0.0;
    double b_min_eigenvalue = 0.0;
};

struct GridTooSmall : NumError {
    using NumError::NumError;
};
constexpr double edge_tolerance = 0.05;

// L = 16/(1+eps'), K = 256 frequencies, Xi with op_nodes >= 128
KernelPair fourier_kernels(const InterpolationData& data, const PhaseKernels& pk, int beta,
                           int K = 256, int op_nodes = 128, int space_nodes = 256, double L = -1.0);

// ------------------------------------------------------------ Fredholm expectation
struct FredholmResult {
    cplx value;
    cplx det;          // det(1 - i s B A)
    double det_modulus_min = 0.0;  // min_j |1 - i s lambda_j|
};

// finite matrices: B Hermitian PSD, mu, lam vectors; <x,y> = x^H y
FredholmResult fredholm_formula(const Eigen::MatrixXcd& A, const Eigen::MatrixXcd& B, const Eigen::VectorXcd& mu,
                                const Eigen::VectorXcd& lam, double s = 1.0);

// phase expectation from a kernel pair; lambda = p_coeff P with p_coeff = 1 - beta/2 by default
FredholmResult fredholm_expectation(const KernelPair& kp, int beta);
FredholmResult fredholm_expectation(const KernelPair& kp, int beta, double p_coeff);

// ------------------------------------------------------------ finite-rank oracle
// xi indexed by S_n = {-n..-1, 1..n} stored at positions k+n (k<0) and k+n-1 (k>0)
int srank_index(int k, int n);
// E[exp(i s/2 <xi, A xi> + i <lam, xi>)] by the real-variable Gaussian integral
cplx finite_rank_oracle(const Eigen::MatrixXcd& B, const Eigen::VectorXcd& mu, const Eigen::MatrixXcd& A,
                        const Eigen::VectorXcd& lam, double s = 1.0);
struct MCEstimate {
    cplx mean;
    double std_error = 0.0;
    long samples = 0;
};
MCEstimate finite_rank_mc(const Eigen::MatrixXcd& B, const Eigen::VectorXcd& mu, const Eigen::MatrixXcd& A,
                          const Eigen::VectorXcd& lam, double s, long samples, std::uint64_t seed);

// ------------------------------------------------------------ one linear statistic
struct OneStatExpansion {
    cplx T1, T2, T3, T4;  // coefficients; T1 of 1/N, the rest of 1/N^2
    cplx T4_literal;      // chi(2) d2 D Delta^{-1} f without the inner Delta^{-1}
    // order-consistent grouping
    cplx c1, c2;
    // grouping by the displayed powers (T3 under 1/N, literal T4)
    cplx c1_literal, c2_literal;
};
OneStatExpansion one_stat_expansion(const InterpolationData& data, const std::function<cplx(cplx)>& f, int beta,
                                    int nodes = 64);

// ------------------------------------------------------------ small-N real model
// one- and two-point marginals of the real model on a tensor Gauss-Legendre grid
struct TensorMarginals {
    int N = 0;
    std::vector<double> x;  // parameter nodes
    std::vector<double> p1; // P(x_1 = node j)
    Eigen::MatrixXd p2;     // P(x_1 = node j, x_2 = node k)
    // E[sum_i u(x_i)] and E[sum_{i != j} U(x_i, x_j)]
    cplx one_body(const std::vector<cplx>& u) const;
    cplx two_body(const Eigen::MatrixXcd& U) const;
};

TensorMarginals real_model_marginals(int N, int beta, const std::function<cplx(cplx)>& V, const Curve& curve,
                                     int M);

struct LoopCheck {
    cplx lhs, rhs, residual;
};
// F a function of the parameter; the curve is the integration domain of the real model
LoopCheck loop_equation_check(int N, int beta, const InterpolationData& data, const Curve& curve,
                              const RealFn& F, int M = 80);

}  // namespace cg
