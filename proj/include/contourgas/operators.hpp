/*
 * operators.hpp -- master operators on the interpolated curve gamma_t.
 *
 * Complex master operator (z = gamma_t(x) on the support Sigma_t):
 *
 *     Delta[f](z) = V_t'(z) f(z) - \int (f(z) - f(w))/(z - w) dmu_t(w),
 *
 *   inverse on the image (g - K[g]):
 *
 *     f(z) = 1/(8 pi S_t(z)) \int_0^1 (g(gamma(y)) - g(z))/(gamma(y) - z)
 *                                      S_t(gamma(y)) gamma'(y)^2 dy / sqrt(y(1-y)),
 *     K[g] = 1/(8 pi) \int_0^1 g(gamma(y)) S_t(gamma(y)) gamma'(y)^2 dy / sqrt(y(1-y))
 *          = (1/2 i pi) \oint g(s) / r(s) ds.
 *
 * Real master operator (parameter x in [0,1], nu = semicircle (8/pi) sqrt(x(1-x)) dx):
 *
 *     Xi[f](x) = Re W_t(x) f(x) - \int Re( (gamma'(x) f(x) - gamma'(y) f(y)) / (gamma(x) - gamma(y)) ) dnu(y)
 *              = Delta_J[f](x) + T[f](x),
 *     Delta_J[f](x) = 8(x - 1/2) f(x) - \int (f(x) - f(y))/(x - y) dnu(y),
 *     T[f](x)       = \int tau(x,y) f(y) dnu(y),
 *     tau(x,y)      = Re( gamma'(y)/(gamma(x) - gamma(y)) - 1/(x - y) ),   tau(x,x) = -Re(gamma''/(2 gamma')).
 *
 *   Delta_J is the affine (airfoil) operator with explicit inverse
 *
 *     Delta_J^{-1}[h](x) = 1/(8 pi) \int_0^1 (h(s) - h(x))/(s - x) ds / sqrt(s(1-s)),
 *     K_J[h]             = 1/pi \int_0^1 h(s) ds / sqrt(s(1-s)),
 *
 *   so Xi f = g - K[g] is solved by (1 + Delta_J^{-1} T) f = Delta_J^{-1} g and
 *   K[g] = K_J[g - T f].  Xi is injective (Xi[1] = Re W != 0); its image is ker K.
 *
 * Discretisation: second-kind Gauss-Chebyshev nodes x_i (n of them) carry the
 * unknowns; the inverse-square-root integrals use m first-kind nodes, m even,
 * so that the two node sets never coincide.
 */
#pragma once

#include "contourgas/equilibrium.hpp"
#include "contourgas/numkit.hpp"

#include <Eigen/Dense>

#include <functional>

namespace cg {

struct OperatorGrid {
    WeightedGrid x2;          // second kind, n nodes, weight sqrt(x(1-x))
    WeightedGrid s1;          // first kind, m nodes, weight 1/sqrt(x(1-x))
    std::vector<double> lam;  // barycentric weights on x2
    Eigen::MatrixXd E;        // m x n: values on s1 from values on x2
    Eigen::MatrixXd D;        // n x n: d/dx on x2
    Eigen::RowVectorXd nu;    // integration against the semicircle on [0,1]

    static OperatorGrid make(int n);
    int n() const { return static_cast<int>(x2.size()); }
    int m() const { return static_cast<int>(s1.size()); }
    Eigen::VectorXcd sample(const std::function<cplx(double)>& f) const;
    // interpolant through nodal values at any (complex) x
    cplx interpolate(const Eigen::VectorXcd& f, cplx x) const;
};

struct DiscretizedOperator {
    OperatorGrid grid;
    Eigen::MatrixXcd forward;
    Eigen::MatrixXcd inverse;  // g -> Op^{-1}[g - K[g]]
    Eigen::RowVectorXcd k_row;
    bool is_real = false;
    double resolvent_det = 1.0;  // |det(1 + Delta_J^{-1} T)| (real operator)

    Eigen::VectorXcd apply(const Eigen::VectorXcd& f) const { return forward * f; }
    Eigen::VectorXcd inverse_apply(const Eigen::VectorXcd& g) const { return inverse * g; }
    cplx k(const Eigen::VectorXcd& g) const { return (k_row * g)(0); }
};

// ------------------------------------------------------------ real master operator
DiscretizedOperator real_master(const InterpolationData& data, int n = 64);
double real_tau(const InterpolationData& data, double x, double y);
// Xi^{-1}[g] at an arbitrary real x (also outside [0,1]), given the nodal solution f
cplx real_inverse_at(const InterpolationData& data, const DiscretizedOperator& op,
                     const std::function<cplx(double)>& g, const Eigen::VectorXcd& f, double x);

Eigen::VectorXcd real_master_apply(const InterpolationData& data, const Eigen::VectorXcd& f, int n = 64);
Eigen::VectorXcd real_master_inverse(const InterpolationData& data, const Eigen::VectorXcd& g, int n = 64);

// affine (t = 0) operator Delta_J applied with the same Nystrom rule
Eigen::MatrixXd airfoil_forward(const OperatorGrid& grid);
Eigen::MatrixXd airfoil_inverse(const OperatorGrid& grid);
// max |Delta_J[U_{k-1}(2x-1)] - 4 T_k(2x-1)| over nodes, k = 1..kmax
double airfoil_residual(int n = 64, int kmax = 5);

// ------------------------------------------------------------ complex master operator
DiscretizedOperator complex_master(const InterpolationData& data, int n = 64);
// Delta^{-1}[g](z) at an arbitrary point of the analytic strip, given g as a function of z
cplx complex_inverse_at(const InterpolationData& data, const OperatorGrid& grid,
                        const std::function<cplx(cplx)>& g, cplx z);
// K[g] as the loop integral (1/2 i pi) \oint g/r on a circle enclosing the support
cplx k_functional_loop(const OneCutSolution& sol, const std::function<cplx(cplx)>& g, int nodes = 256);

Eigen::VectorXcd complex_master_apply(const InterpolationData& data, const Eigen::VectorXcd& f, int n = 64);
Eigen::VectorXcd complex_master_inverse(const InterpolationData& data, const Eigen::VectorXcd& g, int n = 64);

cplx k_functional(const DiscretizedOperator& op, const Eigen::VectorXcd& g);

}  // namespace cg
