/*
 * numkit.hpp -- foundation numerics.
 *
 *   ComplexPolynomial   p(z) = sum_k c_k z^k, Horner evaluation.
 *   WeightedGrid        quadrature rules on an interval:
 *                         gauss_legendre          int_a^b f(x) dx
 *                         gauss_chebyshev_sqrt    int_a^b f(x) sqrt((x-a)(b-x)) dx
 *                         inverse_sqrt            int_a^b f(x) / sqrt((x-a)(b-x)) dx
 *                         closed_loop_trapezoid   int_0^{2pi} f(theta) dtheta
 *   ChebFun             complex Chebyshev series on [a,b], evaluable at
 *                       complex arguments (Clenshaw), with derivatives.
 *   BranchTrack         continuous argument along an ordered sample path.
 *
 * The log-energy of a zero-mass signed measure D on the real line,
 *
 *     E[D] = \iint ln 1/|x-y| dD(x) dD(y)
 *          = (1/2pi) \iint |D^(p,q)|^2 / (p^2+q^2) dp dq
 *          = \int_0^inf |D^(p)|^2 / p dp ,
 *
 * where the q-integral of the planar form has been done in closed form
 * (D lives on the real axis so its planar transform does not depend on q).
 */
#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cg {

using cplx = std::complex<double>;
constexpr double PI = 3.14159265358979323846264338327950288;
constexpr cplx I1{0.0, 1.0};

struct NumError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------- polynomials
struct ComplexPolynomial {
    std::vector<cplx> coeffs;  // ascending powers

    ComplexPolynomial() = default;
    explicit ComplexPolynomial(std::vector<cplx> c);

    int degree() const { return static_cast<int>(coeffs.size()) - 1; }
    cplx leading() const { return coeffs.back(); }
    cplx operator()(cplx z) const;
    ComplexPolynomial derivative() const;
    // antiderivative vanishing at 0
    ComplexPolynomial integral() const;
    std::string str() const;
};

cplx poly_eval(const ComplexPolynomial& p, cplx z);

// z = scale * w ; p~(w) = p(scale*w) - shift has leading term w^k/k
struct AffineMap {
    cplx scale{1.0, 0.0};
    cplx offset{0.0, 0.0};
    cplx dropped_constant{0.0, 0.0};
};
std::pair<ComplexPolynomial, AffineMap> poly_normalize(const ComplexPolynomial& p);

// companion-matrix eigenvalues + one Newton polish
std::vector<cplx> poly_roots(const ComplexPolynomial& p);

ComplexPolynomial poly_mul(const ComplexPolynomial& a, const ComplexPolynomial& b);

// ---------------------------------------------------------------- quadrature
enum class GridKind { gauss_legendre, gauss_chebyshev_sqrt, inverse_sqrt, closed_loop_trapezoid };

std::string grid_kind_name(GridKind k);

struct WeightedGrid {
    GridKind kind = GridKind::gauss_legendre;
    std::vector<double> nodes;
    std::vector<double> weights;
    double a = -1.0, b = 1.0;
    std::size_t size() const { return nodes.size(); }
};

WeightedGrid make_grid(GridKind kind, int n, double a = 0.0, double b = 1.0);

// barycentric weights for arbitrary distinct real nodes (scaled, max |w| = 1)
std::vector<double> barycentric_weights(const std::vector<double>& x);
// closed forms for the Chebyshev grids
std::vector<double> barycentric_weights(const WeightedGrid& g);

// evaluate the interpolant through (x_j, f_j) at a complex point
cplx barycentric_eval(const std::vector<double>& x, const std::vector<double>& lam,
                      const std::vector<cplx>& f, cplx z);
// row vector r with r . f = interpolant at z (real z)
std::vector<double> barycentric_row(const std::vector<double>& x, const std::vector<double>& lam,
                                    double z);
// spectral differentiation matrix D_ij (row-major n*n)
std::vector<double> diff_matrix(const std::vector<double>& x, const std::vector<double>& lam);

// fixed-order pairwise summation
double pairwise_sum(const double* v, std::size_t n);
cplx pairwise_sum(const cplx* v, std::size_t n);
inline double pairwise_sum(const std::vector<double>& v) { return pairwise_sum(v.data(), v.size()); }
inline cplx pairwise_sum(const std::vector<cplx>& v) { return pairwise_sum(v.data(), v.size()); }

// ---------------------------------------------------------------- Chebyshev series
class ChebFun {
public:
    ChebFun() = default;
    // interpolate f at n Chebyshev points of the first kind on [a,b]
    ChebFun(const std::function<cplx(double)>& f, int n, double a, double b);
    static ChebFun from_coeffs(std::vector<cplx> c, double a, double b);
    // values given at points(n, a, b)
    static ChebFun from_values(const std::vector<cplx>& fv, double a, double b);
    // first-kind points on [a,b], descending
    static std::vector<double> points(int n, double a, double b);

    cplx operator()(cplx x) const;
    // divided differences f[u,v] and f[u,u,v], free of cancellation for u ~ v
    cplx divided_difference(cplx u, cplx v) const;
    cplx divided_difference2(cplx u, cplx v) const;
    ChebFun derivative() const;
    // primitive vanishing at a
    ChebFun primitive() const;
    double lo() const { return a_; }
    double hi() const { return b_; }
    const std::vector<cplx>& coeffs() const { return c_; }
    // magnitude of the trailing coefficients relative to the largest
    double tail() const;

private:
    std::vector<cplx> c_;
    double a_ = -1.0, b_ = 1.0;
};

// ---------------------------------------------------------------- branch tracking
struct BranchTrack {
    std::vector<double> samples;
    std::vector<double> args;
    double base_choice = 0.0;
};

// samples: parameter points (may be empty -> 0..n-1)
BranchTrack track_arg(const std::vector<cplx>& values, double base,
                      std::vector<double> samples = {});

// continuous log of a complex function along an ordered path, anchored at base arg
std::vector<cplx> track_log(const std::vector<cplx>& values, double base);

// ---------------------------------------------------------------- log energy
// Piecewise-linear densities d1, d2 sampled on x_k = x0 + k h (k = 0..n-1).
// Returns \iint ln(1/|x-y|) d(mu-nu)(x) d(mu-nu)(y) via the Fourier form.
double log_energy_form(double x0, double h, const std::vector<double>& d1,
                       const std::vector<double>& d2);
// bilinear version <D1, D2> for two zero-mass signed densities (same grid)
double log_energy_bilinear(double x0, double h, const std::vector<double>& s1,
                           const std::vector<double>& s2);

// Gauss-Legendre helper on [a,b] (cached by n)
const WeightedGrid& gl_unit(int n);

// ---------------------------------------------------------------- workers
// CONTOUR_GAS_THREADS caps the worker count (default: hardware concurrency)
int worker_count();
// fn(i) for i < n; each index is written by exactly one worker, so results
// stored per index and reduced afterwards in index order are deterministic
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace cg
