#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

/// Scalar special functions, root bracketing and fixed-node quadrature used
/// by every solver in the library.  All rates and entropies are in bits.
namespace capwater {

/// Base class for everything thrown by this library.
class error : public std::runtime_error {
public:
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid argument values (out-of-domain scalars, bad tolerances, ...).
class domain_error : public error {
public:
    explicit domain_error(const std::string& what) : error(what) {}
};

/// Invalid or unsupported noise model (non-commuting blocks, bad spectra).
class model_error : public error {
public:
    explicit model_error(const std::string& what) : error(what) {}
};

/// Operation called on a solution of the wrong regime, or with an energy
/// outside the regime it implements.
class regime_error : public error {
public:
    explicit regime_error(const std::string& what) : error(what) {}
};

/// Root bracketing failed: no sign change over the candidate interval.
class bracket_error : public error {
public:
    explicit bracket_error(const std::string& what) : error(what) {}
};

/// An iterative solve exhausted its iteration cap.
class convergence_error : public error {
public:
    explicit convergence_error(const std::string& what) : error(what) {}
};

/// Tolerances and discretization knobs shared by all solvers.
///
/// grid_size counts quadrature panels on the spectral domain; each panel
/// carries two Gauss-Legendre nodes.  Near-singular spectra (Gauss-Markov
/// with phi close to 1) are handled by raising grid_size, not adaptively.
struct SolverTolerances {
    double root_tol = 1e-12;  ///< absolute tolerance on root bracket width
    double mu_tol   = 1e-10;  ///< absolute tolerance on the multiplier mu
    int    grid_size = 2048;  ///< quadrature panels (2 nodes per panel)
    int    max_iter  = 200;   ///< iteration cap for bisections

    void validate() const {
        if (!(root_tol > 0.0) || !(mu_tol > 0.0))
            throw domain_error("SolverTolerances: tolerances must be positive");
        if (grid_size < 2)
            throw domain_error("SolverTolerances: grid_size must be >= 2");
        if (max_iter < 1)
            throw domain_error("SolverTolerances: max_iter must be >= 1");
    }
};

/// A root bracket [lo, hi], lo < hi.
struct Bracket {
    double lo;
    double hi;

    Bracket(double lo_, double hi_) : lo(lo_), hi(hi_) {
        if (!(lo < hi)) throw domain_error("Bracket: requires lo < hi");
    }
};

namespace detail {
inline constexpr double ln2 = 0.6931471805599453094172321214581766;
}

/// g(x) = (x+1) log2(x+1) - x log2(x) for x > 0, g(0) = 0.
///
/// Evaluated as x*log2(1+1/x) + log2(1+x); both terms are positive, so the
/// form stays accurate for large arguments where the textbook difference
/// cancels catastrophically.
inline double g(double x) {
    if (!(x >= 0.0)) throw domain_error("g: requires x >= 0");
    if (x == 0.0) return 0.0;
    return (x * std::log1p(1.0 / x) + std::log1p(x)) / detail::ln2;
}

/// g'(x) = log2((x+1)/x), x > 0.  Strictly decreasing, -> 0 at infinity.
inline double g_prime(double x) {
    if (!(x > 0.0)) throw domain_error("g_prime: requires x > 0");
    return std::log1p(1.0 / x) / detail::ln2;
}

/// g''(x) = -1/(ln2 * x * (x+1)), x > 0.  Always negative.
inline double g_second(double x) {
    if (!(x > 0.0)) throw domain_error("g_second: requires x > 0");
    return -1.0 / (detail::ln2 * x * (x + 1.0));
}

/// kappa(x) = g'(x - 1/2) / (2x), x > 1/2.  Positive, strictly decreasing.
inline double kappa(double x) {
    if (!(x > 0.5)) throw domain_error("kappa: requires x > 1/2");
    return g_prime(x - 0.5) / (2.0 * x);
}

/// Water-filling level from the multiplier: nu = (1/2) coth(mu ln2).
/// Inverse of g'(nu - 1/2) = 2 mu; result > 1/2.
inline double nu_from_mu(double mu) {
    if (!(mu > 0.0)) throw domain_error("nu_from_mu: requires mu > 0");
    return 0.5 / std::tanh(mu * detail::ln2);
}

/// Bisection on a continuous f with f(lo)*f(hi) <= 0.  Shrinks the bracket
/// to width <= tol.root_tol and returns its midpoint.  Deterministic.
inline double bisect(const std::function<double(double)>& f, Bracket bracket,
                     const SolverTolerances& tol) {
    double lo = bracket.lo, hi = bracket.hi;
    double flo = f(lo);
    if (flo == 0.0) return lo;
    double fhi = f(hi);
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0))
        throw bracket_error("bisect: no sign change over [" +
                            std::to_string(lo) + ", " + std::to_string(hi) + "]");
    for (int i = 0; i < tol.max_iter; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (hi - lo <= tol.root_tol || mid == lo || mid == hi)
            return mid;
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    throw convergence_error("bisect: iteration cap exceeded, bracket [" +
                            std::to_string(lo) + ", " + std::to_string(hi) + "]");
}

/// Fixed quadrature grid: composite two-point Gauss-Legendre nodes/weights.
struct QuadratureGrid {
    std::vector<double> x;  ///< nodes, ascending
    std::vector<double> w;  ///< weights, sum = b - a

    std::size_t size() const { return x.size(); }
};

/// Build the composite 2-point Gauss-Legendre grid with `panels` panels
/// on [a, b].  2*panels nodes total.
inline QuadratureGrid make_quadrature_grid(double a, double b, int panels) {
    if (!(a < b)) throw domain_error("make_quadrature_grid: requires a < b");
    if (panels < 1) throw domain_error("make_quadrature_grid: panels >= 1");
    // Nodes at panel midpoint +- h/(2 sqrt(3)), weight h/2 each.
    const double h = (b - a) / panels;
    const double off = h * 0.5 / std::sqrt(3.0);
    QuadratureGrid grid;
    grid.x.reserve(2 * static_cast<std::size_t>(panels));
    grid.w.reserve(2 * static_cast<std::size_t>(panels));
    for (int i = 0; i < panels; ++i) {
        const double mid = a + (i + 0.5) * h;
        grid.x.push_back(mid - off);
        grid.x.push_back(mid + off);
        grid.w.push_back(0.5 * h);
        grid.w.push_back(0.5 * h);
    }
    return grid;
}

/// Integrate f over [a, b] with tol.grid_size composite Gauss-Legendre
/// panels.  Relative error <= 1e-8 for smooth integrands at the default
/// grid_size.
inline double integrate(const std::function<double(double)>& f, double a,
                        double b, const SolverTolerances& tol) {
    if (!(a < b)) throw domain_error("integrate: requires a < b");
    const QuadratureGrid grid = make_quadrature_grid(a, b, tol.grid_size);
    double acc = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) acc += grid.w[i] * f(grid.x[i]);
    return acc;
}

}  // namespace capwater
