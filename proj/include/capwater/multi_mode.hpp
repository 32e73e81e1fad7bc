#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include "capwater/core.hpp"
#include "capwater/one_mode.hpp"

/// Finite-n parallel-channel solver: diagonalize commuting noise blocks,
/// partition modes by the common multiplier mu, solve the closed equation
/// on mu and assemble the one-shot capacity.
namespace capwater {

/// Diagonalized noise: one OneModeNoise per mode.
struct ModeEnsemble {
    std::vector<OneModeNoise> modes;

    explicit ModeEnsemble(std::vector<OneModeNoise> m) : modes(std::move(m)) {
        if (modes.empty()) throw domain_error("ModeEnsemble: must be nonempty");
    }

    std::size_t size() const { return modes.size(); }
};

/// Dense square matrix, row-major.  Small n only.
struct SquareMatrix {
    int n = 0;
    std::vector<double> a;

    SquareMatrix() = default;
    explicit SquareMatrix(int n_) : n(n_), a(static_cast<std::size_t>(n_) * n_, 0.0) {}

    double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
    double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }

    static SquareMatrix identity(int n) {
        SquareMatrix m(n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
};

namespace detail {

inline SquareMatrix matmul(const SquareMatrix& x, const SquareMatrix& y) {
    SquareMatrix z(x.n);
    for (int i = 0; i < x.n; ++i)
        for (int k = 0; k < x.n; ++k) {
            const double xik = x(i, k);
            if (xik == 0.0) continue;
            for (int j = 0; j < x.n; ++j) z(i, j) += xik * y(k, j);
        }
    return z;
}

inline SquareMatrix transpose(const SquareMatrix& x) {
    SquareMatrix z(x.n);
    for (int i = 0; i < x.n; ++i)
        for (int j = 0; j < x.n; ++j) z(j, i) = x(i, j);
    return z;
}

inline double frobenius(const SquareMatrix& x) {
    double s = 0.0;
    for (double v : x.a) s += v * v;
    return std::sqrt(s);
}

inline double commutator_norm(const SquareMatrix& x, const SquareMatrix& y) {
    const SquareMatrix xy = matmul(x, y);
    const SquareMatrix yx = matmul(y, x);
    double s = 0.0;
    for (std::size_t i = 0; i < xy.a.size(); ++i) {
        const double d = xy.a[i] - yx.a[i];
        s += d * d;
    }
    return std::sqrt(s);
}

// Cyclic Jacobi for a real symmetric matrix.  Columns of v are the
// eigenvectors; eigenvalues land on the diagonal of a.
inline void jacobi_eigen(SquareMatrix a, std::vector<double>& d,
                         SquareMatrix& v) {
    const int n = a.n;
    v = SquareMatrix::identity(n);
    const double scale = std::max(frobenius(a), 1e-300);
    for (int sweep = 0; sweep < 128; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (std::sqrt(off) <= 1e-15 * scale) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) <= 1e-18 * scale) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    d.resize(n);
    for (int i = 0; i < n; ++i) d[i] = a(i, i);
}

}  // namespace detail

/// Block noise covariance of n correlated channel uses: an n x n symmetric
/// matrix per quadrature, no q-p cross block.  The blocks must commute.
struct BlockNoise {
    SquareMatrix q_block;
    SquareMatrix p_block;

    BlockNoise(SquareMatrix q, SquareMatrix p)
        : q_block(std::move(q)), p_block(std::move(p)) {
        if (q_block.n != p_block.n || q_block.n < 1)
            throw model_error("BlockNoise: blocks must be square, same size");
        const double sq = detail::frobenius(q_block);
        const double sp = detail::frobenius(p_block);
        const double sym_tol = 1e-12 * std::max(1.0, std::max(sq, sp));
        for (int i = 0; i < q_block.n; ++i)
            for (int j = i + 1; j < q_block.n; ++j)
                if (std::abs(q_block(i, j) - q_block(j, i)) > sym_tol ||
                    std::abs(p_block(i, j) - p_block(j, i)) > sym_tol)
                    throw model_error("BlockNoise: blocks must be symmetric");
        const double comm = detail::commutator_norm(q_block, p_block);
        if (comm > 1e-8 * std::max(1.0, sq * sp))
            throw model_error("BlockNoise: quadrature blocks do not commute "
                              "(commutator norm " + std::to_string(comm) + ")");
    }

    int n_modes() const { return q_block.n; }
};

/// Gauss-Markov block noise for n uses: q block N phi^|i-j|, p block with
/// alternating sign.  The blocks commute only for n <= 2.
inline BlockNoise gauss_markov_blocks(int n, double N, double phi) {
    SquareMatrix q(n), p(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            q(i, j) = N * std::pow(phi, std::abs(i - j));
            p(i, j) = N * std::pow(-phi, std::abs(i - j));
        }
    return BlockNoise(std::move(q), std::move(p));
}

/// Joint eigendecomposition of the commuting quadrature blocks.  Mode i
/// pairs the q and p eigenvalues that share eigenvector i (column i of the
/// returned basis).  Modes are ordered by decreasing q eigenvalue.
inline std::pair<ModeEnsemble, SquareMatrix> diagonalize_noise(
    const BlockNoise& noise) {
    const int n = noise.n_modes();
    const double scale = std::max(
        1.0, detail::frobenius(noise.q_block) * detail::frobenius(noise.p_block));
    const double comm = detail::commutator_norm(noise.q_block, noise.p_block);
    if (comm > 1e-8 * scale)
        throw model_error("diagonalize_noise: quadrature blocks do not commute "
                          "(commutator norm " + std::to_string(comm) + ")");

    std::vector<double> dq;
    SquareMatrix v;
    detail::jacobi_eigen(noise.q_block, dq, v);

    // Order modes by decreasing q eigenvalue.
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::sort(perm.begin(), perm.end(),
              [&](int i, int j) { return dq[i] > dq[j]; });
    SquareMatrix vs(n);
    std::vector<double> dqs(n);
    for (int c = 0; c < n; ++c) {
        dqs[c] = dq[perm[c]];
        for (int r = 0; r < n; ++r) vs(r, c) = v(r, perm[c]);
    }

    // p block in the q eigenbasis; re-diagonalize within degenerate
    // q eigenspaces so both blocks share one eigenbasis.
    SquareMatrix b = detail::matmul(detail::transpose(vs),
                                    detail::matmul(noise.p_block, vs));
    const double dq_scale = std::max(1.0, std::abs(dqs[0]));
    int start = 0;
    while (start < n) {
        int end = start + 1;
        while (end < n && std::abs(dqs[end] - dqs[start]) <= 1e-8 * dq_scale)
            ++end;
        const int m = end - start;
        if (m > 1) {
            SquareMatrix sub(m);
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j) sub(i, j) = b(start + i, start + j);
            std::vector<double> dsub;
            SquareMatrix w;
            detail::jacobi_eigen(sub, dsub, w);
            SquareMatrix cols(n);  // scratch: rotated columns
            for (int r = 0; r < n; ++r)
                for (int c = 0; c < m; ++c) {
                    double acc = 0.0;
                    for (int k = 0; k < m; ++k)
                        acc += vs(r, start + k) * w(k, c);
                    cols(r, c) = acc;
                }
            for (int r = 0; r < n; ++r)
                for (int c = 0; c < m; ++c) vs(r, start + c) = cols(r, c);
        }
        start = end;
    }

    b = detail::matmul(detail::transpose(vs), detail::matmul(noise.p_block, vs));
    const double p_scale = std::max(1.0, detail::frobenius(noise.p_block));
    double max_off = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j) max_off = std::max(max_off, std::abs(b(i, j)));
    if (max_off > 1e-7 * p_scale)
        throw model_error("diagonalize_noise: no shared eigenbasis "
                          "(residual off-diagonal " + std::to_string(max_off) + ")");

    std::vector<OneModeNoise> modes;
    modes.reserve(n);
    for (int i = 0; i < n; ++i) {
        double mq = dqs[i], mp = b(i, i);
        if (mq < -1e-10 * dq_scale || mp < -1e-10 * p_scale)
            throw model_error("diagonalize_noise: blocks are not positive "
                              "semidefinite");
        modes.emplace_back(std::max(mq, 0.0), std::max(mp, 0.0));
    }
    return {ModeEnsemble(std::move(modes)), std::move(vs)};
}

/// Disjoint index sets of the three regimes at a common multiplier.
struct Partition {
    std::vector<int> n1;  ///< vacuum modes (no modulation)
    std::vector<int> n2;  ///< single-quadrature-modulated modes
    std::vector<int> n3;  ///< water-filling modes
};

/// Classify each mode by the common multiplier: N3 iff mu <= mu_thr,
/// N1 iff mu >= mu_0, N2 otherwise.
inline Partition classify_modes(const ModeEnsemble& ensemble, double mu) {
    if (!(mu > 0.0)) throw domain_error("classify_modes: requires mu > 0");
    Partition part;
    for (std::size_t i = 0; i < ensemble.size(); ++i) {
        const auto& m = ensemble.modes[i];
        if (mu <= mu_threshold_bound(m))
            part.n3.push_back(static_cast<int>(i));
        else if (mu >= mu_zero(m))
            part.n1.push_back(static_cast<int>(i));
        else
            part.n2.push_back(static_cast<int>(i));
    }
    return part;
}

/// Total input energy drawn by the ensemble at multiplier mu.  Strictly
/// decreasing in mu until it saturates at n (every mode in vacuum).
inline double total_input_energy(const ModeEnsemble& ensemble, double mu,
                                 const SolverTolerances& tol = {}) {
    double total = 0.0;
    for (const auto& m : ensemble.modes) total += solve_for_mu(m, mu, tol).first;
    return total;
}

/// Solution of the closed equation on mu for a finite mode ensemble.
struct MultiModeSolution {
    double mu;
    std::vector<OneModeSolution> per_mode;
    Partition partition;
    double c1;           ///< one-shot capacity of the n modes, bits
    double c1_per_mode;  ///< c1 / n
};

/// Solve the closed equation total_input_energy(mu) = lambda by bisection
/// on mu and assemble per-mode solutions and the one-shot capacity.
inline MultiModeSolution solve_mu(const ModeEnsemble& ensemble, double lambda,
                                  const SolverTolerances& tol = {}) {
    tol.validate();
    const double n = static_cast<double>(ensemble.size());
    if (!(lambda >= n))
        throw domain_error("solve_mu: lambda below the total vacuum floor n");

    double hi = 0.0;
    bool hi_finite = true;
    for (const auto& m : ensemble.modes) {
        const double m0 = mu_zero(m);
        if (!std::isfinite(m0)) hi_finite = false;
        hi = std::max(hi, m0);
    }
    if (!hi_finite) {
        hi = 1.0;
        while (total_input_energy(ensemble, hi, tol) > lambda && hi < 1e12)
            hi *= 2.0;
    }

    MultiModeSolution out{};
    if (lambda == n) {
        out.mu = hi;
    } else {
        double lo = std::min(1e-12, 0.5 * hi);
        while (total_input_energy(ensemble, lo, tol) < lambda && lo > 1e-300)
            lo /= 16.0;
        const double width_tol =
            std::numeric_limits<double>::epsilon() * std::max(1.0, hi);
        int it = 0;
        while (hi - lo > width_tol && it++ < tol.max_iter) {
            const double mid = 0.5 * (lo + hi);
            if (mid == lo || mid == hi) break;
            const double h = total_input_energy(ensemble, mid, tol) - lambda;
            if (h == 0.0) {
                lo = hi = mid;
                break;
            }
            (h > 0.0 ? lo : hi) = mid;
        }
        out.mu = 0.5 * (lo + hi);
    }

    double sum_lambda = 0.0;
    out.c1 = 0.0;
    out.per_mode.reserve(ensemble.size());
    for (const auto& m : ensemble.modes) {
        auto [li, sol] = solve_for_mu(m, out.mu, tol);
        sum_lambda += li;
        out.c1 += sol.chi;
        out.per_mode.push_back(std::move(sol));
    }
    const double slack = std::max(1e-8, 1e-10 * lambda);
    if (std::abs(sum_lambda - lambda) > slack)
        throw convergence_error("solve_mu: energy closure " +
                                std::to_string(sum_lambda) + " vs lambda " +
                                std::to_string(lambda));
    out.partition = classify_modes(ensemble, out.mu);
    out.c1_per_mode = out.c1 / n;
    return out;
}

}  // namespace capwater
