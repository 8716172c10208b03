#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "tpam/core.hpp"

namespace tpam {

inline RMatrix transpose(const RMatrix& m) {
    RMatrix t(m.cols, m.rows);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) t.at(j, i) = m.at(i, j);
    return t;
}

inline RMatrix matmul(const RMatrix& a, const RMatrix& b) {
    if (a.cols != b.rows) throw std::invalid_argument("matmul: inner dimensions differ");
    RMatrix c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = a.at(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols; ++j) c.at(i, j) += aik * b.at(k, j);
        }
    return c;
}

// Economy singular value decomposition a = u * diag(sigma) * v^T with
// orthonormal u (rows x cols) and v (cols x cols), sigma descending.
struct Svd {
    RMatrix u;
    std::vector<double> sigma;
    RMatrix v;
};

// One-sided Jacobi: rotate column pairs of a working copy until all pairs are
// mutually orthogonal; column norms are then the singular values and the
// accumulated rotations form v. Adequate at desk scale (thousands of rows,
// up to a few hundred columns); requires rows >= cols.
inline Svd jacobi_svd(RMatrix a, std::size_t max_sweeps = 64) {
    if (a.rows == 0 || a.cols == 0)
        throw std::invalid_argument("jacobi_svd: empty matrix");
    if (a.rows < a.cols)
        throw std::invalid_argument("jacobi_svd: requires rows >= cols (transpose first)");
    const std::size_t n = a.rows, m = a.cols;

    RMatrix v(m, m);
    for (std::size_t j = 0; j < m; ++j) v.at(j, j) = 1.0;

    constexpr double kOrthTol = 1e-15;
    bool converged = false;
    for (std::size_t sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
        converged = true;
        for (std::size_t p = 0; p + 1 < m; ++p) {
            for (std::size_t q = p + 1; q < m; ++q) {
                double app = 0.0, aqq = 0.0, apq = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    const double x = a.at(k, p), y = a.at(k, q);
                    app += x * x;
                    aqq += y * y;
                    apq += x * y;
                }
                if (std::abs(apq) <= kOrthTol * std::sqrt(app * aqq)) continue;
                converged = false;

                const double zeta = (aqq - app) / (2.0 * apq);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t k = 0; k < n; ++k) {
                    const double x = a.at(k, p), y = a.at(k, q);
                    a.at(k, p) = c * x - s * y;
                    a.at(k, q) = s * x + c * y;
                }
                for (std::size_t k = 0; k < m; ++k) {
                    const double x = v.at(k, p), y = v.at(k, q);
                    v.at(k, p) = c * x - s * y;
                    v.at(k, q) = s * x + c * y;
                }
            }
        }
    }
    if (!converged)
        throw std::runtime_error("jacobi_svd: no convergence within sweep budget");

    std::vector<double> sigma(m);
    for (std::size_t j = 0; j < m; ++j) {
        double s2 = 0.0;
        for (std::size_t k = 0; k < n; ++k) s2 += a.at(k, j) * a.at(k, j);
        sigma[j] = std::sqrt(s2);
    }

    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&sigma](std::size_t i, std::size_t j) { return sigma[i] > sigma[j]; });

    Svd out;
    out.u = RMatrix(n, m);
    out.v = RMatrix(m, m);
    out.sigma.resize(m);
    for (std::size_t jj = 0; jj < m; ++jj) {
        const std::size_t src = order[jj];
        out.sigma[jj] = sigma[src];
        if (sigma[src] > 0.0)
            for (std::size_t k = 0; k < n; ++k) out.u.at(k, jj) = a.at(k, src) / sigma[src];
        for (std::size_t k = 0; k < m; ++k) out.v.at(k, jj) = v.at(k, src);
    }
    return out;
}

// Moore-Penrose inverse for full-rank rectangular matrices. Wide inputs go
// through the transpose identity pinv(p) = pinv(p^T)^T.
inline RMatrix pseudo_inverse(const RMatrix& p, double rel_tol = 1e-10) {
    if (p.rows == 0 || p.cols == 0)
        throw std::invalid_argument("pseudo_inverse: empty matrix");
    if (p.rows < p.cols) return transpose(pseudo_inverse(transpose(p), rel_tol));

    const Svd s = jacobi_svd(p);
    const double smax = s.sigma.front();
    for (std::size_t j = 0; j < s.sigma.size(); ++j) {
        if (!(s.sigma[j] > rel_tol * smax))
            throw std::runtime_error("pseudo_inverse: rank deficient, singular value " +
                                     std::to_string(j) + " is " + std::to_string(s.sigma[j]) +
                                     " against max " + std::to_string(smax));
    }

    RMatrix out(p.cols, p.rows);
    for (std::size_t i = 0; i < p.cols; ++i)
        for (std::size_t j = 0; j < s.sigma.size(); ++j) {
            const double vij = s.v.at(i, j) / s.sigma[j];
            if (vij == 0.0) continue;
            for (std::size_t k = 0; k < p.rows; ++k) out.at(i, k) += vij * s.u.at(k, j);
        }
    return out;
}

}  // namespace tpam
