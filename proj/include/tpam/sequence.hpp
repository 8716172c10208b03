#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "tpam/core.hpp"
#include "tpam/linalg.hpp"
#include "tpam/phasor.hpp"

namespace tpam {

// One closed cycle of real pattern vectors.
using RealSequence = std::vector<std::vector<double>>;

struct SkewWeights {
    RMatrix j;

    static SkewWeights from_matrix(RMatrix m, double tol = 1e-12) {
        if (m.rows != m.cols)
            throw std::invalid_argument("SkewWeights: matrix must be square");
        for (std::size_t i = 0; i < m.rows; ++i)
            for (std::size_t k = i; k < m.cols; ++k)
                if (std::abs(m.at(i, k) + m.at(k, i)) > tol)
                    throw std::invalid_argument("SkewWeights: not skew-symmetric at (" +
                                                std::to_string(i) + "," + std::to_string(k) +
                                                ")");
        SkewWeights w;
        w.j = std::move(m);
        return w;
    }
};

// Hebbian/anti-Hebbian cycle rule: J = sum over steps of
// xi^s (xi^{s-1} - xi^{s+1})^T with cyclic step indices. Computing the
// forward correlation A = sum xi^s (xi^{s+1})^T once and forming A^T - A
// gives the same sum and is exactly skew in floating point.
inline SkewWeights learn_sequences(const std::vector<RealSequence>& seqs, std::size_t n) {
    for (const auto& seq : seqs) {
        if (seq.size() < 3)
            throw std::invalid_argument("learn_sequences: cycles need at least 3 steps");
        if (seq.size() != seqs.front().size())
            throw std::invalid_argument("learn_sequences: cycles must share one length");
        for (const auto& x : seq)
            if (x.size() != n)
                throw std::invalid_argument("learn_sequences: pattern dimension mismatch");
    }

    RMatrix a(n, n);
    for (const auto& seq : seqs) {
        const std::size_t l = seq.size();
        for (std::size_t s = 0; s < l; ++s) {
            const auto& cur = seq[s];
            const auto& next = seq[(s + 1) % l];
            for (std::size_t i = 0; i < n; ++i) {
                if (cur[i] == 0.0) continue;
                for (std::size_t k = 0; k < n; ++k) a.at(i, k) += cur[i] * next[k];
            }
        }
    }
    RMatrix j(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k) j.at(i, k) = a.at(k, i) - a.at(i, k);
    return SkewWeights::from_matrix(std::move(j));
}

// Which imaginary eigenpair of the skew matrix to divide by.
struct EigenSelector {
    enum class Kind { largest, index, match_vector };
    Kind kind = Kind::largest;
    std::size_t index = 0;
    PhasorState ref;

    static EigenSelector largest() { return {}; }
    static EigenSelector by_index(std::size_t k) {
        EigenSelector s;
        s.kind = Kind::index;
        s.index = k;
        return s;
    }
    static EigenSelector associated_with(PhasorState v) {
        EigenSelector s;
        s.kind = Kind::match_vector;
        s.ref = std::move(v);
        return s;
    }
};

struct PhasorConversion {
    HermitianWeights w;           // J / lambda
    cplx lambda;                  // i * sigma of the selected pair
    double sigma = 0.0;           // |lambda|
    PhasorState v;                // unit eigenvector with w v = v
    std::vector<double> spectrum; // all singular values of J, descending
};

namespace detail {

// For skew J with singular triplet (sigma, u, v): J v = sigma u and
// J u = -sigma v, so (u + i v)/sqrt(2) is a unit eigenvector of J with
// eigenvalue i*sigma. Holds inside degenerate blocks as well.
inline PhasorState complex_pair_vector(const Svd& s, std::size_t k) {
    const std::size_t n = s.u.rows;
    PhasorState w(n);
    const double inv = 1.0 / std::sqrt(2.0);
    for (std::size_t i = 0; i < n; ++i)
        w[i] = cplx(s.u.at(i, k) * inv, s.v.at(i, k) * inv);
    return w;
}

}  // namespace detail

// Divides J by the selected eigenvalue i*sigma. The quotient has purely
// imaginary entries, is Hermitian with a zero diagonal, and fixes the
// selected eigenvector.
inline PhasorConversion to_phasor_network(const SkewWeights& skew,
                                          const EigenSelector& sel = EigenSelector::largest()) {
    const std::size_t n = skew.j.rows;
    if (n == 0) throw std::invalid_argument("to_phasor_network: empty weights");
    const Svd svd = jacobi_svd(skew.j);

    std::size_t pick = 0;
    switch (sel.kind) {
        case EigenSelector::Kind::largest:
            pick = 0;
            break;
        case EigenSelector::Kind::index:
            if (sel.index >= n)
                throw std::invalid_argument("to_phasor_network: selector index out of range");
            pick = sel.index;
            break;
        case EigenSelector::Kind::match_vector: {
            if (sel.ref.size() != n)
                throw std::invalid_argument("to_phasor_network: reference length mismatch");
            double best = -1.0;
            for (std::size_t k = 0; k < n; ++k) {
                if (svd.sigma[k] <= 1e-10) continue;
                const double overlap = similarity(detail::complex_pair_vector(svd, k), sel.ref);
                if (overlap > best) {
                    best = overlap;
                    pick = k;
                }
            }
            if (best < 0.0)
                throw std::invalid_argument("to_phasor_network: spectrum is entirely zero");
            break;
        }
    }

    const double sigma = svd.sigma[pick];
    if (sigma <= 1e-10)
        throw std::invalid_argument("to_phasor_network: selected eigenvalue is within 1e-10 of zero");

    CMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k)
            m.at(i, k) = cplx(0.0, -skew.j.at(i, k) / sigma);  // J / (i*sigma)

    PhasorConversion out;
    out.w = HermitianWeights::from_matrix(std::move(m));
    out.sigma = sigma;
    out.lambda = cplx(0.0, sigma);
    out.v = detail::complex_pair_vector(svd, pick);
    out.spectrum = svd.sigma;
    return out;
}

struct ContrastReport {
    HermitianWeights w_conjugate;  // outer-product rule on v
    PhasorConversion sequence;     // cardinal-cycle route, eigenpair matched to v
    double residual_conjugate = 0.0;  // max |(W v)_a - (N-1) v_a|
    double residual_sequence = 0.0;   // max |(W' v)_a - v_a|
    double max_entry_difference = 0.0;
    double max_sequence_real_part = 0.0;  // entries of W' are purely imaginary
};

// Builds both networks that hold the same equidistant phase progression v as
// an eigenvector: the conjugate outer-product weights on v itself, and the
// sequence weights of the descending cardinal cycle divided by the eigenvalue
// associated with v. v must have unit entries and a constant successive
// phase ratio; two-bin progressions (ratio -1) are degenerate because the
// forward and backward terms cancel.
inline ContrastReport conjugate_vs_sequence_contrast(const PhasorState& v) {
    const std::size_t n = v.size();
    if (n < 3)
        throw std::invalid_argument("conjugate_vs_sequence_contrast: needs at least 3 components");
    for (const auto& c : v)
        if (std::abs(std::abs(c) - 1.0) > 1e-9)
            throw std::invalid_argument("conjugate_vs_sequence_contrast: entries must be unit phasors");
    const cplx ratio = v[1] / v[0];
    for (std::size_t a = 0; a < n; ++a)
        if (std::abs(v[(a + 1) % n] / v[a] - ratio) > 1e-9)
            throw std::invalid_argument(
                "conjugate_vs_sequence_contrast: phases must form a cyclic progression");
    if (std::abs(ratio - cplx(1.0, 0.0)) < 1e-9)
        throw std::invalid_argument("conjugate_vs_sequence_contrast: constant vector is degenerate");
    if (std::abs(ratio + cplx(1.0, 0.0)) < 1e-9)
        throw std::invalid_argument(
            "conjugate_vs_sequence_contrast: two-bin progressions are degenerate (unsupported)");

    // one dense stored pattern; v is its eigenvector with eigenvalue n-1
    HermitianWeights w_conj = learn_conjugate_outer({v}, n);

    RealSequence cycle(n, std::vector<double>(n, 0.0));
    for (std::size_t s = 0; s < n; ++s) cycle[s][(n - s) % n] = 1.0;
    const SkewWeights j = learn_sequences({cycle}, n);
    PhasorConversion conv = to_phasor_network(j, EigenSelector::associated_with(v));

    ContrastReport rep;
    rep.residual_conjugate = 0.0;
    rep.residual_sequence = 0.0;
    rep.max_entry_difference = 0.0;
    rep.max_sequence_real_part = 0.0;
    const PhasorState wv = dendritic_sum(w_conj, v);
    const PhasorState wpv = dendritic_sum(conv.w, v);
    for (std::size_t a = 0; a < n; ++a) {
        rep.residual_conjugate =
            std::max(rep.residual_conjugate,
                     std::abs(wv[a] - static_cast<double>(n - 1) * v[a]));
        rep.residual_sequence = std::max(rep.residual_sequence, std::abs(wpv[a] - v[a]));
        for (std::size_t b = 0; b < n; ++b) {
            rep.max_entry_difference =
                std::max(rep.max_entry_difference, std::abs(w_conj.at(a, b) - conv.w.at(a, b)));
            rep.max_sequence_real_part =
                std::max(rep.max_sequence_real_part, std::abs(conv.w.at(a, b).real()));
        }
    }
    rep.w_conjugate = std::move(w_conj);
    rep.sequence = std::move(conv);
    return rep;
}

}  // namespace tpam
