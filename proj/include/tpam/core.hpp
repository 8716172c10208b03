#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace tpam {

using cplx = std::complex<double>;

// Network state: each component is a phasor. A valid post-transfer state
// has every component either exactly 0 or of magnitude exactly 1; initial
// cues may carry arbitrary magnitudes (the dynamics tolerate them).
using PhasorState = std::vector<cplx>;

constexpr double kTau = 6.283185307179586476925286766559;  // 2*pi

inline double wrap_angle_2pi(double a) {
    a = std::fmod(a, kTau);
    if (a < 0) a += kTau;
    return a;
}

// Dense row-major complex matrix.
struct CMatrix {
    std::size_t rows = 0, cols = 0;
    std::vector<cplx> a;

    CMatrix() = default;
    CMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c) {}

    cplx& at(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    const cplx& at(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
};

// Dense row-major real matrix.
struct RMatrix {
    std::size_t rows = 0, cols = 0;
    std::vector<double> a;

    RMatrix() = default;
    RMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

    double& at(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    const double& at(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
};

namespace detail {

inline double max_abs(const CMatrix& m) {
    double mx = 0.0;
    for (const auto& v : m.a) mx = std::max(mx, std::abs(v));
    return mx;
}

}  // namespace detail

// Square complex weight matrix constrained to W == conj(transpose(W)) with a
// zero diagonal. The constraint is validated on construction so downstream
// code (energy, recall) can rely on it.
class HermitianWeights {
  public:
    HermitianWeights() = default;

    static HermitianWeights from_matrix(CMatrix m, double rel_tol = 1e-12) {
        if (m.rows != m.cols)
            throw std::invalid_argument("HermitianWeights: matrix must be square");
        const double scale = std::max(1.0, detail::max_abs(m));
        for (std::size_t i = 0; i < m.rows; ++i) {
            if (std::abs(m.at(i, i)) > rel_tol * scale)
                throw std::invalid_argument(
                    "HermitianWeights: nonzero diagonal at index " + std::to_string(i));
            for (std::size_t j = i + 1; j < m.cols; ++j) {
                if (std::abs(m.at(i, j) - std::conj(m.at(j, i))) > rel_tol * scale)
                    throw std::invalid_argument(
                        "HermitianWeights: conjugate symmetry violated at (" +
                        std::to_string(i) + "," + std::to_string(j) + ")");
            }
        }
        HermitianWeights w;
        w.m_ = std::move(m);
        return w;
    }

    // Escape hatch for construction sites that guarantee symmetry by
    // construction (e.g. the conjugate outer-product learning rule).
    static HermitianWeights from_matrix_unchecked(CMatrix m) {
        HermitianWeights w;
        w.m_ = std::move(m);
        return w;
    }

    std::size_t n() const { return m_.rows; }
    const cplx& at(std::size_t i, std::size_t j) const { return m_.at(i, j); }
    const CMatrix& matrix() const { return m_; }
    CMatrix& mutable_matrix() { return m_; }

  private:
    CMatrix m_;
};

// inner product <a,b> = sum_i a_i * conj(b_i)
inline cplx inner(const PhasorState& a, const PhasorState& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("inner: dimension mismatch");
    cplx s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * std::conj(b[i]);
    return s;
}

inline double norm2(const PhasorState& a) {
    double s = 0.0;
    for (const auto& v : a) s += std::norm(v);
    return std::sqrt(s);
}

inline double l1_magnitude(const PhasorState& a) {
    double s = 0.0;
    for (const auto& v : a) s += std::abs(v);
    return s;
}

inline std::size_t support_size(const PhasorState& a) {
    std::size_t k = 0;
    for (const auto& v : a)
        if (v != cplx(0.0, 0.0)) ++k;
    return k;
}

// |<z, target>| / (||z|| * ||target||); magnitude makes it invariant to the
// global phase rotation every phasor attractor carries.
inline double similarity(const PhasorState& z, const PhasorState& target) {
    const double nz = norm2(z), nt = norm2(target);
    if (nz == 0.0 || nt == 0.0) return 0.0;
    return std::abs(inner(z, target)) / (nz * nt);
}

}  // namespace tpam
