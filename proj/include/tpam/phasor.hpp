#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "tpam/core.hpp"
#include "tpam/rng.hpp"

namespace tpam {

// ===== threshold and transfer configuration =====

// constant: Theta is a fixed value shared by all components.
// dynamic: Theta_i(t) = theta * sum_{j != i} |z_j(t)| — each component is
// thresholded against the activity of the rest of the network. Excluding the
// component's own magnitude keeps every stored pattern a fixed point at M=1
// for all theta in (0,1): the drive (K-1) always beats theta*(K-1). It is
// also the exact coordinate-descent threshold of the pairwise repulsion
// energy (theta/2)*sum_{i != j}|z_i||z_j|.
struct ThresholdPolicy {
    enum class Kind { constant, dynamic };
    Kind kind = Kind::dynamic;
    double value = 0.9;  // Theta itself (constant) or theta (dynamic)

    static ThresholdPolicy constant(double theta_abs) {
        return {Kind::constant, theta_abs};
    }
    static ThresholdPolicy dynamic(double theta) {
        if (theta < 0.0) throw std::invalid_argument("ThresholdPolicy: theta must be >= 0");
        return {Kind::dynamic, theta};
    }
};

// tpam:         phasor projection gated by the threshold
// phasor_dense: pure phasor projection, no threshold (dense phasor network)
// csign:        phasor projection snapped to L equidistant phase bins; L=2 is
//               the bipolar Hopfield update
// ternary:      real part mapped to {-1, 0, +1} by the threshold
struct TransferKind {
    enum class Kind { tpam, phasor_dense, csign, ternary };
    Kind kind = Kind::tpam;
    int bins = 0;

    static TransferKind tpam() { return {Kind::tpam, 0}; }
    static TransferKind phasor_dense() { return {Kind::phasor_dense, 0}; }
    static TransferKind csign(int L) {
        if (L < 2) throw std::invalid_argument("TransferKind: csign needs L >= 2 bins");
        return {Kind::csign, L};
    }
    static TransferKind ternary() { return {Kind::ternary, 0}; }
};

enum class Schedule { parallel, sequential_random, sequential_fixed };

// ===== learning =====

// Conjugate outer-product rule: W = sum_m S_m S_m^dagger with the diagonal
// zeroed. The result is Hermitian by construction.
inline HermitianWeights learn_conjugate_outer(const std::vector<PhasorState>& patterns,
                                              std::size_t n) {
    for (const auto& p : patterns) {
        if (p.size() != n)
            throw std::invalid_argument("learn_conjugate_outer: pattern dimension mismatch");
        for (const auto& v : p) {
            const double mag = std::abs(v);
            if (v != cplx(0.0, 0.0) && std::abs(mag - 1.0) > 1e-9)
                throw std::invalid_argument(
                    "learn_conjugate_outer: pattern components must have magnitude 0 or 1");
        }
    }
    CMatrix w(n, n);
    for (const auto& p : patterns) {
        for (std::size_t i = 0; i < n; ++i) {
            if (p[i] == cplx(0.0, 0.0)) continue;
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j || p[j] == cplx(0.0, 0.0)) continue;
                w.at(i, j) += p[i] * std::conj(p[j]);
            }
        }
    }
    return HermitianWeights::from_matrix_unchecked(std::move(w));
}

// ===== dynamics =====

inline PhasorState dendritic_sum(const HermitianWeights& w, const PhasorState& z) {
    const std::size_t n = w.n();
    if (z.size() != n) throw std::invalid_argument("dendritic_sum: dimension mismatch");
    PhasorState u(n, cplx(0.0, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        cplx s = 0.0;
        const cplx* row = &w.matrix().a[i * n];
        for (std::size_t j = 0; j < n; ++j) s += row[j] * z[j];
        u[i] = s;
    }
    return u;
}

namespace detail {

inline cplx snap_to_bins(cplx unit, int bins) {
    const double phi = std::arg(unit);
    const double step = kTau / bins;
    long k = std::lround(phi / step);
    k %= bins;
    if (k < 0) k += bins;
    const double snapped = static_cast<double>(k) * step;
    return {std::cos(snapped), std::sin(snapped)};
}

// single-component transfer; threshold comparisons are strict so a zero
// drive (or drive exactly at threshold) yields a silent component
inline cplx transfer_component(cplx u, double theta_abs, const TransferKind& kind) {
    switch (kind.kind) {
        case TransferKind::Kind::tpam: {
            const double mag = std::abs(u);
            if (mag > theta_abs && mag > 0.0) return u / mag;
            return {0.0, 0.0};
        }
        case TransferKind::Kind::phasor_dense: {
            const double mag = std::abs(u);
            if (mag > 0.0) return u / mag;
            return {0.0, 0.0};
        }
        case TransferKind::Kind::csign: {
            const double mag = std::abs(u);
            if (mag > theta_abs && mag > 0.0) return snap_to_bins(u / mag, kind.bins);
            return {0.0, 0.0};
        }
        case TransferKind::Kind::ternary: {
            const double t = u.real();
            if (std::abs(t) > theta_abs) return {t > 0 ? 1.0 : -1.0, 0.0};
            return {0.0, 0.0};
        }
    }
    return {0.0, 0.0};
}

// l1_rest = total activity minus the component's own magnitude
inline double resolve_theta(const ThresholdPolicy& policy, double l1_rest) {
    if (policy.kind == ThresholdPolicy::Kind::constant) return policy.value;
    return policy.value * std::max(0.0, l1_rest);
}

}  // namespace detail

// Applies the transfer to a full drive vector. For the dynamic policy, prev
// supplies the state whose activity sets each component's threshold.
inline PhasorState transfer(const PhasorState& u, const ThresholdPolicy& policy,
                            const TransferKind& kind, const PhasorState& prev) {
    if (policy.kind == ThresholdPolicy::Kind::dynamic && prev.size() != u.size())
        throw std::invalid_argument("transfer: prev state dimension mismatch");
    const double l1 = l1_magnitude(prev);
    PhasorState z(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double rest =
            policy.kind == ThresholdPolicy::Kind::dynamic ? l1 - std::abs(prev[i]) : 0.0;
        z[i] = detail::transfer_component(u[i], detail::resolve_theta(policy, rest), kind);
    }
    return z;
}

// One update step. parallel: synchronous update of all components.
// sequential_*: components updated one at a time; with the dynamic policy the
// threshold is recomputed from the evolving state before each component.
inline PhasorState step(const HermitianWeights& w, const PhasorState& z,
                        const ThresholdPolicy& policy, const TransferKind& kind,
                        Schedule schedule, Rng* rng = nullptr) {
    const std::size_t n = w.n();
    if (z.size() != n) throw std::invalid_argument("step: dimension mismatch");

    if (schedule == Schedule::parallel) {
        return transfer(dendritic_sum(w, z), policy, kind, z);
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    if (schedule == Schedule::sequential_random) {
        if (!rng)
            throw std::invalid_argument("step: sequential_random schedule needs an rng");
        for (std::size_t i = n; i > 1; --i)
            std::swap(order[i - 1], order[rng->uniform_index(i)]);
    }

    PhasorState s = z;
    double l1 = l1_magnitude(s);
    for (std::size_t idx : order) {
        cplx u = 0.0;
        const cplx* row = &w.matrix().a[idx * n];
        for (std::size_t j = 0; j < n; ++j) u += row[j] * s[j];
        const double theta_abs = detail::resolve_theta(policy, l1 - std::abs(s[idx]));
        const cplx updated = detail::transfer_component(u, theta_abs, kind);
        l1 += std::abs(updated) - std::abs(s[idx]);
        s[idx] = updated;
    }
    return s;
}

// ===== energy =====

// Lyapunov-style energy. constant policy:  E = -1/2 z^H W z + Theta * sum|z_i|
// dynamic policy:                          E = -1/2 z^H W z + theta * sum|z_i|^2
// Components with |z_i| > 1 sit outside the admissible box; the barrier term
// makes the energy +infinity there.
inline double energy(const HermitianWeights& w, const PhasorState& z,
                     const ThresholdPolicy& policy) {
    const std::size_t n = w.n();
    if (z.size() != n) throw std::invalid_argument("energy: dimension mismatch");
    double l1 = 0.0, l2sq = 0.0;
    for (const auto& v : z) {
        const double m = std::abs(v);
        if (m > 1.0 + 1e-12) return std::numeric_limits<double>::infinity();
        l1 += m;
        l2sq += m * m;
    }
    const PhasorState u = dendritic_sum(w, z);
    cplx quad = 0.0;
    for (std::size_t i = 0; i < n; ++i) quad += std::conj(z[i]) * u[i];
    const double scale = std::max(1.0, std::abs(quad.real()));
    if (std::abs(quad.imag()) > 1e-9 * scale)
        throw std::runtime_error(
            "energy: quadratic form has imaginary residue; weights not Hermitian");
    const double e_quad = -0.5 * quad.real();
    if (policy.kind == ThresholdPolicy::Kind::constant)
        return e_quad + policy.value * l1;
    return e_quad + policy.value * l2sq;
}

// ===== recall =====

struct RecallOptions {
    std::size_t max_iters = 500;
    double tol = 1e-9;           // per-component phase agreement for convergence
    bool record_states = true;   // keep the full trajectory in the trace
    bool record_energy = true;
};

struct RecallTrace {
    std::vector<PhasorState> states;  // trajectory including the initial state
    std::vector<double> energies;     // energy per recorded state
    PhasorState final_state;
    bool converged = false;
    bool limit_cycle = false;  // parallel dynamics settled into a 2-cycle
    std::size_t iterations = 0;
};

namespace detail {

inline bool states_agree(const PhasorState& a, const PhasorState& b, double tol) {
    for (std::size_t i = 0; i < a.size(); ++i) {
        const bool za = a[i] == cplx(0.0, 0.0), zb = b[i] == cplx(0.0, 0.0);
        if (za != zb) return false;
        if (!za && std::abs(a[i] - b[i]) > tol) return false;
    }
    return true;
}

}  // namespace detail

inline RecallTrace recall(const HermitianWeights& w, const PhasorState& cue,
                          const ThresholdPolicy& policy, const TransferKind& kind,
                          Schedule schedule, const RecallOptions& opts = {},
                          Rng* rng = nullptr) {
    RecallTrace trace;
    PhasorState cur = cue;
    PhasorState prev;  // state two steps behind `next`, for 2-cycle detection
    auto record = [&](const PhasorState& s) {
        if (opts.record_states) trace.states.push_back(s);
        if (opts.record_energy) trace.energies.push_back(energy(w, s, policy));
    };
    record(cur);
    for (std::size_t it = 0; it < opts.max_iters; ++it) {
        PhasorState next = step(w, cur, policy, kind, schedule, rng);
        ++trace.iterations;
        record(next);
        if (detail::states_agree(next, cur, opts.tol)) {
            trace.converged = true;
            cur = std::move(next);
            break;
        }
        if (!prev.empty() && detail::states_agree(next, prev, opts.tol)) {
            trace.limit_cycle = true;
            cur = std::move(next);
            break;
        }
        prev = std::move(cur);
        cur = std::move(next);
    }
    trace.final_state = cur;
    return trace;
}

}  // namespace tpam
