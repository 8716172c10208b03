#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>

#include "tpam/circular.hpp"
#include "tpam/core.hpp"

namespace tpam {

constexpr double kLn2 = 0.69314718055994530941723212145818;

// binary Shannon entropy in bits; I(0) = I(1) = 0
inline double binary_entropy_bits(double p) {
    if (p < 0.0 || p > 1.0)
        throw std::invalid_argument("binary_entropy_bits: p must lie in [0,1]");
    if (p <= 0.0 || p >= 1.0) return 0.0;
    return -(p * std::log2(p) + (1.0 - p) * std::log2(1.0 - p));
}

// Support-channel equivocation: entropy of the hot/cold assignment that the
// retrieved support leaves unresolved, given false-positive rate alpha and
// miss rate beta at hot density p_hot. All rates are per-component.
inline double info_correct_bits(double p_hot, double alpha, double beta) {
    if (p_hot < 0.0 || p_hot > 1.0 || alpha < 0.0 || alpha > 1.0 || beta < 0.0 ||
        beta > 1.0)
        throw std::invalid_argument("info_correct_bits: rates must lie in [0,1]");
    const double p_hat = alpha * (1.0 - p_hot) + (1.0 - beta) * p_hot;
    double t1 = 0.0, t2 = 0.0;
    if (p_hat > 0.0) {
        const double q = std::min(1.0, alpha * (1.0 - p_hot) / p_hat);
        t1 = p_hat * binary_entropy_bits(q);
    }
    if (p_hat < 1.0) {
        const double q = std::min(1.0, beta * p_hot / (1.0 - p_hat));
        t2 = (1.0 - p_hat) * binary_entropy_bits(q);
    }
    return t1 + t2;
}

// Information carried by one retrieved phase at concentration kappa:
// log(2pi) minus the von Mises entropy, in bits. Capped: a phase can be
// resolved to at most about 1/1000 of the circle in these experiments.
inline double info_phase_bits(double kappa) {
    const double cap = std::log2(kTau * 1e3);
    const double bits = (std::log(kTau) - von_mises_entropy_nats(kappa)) / kLn2;
    return std::min(bits, cap);
}

// For discrete-phase codebooks a component's phase carries at most log2(L)
// bits regardless of how concentrated the residuals are.
inline double info_phase_bits_binned(double kappa, int bins) {
    return std::min(info_phase_bits(kappa), std::log2(static_cast<double>(bins)));
}

struct ItemInfo {
    double bits = 0.0;
    bool clamped = false;  // raw value was negative (noise exceeded signal)
};

// Information per stored item, combining the support channel and the phase
// channel of the hot components.
inline ItemInfo info_item_bits(std::size_t n, double p_hot, double alpha, double beta,
                               double kappa, int phase_bins = 0) {
    const double i_phase =
        phase_bins > 0 ? info_phase_bits_binned(kappa, phase_bins) : info_phase_bits(kappa);
    const double raw = static_cast<double>(n) *
                       (binary_entropy_bits(p_hot) - info_correct_bits(p_hot, alpha, beta) +
                        p_hot * (1.0 - beta) * i_phase);
    if (raw < 0.0) return {0.0, true};
    return {raw, false};
}

inline double bits_per_synapse(std::size_t n, std::size_t m, double item_bits) {
    return static_cast<double>(m) * item_bits / (static_cast<double>(n) * static_cast<double>(n));
}

// ===== retrieval scoring =====

struct RecallStats {
    double alpha = 0.0;       // false-positive rate on target-silent components
    double beta = 0.0;        // miss rate on target-active components
    double kappa = 0.0;       // von Mises concentration of aligned phase residuals
    double p_hat = 0.0;       // effective hot rate of the retrieved state
    double similarity = 0.0;
    std::size_t true_pos = 0;
    std::size_t false_pos = 0;
    std::size_t false_neg = 0;
};

// Compares a retrieved state against its target. Phase residuals are taken
// over the true-positive components after the optimal global rotation (the
// phase of <z, target>), so their circular mean is zero by construction.
inline RecallStats score_recall(const PhasorState& z, const PhasorState& target) {
    if (z.size() != target.size())
        throw std::invalid_argument("score_recall: dimension mismatch");
    const std::size_t n = z.size();
    RecallStats st;
    std::size_t target_active = 0;
    cplx aligned_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const bool zt = target[i] != cplx(0.0, 0.0);
        const bool zz = z[i] != cplx(0.0, 0.0);
        if (zt) ++target_active;
        if (zz && zt) {
            ++st.true_pos;
            const cplx prod = z[i] * std::conj(target[i]);
            const double mag = std::abs(prod);
            if (mag > 0.0) aligned_sum += prod / mag;
        } else if (zz) {
            ++st.false_pos;
        } else if (zt) {
            ++st.false_neg;
        }
    }
    const std::size_t target_silent = n - target_active;
    st.alpha = target_silent ? static_cast<double>(st.false_pos) / target_silent : 0.0;
    st.beta = target_active ? static_cast<double>(st.false_neg) / target_active : 0.0;
    const double p_hot = static_cast<double>(target_active) / static_cast<double>(n);
    st.p_hat = st.alpha * (1.0 - p_hot) + (1.0 - st.beta) * p_hot;
    if (st.true_pos > 0) {
        const double rbar = std::abs(aligned_sum) / static_cast<double>(st.true_pos);
        st.kappa = kappa_mle(std::min(1.0, rbar));
    }
    st.similarity = similarity(z, target);
    return st;
}

}  // namespace tpam
