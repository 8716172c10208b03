#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "tpam/core.hpp"
#include "tpam/rng.hpp"

namespace tpam {

// Ensemble of random sparse phasor patterns: exactly K = round(p_hot * N)
// active components per pattern, phases uniform on [0, 2pi) unless snapped
// to a discrete bin set (csign-style codebooks use phase_bins = L, ternary
// codebooks use phase_bins = 2).
struct EnsembleSpec {
    std::size_t n = 0;
    std::size_t m = 0;
    double p_hot = 0.1;
    int phase_bins = 0;  // 0 = continuous phases

    std::size_t active_count() const {
        return static_cast<std::size_t>(std::llround(p_hot * static_cast<double>(n)));
    }
};

inline std::vector<PhasorState> gen_patterns(const EnsembleSpec& spec, Rng& rng) {
    if (spec.n == 0 || spec.m == 0)
        throw std::invalid_argument("gen_patterns: empty ensemble");
    if (spec.p_hot <= 0.0 || spec.p_hot > 1.0)
        throw std::invalid_argument("gen_patterns: p_hot must be in (0,1]");
    const std::size_t k = spec.active_count();
    if (k == 0)
        throw std::invalid_argument("gen_patterns: p_hot * N rounds to zero active units");

    std::vector<PhasorState> out(spec.m, PhasorState(spec.n, cplx(0.0, 0.0)));
    std::vector<std::size_t> idx(spec.n);
    for (std::size_t m = 0; m < spec.m; ++m) {
        // partial Fisher-Yates: first k entries become the support
        for (std::size_t i = 0; i < spec.n; ++i) idx[i] = i;
        for (std::size_t i = 0; i < k; ++i)
            std::swap(idx[i], idx[i + rng.uniform_index(spec.n - i)]);
        for (std::size_t i = 0; i < k; ++i) {
            double phi;
            if (spec.phase_bins > 0) {
                phi = kTau * static_cast<double>(rng.uniform_index(spec.phase_bins)) /
                      spec.phase_bins;
            } else {
                phi = rng.uniform(0.0, kTau);
            }
            out[m][idx[i]] = {std::cos(phi), std::sin(phi)};
        }
    }
    return out;
}

// Cue corruption. Counts are deterministic (rounded from the fractions);
// which components are hit is random.
//   drop_fraction:   that share of active components is silenced
//   swap_fraction:   that share of active components moves to a random
//                    silent unit, keeping its phase
//   phase_jitter_sd: Gaussian jitter added to each surviving active phase
struct NoiseSpec {
    double drop_fraction = 0.05;
    double swap_fraction = 0.05;
    double phase_jitter_sd = 0.1;
};

inline PhasorState perturb_cue(const PhasorState& pattern, const NoiseSpec& noise,
                               Rng& rng) {
    if (noise.drop_fraction < 0.0 || noise.drop_fraction > 1.0 ||
        noise.swap_fraction < 0.0 || noise.swap_fraction > 1.0)
        throw std::invalid_argument("perturb_cue: fractions must lie in [0,1]");
    if (noise.phase_jitter_sd < 0.0)
        throw std::invalid_argument("perturb_cue: phase_jitter_sd must be >= 0");

    PhasorState cue = pattern;
    std::vector<std::size_t> active, silent;
    for (std::size_t i = 0; i < cue.size(); ++i)
        (cue[i] == cplx(0.0, 0.0) ? silent : active).push_back(i);

    auto take_random = [&rng](std::vector<std::size_t>& v) {
        const std::size_t j = rng.uniform_index(v.size());
        const std::size_t val = v[j];
        v[j] = v.back();
        v.pop_back();
        return val;
    };

    const std::size_t n_drop = static_cast<std::size_t>(
        std::llround(noise.drop_fraction * static_cast<double>(active.size())));
    for (std::size_t d = 0; d < n_drop && !active.empty(); ++d)
        cue[take_random(active)] = {0.0, 0.0};

    const std::size_t n_swap = static_cast<std::size_t>(
        std::llround(noise.swap_fraction * static_cast<double>(active.size())));
    std::vector<std::size_t> landed;  // keep moved units out of the source pool
    for (std::size_t s = 0; s < n_swap && !active.empty() && !silent.empty(); ++s) {
        const std::size_t from = take_random(active);
        const std::size_t to = take_random(silent);
        cue[to] = cue[from];
        cue[from] = {0.0, 0.0};
        landed.push_back(to);
    }
    active.insert(active.end(), landed.begin(), landed.end());

    if (noise.phase_jitter_sd > 0.0) {
        for (std::size_t i : active) {
            const double phi =
                wrap_angle_2pi(std::arg(cue[i]) + rng.normal(0.0, noise.phase_jitter_sd));
            cue[i] = {std::cos(phi), std::sin(phi)};
        }
    }
    return cue;
}

// Partial cue: keeps round(keep_fraction * K) active components, silences the rest.
inline PhasorState partial_cue(const PhasorState& pattern, double keep_fraction, Rng& rng) {
    if (keep_fraction < 0.0 || keep_fraction > 1.0)
        throw std::invalid_argument("partial_cue: keep_fraction must lie in [0,1]");
    NoiseSpec noise{1.0 - keep_fraction, 0.0, 0.0};
    return perturb_cue(pattern, noise, rng);
}

// Superposition cue: componentwise sum of the chosen patterns, then phasor
// projection so every component of the cue has magnitude 0 or 1.
inline PhasorState superposition_cue(const std::vector<PhasorState>& patterns,
                                     const std::vector<std::size_t>& which) {
    if (which.empty()) throw std::invalid_argument("superposition_cue: no patterns chosen");
    PhasorState cue(patterns.at(which.front()).size(), cplx(0.0, 0.0));
    for (std::size_t m : which) {
        const PhasorState& p = patterns.at(m);
        if (p.size() != cue.size())
            throw std::invalid_argument("superposition_cue: dimension mismatch");
        for (std::size_t i = 0; i < cue.size(); ++i) cue[i] += p[i];
    }
    for (auto& v : cue) {
        const double mag = std::abs(v);
        v = mag > 1e-12 ? v / mag : cplx(0.0, 0.0);
    }
    return cue;
}

}  // namespace tpam
