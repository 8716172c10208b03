#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "tpam/core.hpp"

namespace tpam {

// Modified Bessel functions of the first kind, orders 0 and 1, double
// precision. Power series below x = 15, asymptotic expansion above; the
// switchover keeps the relative error under 1e-10 across the range used
// by the von Mises fits (see the quadrature cross-checks in the tests).

namespace detail {

constexpr double kBesselSwitch = 15.0;

inline double bessel_series(double x, int nu) {
    // sum_k (x/2)^{2k+nu} / (k! (k+nu)!)
    const double q = 0.25 * x * x;
    double term = 1.0;
    for (int i = 1; i <= nu; ++i) term *= 0.5 * x / i;
    double sum = term;
    for (int k = 1; k < 500; ++k) {
        term *= q / (static_cast<double>(k) * (k + nu));
        sum += term;
        if (term < sum * 1e-18) break;
    }
    return sum;
}

// e^{-x} I_nu(x) via the large-argument asymptotic series
inline double bessel_scaled_asymptotic(double x, int nu) {
    const double mu = 4.0 * nu * nu;
    double term = 1.0, sum = 1.0;
    for (int k = 0; k < 40; ++k) {
        const double odd = 2.0 * k + 1.0;
        const double next = term * -(mu - odd * odd) / (8.0 * x * (k + 1));
        if (std::abs(next) >= std::abs(term)) break;  // divergent tail
        term = next;
        sum += term;
        if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return sum / std::sqrt(kTau * x);
}

}  // namespace detail

inline double bessel_i0(double x) {
    x = std::abs(x);
    if (x < detail::kBesselSwitch) return detail::bessel_series(x, 0);
    return std::exp(x) * detail::bessel_scaled_asymptotic(x, 0);
}

inline double bessel_i1(double x) {
    const double ax = std::abs(x);
    double v;
    if (ax < detail::kBesselSwitch)
        v = detail::bessel_series(ax, 1);
    else
        v = std::exp(ax) * detail::bessel_scaled_asymptotic(ax, 1);
    return x < 0 ? -v : v;
}

// log I_0(x), safe for arguments far past the overflow point of I_0 itself
inline double log_bessel_i0(double x) {
    x = std::abs(x);
    if (x < detail::kBesselSwitch) return std::log(detail::bessel_series(x, 0));
    return x + std::log(detail::bessel_scaled_asymptotic(x, 0));
}

// mean resultant of the von Mises distribution, A(kappa) = I1/I0
inline double bessel_ratio(double kappa) {
    if (kappa < 0) throw std::invalid_argument("bessel_ratio: kappa must be >= 0");
    if (kappa < 1e-8) return 0.5 * kappa;
    if (kappa < detail::kBesselSwitch)
        return detail::bessel_series(kappa, 1) / detail::bessel_series(kappa, 0);
    return detail::bessel_scaled_asymptotic(kappa, 1) /
           detail::bessel_scaled_asymptotic(kappa, 0);
}

// differential entropy of the von Mises distribution, in nats
inline double von_mises_entropy_nats(double kappa) {
    if (kappa < 0) throw std::invalid_argument("von_mises_entropy_nats: kappa must be >= 0");
    return std::log(kTau) + log_bessel_i0(kappa) - kappa * bessel_ratio(kappa);
}

constexpr double kKappaCap = 1e6;

// Maximum-likelihood concentration from a mean resultant length: closed-form
// three-regime start, then Newton refinement of A(kappa) = rbar.
inline double kappa_mle(double rbar) {
    if (rbar < 0.0 || rbar > 1.0 + 1e-12)
        throw std::invalid_argument("kappa_mle: resultant length must lie in [0,1]");
    if (rbar <= 0.0) return 0.0;
    if (rbar >= 1.0 - 1e-9) return kKappaCap;

    double kappa;
    if (rbar < 0.53)
        kappa = 2.0 * rbar + rbar * rbar * rbar + 5.0 * std::pow(rbar, 5) / 6.0;
    else if (rbar < 0.85)
        kappa = -0.4 + 1.39 * rbar + 0.43 / (1.0 - rbar);
    else
        kappa = 1.0 / (rbar * rbar * rbar - 4.0 * rbar * rbar + 3.0 * rbar);

    for (int it = 0; it < 5; ++it) {
        const double a = bessel_ratio(kappa);
        const double da = kappa < 1e-8 ? 0.5 : 1.0 - a / kappa - a * a;
        if (da <= 0.0) break;
        kappa -= (a - rbar) / da;
        if (kappa < 0.0) kappa = 0.0;
        if (kappa > kKappaCap) return kKappaCap;
    }
    return std::min(kappa, kKappaCap);
}

struct CircularMoment {
    double mean_angle = 0.0;     // circular mean, in [0, 2pi)
    double resultant = 0.0;      // mean resultant length in [0,1]
    std::size_t count = 0;
};

inline CircularMoment circular_moment(const std::vector<double>& angles) {
    CircularMoment m;
    m.count = angles.size();
    if (angles.empty()) return m;
    double cs = 0.0, sn = 0.0;
    for (double a : angles) {
        cs += std::cos(a);
        sn += std::sin(a);
    }
    cs /= static_cast<double>(angles.size());
    sn /= static_cast<double>(angles.size());
    m.resultant = std::hypot(cs, sn);
    m.mean_angle = wrap_angle_2pi(std::atan2(sn, cs));
    return m;
}

}  // namespace tpam
