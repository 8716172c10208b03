#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace tpam {

// Leaky integrate-and-fire cell: C dV/dt = g_l (E_l - V) + I, spike and reset
// to V_r once V crosses V_theta, then hold for tau_ref.
struct LifParams {
    double c = 1.0;        // membrane capacitance
    double g_l = 1.0;      // leak conductance
    double e_l = 0.0;      // resting potential
    double v_theta = 1.0;  // spike threshold
    double v_r = 0.0;      // post-spike reset
    double tau_ref = 0.0;  // refractory hold, seconds

    double tau_m() const { return c / g_l; }
};

inline void validate_lif(const LifParams& p) {
    if (!(p.c > 0.0) || !(p.g_l > 0.0))
        throw std::invalid_argument("lif: membrane time constant must be positive");
    if (!(p.v_theta > p.v_r))
        throw std::invalid_argument("lif: spike threshold must sit above the reset");
    if (!(p.tau_ref >= 0.0))
        throw std::invalid_argument("lif: refractory period must be nonnegative");
}

// Time to charge from reset to threshold under a constant current, counting
// the refractory hold. Infinite when the steady-state voltage never reaches
// threshold.
inline double lif_spike_period(const LifParams& p, double current) {
    validate_lif(p);
    const double v_inf = p.e_l + current / p.g_l;
    if (!(v_inf > p.v_theta)) return std::numeric_limits<double>::infinity();
    return p.tau_m() * std::log((v_inf - p.v_r) / (v_inf - p.v_theta)) + p.tau_ref;
}

// Instantaneous firing rate for a constant current; 0 below threshold,
// saturating at 1/tau_ref for large drive.
inline double lif_ifr(const LifParams& p, double current) {
    const double period = lif_spike_period(p, current);
    return std::isfinite(period) ? 1.0 / period : 0.0;
}

// Straight-line limit of the firing rate for large currents (tau_ref = 0):
// rate ~= m * I + b. Used to size feedback gains where a cell acts as a
// linear current-to-rate stage.
struct IfrLine {
    double m = 0.0;
    double b = 0.0;

    double rate(double current) const { return std::max(0.0, m * current + b); }
};

inline IfrLine lif_linearization(const LifParams& p) {
    validate_lif(p);
    const double span = p.v_theta - p.v_r;
    const double g = p.g_l / p.c;  // inverse membrane time constant
    IfrLine line;
    line.m = 1.0 / (p.c * span);
    line.b = line.m * p.g_l * p.e_l - g * (p.v_theta + p.v_r) / (2.0 * span);
    return line;
}

}  // namespace tpam
