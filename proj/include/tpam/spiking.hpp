#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <iomanip>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tpam/capacity.hpp"
#include "tpam/core.hpp"
#include "tpam/lif.hpp"
#include "tpam/parallel.hpp"
#include "tpam/patterns.hpp"
#include "tpam/phasor.hpp"
#include "tpam/raster.hpp"
#include "tpam/rng.hpp"

namespace tpam {

// Compiles a Hermitian phasor memory into a network of leaky
// integrate-and-fire cells. Complex weight phases become conduction delays on
// excitatory synapses; a shared interneuron population both carves each
// postsynaptic oscillation's negative lobe and applies the
// activity-proportional firing threshold.

enum class SynapseSign { excitatory, inhibitory };

struct DelaySynapse {
    std::uint32_t pre = 0;
    std::uint32_t post = 0;
    double magnitude = 0.0;  // current jump per presynaptic spike, >= 0
    double delay = 0.0;      // seconds
    double tau_s = 0.0;      // synaptic decay constant
    SynapseSign sign = SynapseSign::excitatory;
};

// Uniform all-to-all stage between the excitatory cells and the interneuron
// population. Every connection in the stage shares one weight and one delay,
// which is what lets a single population route inhibition for all synapses.
struct RoutingPath {
    double magnitude = 0.0;
    double delay = 0.0;
    double tau_s = 0.0;
    SynapseSign sign = SynapseSign::excitatory;
};

struct CompileGains {
    double drive = 10.0;             // interneuron operating point, threshold units
    double v_osc = 1.0;              // membrane swing of a fully coherent cell
    double threshold_scale = 1.0;    // empirical trim on the spike threshold
    double k_ref = 0.0;              // reference active count; 0 derives 5% of N
    double routing_delay = 0.0;      // uniform E-to-I / I-to-E conduction delay
    double delay_compensation = 0.0; // subtracted from phase delays before wrapping
};

struct SpikingNetwork {
    double t_cycle = 0.2;
    std::size_t n_exc = 0;
    std::size_t n_inh = 0;
    LifParams exc;      // tau_m = T/4, tau_ref = 0.6T, threshold from calibration
    LifParams inh;      // tau_m = T/10, no refractory hold: acts as a linear relay
    LifParams readout;  // linear output stage prototype, no refractory hold
    std::vector<DelaySynapse> recurrent;  // one synapse per nonzero weight entry
    RoutingPath e_to_i;
    RoutingPath i_to_e;  // magnitude already divided across the population
    double theta = 0.0;  // activity-proportional threshold the loop implements
};

namespace detail {

// Fundamental Fourier coefficient magnitude of a T-periodic train of unit
// exponential kicks with decay tau, and the low-pass gain of a membrane with
// time constant tau at the cycle frequency. Together they convert a weight
// magnitude into the membrane swing one coherent presynaptic cell produces.
inline double exp_train_fundamental(double tau_over_t) {
    const double w = kTau * tau_over_t;
    return tau_over_t / std::sqrt(1.0 + w * w);
}

inline double membrane_cycle_gain(double tau_over_t) {
    const double w = kTau * tau_over_t;
    return 1.0 / std::sqrt(1.0 + w * w);
}

inline double wrap_delay(double frac_of_cycle, double compensation, double t_cycle) {
    double d = frac_of_cycle * t_cycle - compensation;
    d -= t_cycle * std::floor((d - 0.5 * t_cycle) / t_cycle);
    return d;  // lands in [T/2, 3T/2)
}

}  // namespace detail

inline SpikingNetwork compile(const HermitianWeights& w, double t_cycle, double theta,
                              const CompileGains& gains = {}) {
    if (!(t_cycle > 0.0))
        throw std::invalid_argument("compile: cycle period must be positive");
    if (!(theta >= 0.0))
        throw std::invalid_argument("compile: threshold ratio must be nonnegative");
    HermitianWeights::from_matrix(w.matrix());  // reject drift past the typed invariant
    const std::size_t n = w.n();
    if (n == 0) throw std::invalid_argument("compile: empty weight matrix");

    SpikingNetwork net;
    net.t_cycle = t_cycle;
    net.n_exc = n;
    net.n_inh = std::max<std::size_t>(1, n / 10);
    net.theta = theta;

    const double tau_e = 0.5 * t_cycle;   // excitatory synapse decay
    const double tau_i = t_cycle;         // inhibitory synapse decay
    const double tau_ei = 0.5 * t_cycle;  // drive onto the interneurons

    net.exc = {0.25 * t_cycle, 1.0, 0.0, 1.0, 0.0, 0.6 * t_cycle};
    net.inh = {0.1 * t_cycle, 1.0, 0.0, 1.0, 0.0, 0.0};
    net.readout = {0.1 * t_cycle, 1.0, 0.0, 1.0, 0.0, 0.0};

    double mag_sum = 0.0;
    std::size_t mag_count = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double mag = std::abs(w.at(i, j));
            if (mag == 0.0) continue;
            mag_sum += mag;
            ++mag_count;
        }
    const double mean_mag = mag_count ? mag_sum / static_cast<double>(mag_count) : 0.0;
    const double k_ref =
        gains.k_ref > 0.0 ? gains.k_ref : std::max(1.0, 0.05 * static_cast<double>(n));

    // Voltage scale: a fully coherent cell at the reference activity should
    // swing by v_osc. The swing per unit of dendritic sum is the product of
    // the synaptic train's fundamental and the membrane's gain at 1/T.
    const double c_osc = detail::exp_train_fundamental(tau_e / t_cycle) *
                         detail::membrane_cycle_gain(net.exc.tau_m() / t_cycle);
    const double g_exc = gains.v_osc / (c_osc * k_ref);

    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const cplx wij = w.at(i, j);
            const double mag = std::abs(wij);
            if (mag == 0.0) continue;
            DelaySynapse s;
            s.pre = static_cast<std::uint32_t>(j);
            s.post = static_cast<std::uint32_t>(i);
            s.magnitude = g_exc * mag;
            s.delay = detail::wrap_delay(wrap_angle_2pi(std::arg(wij)) / kTau,
                                         gains.delay_compensation, t_cycle);
            s.tau_s = tau_e;
            s.sign = SynapseSign::excitatory;
            net.recurrent.push_back(s);
        }

    // Loop calibration. With K cells firing once per cycle the averages are
    //   exc dc       = (tau_e/T) * g_exc * mean_mag * K
    //   drive        = (tau_ei/T) * w_ei * K             (per interneuron)
    //   inh dc       = W_loop * tau_i * ifr(drive)       (per excitatory cell)
    // and a cell fires when its swing beats V_theta - exc_dc + inh_dc. The
    // firing condition should read |u| > theta * K at every activity level, so
    // the terms linear in K and the constants are matched separately against
    // the interneurons' straight-line rate.
    const double w_ei = gains.drive / k_ref;
    const IfrLine relay = lif_linearization(net.inh);
    const double swing_per_u = c_osc * g_exc;
    const double exc_dc_slope = (tau_e / t_cycle) * g_exc * mean_mag;
    double w_loop = 0.0;
    double v_theta_e = 1.0;  // harmless placeholder for a synapse-free net
    if (mag_count > 0) {
        w_loop = (swing_per_u * theta + exc_dc_slope) /
                 (tau_i * relay.m * (tau_ei / t_cycle) * w_ei);
        v_theta_e = gains.threshold_scale * (-w_loop * tau_i * relay.b);
    }
    if (!(v_theta_e > 0.0)) v_theta_e = 1.0;
    net.exc.v_theta = v_theta_e;

    net.e_to_i = {w_ei, gains.routing_delay, tau_ei, SynapseSign::excitatory};
    net.i_to_e = {w_loop / static_cast<double>(net.n_inh), gains.routing_delay, tau_i,
                  SynapseSign::inhibitory};
    return net;
}

// --- simulation ---------------------------------------------------------

struct TraceRequest {
    std::vector<std::uint32_t> neurons;  // excitatory ids to record
    std::size_t stride = 1;              // record every n-th step
};

struct Trace {
    std::vector<std::uint32_t> neurons;
    std::vector<double> time;
    std::vector<std::vector<double>> v;      // [neuron][sample]
    std::vector<std::vector<double>> i_exc;  // recurrent synaptic current
    std::vector<std::vector<double>> i_ext;  // cue pulses plus constant drive
    std::vector<double> i_inh;    // shared inhibitory current into every cell
    std::vector<double> i_drive;  // shared drive onto the interneurons
};

struct SimOptions {
    double dt = 0.0;                       // 0 -> T/1000
    TraceRequest trace;                    // empty -> nothing recorded
    std::vector<double> exc_v_init;        // empty -> resting potential
    std::vector<double> inh_v_init;        // empty -> even stagger over the span
    std::vector<double> constant_current;  // per excitatory cell
    double inh_bias = 0.0;                 // constant drive into every interneuron
    double pulse_width = 0.0;              // cue pulse width, 0 -> T/20
    double pulse_margin = 1.2;             // cue pulse overdrive above threshold
};

struct SimResult {
    SpikeRaster raster;      // excitatory spikes
    SpikeRaster inh_raster;  // interneuron spikes
    Trace trace;
    double dt = 0.0;
};

namespace detail {

inline std::size_t refractory_steps(double tau_ref, double dt) {
    if (tau_ref <= 0.0) return 0;  // at most one spike per step regardless
    return static_cast<std::size_t>(std::ceil(tau_ref / dt - 1e-9));
}

inline std::size_t delay_steps(double delay, double dt) {
    return static_cast<std::size_t>(std::max<long long>(1, std::llround(delay / dt)));
}

}  // namespace detail

// Fixed-step exponential-Euler integration: synaptic and membrane states decay
// exactly between events, jumps land on the grid point nearest their arrival
// time. The cue raster is injected as rectangular current pulses sized to
// force one spike each.
inline SimResult simulate(const SpikingNetwork& net, const SpikeRaster& initial,
                          double duration, const SimOptions& opts = {}) {
    const double t_cycle = net.t_cycle;
    if (!(t_cycle > 0.0)) throw std::invalid_argument("simulate: cycle period must be positive");
    const double dt = opts.dt > 0.0 ? opts.dt : t_cycle / 1000.0;
    if (dt > t_cycle / 500.0 * (1.0 + 1e-12))
        throw std::invalid_argument("simulate: dt must be at most T/500");
    if (!(duration >= 0.0)) throw std::invalid_argument("simulate: negative duration");
    validate_lif(net.exc);
    validate_lif(net.inh);
    const std::size_t n = net.n_exc;
    const std::size_t n_inh = net.n_inh;
    if (n == 0 || n_inh == 0) throw std::invalid_argument("simulate: empty populations");
    if (!opts.exc_v_init.empty() && opts.exc_v_init.size() != n)
        throw std::invalid_argument("simulate: exc_v_init size mismatch");
    if (!opts.inh_v_init.empty() && opts.inh_v_init.size() != n_inh)
        throw std::invalid_argument("simulate: inh_v_init size mismatch");
    if (!opts.constant_current.empty() && opts.constant_current.size() != n)
        throw std::invalid_argument("simulate: constant_current size mismatch");

    double tau_rec = 0.0;
    for (const DelaySynapse& s : net.recurrent) {
        if (s.pre >= n || s.post >= n)
            throw std::invalid_argument("simulate: synapse endpoint outside the population");
        if (s.magnitude < 0.0) throw std::invalid_argument("simulate: negative synapse magnitude");
        if (!(s.delay > 0.0)) throw std::invalid_argument("simulate: synapse delay must be positive");
        if (s.sign != SynapseSign::excitatory)
            throw std::invalid_argument(
                "simulate: recurrent synapses are excitatory; inhibition routes "
                "through the shared population");
        if (tau_rec == 0.0) tau_rec = s.tau_s;
        if (std::abs(s.tau_s - tau_rec) > 1e-12 * tau_rec)
            throw std::invalid_argument(
                "simulate: recurrent synapses must share one decay constant");
    }
    if (tau_rec == 0.0) tau_rec = 0.5 * t_cycle;

    const std::size_t n_steps = static_cast<std::size_t>(std::llround(duration / dt));

    // per-presynaptic fanout, delays in grid steps
    struct Arrival {
        std::uint32_t post;
        std::uint32_t steps;
        double amount;
    };
    std::vector<std::vector<Arrival>> fanout(n);
    std::size_t max_delay_steps = 1;
    for (const DelaySynapse& s : net.recurrent) {
        const std::size_t steps = detail::delay_steps(s.delay, dt);
        max_delay_steps = std::max(max_delay_steps, steps);
        fanout[s.pre].push_back(
            {s.post, static_cast<std::uint32_t>(steps), s.magnitude});
    }
    const std::size_t route_steps = detail::delay_steps(
        std::max(net.e_to_i.delay, std::max(net.i_to_e.delay, 0.0)), dt);
    max_delay_steps = std::max(max_delay_steps, route_steps);

    const std::size_t ring_len = max_delay_steps + 2;
    std::vector<double> ring(ring_len * n, 0.0);   // pending excitatory jumps
    std::vector<double> drive_ring(ring_len, 0.0); // pending interneuron drive
    std::vector<double> inh_ring(ring_len, 0.0);   // pending inhibition

    const std::size_t ei_steps = detail::delay_steps(net.e_to_i.delay, dt);
    const std::size_t ie_steps = detail::delay_steps(net.i_to_e.delay, dt);

    // cue pulses as step edges: (step, neuron, current delta)
    struct PulseEdge {
        std::size_t step;
        std::uint32_t neuron;
        double delta;
    };
    const double pulse_width = opts.pulse_width > 0.0 ? opts.pulse_width : t_cycle / 20.0;
    const std::size_t pulse_steps =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(pulse_width / dt)));
    const double pulse_amp = opts.pulse_margin * net.exc.v_theta /
                             (1.0 - std::exp(-pulse_width / net.exc.tau_m()));
    std::vector<PulseEdge> edges;
    for (const SpikeEvent& e : initial.events) {
        if (e.neuron >= n)
            throw std::invalid_argument("simulate: cue spike outside the population");
        if (e.time < 0.0) throw std::invalid_argument("simulate: cue spike before time zero");
        const std::size_t start = static_cast<std::size_t>(std::llround(e.time / dt));
        if (start >= n_steps) continue;
        edges.push_back({start, e.neuron, pulse_amp});
        edges.push_back({start + pulse_steps, e.neuron, -pulse_amp});
    }
    std::sort(edges.begin(), edges.end(),
              [](const PulseEdge& a, const PulseEdge& b) { return a.step < b.step; });

    // state
    std::vector<double> v_e(n, net.exc.e_l);
    if (!opts.exc_v_init.empty()) v_e = opts.exc_v_init;
    std::vector<double> v_i(n_inh);
    if (opts.inh_v_init.empty()) {
        // evenly staggered start so identical drive produces interleaved spikes
        const double span = net.inh.v_theta - net.inh.v_r;
        for (std::size_t q = 0; q < n_inh; ++q)
            v_i[q] = net.inh.v_r +
                     span * (static_cast<double>(q) + 0.5) / static_cast<double>(n_inh);
    } else {
        v_i = opts.inh_v_init;
    }
    std::vector<double> i_rec(n, 0.0), i_ext(n, 0.0);
    double i_inh = 0.0, i_drive = 0.0;

    const std::size_t ref_e = detail::refractory_steps(net.exc.tau_ref, dt);
    const std::size_t ref_i = detail::refractory_steps(net.inh.tau_ref, dt);
    std::vector<std::size_t> free_e(n, 0), free_i(n_inh, 0);

    const double decay_rec = std::exp(-dt / tau_rec);
    const double decay_inh = net.i_to_e.tau_s > 0.0 ? std::exp(-dt / net.i_to_e.tau_s) : 0.0;
    const double decay_drv = net.e_to_i.tau_s > 0.0 ? std::exp(-dt / net.e_to_i.tau_s) : 0.0;
    const double alpha_e = std::exp(-dt / net.exc.tau_m());
    const double alpha_i = std::exp(-dt / net.inh.tau_m());

    SimResult out;
    out.dt = dt;
    out.raster.duration = duration;
    out.raster.cycle = t_cycle;
    out.inh_raster.duration = duration;
    out.inh_raster.cycle = t_cycle;

    const bool tracing = !opts.trace.neurons.empty();
    const std::size_t stride = std::max<std::size_t>(1, opts.trace.stride);
    if (tracing) {
        for (std::uint32_t id : opts.trace.neurons)
            if (id >= n) throw std::invalid_argument("simulate: trace id outside the population");
        out.trace.neurons = opts.trace.neurons;
        out.trace.v.resize(opts.trace.neurons.size());
        out.trace.i_exc.resize(opts.trace.neurons.size());
        out.trace.i_ext.resize(opts.trace.neurons.size());
    }

    std::size_t edge_at = 0;
    for (std::size_t step = 0; step < n_steps; ++step) {
        const std::size_t slot = step % ring_len;
        const double t_next = static_cast<double>(step + 1) * dt;

        while (edge_at < edges.size() && edges[edge_at].step == step) {
            i_ext[edges[edge_at].neuron] += edges[edge_at].delta;
            ++edge_at;
        }

        // synaptic states: exact decay, then the jumps that land on this step
        double* arrivals = &ring[slot * n];
        for (std::size_t i = 0; i < n; ++i) {
            i_rec[i] = i_rec[i] * decay_rec + arrivals[i];
            arrivals[i] = 0.0;
        }
        i_inh = i_inh * decay_inh + inh_ring[slot];
        inh_ring[slot] = 0.0;
        i_drive = i_drive * decay_drv + drive_ring[slot];
        drive_ring[slot] = 0.0;

        // membranes
        for (std::size_t i = 0; i < n; ++i) {
            if (step < free_e[i]) {
                v_e[i] = net.exc.v_r;
                continue;
            }
            double current = i_rec[i] - i_inh + i_ext[i];
            if (!opts.constant_current.empty()) current += opts.constant_current[i];
            const double v_inf = net.exc.e_l + current / net.exc.g_l;
            v_e[i] = v_inf + (v_e[i] - v_inf) * alpha_e;
            if (v_e[i] >= net.exc.v_theta) {
                out.raster.events.push_back({static_cast<std::uint32_t>(i), t_next});
                v_e[i] = net.exc.v_r;
                free_e[i] = step + 1 + ref_e;
                for (const Arrival& a : fanout[i])
                    ring[((step + 1 + a.steps) % ring_len) * n + a.post] += a.amount;
                if (net.e_to_i.magnitude != 0.0)
                    drive_ring[(step + 1 + ei_steps) % ring_len] += net.e_to_i.magnitude;
            }
        }
        const double drive_now = i_drive + opts.inh_bias;
        for (std::size_t q = 0; q < n_inh; ++q) {
            if (step < free_i[q]) {
                v_i[q] = net.inh.v_r;
                continue;
            }
            const double v_inf = net.inh.e_l + drive_now / net.inh.g_l;
            v_i[q] = v_inf + (v_i[q] - v_inf) * alpha_i;
            if (v_i[q] >= net.inh.v_theta) {
                out.inh_raster.events.push_back({static_cast<std::uint32_t>(q), t_next});
                v_i[q] = net.inh.v_r;
                free_i[q] = step + 1 + ref_i;
                if (net.i_to_e.magnitude != 0.0)
                    inh_ring[(step + 1 + ie_steps) % ring_len] += net.i_to_e.magnitude;
            }
        }

        if (tracing && step % stride == 0) {
            out.trace.time.push_back(t_next);
            out.trace.i_inh.push_back(i_inh);
            out.trace.i_drive.push_back(drive_now);
            for (std::size_t t = 0; t < out.trace.neurons.size(); ++t) {
                const std::uint32_t id = out.trace.neurons[t];
                double current = i_ext[id];
                if (!opts.constant_current.empty()) current += opts.constant_current[id];
                out.trace.v[t].push_back(v_e[id]);
                out.trace.i_exc[t].push_back(i_rec[id]);
                out.trace.i_ext[t].push_back(current);
            }
        }

        if (step % 128 == 0 || step + 1 == n_steps) {
            for (std::size_t i = 0; i < n; ++i)
                if (!std::isfinite(v_e[i]))
                    throw std::runtime_error(
                        "simulate: non-finite membrane state at t=" + std::to_string(t_next) +
                        "s, neuron " + std::to_string(i));
        }
    }
    return out;
}

inline void write_trace_csv(std::ostream& os, const Trace& trace,
                            const std::string& comment = "") {
    if (!comment.empty()) os << "# " << comment << "\n";
    os << "time_s,i_inh,i_drive";
    for (std::uint32_t id : trace.neurons)
        os << ",v_" << id << ",i_exc_" << id << ",i_ext_" << id;
    os << '\n' << std::setprecision(17);
    for (std::size_t s = 0; s < trace.time.size(); ++s) {
        os << trace.time[s] << ',' << trace.i_inh[s] << ',' << trace.i_drive[s];
        for (std::size_t t = 0; t < trace.neurons.size(); ++t)
            os << ',' << trace.v[t][s] << ',' << trace.i_exc[t][s] << ',' << trace.i_ext[t][s];
        os << '\n';
    }
}

// --- capacity experiment --------------------------------------------------

struct SpikingCapacityConfig {
    std::size_t n = 500;
    std::size_t k_active = 25;
    std::vector<std::size_t> m_values{50, 100, 200, 250, 300, 400};
    double t_cycle = 0.2;
    double theta = 0.5;
    double dt = 0.0;  // 0 -> T/1000
    std::size_t settle_cycles = 20;
    std::size_t decode_cycles = 5;
    std::size_t trials = 3;
    std::uint64_t seed = 1;
    CompileGains gains{};
    bool with_ideal = true;          // also run the fixed-threshold reference
    std::size_t ideal_iters = 100;
    std::size_t threads = 1;
};

struct SpikingCapacityReport {
    CapacityReport spiking;
    CapacityReport ideal;  // same patterns through the reference network
};

// Stores M random phasor patterns, compiles the memory, kicks the network
// with one stored pattern and decodes the trailing cycles. The reference
// column runs the same patterns through the constant-threshold update rule
// at theta * K.
inline SpikingCapacityReport run_spiking_capacity(const SpikingCapacityConfig& cfg) {
    if (cfg.n == 0 || cfg.k_active == 0 || cfg.k_active > cfg.n)
        throw std::invalid_argument("run_spiking_capacity: bad population sizes");
    if (cfg.m_values.empty() || cfg.trials == 0)
        throw std::invalid_argument("run_spiking_capacity: empty grid");
    if (cfg.decode_cycles == 0)
        throw std::invalid_argument("run_spiking_capacity: decode window needs at least one cycle");
    if (cfg.settle_cycles == 0)
        throw std::invalid_argument("run_spiking_capacity: need settling time before decoding");

    const double p_hot = static_cast<double>(cfg.k_active) / static_cast<double>(cfg.n);
    const double theta_abs = cfg.theta * static_cast<double>(cfg.k_active);
    const double duration =
        static_cast<double>(cfg.settle_cycles + cfg.decode_cycles) * cfg.t_cycle;
    const double window = static_cast<double>(cfg.decode_cycles) * cfg.t_cycle;

    CompileGains gains = cfg.gains;
    if (gains.k_ref <= 0.0) gains.k_ref = static_cast<double>(cfg.k_active);

    const std::size_t jobs = cfg.m_values.size() * cfg.trials;
    std::vector<CapacityRow> rows_spiking(jobs), rows_ideal(jobs);

    parallel_for(jobs, cfg.threads, [&](std::size_t job) {
        const std::size_t m = cfg.m_values[job / cfg.trials];
        const std::size_t trial = job % cfg.trials;
        const std::string stream = "spikecap/n=" + std::to_string(cfg.n) +
                                   "/k=" + std::to_string(cfg.k_active) +
                                   "/m=" + std::to_string(m);
        Rng rng(cfg.seed, stream, trial);
        const auto pats = gen_patterns({cfg.n, m, p_hot, 0}, rng);
        const HermitianWeights w = learn_conjugate_outer(pats, cfg.n);

        const SpikingNetwork net = compile(w, cfg.t_cycle, cfg.theta, gains);
        const SpikeRaster cue = phase_to_spikes(pats[0], cfg.t_cycle, 0.05 * cfg.t_cycle, 1);
        SimOptions opts;
        opts.dt = cfg.dt;
        const SimResult sim = simulate(net, cue, duration, opts);
        const PhasorState decoded =
            spikes_to_phasor(sim.raster, cfg.n, duration - window, window);
        const RecallStats st = score_recall(decoded, pats[0]);

        CapacityRow row;
        row.n = cfg.n;
        row.p_hot = p_hot;
        row.theta = cfg.theta;
        row.kind = "spiking";
        row.m = m;
        row.trial = trial;
        row.similarity = st.similarity;
        row.alpha = st.alpha;
        row.beta = st.beta;
        row.kappa = st.kappa;
        const ItemInfo item = info_item_bits(cfg.n, p_hot, st.alpha, st.beta, st.kappa, 0);
        row.bits_per_synapse = bits_per_synapse(cfg.n, m, item.bits);
        rows_spiking[job] = row;

        if (cfg.with_ideal) {
            RecallOptions ropts;
            ropts.max_iters = cfg.ideal_iters;
            ropts.record_states = false;
            ropts.record_energy = false;
            const RecallTrace ref =
                recall(w, pats[0], ThresholdPolicy::constant(theta_abs),
                       TransferKind::tpam(), Schedule::parallel, ropts);
            const RecallStats rst = score_recall(ref.final_state, pats[0]);
            CapacityRow ideal = row;
            ideal.kind = "tpam_fixed";
            ideal.similarity = rst.similarity;
            ideal.alpha = rst.alpha;
            ideal.beta = rst.beta;
            ideal.kappa = rst.kappa;
            const ItemInfo ref_item =
                info_item_bits(cfg.n, p_hot, rst.alpha, rst.beta, rst.kappa, 0);
            ideal.bits_per_synapse = bits_per_synapse(cfg.n, m, ref_item.bits);
            rows_ideal[job] = ideal;
        }
    });

    SpikingCapacityReport report;
    report.spiking.rows = std::move(rows_spiking);
    if (cfg.with_ideal) report.ideal.rows = std::move(rows_ideal);
    return report;
}

}  // namespace tpam
