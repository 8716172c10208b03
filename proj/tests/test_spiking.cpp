#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>
#include <vector>

#include "tpam/core.hpp"
#include "tpam/lif.hpp"
#include "tpam/patterns.hpp"
#include "tpam/phasor.hpp"
#include "tpam/raster.hpp"
#include "tpam/rng.hpp"
#include "tpam/spiking.hpp"

using namespace tpam;
using Catch::Matchers::ContainsSubstring;

namespace {

constexpr double kT = 0.2;

const DelaySynapse* find_synapse(const SpikingNetwork& net, std::uint32_t pre,
                                 std::uint32_t post) {
    for (const DelaySynapse& s : net.recurrent)
        if (s.pre == pre && s.post == post) return &s;
    return nullptr;
}

// single cell, no coupling: isolates the integrate-and-fire mechanics
SpikingNetwork lone_cell(double tau_m, double tau_ref) {
    SpikingNetwork net;
    net.t_cycle = kT;
    net.n_exc = 1;
    net.n_inh = 1;
    net.exc = {tau_m, 1.0, 0.0, 1.0, 0.0, tau_ref};
    net.inh = {0.1 * kT, 1.0, 0.0, 1.0, 0.0, 0.0};
    net.readout = net.inh;
    return net;
}

std::vector<double> spike_times(const SpikeRaster& r, std::uint32_t neuron) {
    std::vector<double> t;
    for (const SpikeEvent& e : r.events)
        if (e.neuron == neuron) t.push_back(e.time);
    return t;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
        sab += (a[i] - ma) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST_CASE("phase-to-delay compilation pins the documented wrap", "[spiking]") {
    CMatrix m(4, 4);
    m.at(1, 0) = cplx(1.0, 0.0);                   // arg 0
    m.at(0, 1) = std::conj(m.at(1, 0));
    m.at(2, 0) = cplx(-1.0, 0.0);                  // arg pi
    m.at(0, 2) = std::conj(m.at(2, 0));
    m.at(3, 0) = std::polar(1.0, kTau * 0.2);      // a fifth of a cycle
    m.at(0, 3) = std::conj(m.at(3, 0));
    const HermitianWeights w = HermitianWeights::from_matrix(m);

    const SpikingNetwork net = compile(w, kT, 0.5);
    REQUIRE(net.recurrent.size() == 6);
    REQUIRE(net.n_inh == 1);

    // arg 0 sits a full cycle back, arg pi at the half-cycle floor
    CHECK(find_synapse(net, 0, 1)->delay == Catch::Approx(kT).margin(1e-12));
    CHECK(find_synapse(net, 1, 0)->delay == Catch::Approx(kT).margin(1e-12));
    CHECK(find_synapse(net, 0, 2)->delay == Catch::Approx(0.5 * kT).margin(1e-12));
    CHECK(find_synapse(net, 0, 3)->delay == Catch::Approx(1.2 * kT).margin(1e-12));
    // the conjugate entry wraps to the complementary fraction
    CHECK(find_synapse(net, 3, 0)->delay == Catch::Approx(0.8 * kT).margin(1e-12));

    for (const DelaySynapse& s : net.recurrent) {
        CHECK(s.sign == SynapseSign::excitatory);
        CHECK(s.tau_s == Catch::Approx(0.5 * kT));
        CHECK(s.magnitude > 0.0);
        CHECK(s.magnitude == Catch::Approx(net.recurrent.front().magnitude));
    }

    // compensation shifts every delay back, re-wrapping into the same band
    CompileGains gains;
    gains.delay_compensation = 0.3 * kT;
    const SpikingNetwork shifted = compile(w, kT, 0.5, gains);
    CHECK(find_synapse(shifted, 0, 1)->delay == Catch::Approx(0.7 * kT).margin(1e-12));
    CHECK(find_synapse(shifted, 0, 2)->delay == Catch::Approx(1.2 * kT).margin(1e-12));
}

TEST_CASE("compilation rejects weights that drifted off Hermitian", "[spiking]") {
    CMatrix bad(3, 3);
    bad.at(0, 1) = cplx(1.0, 0.0);
    bad.at(1, 0) = cplx(0.5, 0.0);  // magnitude mismatch with the transpose
    const HermitianWeights w = HermitianWeights::from_matrix_unchecked(bad);
    CHECK_THROWS_AS(compile(w, kT, 0.5), std::invalid_argument);

    CMatrix diag(3, 3);
    diag.at(0, 0) = cplx(1.0, 0.0);
    const HermitianWeights wd = HermitianWeights::from_matrix_unchecked(diag);
    CHECK_THROWS_AS(compile(wd, kT, 0.5), std::invalid_argument);

    CMatrix ok(2, 2);
    ok.at(0, 1) = cplx(0.0, 1.0);
    ok.at(1, 0) = cplx(0.0, -1.0);
    const HermitianWeights wo = HermitianWeights::from_matrix(ok);
    CHECK_THROWS_AS(compile(wo, 0.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(compile(wo, kT, -0.1), std::invalid_argument);
}

TEST_CASE("compiled delays land in the half-to-three-half cycle band", "[spiking]") {
    Rng rng(31, "spiking/delay-band", 0);
    const auto pats = gen_patterns({64, 5, 0.125, 0}, rng);
    const HermitianWeights w = learn_conjugate_outer(pats, 64);
    const SpikingNetwork net = compile(w, kT, 0.5);

    std::size_t nonzero = 0;
    for (std::size_t i = 0; i < 64; ++i)
        for (std::size_t j = 0; j < 64; ++j)
            if (w.at(i, j) != cplx(0.0, 0.0)) ++nonzero;
    REQUIRE(net.recurrent.size() == nonzero);
    REQUIRE(nonzero > 0);

    for (const DelaySynapse& s : net.recurrent) {
        REQUIRE(s.pre != s.post);
        CHECK(s.delay >= 0.5 * kT - 1e-12);
        CHECK(s.delay < 1.5 * kT);
        const cplx wij = w.at(s.post, s.pre);
        const double frac = wrap_angle_2pi(std::arg(wij)) / kTau;
        double expect = frac * kT;
        if (expect < 0.5 * kT) expect += kT;
        CHECK(s.delay == Catch::Approx(expect).margin(1e-12));
        // one shared gain: magnitude stays proportional to the weight modulus
        const DelaySynapse& first = net.recurrent.front();
        const double gain = first.magnitude / std::abs(w.at(first.post, first.pre));
        CHECK(s.magnitude == Catch::Approx(gain * std::abs(wij)).epsilon(1e-12));
    }
    CHECK(net.n_inh == 6);
    CHECK(net.exc.tau_ref == Catch::Approx(0.6 * kT));
    CHECK(net.exc.tau_m() == Catch::Approx(0.25 * kT));
    CHECK(net.inh.tau_m() == Catch::Approx(0.1 * kT));
    CHECK(net.i_to_e.sign == SynapseSign::inhibitory);
    CHECK(net.e_to_i.sign == SynapseSign::excitatory);
    CHECK(net.exc.v_theta > 0.0);
}

TEST_CASE("constant drive reproduces the closed-form firing period", "[spiking]") {
    SpikingNetwork net = lone_cell(0.05, 0.12);
    SimOptions opts;
    opts.constant_current = {2.0};
    SpikeRaster quiet;
    const SimResult sim = simulate(net, quiet, 2.0, opts);

    const auto times = spike_times(sim.raster, 0);
    REQUIRE(times.size() == 13);

    const double expect = 0.15465735902799726547;  // tau*log(2) + 0.12
    for (std::size_t k = 1; k < times.size(); ++k) {
        const double isi = times[k] - times[k - 1];
        CHECK(std::abs(isi - expect) <= 2.0 * sim.dt);
        // grid-exact: every interval is a whole number of steps
        const double steps = isi / sim.dt;
        CHECK(std::abs(steps - std::llround(steps)) < 1e-9);
    }
    CHECK(min_interspike_interval(sim.raster) >= net.exc.tau_ref);
}

TEST_CASE("refractory hold is exact on the integration grid", "[spiking]") {
    SpikingNetwork net = lone_cell(0.05, 0.12);
    SimOptions opts;
    opts.constant_current = {1e6};
    SpikeRaster quiet;
    const SimResult sim = simulate(net, quiet, 1.0, opts);

    const auto times = spike_times(sim.raster, 0);
    REQUIRE(times.size() >= 5);
    const long long ref_steps = std::llround(std::ceil(0.12 / sim.dt - 1e-9));
    for (std::size_t k = 1; k < times.size(); ++k) {
        const long long d = std::llround(times[k] / sim.dt) - std::llround(times[k - 1] / sim.dt);
        CHECK(d == ref_steps + 1);  // earliest step the hold releases
    }
    CHECK(min_interspike_interval(sim.raster) >= net.exc.tau_ref);
}

TEST_CASE("zero input decays exactly and stays silent", "[spiking]") {
    SpikingNetwork net = lone_cell(0.05, 0.12);
    SimOptions opts;
    opts.exc_v_init = {0.7};
    opts.trace.neurons = {0};
    SpikeRaster quiet;
    const SimResult sim = simulate(net, quiet, 0.1, opts);

    CHECK(sim.raster.events.empty());
    REQUIRE(sim.trace.time.size() == 500);
    for (std::size_t k = 0; k < sim.trace.time.size(); ++k) {
        const double expect = 0.7 * std::exp(-sim.trace.time[k] / 0.05);
        CHECK(std::abs(sim.trace.v[0][k] - expect) < 1e-10);
    }
}

TEST_CASE("step size guard and input validation", "[spiking]") {
    SpikingNetwork net = lone_cell(0.05, 0.12);
    SpikeRaster quiet;

    SimOptions coarse;
    coarse.dt = kT / 400.0;
    CHECK_THROWS_AS(simulate(net, quiet, 0.1, coarse), std::invalid_argument);
    SimOptions edge;
    edge.dt = kT / 500.0;
    CHECK_NOTHROW(simulate(net, quiet, 0.01, edge));

    SimOptions bad_size;
    bad_size.constant_current = {1.0, 2.0};
    CHECK_THROWS_AS(simulate(net, quiet, 0.01, bad_size), std::invalid_argument);

    SimOptions bad_trace;
    bad_trace.trace.neurons = {3};
    CHECK_THROWS_AS(simulate(net, quiet, 0.01, bad_trace), std::invalid_argument);

    SpikeRaster stray;
    stray.events.push_back({5, 0.001});
    stray.duration = 0.01;
    CHECK_THROWS_AS(simulate(net, stray, 0.01), std::invalid_argument);

    SpikeRaster early;
    early.events.push_back({0, -0.5});
    early.duration = 0.01;
    CHECK_THROWS_AS(simulate(net, early, 0.01), std::invalid_argument);

    // recurrent synapses must be excitatory and share one decay constant
    SpikingNetwork mixed = lone_cell(0.05, 0.12);
    mixed.n_exc = 2;
    mixed.recurrent.push_back({0, 1, 1.0, 0.1, 0.10, SynapseSign::excitatory});
    mixed.recurrent.push_back({1, 0, 1.0, 0.1, 0.11, SynapseSign::excitatory});
    CHECK_THROWS_AS(simulate(mixed, quiet, 0.01), std::invalid_argument);
    mixed.recurrent[1].tau_s = 0.10;
    mixed.recurrent[1].sign = SynapseSign::inhibitory;
    CHECK_THROWS_AS(simulate(mixed, quiet, 0.01), std::invalid_argument);
    mixed.recurrent[1].sign = SynapseSign::excitatory;
    mixed.recurrent[1].delay = 0.0;
    CHECK_THROWS_AS(simulate(mixed, quiet, 0.01), std::invalid_argument);
    mixed.recurrent[1].delay = 0.1;
    CHECK_NOTHROW(simulate(mixed, quiet, 0.01));
}

TEST_CASE("non-finite state aborts with a diagnostic", "[spiking]") {
    SpikingNetwork net = lone_cell(0.05, 0.12);
    SimOptions opts;
    opts.constant_current = {std::numeric_limits<double>::quiet_NaN()};
    SpikeRaster quiet;
    CHECK_THROWS_WITH(simulate(net, quiet, 0.1, opts),
                      ContainsSubstring("non-finite") && ContainsSubstring("neuron 0"));
}

TEST_CASE("synaptic responses match their kernels", "[spiking]") {
    const std::size_t n = 100;
    CMatrix m(n, n);
    m.at(1, 0) = cplx(1.0, 0.0);
    m.at(0, 1) = cplx(1.0, 0.0);
    const HermitianWeights w = HermitianWeights::from_matrix(m);
    const SpikingNetwork net = compile(w, kT, 0.5);
    REQUIRE(net.n_inh == 10);

    SimOptions opts;
    opts.inh_bias = 2.0;  // tonic interneuron firing to expose rate changes
    opts.pulse_margin = 8.0;  // the cue must also beat the tonic inhibition
    opts.trace.neurons = {1};
    opts.constant_current.assign(n, 0.0);
    opts.constant_current[1] = -10.0;  // keep the probe cell subthreshold

    SpikeRaster cue;
    cue.events.push_back({0, 0.05});
    cue.duration = 1.0;
    cue.cycle = kT;

    const SimResult kicked = simulate(net, cue, 1.0, opts);
    SpikeRaster none;
    const SimResult baseline = simulate(net, none, 1.0, opts);

    const auto t0s = spike_times(kicked.raster, 0);
    REQUIRE(t0s.size() == 1);  // the long refractory hold blocks a double
    const double t_spike = t0s.front();
    const double g_exc = find_synapse(net, 0, 1)->magnitude;

    // direct synapse: a clean jump decaying with the excitatory constant
    const double t_arr = t_spike + find_synapse(net, 0, 1)->delay;
    std::size_t k_jump = kicked.trace.time.size();
    for (std::size_t k = 0; k < kicked.trace.time.size(); ++k)
        if (kicked.trace.i_exc[0][k] != 0.0) {
            k_jump = k;
            break;
        }
    REQUIRE(k_jump < kicked.trace.time.size());
    CHECK(std::abs(kicked.trace.time[k_jump] - t_arr) <= 1.5 * kicked.dt);
    CHECK(kicked.trace.i_exc[0][k_jump] == Catch::Approx(g_exc).epsilon(1e-9));
    for (std::size_t k = k_jump; k < kicked.trace.time.size(); ++k) {
        const double expect =
            g_exc * std::exp(-(kicked.trace.time[k] - kicked.trace.time[k_jump]) / (0.5 * kT));
        CHECK(kicked.trace.i_exc[0][k] == Catch::Approx(expect).epsilon(1e-6).margin(1e-15));
    }

    // disynaptic inhibition: the population rate change filtered twice, one
    // exponential per stage, which convolve to a single broad lobe
    std::vector<double> diff, oracle;
    double peak = 0.0, peak_t = 0.0;
    for (std::size_t k = 0; k < kicked.trace.time.size(); ++k) {
        const double t = kicked.trace.time[k];
        if (t < t_spike || t > t_spike + 4.0 * kT) continue;
        const double d = kicked.trace.i_inh[k] - baseline.trace.i_inh[k];
        const double tau = t - t_spike;
        diff.push_back(d);
        oracle.push_back(std::exp(-tau / kT) - std::exp(-tau / (0.5 * kT)));
        if (d > peak) {
            peak = d;
            peak_t = tau;
        }
    }
    REQUIRE(diff.size() > 1000);
    CHECK(pearson(diff, oracle) > 0.9);
    CHECK(peak > 0.0);
    CHECK(peak_t > 0.2 * kT);
    CHECK(peak_t < 2.0 * kT);

    // the dominant lobe spans on the order of one cycle
    double above = 0.0;
    for (double d : diff)
        if (d > 0.5 * peak) above += kicked.dt;
    CHECK(above > 0.4 * kT);
    CHECK(above < 3.0 * kT);

    // net effect on the probe cell flips sign: fast excitation, slow inhibition
    bool pos = false, neg = false;
    for (std::size_t k = 0; k < kicked.trace.time.size(); ++k) {
        const double t = kicked.trace.time[k];
        if (t < t_spike || t > t_spike + 4.0 * kT) continue;
        const double net_in =
            kicked.trace.i_exc[0][k] - (kicked.trace.i_inh[k] - baseline.trace.i_inh[k]);
        if (net_in > 1e-6) pos = true;
        if (net_in < -1e-6) neg = true;
    }
    CHECK(pos);
    CHECK(neg);
}

TEST_CASE("simulation is deterministic", "[spiking]") {
    Rng rng(77, "spiking/determinism", 0);
    const auto pats = gen_patterns({60, 2, 0.1, 0}, rng);
    const HermitianWeights w = learn_conjugate_outer(pats, 60);
    const SpikingNetwork net = compile(w, kT, 0.5);
    const SpikeRaster cue = phase_to_spikes(pats[0], kT, 0.05 * kT, 1);

    SimOptions opts;
    opts.trace.neurons = {0, 7};
    opts.trace.stride = 10;
    const SimResult a = simulate(net, cue, 1.0, opts);
    const SimResult b = simulate(net, cue, 1.0, opts);

    REQUIRE(a.raster.events.size() == b.raster.events.size());
    for (std::size_t k = 0; k < a.raster.events.size(); ++k) {
        CHECK(a.raster.events[k].neuron == b.raster.events[k].neuron);
        CHECK(a.raster.events[k].time == b.raster.events[k].time);
    }
    REQUIRE(a.inh_raster.events.size() == b.inh_raster.events.size());
    CHECK(a.trace.v[0] == b.trace.v[0]);
    CHECK(a.trace.i_inh == b.trace.i_inh);

    CHECK(std::is_sorted(a.raster.events.begin(), a.raster.events.end(), raster_order));
    for (const SpikeEvent& e : a.raster.events) CHECK(e.neuron < 60);
}

TEST_CASE("capacity experiment validates its grid", "[spiking]") {
    SpikingCapacityConfig cfg;
    cfg.decode_cycles = 0;
    CHECK_THROWS_AS(run_spiking_capacity(cfg), std::invalid_argument);
    cfg.decode_cycles = 5;
    cfg.settle_cycles = 0;
    CHECK_THROWS_AS(run_spiking_capacity(cfg), std::invalid_argument);
    cfg.settle_cycles = 20;
    cfg.k_active = 600;
    CHECK_THROWS_AS(run_spiking_capacity(cfg), std::invalid_argument);
    cfg.k_active = 25;
    cfg.m_values.clear();
    CHECK_THROWS_AS(run_spiking_capacity(cfg), std::invalid_argument);
}

// Hidden calibration sweep for the compile-time constants. Run explicitly:
//   tpam_tests "[tune]" --allow-running-no-tests
TEST_CASE("retrieval constant exploration", "[.][tune]") {
    const std::size_t n = 100;
    const double p = 0.08, k = 8.0;
    Rng rng(5, "spiking/tune", 0);
    const auto pats = gen_patterns({n, 3, p, 0}, rng);
    const HermitianWeights w = learn_conjugate_outer(pats, n);

    RecallOptions ropts;
    ropts.max_iters = 100;
    ropts.record_states = false;
    ropts.record_energy = false;

    for (double theta : {0.4, 0.5, 0.6}) {
        const RecallTrace ref = recall(w, pats[0], ThresholdPolicy::constant(theta * k),
                                       TransferKind::tpam(), Schedule::parallel, ropts);
        const PhasorState& star = ref.final_state;
        std::printf("theta=%.2f fixed point: support=%zu sim-to-pattern=%.4f converged=%d\n",
                    theta, support_size(star), similarity(star, pats[0]), (int)ref.converged);
        if (support_size(star) == 0) continue;
        const SpikeRaster cue = phase_to_spikes(star, kT, 0.05 * kT, 1);
        for (double ts : {0.7, 0.85, 1.0, 1.15}) {
            for (double comp : {0.0, 0.1, 0.2, 0.3}) {
                CompileGains gains;
                gains.k_ref = k;
                gains.threshold_scale = ts;
                gains.delay_compensation = comp * kT;
                const SpikingNetwork net = compile(w, kT, theta, gains);
                const SimResult sim = simulate(net, cue, 13.0 * kT);
                const PhasorState dec =
                    spikes_to_phasor(sim.raster, n, 10.0 * kT, 3.0 * kT);
                std::size_t in_window = 0;
                for (const SpikeEvent& e : sim.raster.events)
                    if (e.time >= 10.0 * kT) ++in_window;
                const double period = fit_period(sim.raster, 10.0 * kT, 3.0 * kT, kT);
                std::printf(
                    "  ts=%.2f comp=%.1fT: sim=%.4f support=%zu spikes/cyc=%.1f "
                    "period=%.4fT vtheta=%.3f\n",
                    ts, comp, similarity(dec, star), support_size(dec),
                    (double)in_window / 3.0, period / kT, net.exc.v_theta);
            }
        }
    }
}

// Hidden full-scale sweep of the capacity experiment's operating point.
TEST_CASE("capacity operating point exploration", "[.][tune500]") {
    for (double theta : {0.4, 0.5}) {
        for (double ts : {0.85, 1.0}) {
            for (double comp : {0.0, 0.1}) {
                SpikingCapacityConfig cfg;
                cfg.m_values = {50, 200, 400};
                cfg.trials = 1;
                cfg.theta = theta;
                cfg.gains.threshold_scale = ts;
                cfg.gains.delay_compensation = comp * cfg.t_cycle;
                const SpikingCapacityReport rep = run_spiking_capacity(cfg);
                std::printf("theta=%.2f ts=%.2f comp=%.1fT:", theta, ts, comp);
                for (std::size_t i = 0; i < rep.spiking.rows.size(); ++i)
                    std::printf("  M=%zu spike=%.3f ideal=%.3f", rep.spiking.rows[i].m,
                                rep.spiking.rows[i].similarity, rep.ideal.rows[i].similarity);
                std::printf("\n");
                std::fflush(stdout);
            }
        }
    }
}

// Hidden: the exact default grid the capacity experiment ships with.
TEST_CASE("default capacity grid dry run", "[.][tunegrid]") {
    SpikingCapacityConfig cfg;
    const SpikingCapacityReport rep = run_spiking_capacity(cfg);
    for (const CapacityCell& c : rep.spiking.summary())
        std::printf("spiking M=%zu mean=%.4f sd=%.4f\n", c.m, c.mean_similarity,
                    c.sd_similarity);
    for (const CapacityCell& c : rep.ideal.summary())
        std::printf("ideal   M=%zu mean=%.4f sd=%.4f\n", c.m, c.mean_similarity,
                    c.sd_similarity);
}

namespace {

struct FixedPointRig {
    HermitianWeights w{HermitianWeights::from_matrix(CMatrix(1, 1))};
    PhasorState star;
    SpikingNetwork net;
    SpikeRaster cue;
};

// Stores a few patterns, settles one into a genuine fixed point of the
// constant-threshold update, and compiles the memory around it.
FixedPointRig make_rig(std::size_t n, std::size_t m, double p_hot, double k) {
    FixedPointRig rig;
    Rng rng(5, "spiking/fixed-point", 0);
    const auto pats = gen_patterns({n, m, p_hot, 0}, rng);
    rig.w = learn_conjugate_outer(pats, n);

    RecallOptions ropts;
    ropts.max_iters = 100;
    ropts.record_states = false;
    ropts.record_energy = false;
    const double theta = 0.5;
    const RecallTrace ref = recall(rig.w, pats[0], ThresholdPolicy::constant(theta * k),
                                   TransferKind::tpam(), Schedule::parallel, ropts);
    rig.star = ref.final_state;
    REQUIRE(ref.converged);
    REQUIRE(support_size(rig.star) * 2 >= static_cast<std::size_t>(k));
    const PhasorState again = step(rig.w, rig.star, ThresholdPolicy::constant(theta * k),
                                   TransferKind::tpam(), Schedule::parallel);
    REQUIRE(similarity(again, rig.star) > 0.9999);

    CompileGains gains;
    gains.k_ref = k;
    rig.net = compile(rig.w, kT, theta, gains);
    rig.cue = phase_to_spikes(rig.star, kT, 0.05 * kT, 1);
    return rig;
}

PhasorState settle_and_decode(const SpikingNetwork& net, const SpikeRaster& cue,
                              std::size_t n, const SimOptions& opts = {}) {
    const double settle = 10.0 * kT, window = 3.0 * kT;
    const SimResult sim = simulate(net, cue, settle + window, opts);
    return spikes_to_phasor(sim.raster, n, settle, window);
}

}  // namespace

TEST_CASE("spiking network holds an injected fixed point", "[spiking]") {
    const FixedPointRig rig = make_rig(100, 3, 0.08, 8.0);
    const PhasorState dec = settle_and_decode(rig.net, rig.cue, 100);
    CHECK(similarity(dec, rig.star) >= 0.95);
    CHECK(support_size(dec) == support_size(rig.star));
}

TEST_CASE("full-scale fixed point survives ten settling cycles", "[spiking]") {
    const FixedPointRig rig = make_rig(500, 50, 0.05, 25.0);
    const PhasorState dec = settle_and_decode(rig.net, rig.cue, 500);
    CHECK(similarity(dec, rig.star) >= 0.95);
}

TEST_CASE("whole-cycle delay shifts leave the steady state", "[spiking]") {
    const FixedPointRig rig = make_rig(100, 3, 0.08, 8.0);
    const PhasorState base = settle_and_decode(rig.net, rig.cue, 100);

    SpikingNetwork mutated = rig.net;
    REQUIRE(mutated.recurrent.size() > 12);
    std::size_t shifted = 0;
    for (std::size_t s = 0; s < mutated.recurrent.size() && shifted < 3; s += 5) {
        mutated.recurrent[s].delay += kT;
        ++shifted;
    }
    for (std::size_t s = 0; s < mutated.recurrent.size() && shifted < 5; ++s) {
        if (mutated.recurrent[s].delay > 1.2 * kT) {
            mutated.recurrent[s].delay -= kT;  // stays positive below the band
            ++shifted;
        }
    }
    REQUIRE(shifted == 5);

    const PhasorState moved = settle_and_decode(mutated, rig.cue, 100);
    CHECK(similarity(base, moved) > 1.0 - 1e-3);
    CHECK(std::abs(similarity(base, rig.star) - similarity(moved, rig.star)) < 1e-3);
}

TEST_CASE("halving the step size barely moves the decoded state", "[spiking]") {
    const FixedPointRig rig = make_rig(100, 3, 0.08, 8.0);
    SimOptions fine;
    fine.dt = kT / 2000.0;
    const double coarse_sim = similarity(settle_and_decode(rig.net, rig.cue, 100), rig.star);
    const double fine_sim =
        similarity(settle_and_decode(rig.net, rig.cue, 100, fine), rig.star);
    CHECK(std::abs(coarse_sim - fine_sim) < 0.01);
}

TEST_CASE("excitation and inhibition balance in steady state", "[spiking]") {
    const FixedPointRig rig = make_rig(100, 3, 0.08, 8.0);
    SimOptions opts;
    for (std::uint32_t i = 0; i < 100; ++i)
        if (rig.star[i] != cplx(0.0, 0.0)) opts.trace.neurons.push_back(i);
    REQUIRE(opts.trace.neurons.size() >= 4);

    const SimResult sim = simulate(rig.net, rig.cue, 13.0 * kT, opts);
    double exc = 0.0, inh = 0.0;
    std::size_t count = 0;
    for (std::size_t s = 0; s < sim.trace.time.size(); ++s) {
        if (sim.trace.time[s] < 10.0 * kT) continue;
        inh += sim.trace.i_inh[s] * static_cast<double>(opts.trace.neurons.size());
        for (std::size_t t = 0; t < opts.trace.neurons.size(); ++t) exc += sim.trace.i_exc[t][s];
        ++count;
    }
    REQUIRE(count > 0);
    REQUIRE(inh > 0.0);
    CHECK(exc / inh > 1.0 / 3.0);
    CHECK(exc / inh < 3.0);
}

TEST_CASE("capacity rows are reproducible across thread counts", "[spiking]") {
    SpikingCapacityConfig cfg;
    cfg.n = 60;
    cfg.k_active = 6;
    cfg.m_values = {3, 5};
    cfg.trials = 2;
    cfg.settle_cycles = 6;
    cfg.decode_cycles = 3;

    const SpikingCapacityReport one = run_spiking_capacity(cfg);
    cfg.threads = 2;
    const SpikingCapacityReport two = run_spiking_capacity(cfg);

    REQUIRE(one.spiking.rows.size() == 4);
    REQUIRE(two.spiking.rows.size() == 4);
    for (std::size_t r = 0; r < 4; ++r) {
        CHECK(one.spiking.rows[r].similarity == two.spiking.rows[r].similarity);
        CHECK(one.spiking.rows[r].kind == "spiking");
        CHECK(one.ideal.rows[r].kind == "tpam_fixed");
        CHECK(one.spiking.rows[r].m == cfg.m_values[r / 2]);
        CHECK(one.spiking.rows[r].trial == r % 2);
        CHECK(one.spiking.rows[r].bits_per_synapse >= 0.0);
        CHECK(one.ideal.rows[r].similarity == two.ideal.rows[r].similarity);
    }
    // an easy load on a small memory really retrieves
    CHECK(one.spiking.summary().front().mean_similarity > 0.9);
}
