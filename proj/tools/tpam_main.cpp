// Command line workbench. Each subcommand resolves its settings from an
// optional key=value file plus flag overrides (flags win), runs one
// experiment, and writes its tables next to a record of the fully resolved
// configuration. Every output file carries the hash of that configuration
// in a header comment so tables can be traced back to the run that made
// them; the same settings and seed reproduce the files bit for bit.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tpam/capacity.hpp"
#include "tpam/config.hpp"
#include "tpam/core.hpp"
#include "tpam/imageio.hpp"
#include "tpam/indexing.hpp"
#include "tpam/info.hpp"
#include "tpam/patterns.hpp"
#include "tpam/phasor.hpp"
#include "tpam/raster.hpp"
#include "tpam/sequence.hpp"
#include "tpam/spiking.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using namespace tpam;

// Operator mistakes: unknown keys, malformed values, missing inputs.
// main() reports these with exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string fmt_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

std::string fmt_list(const std::vector<double>& xs) {
    std::ostringstream os;
    for (std::size_t i = 0; i < xs.size(); ++i) os << (i ? "," : "") << fmt_double(xs[i]);
    return os.str();
}

std::string fmt_list(const std::vector<std::size_t>& xs) {
    std::ostringstream os;
    for (std::size_t i = 0; i < xs.size(); ++i) os << (i ? "," : "") << xs[i];
    return os.str();
}

// Hands out settings with defaults and records every key it resolves, so a
// run can reject stray keys and stamp its outputs with the full effective
// configuration.
class Settings {
  public:
    explicit Settings(Config raw) : raw_(std::move(raw)) {}

    std::string get_string(const std::string& key, const std::string& fallback) {
        const std::string v = raw_.get_string(key, fallback);
        resolved_.set(key, v);
        return v;
    }
    double get_double(const std::string& key, double fallback) {
        const double v = raw_.get_double(key, fallback);
        resolved_.set(key, fmt_double(v));
        return v;
    }
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) {
        const std::uint64_t v = raw_.get_u64(key, fallback);
        resolved_.set(key, std::to_string(v));
        return v;
    }
    std::size_t get_size(const std::string& key, std::size_t fallback) {
        return static_cast<std::size_t>(get_u64(key, fallback));
    }
    bool get_bool(const std::string& key, bool fallback) {
        const bool v = raw_.get_bool(key, fallback);
        resolved_.set(key, v ? "true" : "false");
        return v;
    }
    std::vector<std::size_t> get_size_list(const std::string& key,
                                           const std::vector<std::size_t>& fallback) {
        const auto v = raw_.get_size_list(key, fallback);
        resolved_.set(key, fmt_list(v));
        return v;
    }
    std::vector<double> get_double_list(const std::string& key,
                                        const std::vector<double>& fallback) {
        const auto v = raw_.get_double_list(key, fallback);
        resolved_.set(key, fmt_list(v));
        return v;
    }

    // Call once all keys are read: anything left over is a typo.
    void finish() const {
        std::vector<std::string> allowed;
        for (const auto& [key, value] : resolved_.items()) allowed.push_back(key);
        try {
            raw_.expect_keys(allowed);
        } catch (const std::exception& e) {
            throw UsageError(e.what());
        }
    }

    const Config& resolved() const { return resolved_; }

    // Output location and thread count do not change what gets computed, so
    // they stay out of the hash that stamps the result files.
    std::uint64_t hash() const {
        Config semantic;
        for (const auto& [key, value] : resolved_.items())
            if (key != "out" && key != "threads") semantic.set(key, value);
        return config_hash(semantic);
    }

    std::string hash_hex() const {
        std::ostringstream os;
        os << "0x" << std::hex << std::setw(16) << std::setfill('0') << hash();
        return os.str();
    }

    std::string stamp() const { return "config_hash=" + hash_hex(); }

  private:
    Config raw_;
    Config resolved_;
};

Config load_settings(const std::string& config_path,
                     const std::map<std::string, std::string>& overrides) {
    Config cfg;
    if (!config_path.empty()) {
        try {
            cfg = load_config_file(config_path);
        } catch (const std::exception& e) {
            throw UsageError(e.what());
        }
    }
    for (const auto& [key, value] : overrides) cfg.set(key, value);
    return cfg;
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
    f << text;
}

void write_resolved_config(const Settings& s, const fs::path& out, const std::string& name) {
    std::ostringstream os;
    os << "# " << s.stamp() << "\n" << serialize_config(s.resolved());
    write_text_file(out / name, os.str());
}

void write_json_file(const fs::path& path, const json& j) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
    f << j.dump(2) << "\n";
}

TransferKind parse_kind(const std::string& name, int bins) {
    if (name == "tpam") return TransferKind::tpam();
    if (name == "phasor_dense") return TransferKind::phasor_dense();
    if (name == "ternary") return TransferKind::ternary();
    if (name == "csign") {
        if (bins < 2) throw UsageError("bins: csign needs at least 2 phase bins");
        return TransferKind::csign(bins);
    }
    throw UsageError("kind: expected tpam, phasor_dense, csign, or ternary, got '" + name + "'");
}

Schedule parse_schedule(const std::string& name) {
    if (name == "parallel") return Schedule::parallel;
    if (name == "sequential_random") return Schedule::sequential_random;
    if (name == "sequential_fixed") return Schedule::sequential_fixed;
    throw UsageError(
        "schedule: expected parallel, sequential_random, or sequential_fixed, got '" + name +
        "'");
}

double parse_double_field(const std::string& text, const std::string& what) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        throw UsageError(what + ": not a number: '" + text + "'");
    }
    if (used != text.size()) throw UsageError(what + ": not a number: '" + text + "'");
    return v;
}

std::vector<std::string> split_fields(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

std::size_t support_count(const PhasorState& z) {
    std::size_t k = 0;
    for (const cplx& zi : z)
        if (std::abs(zi) > 0.0) ++k;
    return k;
}

// Cue grammar: clean | partial:<keep> | superposition:<count> |
// noise:<drop>,<swap>,<jitter>. The target pattern anchors every form.
PhasorState make_cue(const std::string& spec, const std::vector<PhasorState>& pats,
                     std::size_t target, Rng& rng) {
    const auto colon = spec.find(':');
    const std::string head = colon == std::string::npos ? spec : spec.substr(0, colon);
    const std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);

    if (head == "clean") return pats[target];
    if (head == "partial") {
        const double keep = rest.empty() ? 0.5 : parse_double_field(rest, "cue partial keep");
        if (!(keep > 0.0) || keep > 1.0)
            throw UsageError("cue: partial keep fraction must be in (0, 1]");
        return partial_cue(pats[target], keep, rng);
    }
    if (head == "superposition") {
        std::size_t count = 3;
        if (!rest.empty()) {
            const double v = parse_double_field(rest, "cue superposition count");
            count = static_cast<std::size_t>(v);
            if (v != static_cast<double>(count)) throw UsageError("cue: count must be an integer");
        }
        if (count == 0 || count > pats.size())
            throw UsageError("cue: superposition count must be in [1, m]");
        std::vector<std::size_t> which(count);
        for (std::size_t i = 0; i < count; ++i) which[i] = (target + i) % pats.size();
        return superposition_cue(pats, which);
    }
    if (head == "noise") {
        NoiseSpec ns;
        if (!rest.empty()) {
            const auto parts = split_fields(rest, ',');
            if (parts.size() != 3)
                throw UsageError("cue: noise wants three values drop,swap,jitter");
            ns.drop_fraction = parse_double_field(parts[0], "cue noise drop");
            ns.swap_fraction = parse_double_field(parts[1], "cue noise swap");
            ns.phase_jitter_sd = parse_double_field(parts[2], "cue noise jitter");
        }
        return perturb_cue(pats[target], ns, rng);
    }
    throw UsageError(
        "cue: expected clean, partial:<keep>, superposition:<count>, or "
        "noise:<drop>,<swap>,<jitter>, got '" +
        spec + "'");
}

json cells_to_json(const std::vector<CapacityCell>& cells) {
    json arr = json::array();
    for (const auto& c : cells) {
        arr.push_back({{"n", c.n},
                       {"p_hot", c.p_hot},
                       {"theta", c.theta},
                       {"kind", c.kind},
                       {"m", c.m},
                       {"trials", c.trials},
                       {"mean_similarity", c.mean_similarity},
                       {"sd_similarity", c.sd_similarity},
                       {"mean_bits_per_synapse", c.mean_bits_per_synapse},
                       {"sd_bits_per_synapse", c.sd_bits_per_synapse}});
    }
    return arr;
}

// ---------------------------------------------------------------------------
// recall: store an ensemble, retrieve one pattern, log the whole trajectory.

int cmd_recall(Settings& s, const fs::path& out) {
    const std::size_t n = s.get_size("n", 400);
    const std::size_t m = s.get_size("m", 100);
    const double p_hot = s.get_double("p_hot", 0.1);
    const double theta = s.get_double("theta", 0.9);
    const std::string policy_name = s.get_string("policy", "dynamic");
    const std::string kind_name = s.get_string("kind", "tpam");
    const int bins = static_cast<int>(s.get_u64("bins", 0));
    const std::string schedule_name = s.get_string("schedule", "parallel");
    const std::size_t max_iters = s.get_size("max_iters", 50);
    const double tol = s.get_double("tol", 1e-9);
    const std::string cue_spec = s.get_string("cue", "partial:0.5");
    const std::size_t target = s.get_size("target", 0);
    const std::uint64_t seed = s.get_u64("seed", 1);
    s.finish();

    if (n == 0 || m == 0) throw UsageError("n/m: need at least one neuron and one pattern");
    if (target >= m) throw UsageError("target: pattern index out of range");

    const TransferKind kind = parse_kind(kind_name, bins);
    const Schedule schedule = parse_schedule(schedule_name);
    int pattern_bins = bins;
    if (kind.kind == TransferKind::Kind::csign) pattern_bins = kind.bins;
    if (kind.kind == TransferKind::Kind::ternary) pattern_bins = 2;

    ThresholdPolicy policy = ThresholdPolicy::dynamic(theta);
    if (policy_name == "constant") {
        policy = ThresholdPolicy::constant(theta);  // theta read as the absolute level
    } else if (policy_name != "dynamic") {
        throw UsageError("policy: expected dynamic or constant, got '" + policy_name + "'");
    }

    Rng prng(seed, "cli/recall/patterns", 0);
    const auto pats = gen_patterns({n, m, p_hot, pattern_bins}, prng);
    const HermitianWeights w = learn_conjugate_outer(pats, n);

    Rng crng(seed, "cli/recall/cue", 0);
    const PhasorState cue = make_cue(cue_spec, pats, target, crng);

    RecallOptions opts;
    opts.max_iters = max_iters;
    opts.tol = tol;
    Rng srng(seed, "cli/recall/schedule", 0);
    const RecallTrace trace = recall(w, cue, policy, kind, schedule, opts, &srng);

    // One row per recorded state: energy, active support, and the overlap
    // with every stored pattern. max_iters=0 leaves just the cue row.
    std::ostringstream csv;
    csv << "# " << s.stamp() << "\n";
    csv << "iteration,energy,support";
    for (std::size_t mu = 0; mu < m; ++mu) csv << ",overlap_" << mu;
    csv << "\n" << std::setprecision(17);
    for (std::size_t it = 0; it < trace.states.size(); ++it) {
        const PhasorState& z = trace.states[it];
        csv << it << ',' << trace.energies[it] << ',' << support_count(z);
        for (std::size_t mu = 0; mu < m; ++mu) csv << ',' << similarity(z, pats[mu]);
        csv << "\n";
    }
    write_text_file(out / "recall_trace.csv", csv.str());

    std::size_t winner = 0;
    double best = -1.0, second = -1.0;
    for (std::size_t mu = 0; mu < m; ++mu) {
        const double ov = similarity(trace.final_state, pats[mu]);
        if (ov > best) {
            second = best;
            best = ov;
            winner = mu;
        } else if (ov > second) {
            second = ov;
        }
    }

    json summary{{"config_hash", s.hash_hex()},
                 {"n", n},
                 {"m", m},
                 {"kind", kind_label(kind)},
                 {"policy", policy_name},
                 {"cue", cue_spec},
                 {"target", target},
                 {"converged", trace.converged},
                 {"limit_cycle", trace.limit_cycle},
                 {"iterations", trace.iterations},
                 {"support", support_count(trace.final_state)},
                 {"winner", winner},
                 {"winner_overlap", best},
                 {"runner_up_overlap", std::max(second, 0.0)}};
    write_json_file(out / "recall_summary.json", summary);
    write_resolved_config(s, out, "recall_config.txt");

    std::cout << "recall: winner pattern " << winner << " overlap " << std::setprecision(6)
              << best << " after " << trace.iterations << " iterations ("
              << (trace.converged ? "converged" : trace.limit_cycle ? "limit cycle" : "budget")
              << "); outputs in " << out.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// capacity: retrieval quality and information per synapse over a grid.

int cmd_capacity(Settings& s, const fs::path& out) {
    CapacityGrid g;
    g.n = s.get_size("n", 200);

    std::vector<std::size_t> def_m;
    for (double f : {0.025, 0.05, 0.1, 0.2, 0.4, 0.8, 1.6, 3.0}) {
        const auto m = static_cast<std::size_t>(std::llround(f * static_cast<double>(g.n)));
        if (m >= 1 && (def_m.empty() || m != def_m.back())) def_m.push_back(m);
    }

    g.p_hots = s.get_double_list("p_hots", {0.02, 0.05, 0.1, 0.25, 0.5, 1.0});
    g.m_values = s.get_size_list("m_values", def_m);
    g.theta = s.get_double("theta", 0.9);
    const std::string kind_name = s.get_string("kind", "tpam");
    const int bins = static_cast<int>(s.get_u64("bins", 0));
    g.kind = parse_kind(kind_name, bins);
    g.phase_bins = bins;
    g.trials = s.get_size("trials", 25);
    g.noise.drop_fraction = s.get_double("drop", 0.05);
    g.noise.swap_fraction = s.get_double("swap", 0.05);
    g.noise.phase_jitter_sd = s.get_double("jitter", 0.1);
    g.schedule = parse_schedule(s.get_string("schedule", "parallel"));
    g.max_iters = s.get_size("max_iters", 500);
    g.seed = s.get_u64("seed", 1);
    s.finish();

    const CapacityReport report = run_capacity_sweep(g);

    std::ostringstream csv;
    write_capacity_csv(csv, report, s.stamp());
    write_text_file(out / "capacity.csv", csv.str());

    const auto cells = report.summary();
    double best_bits = 0.0;
    for (const auto& c : cells) best_bits = std::max(best_bits, c.mean_bits_per_synapse);
    json j{{"config_hash", s.hash_hex()}, {"cells", cells_to_json(cells)}};
    write_json_file(out / "capacity.json", j);
    write_resolved_config(s, out, "capacity_config.txt");

    std::cout << "capacity: " << report.rows.size() << " trials over " << cells.size()
              << " cells, best mean bits/synapse " << std::setprecision(6) << best_bits
              << "; outputs in " << out.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// spiking: compile stored patterns into a delay network, then sweep load
// and/or capture one traced run.

int cmd_spiking(Settings& s, const fs::path& out) {
    SpikingCapacityConfig c;
    c.t_cycle = s.get_double("T", 0.2);
    c.n = s.get_size("N", 500);
    c.k_active = s.get_size("K", 25);
    c.m_values = s.get_size_list("m_values", {50, 100, 200, 250, 300, 400});
    c.theta = s.get_double("theta", 0.5);
    c.dt = s.get_double("dt", 0.0);
    c.settle_cycles = s.get_size("settle_cycles", 20);
    c.decode_cycles = s.get_size("decode_cycles", 5);
    c.trials = s.get_size("trials", 3);
    c.seed = s.get_u64("seed", 1);
    c.threads = s.get_size("threads", 1);
    c.with_ideal = s.get_bool("with_ideal", true);
    const auto gains_list = s.get_double_list("gains", {10.0, 1.0, 1.0, 0.0, 0.0, 0.0});
    const std::size_t n_inh = s.get_size("N_inh", 0);  // 0 keeps the compiled census
    const bool want_trace = s.get_bool("trace", false);
    const bool want_sweep = s.get_bool("sweep", true);
    s.finish();

    if (gains_list.size() != 6)
        throw UsageError(
            "gains: expected 6 values "
            "drive,v_osc,threshold_scale,k_ref,routing_delay,delay_compensation");
    c.gains = CompileGains{gains_list[0], gains_list[1], gains_list[2],
                           gains_list[3], gains_list[4], gains_list[5]};
    if (!want_sweep && !want_trace)
        throw UsageError("spiking: nothing to do (sweep disabled and trace not requested)");

    json summary{{"config_hash", s.hash_hex()}};

    if (want_sweep) {
        const SpikingCapacityReport report = run_spiking_capacity(c);
        std::ostringstream csv;
        write_capacity_csv(csv, report.spiking, s.stamp());
        write_text_file(out / "spiking_capacity.csv", csv.str());
        summary["spiking_cells"] = cells_to_json(report.spiking.summary());
        if (c.with_ideal) {
            std::ostringstream icsv;
            write_capacity_csv(icsv, report.ideal, s.stamp());
            write_text_file(out / "ideal_capacity.csv", icsv.str());
            summary["ideal_cells"] = cells_to_json(report.ideal.summary());
        }
    }

    if (want_trace) {
        // Re-runs sweep trial 0 of the lightest load with full recording.
        const std::size_t m0 = c.m_values.front();
        const double p_hot = static_cast<double>(c.k_active) / static_cast<double>(c.n);
        const std::string stream = "spikecap/n=" + std::to_string(c.n) +
                                   "/k=" + std::to_string(c.k_active) +
                                   "/m=" + std::to_string(m0);
        Rng rng(c.seed, stream, 0);
        const auto pats = gen_patterns({c.n, m0, p_hot, 0}, rng);
        const HermitianWeights w = learn_conjugate_outer(pats, c.n);

        CompileGains gains = c.gains;
        if (gains.k_ref <= 0.0) gains.k_ref = static_cast<double>(c.k_active);
        SpikingNetwork net = compile(w, c.t_cycle, c.theta, gains);
        if (n_inh > 0 && n_inh != net.n_inh) {
            // Same summed inhibition, spread over the requested census.
            net.i_to_e.magnitude *=
                static_cast<double>(net.n_inh) / static_cast<double>(n_inh);
            net.n_inh = n_inh;
        }

        const SpikeRaster cue = phase_to_spikes(pats[0], c.t_cycle, 0.05 * c.t_cycle, 1);
        SimOptions opts;
        opts.dt = c.dt;
        for (std::size_t i = 0; i < c.n && opts.trace.neurons.size() < 8; ++i)
            if (std::abs(pats[0][i]) > 0.0)
                opts.trace.neurons.push_back(static_cast<std::uint32_t>(i));

        const double duration =
            static_cast<double>(c.settle_cycles + c.decode_cycles) * c.t_cycle;
        const double window = static_cast<double>(c.decode_cycles) * c.t_cycle;
        const SimResult sim = simulate(net, cue, duration, opts);

        std::ostringstream tcsv;
        write_trace_csv(tcsv, sim.trace, s.stamp());
        write_text_file(out / "trace.csv", tcsv.str());
        write_raster_csv_file((out / "raster.csv").string(), sim.raster, s.stamp());
        write_raster_binary_file((out / "raster.bin").string(), sim.raster);

        const PhasorState decoded =
            spikes_to_phasor(sim.raster, c.n, duration - window, window);
        const RecallStats st = score_recall(decoded, pats[0]);
        summary["trace"] = {{"m", m0},
                            {"n_inh", net.n_inh},
                            {"spikes", sim.raster.events.size()},
                            {"similarity", st.similarity},
                            {"alpha", st.alpha},
                            {"beta", st.beta},
                            {"kappa", st.kappa},
                            {"period", fit_period(sim.raster, duration - window, window,
                                                  c.t_cycle)}};
        std::cout << "spiking trace: similarity " << std::setprecision(6) << st.similarity
                  << " at m=" << m0 << ", " << sim.raster.events.size() << " spikes\n";
    }

    write_json_file(out / "spiking_summary.json", summary);
    write_resolved_config(s, out, "spiking_config.txt");
    std::cout << "spiking: outputs in " << out.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// index: content-addressed patch memory, three readout models against two
// index constructions over a noise grid.

int cmd_index(Settings& s, const fs::path& out) {
    const std::size_t width = s.get_size("width", 96);
    const std::size_t height = s.get_size("height", 96);
    const std::size_t pw = s.get_size("pw", 12);
    const std::size_t ph = s.get_size("ph", 12);
    const std::size_t m = s.get_size("m", 20);
    const std::size_t n_index = s.get_size("n_index", 256);
    const double p_codebook = s.get_double("p_codebook", 0.1);
    const bool gram_schmidt = s.get_bool("gram_schmidt", false);
    const std::vector<double> noise = s.get_double_list("noise", {0.0, 0.1, 0.3, 0.5});
    const double theta = s.get_double("theta", 0.9);
    const std::size_t max_iters = s.get_size("max_iters", 50);
    const std::string image_path = s.get_string("image", "");
    const std::uint64_t seed = s.get_u64("seed", 1);
    s.finish();

    if (noise.empty()) throw UsageError("noise: need at least one level");
    if (m == 0) throw UsageError("m: need at least one patch");

    Image img;
    if (image_path.empty()) {
        Rng trng(seed, "cli/index/texture", 0);
        img = synth_texture(width, height, trng);
    } else {
        try {
            img = read_ppm_file(image_path);
        } catch (const std::exception& e) {
            throw UsageError(std::string("image: ") + e.what());
        }
    }
    write_ppm_file((out / "index_source.ppm").string(), img);

    Rng prng(seed, "cli/index/patches", 0);
    const RMatrix data = extract_patches(img, pw, ph, m, prng);

    // The error-correcting model stores sparse phasor codes; the baseline
    // readouts address with sparse binary supports.
    Rng cbrng_p(seed, "cli/index/codebook/phasor", 0);
    const CMatrix cb_phasor = make_codebook(n_index, m, p_codebook, false, cbrng_p);
    Rng cbrng_b(seed, "cli/index/codebook/binary", 0);
    const CMatrix cb_binary = make_codebook(n_index, m, p_codebook, true, cbrng_b);

    // Same cues for every model so rows are comparable across pipelines.
    std::vector<std::vector<std::vector<double>>> cues(noise.size());
    for (std::size_t ni = 0; ni < noise.size(); ++ni) {
        Rng crng(seed, "cli/index/cue/" + std::to_string(ni), 0);
        cues[ni].reserve(m);
        for (std::size_t mu = 0; mu < m; ++mu)
            cues[ni].push_back(noisy_cue(data, mu, noise[ni], crng));
    }

    // Reconstructions get rendered at the grid level nearest 0.3.
    std::size_t show = 0;
    for (std::size_t ni = 1; ni < noise.size(); ++ni)
        if (std::abs(noise[ni] - 0.3) < std::abs(noise[show] - 0.3)) show = ni;

    for (std::size_t mu = 0; mu < std::min<std::size_t>(m, 4); ++mu) {
        std::vector<double> col(data.rows);
        for (std::size_t d = 0; d < data.rows; ++d) col[d] = data.at(d, mu);
        write_ppm_file((out / ("index_original_" + std::to_string(mu) + ".ppm")).string(),
                       patch_to_image(col, pw, ph));
    }

    std::vector<RetrievalRow> rows;
    json means = json::array();
    for (PipelineModel model :
         {PipelineModel::hebbian, PipelineModel::sdm, PipelineModel::tpam}) {
        for (IndexMode mode : {IndexMode::pseudo_inverse, IndexMode::hebbian_random}) {
            PipelineConfig pc;
            pc.model = model;
            pc.mode = mode;
            pc.theta = theta;
            pc.max_iters = max_iters;
            pc.gram_schmidt = gram_schmidt;
            const CMatrix& codebook =
                model == PipelineModel::tpam ? cb_phasor : cb_binary;
            const IndexPipeline pipe(data, codebook, pc);
            const std::string label = model_label(model, mode);

            for (std::size_t ni = 0; ni < noise.size(); ++ni) {
                double sum_rho = 0.0, sum_bits = 0.0;
                for (std::size_t mu = 0; mu < m; ++mu) {
                    const PipelineResult res = pipe.retrieve(cues[ni][mu], mu);
                    rows.push_back({mu, noise[ni], label, res.rho, res.bits_per_pixel});
                    sum_rho += res.rho;
                    sum_bits += res.bits_per_pixel;
                    if (ni == show && mu < 4)
                        write_ppm_file((out / ("index_" + label + "_" + std::to_string(mu) +
                                               ".ppm"))
                                           .string(),
                                       patch_to_image(res.estimate, pw, ph));
                }
                means.push_back({{"model", label},
                                 {"noise", noise[ni]},
                                 {"mean_rho", sum_rho / static_cast<double>(m)},
                                 {"mean_bits_per_pixel", sum_bits / static_cast<double>(m)}});
            }
        }
    }

    std::ostringstream csv;
    write_retrieval_csv(csv, rows, s.stamp());
    write_text_file(out / "retrieval.csv", csv.str());
    json j{{"config_hash", s.hash_hex()}, {"means", means}};
    write_json_file(out / "index_summary.json", j);
    write_resolved_config(s, out, "index_config.txt");

    std::cout << "index: " << rows.size() << " retrievals over " << noise.size()
              << " noise levels; outputs in " << out.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// sequence: verification report for the cycle-to-phasor bridge.

int cmd_sequence(Settings& s, const fs::path& out) {
    const std::size_t n = s.get_size("n", 12);
    const std::size_t n_random = s.get_size("random_n", 8);
    const std::uint64_t seed = s.get_u64("seed", 1);
    s.finish();

    if (n < 3) throw UsageError("n: phase progressions need at least 3 components");
    if (n_random < 2) throw UsageError("random_n: need at least a 2x2 antisymmetric matrix");

    json report{{"config_hash", s.hash_hex()}};

    // Worked small case: the descending cardinal 3-cycle. Its pair matrix
    // and eigenvalue are known in closed form.
    {
        PhasorState v3(3);
        for (std::size_t a = 0; a < 3; ++a)
            v3[a] = std::polar(1.0, kTau * static_cast<double>(a + 1) / 3.0);
        const ContrastReport c3 = conjugate_vs_sequence_contrast(v3);

        const double expected[3][3] = {{0.0, 1.0, -1.0}, {-1.0, 0.0, 1.0}, {1.0, -1.0, 0.0}};
        RealSequence cycle;
        for (std::size_t step = 0; step < 3; ++step) {
            std::vector<double> e(3, 0.0);
            e[(3 - step) % 3] = 1.0;
            cycle.push_back(std::move(e));
        }
        const SkewWeights j3 = learn_sequences({cycle}, 3);
        double j_err = 0.0;
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t k = 0; k < 3; ++k)
                j_err = std::max(j_err, std::abs(j3.j.at(i, k) - expected[i][k]));

        const double lambda_err = std::abs(c3.sequence.lambda - cplx(0.0, std::sqrt(3.0)));
        report["worked_three_cycle"] = {
            {"pair_matrix_error", j_err},
            {"lambda_error", lambda_err},
            {"sigma", c3.sequence.sigma},
            {"eigenvector_residual", c3.residual_sequence},
            {"ok", j_err < 1e-10 && lambda_err < 1e-10 && c3.residual_sequence < 1e-10}};
    }

    // Same progression at the requested size: conjugate outer product and
    // cardinal-cycle weights hold the same eigenvector.
    {
        PhasorState v(n);
        for (std::size_t a = 0; a < n; ++a)
            v[a] = std::polar(1.0, kTau * static_cast<double>(a + 1) / static_cast<double>(n));
        const ContrastReport c = conjugate_vs_sequence_contrast(v);
        report["contrast"] = {
            {"n", n},
            {"residual_conjugate", c.residual_conjugate},
            {"residual_sequence", c.residual_sequence},
            {"max_entry_difference", c.max_entry_difference},
            {"max_sequence_real_part", c.max_sequence_real_part},
            {"sigma", c.sequence.sigma},
            {"ok", c.residual_conjugate < 1e-9 && c.residual_sequence < 1e-9 &&
                       c.max_sequence_real_part < 1e-12}};
    }

    // Random antisymmetric couplings: the extracted pair must satisfy the
    // eigen equation with a purely imaginary eigenvalue.
    {
        Rng rng(seed, "cli/sequence/skew", 0);
        RMatrix jr(n_random, n_random);
        for (std::size_t i = 0; i < n_random; ++i)
            for (std::size_t k = i + 1; k < n_random; ++k) {
                const double x = rng.normal();
                jr.at(i, k) = x;
                jr.at(k, i) = -x;
            }
        const SkewWeights skew = SkewWeights::from_matrix(jr);
        const PhasorConversion conv = to_phasor_network(skew);

        double eig_residual = 0.0;
        for (std::size_t i = 0; i < n_random; ++i) {
            cplx acc(0.0, 0.0);
            for (std::size_t k = 0; k < n_random; ++k)
                acc += jr.at(i, k) * conv.v[k];
            eig_residual = std::max(eig_residual, std::abs(acc - conv.lambda * conv.v[i]));
        }
        report["random_skew"] = {{"n", n_random},
                                 {"sigma", conv.sigma},
                                 {"real_part", conv.lambda.real()},
                                 {"eigen_residual", eig_residual},
                                 {"spectrum", conv.spectrum},
                                 {"ok", std::abs(conv.lambda.real()) < 1e-9 &&
                                            eig_residual < 1e-9}};
    }

    write_json_file(out / "sequence_report.json", report);
    write_resolved_config(s, out, "sequence_config.txt");

    const bool all_ok = report["worked_three_cycle"]["ok"].get<bool>() &&
                        report["contrast"]["ok"].get<bool>() &&
                        report["random_skew"]["ok"].get<bool>();
    std::cout << "sequence: worked_three_cycle "
              << (report["worked_three_cycle"]["ok"].get<bool>() ? "ok" : "FAIL")
              << ", contrast " << (report["contrast"]["ok"].get<bool>() ? "ok" : "FAIL")
              << ", random_skew " << (report["random_skew"]["ok"].get<bool>() ? "ok" : "FAIL")
              << "; report in " << out.string() << "\n";
    return all_ok ? 0 : 1;
}

// ---------------------------------------------------------------------------
// plot-data: collapse a per-trial capacity table into per-cell mean and sd.

int cmd_plot_data(Settings& s, const fs::path& out) {
    const std::string in = s.get_string("in", "");
    s.finish();
    if (in.empty()) throw UsageError("in: path to a capacity table is required");

    std::ifstream f(in);
    if (!f) throw UsageError("in: cannot open '" + in + "'");

    static const std::string kHeader =
        "N,p_hot,theta,kind,M,trial,similarity,alpha,beta,kappa,bits_per_synapse";
    CapacityReport report;
    std::string line;
    bool saw_header = false;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty() || line.front() == '#') continue;
        if (!saw_header) {
            if (line != kHeader)
                throw UsageError("in: line " + std::to_string(lineno) +
                                 ": not a capacity table (unexpected header)");
            saw_header = true;
            continue;
        }
        const auto fields = split_fields(line, ',');
        if (fields.size() != 11)
            throw UsageError("in: line " + std::to_string(lineno) + ": expected 11 columns");
        const std::string where = "in: line " + std::to_string(lineno);
        CapacityRow r;
        r.n = static_cast<std::size_t>(parse_double_field(fields[0], where));
        r.p_hot = parse_double_field(fields[1], where);
        r.theta = parse_double_field(fields[2], where);
        r.kind = fields[3];
        r.m = static_cast<std::size_t>(parse_double_field(fields[4], where));
        r.trial = static_cast<std::size_t>(parse_double_field(fields[5], where));
        r.similarity = parse_double_field(fields[6], where);
        r.alpha = parse_double_field(fields[7], where);
        r.beta = parse_double_field(fields[8], where);
        r.kappa = parse_double_field(fields[9], where);
        r.bits_per_synapse = parse_double_field(fields[10], where);
        report.rows.push_back(std::move(r));
    }
    if (!saw_header || report.rows.empty())
        throw UsageError("in: '" + in + "' holds no capacity rows");

    const auto cells = report.summary();
    std::ostringstream csv;
    csv << "# " << s.stamp() << "\n";
    csv << "N,p_hot,theta,kind,M,trials,mean_similarity,sd_similarity,"
           "mean_bits_per_synapse,sd_bits_per_synapse\n"
        << std::setprecision(17);
    for (const auto& c : cells)
        csv << c.n << ',' << c.p_hot << ',' << c.theta << ',' << c.kind << ',' << c.m << ','
            << c.trials << ',' << c.mean_similarity << ',' << c.sd_similarity << ','
            << c.mean_bits_per_synapse << ',' << c.sd_bits_per_synapse << "\n";
    write_text_file(out / "plot_data.csv", csv.str());
    write_resolved_config(s, out, "plot_data_config.txt");

    std::cout << "plot-data: " << report.rows.size() << " rows into " << cells.size()
              << " cells; outputs in " << out.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Threshold phasor associative memory workbench"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::map<std::string, std::string> ov;

    // Value flags funnel into one override map; the config file is loaded
    // first and flags replace whatever it set.
    const auto add_kv = [&ov](CLI::App* sub, const std::string& flag, const std::string& key,
                              const std::string& desc) {
        sub->add_option_function<std::string>(
            flag, [&ov, key](const std::string& v) { ov[key] = v; }, desc);
    };
    const auto add_switch = [&ov](CLI::App* sub, const std::string& flag,
                                  const std::string& key, const std::string& value,
                                  const std::string& desc) {
        sub->add_flag_function(
            flag, [&ov, key, value](std::int64_t) { ov[key] = value; }, desc);
    };
    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "key=value settings file");
        sub->add_option("--out", out_dir, "output directory (default: out)");
        add_kv(sub, "--seed", "seed", "base random seed");
        add_kv(sub, "--threads", "threads", "worker threads where supported");
    };

    CLI::App* rec = app.add_subcommand(
        "recall", "store an ensemble, retrieve one pattern, log the trajectory");
    add_common(rec);
    add_kv(rec, "--n", "n", "neurons");
    add_kv(rec, "--m", "m", "stored patterns");
    add_kv(rec, "--p-hot", "p_hot", "active fraction per pattern");
    add_kv(rec, "--theta", "theta", "threshold level");
    add_kv(rec, "--policy", "policy", "dynamic | constant");
    add_kv(rec, "--kind", "kind", "tpam | phasor_dense | csign | ternary");
    add_kv(rec, "--bins", "bins", "phase bins (csign levels / pattern binning)");
    add_kv(rec, "--schedule", "schedule",
           "parallel | sequential_random | sequential_fixed");
    add_kv(rec, "--max-iters", "max_iters", "update budget (0 logs the cue only)");
    add_kv(rec, "--tol", "tol", "fixed point tolerance");
    add_kv(rec, "--cue", "cue",
           "clean | partial:<keep> | superposition:<count> | noise:<drop>,<swap>,<jitter>");
    add_kv(rec, "--target", "target", "pattern the cue derives from");

    CLI::App* cap = app.add_subcommand(
        "capacity", "retrieval quality and bits per synapse over a load grid");
    add_common(cap);
    add_kv(cap, "--n", "n", "neurons");
    add_kv(cap, "--p-hots", "p_hots", "comma list of active fractions");
    add_kv(cap, "--m-values", "m_values", "comma list of pattern counts");
    add_kv(cap, "--theta", "theta", "threshold factor");
    add_kv(cap, "--kind", "kind", "tpam | phasor_dense | csign | ternary");
    add_kv(cap, "--bins", "bins", "phase bins (csign levels / pattern binning)");
    add_kv(cap, "--trials", "trials", "trials per cell");
    add_kv(cap, "--drop", "drop", "cue deletion fraction");
    add_kv(cap, "--swap", "swap", "cue swap fraction");
    add_kv(cap, "--jitter", "jitter", "cue phase jitter sd");
    add_kv(cap, "--schedule", "schedule",
           "parallel | sequential_random | sequential_fixed");
    add_kv(cap, "--max-iters", "max_iters", "update budget per recall");

    CLI::App* spk = app.add_subcommand(
        "spiking", "compile stored patterns into a delay network and measure recall");
    add_common(spk);
    add_kv(spk, "--T", "T", "oscillation cycle in seconds");
    add_kv(spk, "--N", "N", "excitatory cells");
    add_kv(spk, "--K", "K", "active cells per pattern");
    add_kv(spk, "--N-inh", "N_inh", "interneuron census for the traced run");
    add_kv(spk, "--m-values", "m_values", "comma list of pattern counts");
    add_kv(spk, "--theta", "theta", "activity-proportional threshold factor");
    add_kv(spk, "--dt", "dt", "integration step (0 picks T/1000)");
    add_kv(spk, "--settle-cycles", "settle_cycles", "cycles before the decode window");
    add_kv(spk, "--decode-cycles", "decode_cycles", "cycles in the decode window");
    add_kv(spk, "--trials", "trials", "trials per pattern count");
    add_kv(spk, "--gains", "gains",
           "drive,v_osc,threshold_scale,k_ref,routing_delay,delay_compensation");
    add_kv(spk, "--with-ideal", "with_ideal", "also run the fixed-threshold reference");
    add_switch(spk, "--trace", "trace", "true", "capture one fully recorded run");
    add_switch(spk, "--no-sweep", "sweep", "false", "skip the load sweep");

    CLI::App* idx = app.add_subcommand(
        "index", "patch memory: index, clean up, and read out under cue noise");
    add_common(idx);
    add_kv(idx, "--width", "width", "texture width");
    add_kv(idx, "--height", "height", "texture height");
    add_kv(idx, "--pw", "pw", "patch width");
    add_kv(idx, "--ph", "ph", "patch height");
    add_kv(idx, "--m", "m", "stored patches");
    add_kv(idx, "--n-index", "n_index", "index units");
    add_kv(idx, "--p-codebook", "p_codebook", "active fraction per index code");
    add_switch(idx, "--gram-schmidt", "gram_schmidt", "true", "orthonormalize the codebooks");
    add_kv(idx, "--noise", "noise", "comma list of cue noise sd levels");
    add_kv(idx, "--theta", "theta", "clean-up threshold factor");
    add_kv(idx, "--max-iters", "max_iters", "clean-up update budget");
    add_kv(idx, "--image", "image", "source picture (ppm); omitted draws a texture");

    CLI::App* seq = app.add_subcommand(
        "sequence", "verify the antisymmetric-couplings to phasor-network bridge");
    add_common(seq);
    add_kv(seq, "--n", "n", "progression length for the contrast check");
    add_kv(seq, "--random-n", "random_n", "size of the random antisymmetric matrix");

    CLI::App* pd = app.add_subcommand(
        "plot-data", "aggregate a per-trial capacity table into per-cell mean and sd");
    add_common(pd);
    add_kv(pd, "--in", "in", "capacity csv to aggregate");

    CLI11_PARSE(app, argc, argv);

    try {
        Settings s(load_settings(config_path, ov));
        const fs::path out(out_dir);
        std::error_code ec;
        fs::create_directories(out, ec);
        if (ec) throw std::runtime_error("cannot create output directory '" + out_dir + "'");

        if (rec->parsed()) return cmd_recall(s, out);
        if (cap->parsed()) return cmd_capacity(s, out);
        if (spk->parsed()) return cmd_spiking(s, out);
        if (idx->parsed()) return cmd_index(s, out);
        if (seq->parsed()) return cmd_sequence(s, out);
        if (pd->parsed()) return cmd_plot_data(s, out);
        throw std::logic_error("no subcommand dispatched");
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
