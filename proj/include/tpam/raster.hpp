#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tpam/core.hpp"

namespace tpam {

// Timing code between phasor states and spike trains: a component with phase
// phi fires once per cycle of period T, offset by (phi/2pi)*T inside the
// cycle. Decoding fits a common period to the observed inter-spike intervals
// and takes per-neuron circular means, so a uniform clock drift costs only a
// global phase.

struct SpikeEvent {
    std::uint32_t neuron = 0;
    double time = 0.0;  // seconds
};

inline bool raster_order(const SpikeEvent& a, const SpikeEvent& b) {
    if (a.time != b.time) return a.time < b.time;
    return a.neuron < b.neuron;
}

struct SpikeRaster {
    std::vector<SpikeEvent> events;  // kept sorted by time, then neuron id
    double duration = 0.0;           // recording length; event times stay inside
    double cycle = 0.0;              // nominal oscillation period T

    void sort_events() { std::sort(events.begin(), events.end(), raster_order); }
};

inline SpikeRaster phase_to_spikes(const PhasorState& z, double t_cycle,
                                   double offset = 0.0, std::size_t n_cycles = 1) {
    if (!(t_cycle > 0.0))
        throw std::invalid_argument("phase_to_spikes: cycle period must be positive");
    if (offset < 0.0)
        throw std::invalid_argument("phase_to_spikes: offset must be nonnegative");
    SpikeRaster r;
    r.cycle = t_cycle;
    r.duration = offset + static_cast<double>(n_cycles) * t_cycle;
    for (std::size_t i = 0; i < z.size(); ++i) {
        if (std::abs(z[i]) == 0.0) continue;
        const double base =
            offset + wrap_angle_2pi(std::arg(z[i])) / kTau * t_cycle;
        for (std::size_t k = 0; k < n_cycles; ++k)
            r.events.push_back({static_cast<std::uint32_t>(i),
                                base + static_cast<double>(k) * t_cycle});
    }
    r.sort_events();
    return r;
}

namespace detail {

// Events inside [start, start + len], grouped per neuron in time order.
inline std::vector<std::pair<std::uint32_t, std::vector<double>>> window_trains(
    const SpikeRaster& raster, double start, double len) {
    std::vector<SpikeEvent> in;
    for (const SpikeEvent& e : raster.events)
        if (e.time >= start && e.time <= start + len) in.push_back(e);
    std::sort(in.begin(), in.end(), [](const SpikeEvent& a, const SpikeEvent& b) {
        if (a.neuron != b.neuron) return a.neuron < b.neuron;
        return a.time < b.time;
    });
    std::vector<std::pair<std::uint32_t, std::vector<double>>> trains;
    for (const SpikeEvent& e : in) {
        if (trains.empty() || trains.back().first != e.neuron)
            trains.push_back({e.neuron, {}});
        trains.back().second.push_back(e.time);
    }
    return trains;
}

}  // namespace detail

// Least-squares common period from pooled inter-spike intervals inside the
// window. Each interval is modeled as a whole number of cycles; the cycle
// counts are seeded from init and refined once against the first fit. Falls
// back to init when no neuron spikes twice.
inline double fit_period(const SpikeRaster& raster, double window_start,
                         double window_len, double init) {
    if (!(init > 0.0))
        throw std::invalid_argument("fit_period: initial period must be positive");
    std::vector<double> intervals;
    for (const auto& train : detail::window_trains(raster, window_start, window_len))
        for (std::size_t k = 1; k < train.second.size(); ++k)
            intervals.push_back(train.second[k] - train.second[k - 1]);

    double period = init;
    for (int pass = 0; pass < 2; ++pass) {
        double num = 0.0, den = 0.0;
        for (double d : intervals) {
            const double m = std::round(d / period);
            if (m < 1.0) continue;
            num += d * m;
            den += m * m;
        }
        if (den == 0.0) return init;
        period = num / den;
        if (!(period > 0.0)) return init;
    }
    return period;
}

// Decodes the window into a phasor state of n_neurons components: spiking
// neurons become unit phasors at their circular-mean phase, silent neurons
// stay zero. The phase reference is window_start, so decoding a different
// window rotates the whole state together. Pass freq_estimate > 0 to skip
// the period fit.
inline PhasorState spikes_to_phasor(const SpikeRaster& raster, std::size_t n_neurons,
                                    double window_start, double window_len,
                                    double freq_estimate = 0.0) {
    if (window_len < 0.0 || window_start < 0.0 ||
        window_start + window_len > raster.duration * (1.0 + 1e-12) + 1e-12)
        throw std::invalid_argument(
            "spikes_to_phasor: window must sit inside the recording");

    PhasorState z(n_neurons, cplx(0.0, 0.0));
    const auto trains = detail::window_trains(raster, window_start, window_len);
    if (trains.empty()) return z;

    double period;
    if (freq_estimate > 0.0) {
        period = 1.0 / freq_estimate;
    } else {
        if (!(raster.cycle > 0.0))
            throw std::invalid_argument(
                "spikes_to_phasor: need a cycle period or a frequency estimate");
        period = fit_period(raster, window_start, window_len, raster.cycle);
    }

    for (const auto& train : trains) {
        if (train.first >= n_neurons)
            throw std::invalid_argument("spikes_to_phasor: neuron id outside the state");
        cplx acc(0.0, 0.0);
        for (double t : train.second) {
            const double cycles = (t - window_start) / period;
            const double alpha = kTau * (cycles - std::floor(cycles));
            acc += cplx(std::cos(alpha), std::sin(alpha));
        }
        const double mag = std::abs(acc);
        if (mag > 1e-12) {
            z[train.first] = acc / mag;
        } else {
            // antipodal cancellation: fall back to the first spike's phase
            const double cycles = (train.second.front() - window_start) / period;
            const double alpha = kTau * (cycles - std::floor(cycles));
            z[train.first] = cplx(std::cos(alpha), std::sin(alpha));
        }
    }
    return z;
}

// Smallest same-neuron inter-spike interval; +inf when no neuron fires twice.
inline double min_interspike_interval(const SpikeRaster& raster) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& train :
         detail::window_trains(raster, 0.0, raster.duration))
        for (std::size_t k = 1; k < train.second.size(); ++k)
            best = std::min(best, train.second[k] - train.second[k - 1]);
    return best;
}

// --- serialization -----------------------------------------------------
// Text form: optional leading comments, a metadata comment with the recording
// length and cycle period, then `neuron_id,time_s` rows sorted by time.
// Binary form: magic + versions of the same fields, events as (u32, f64).

inline void write_raster_csv(std::ostream& os, const SpikeRaster& raster,
                             const std::string& comment = "") {
    if (!comment.empty()) os << "# " << comment << "\n";
    os << std::setprecision(17);
    os << "# duration_s=" << raster.duration << " cycle_s=" << raster.cycle << "\n";
    os << "neuron_id,time_s\n";
    std::vector<SpikeEvent> sorted = raster.events;
    std::sort(sorted.begin(), sorted.end(), raster_order);
    for (const SpikeEvent& e : sorted) os << e.neuron << ',' << e.time << '\n';
}

inline SpikeRaster read_raster_csv(std::istream& is) {
    SpikeRaster r;
    bool have_duration = false;
    bool have_header = false;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream meta(line.substr(1));
            std::string token;
            while (meta >> token) {
                if (token.rfind("duration_s=", 0) == 0) {
                    r.duration = std::stod(token.substr(11));
                    have_duration = true;
                } else if (token.rfind("cycle_s=", 0) == 0) {
                    r.cycle = std::stod(token.substr(8));
                }
            }
            continue;
        }
        if (!have_header) {
            if (line != "neuron_id,time_s")
                throw std::runtime_error("raster csv: missing neuron_id,time_s header");
            have_header = true;
            continue;
        }
        const std::size_t comma = line.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error("raster csv: line " + std::to_string(line_no) +
                                     ": expected neuron_id,time_s");
        try {
            std::size_t used = 0;
            const std::string id_text = line.substr(0, comma);
            const unsigned long id = std::stoul(id_text, &used);
            if (used != id_text.size()) throw std::invalid_argument("trailing text");
            const std::string time_text = line.substr(comma + 1);
            const double t = std::stod(time_text, &used);
            if (used != time_text.size()) throw std::invalid_argument("trailing text");
            r.events.push_back({static_cast<std::uint32_t>(id), t});
        } catch (const std::exception&) {
            throw std::runtime_error("raster csv: line " + std::to_string(line_no) +
                                     ": malformed row");
        }
    }
    if (!have_header) throw std::runtime_error("raster csv: missing neuron_id,time_s header");
    r.sort_events();
    if (!have_duration)
        for (const SpikeEvent& e : r.events) r.duration = std::max(r.duration, e.time);
    return r;
}

constexpr char kRasterMagic[8] = {'T', 'P', 'A', 'M', 'R', 'A', 'S', '1'};

inline void write_raster_binary(std::ostream& os, const SpikeRaster& raster) {
    os.write(kRasterMagic, 8);
    os.write(reinterpret_cast<const char*>(&raster.duration), 8);
    os.write(reinterpret_cast<const char*>(&raster.cycle), 8);
    const std::uint64_t count = raster.events.size();
    os.write(reinterpret_cast<const char*>(&count), 8);
    std::vector<SpikeEvent> sorted = raster.events;
    std::sort(sorted.begin(), sorted.end(), raster_order);
    for (const SpikeEvent& e : sorted) {
        os.write(reinterpret_cast<const char*>(&e.neuron), 4);
        os.write(reinterpret_cast<const char*>(&e.time), 8);
    }
}

inline SpikeRaster read_raster_binary(std::istream& is) {
    char magic[8] = {};
    is.read(magic, 8);
    if (!is || !std::equal(magic, magic + 8, kRasterMagic))
        throw std::runtime_error("raster binary: bad magic");
    SpikeRaster r;
    std::uint64_t count = 0;
    is.read(reinterpret_cast<char*>(&r.duration), 8);
    is.read(reinterpret_cast<char*>(&r.cycle), 8);
    is.read(reinterpret_cast<char*>(&count), 8);
    if (!is) throw std::runtime_error("raster binary: truncated header");
    r.events.resize(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        is.read(reinterpret_cast<char*>(&r.events[i].neuron), 4);
        is.read(reinterpret_cast<char*>(&r.events[i].time), 8);
        if (!is) throw std::runtime_error("raster binary: truncated events");
    }
    r.sort_events();
    return r;
}

inline void write_raster_csv_file(const std::string& path, const SpikeRaster& raster,
                                  const std::string& comment = "") {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("raster csv: cannot open " + path + " for writing");
    write_raster_csv(f, raster, comment);
}

inline SpikeRaster read_raster_csv_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("raster csv: cannot open " + path);
    return read_raster_csv(f);
}

inline void write_raster_binary_file(const std::string& path, const SpikeRaster& raster) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("raster binary: cannot open " + path + " for writing");
    write_raster_binary(f, raster);
}

inline SpikeRaster read_raster_binary_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("raster binary: cannot open " + path);
    return read_raster_binary(f);
}

}  // namespace tpam
