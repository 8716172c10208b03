#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tpam/info.hpp"
#include "tpam/patterns.hpp"
#include "tpam/phasor.hpp"
#include "tpam/rng.hpp"

namespace tpam {

// One sweep = one transfer kind at one threshold factor, crossed over hot
// rates and pattern counts. Unthresholded kinds record theta but ignore it.
struct CapacityGrid {
    std::size_t n = 200;
    std::vector<double> p_hots{0.02, 0.05, 0.1, 0.25, 0.5, 1.0};
    std::vector<std::size_t> m_values;
    double theta = 0.9;        // activity-scaled threshold factor (tpam, ternary)
    TransferKind kind = TransferKind::tpam();
    int phase_bins = 0;  // pattern bins; csign requires >= 2
    std::size_t trials = 25;
    NoiseSpec noise{};
    Schedule schedule = Schedule::parallel;
    std::size_t max_iters = 500;
    std::uint64_t seed = 1;
};

struct CapacityRow {
    std::size_t n = 0;
    double p_hot = 0.0;
    double theta = 0.0;
    std::string kind;
    std::size_t m = 0;
    std::size_t trial = 0;
    double similarity = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    double kappa = 0.0;
    double bits_per_synapse = 0.0;
};

struct CapacityCell {
    std::size_t n = 0;
    double p_hot = 0.0;
    double theta = 0.0;
    std::string kind;
    std::size_t m = 0;
    std::size_t trials = 0;
    double mean_similarity = 0.0;
    double sd_similarity = 0.0;
    double mean_bits_per_synapse = 0.0;
    double sd_bits_per_synapse = 0.0;
};

struct CapacityReport {
    std::vector<CapacityRow> rows;

    // Per-cell mean and sample sd, grouped in row order (trials of one cell
    // are emitted consecutively).
    std::vector<CapacityCell> summary() const {
        std::vector<CapacityCell> cells;
        std::size_t i = 0;
        while (i < rows.size()) {
            std::size_t j = i;
            while (j < rows.size() && rows[j].n == rows[i].n && rows[j].p_hot == rows[i].p_hot &&
                   rows[j].theta == rows[i].theta && rows[j].kind == rows[i].kind &&
                   rows[j].m == rows[i].m)
                ++j;
            CapacityCell c;
            c.n = rows[i].n;
            c.p_hot = rows[i].p_hot;
            c.theta = rows[i].theta;
            c.kind = rows[i].kind;
            c.m = rows[i].m;
            c.trials = j - i;
            double ssim = 0.0, sbits = 0.0;
            for (std::size_t k = i; k < j; ++k) {
                ssim += rows[k].similarity;
                sbits += rows[k].bits_per_synapse;
            }
            c.mean_similarity = ssim / static_cast<double>(c.trials);
            c.mean_bits_per_synapse = sbits / static_cast<double>(c.trials);
            if (c.trials > 1) {
                double vsim = 0.0, vbits = 0.0;
                for (std::size_t k = i; k < j; ++k) {
                    vsim += (rows[k].similarity - c.mean_similarity) *
                            (rows[k].similarity - c.mean_similarity);
                    vbits += (rows[k].bits_per_synapse - c.mean_bits_per_synapse) *
                             (rows[k].bits_per_synapse - c.mean_bits_per_synapse);
                }
                c.sd_similarity = std::sqrt(vsim / static_cast<double>(c.trials - 1));
                c.sd_bits_per_synapse = std::sqrt(vbits / static_cast<double>(c.trials - 1));
            }
            cells.push_back(std::move(c));
            i = j;
        }
        return cells;
    }
};

inline std::string kind_label(TransferKind kind) {
    switch (kind.kind) {
        case TransferKind::Kind::tpam: return "tpam";
        case TransferKind::Kind::phasor_dense: return "phasor_dense";
        case TransferKind::Kind::csign: return "csign" + std::to_string(kind.bins);
        case TransferKind::Kind::ternary: return "ternary";
    }
    throw std::logic_error("kind_label: unknown kind");
}

namespace detail {

inline int pattern_bins_for(const CapacityGrid& g) {
    if (g.kind.kind == TransferKind::Kind::csign) return g.kind.bins;
    if (g.kind.kind == TransferKind::Kind::ternary) return 2;
    return g.phase_bins;
}

}  // namespace detail

// Runs trials of generate -> learn -> perturb -> recall -> score over the
// grid. Every trial draws from its own random stream keyed by the cell and
// the trial index, so the report is reproducible regardless of execution
// order.
inline CapacityReport run_capacity_sweep(const CapacityGrid& grid) {
    if (grid.n == 0) throw std::invalid_argument("run_capacity_sweep: n must be positive");
    if (grid.p_hots.empty() || grid.m_values.empty() || grid.trials == 0)
        throw std::invalid_argument("run_capacity_sweep: empty grid");
    const int bins = detail::pattern_bins_for(grid);

    const bool thresholded = grid.kind.kind == TransferKind::Kind::tpam ||
                             grid.kind.kind == TransferKind::Kind::ternary;
    const ThresholdPolicy policy =
        thresholded ? ThresholdPolicy::dynamic(grid.theta) : ThresholdPolicy::constant(0.0);
    const std::string label = kind_label(grid.kind);
    RecallOptions opts;
    opts.max_iters = grid.max_iters;
    opts.record_states = false;
    opts.record_energy = false;

    CapacityReport report;
    for (double p_hot : grid.p_hots) {
        for (std::size_t m : grid.m_values) {
            const std::string stream = "cap/" + label + "/n=" + std::to_string(grid.n) +
                                       "/p=" + std::to_string(p_hot) +
                                       "/t=" + std::to_string(grid.theta) +
                                       "/m=" + std::to_string(m);
            for (std::size_t trial = 0; trial < grid.trials; ++trial) {
                Rng rng(grid.seed, stream, trial);
                EnsembleSpec spec{grid.n, m, p_hot, bins};
                const auto pats = gen_patterns(spec, rng);
                const HermitianWeights w = learn_conjugate_outer(pats, grid.n);
                const PhasorState cue = perturb_cue(pats[0], grid.noise, rng);
                const RecallTrace trace =
                    recall(w, cue, policy, grid.kind, grid.schedule, opts, &rng);
                const RecallStats st = score_recall(trace.final_state, pats[0]);

                CapacityRow row;
                row.n = grid.n;
                row.p_hot = p_hot;
                row.theta = grid.theta;
                row.kind = label;
                row.m = m;
                row.trial = trial;
                row.similarity = st.similarity;
                row.alpha = st.alpha;
                row.beta = st.beta;
                row.kappa = st.kappa;
                const double p_target = static_cast<double>(support_size(pats[0])) /
                                        static_cast<double>(grid.n);
                const ItemInfo item =
                    info_item_bits(grid.n, p_target, st.alpha, st.beta, st.kappa, bins);
                row.bits_per_synapse = bits_per_synapse(grid.n, m, item.bits);
                report.rows.push_back(std::move(row));
            }
        }
    }
    return report;
}

// Column layout consumed by the plotting side of the CLI.
inline void write_capacity_csv(std::ostream& os, const CapacityReport& report,
                               const std::string& comment = "") {
    if (!comment.empty()) os << "# " << comment << "\n";
    os << "N,p_hot,theta,kind,M,trial,similarity,alpha,beta,kappa,bits_per_synapse\n";
    os << std::setprecision(17);
    for (const auto& r : report.rows)
        os << r.n << ',' << r.p_hot << ',' << r.theta << ',' << r.kind << ',' << r.m << ','
           << r.trial << ',' << r.similarity << ',' << r.alpha << ',' << r.beta << ','
           << r.kappa << ',' << r.bits_per_synapse << '\n';
}

inline void write_capacity_json(std::ostream& os, const CapacityReport& report) {
    const auto cells = report.summary();
    os << std::setprecision(17) << "{\n  \"cells\": [";
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto& c = cells[i];
        os << (i ? ",\n" : "\n") << "    {\"n\": " << c.n << ", \"p_hot\": " << c.p_hot
           << ", \"theta\": " << c.theta << ", \"kind\": \"" << c.kind << "\", \"m\": " << c.m
           << ", \"trials\": " << c.trials << ", \"mean_similarity\": " << c.mean_similarity
           << ", \"sd_similarity\": " << c.sd_similarity
           << ", \"mean_bits_per_synapse\": " << c.mean_bits_per_synapse
           << ", \"sd_bits_per_synapse\": " << c.sd_bits_per_synapse << "}";
    }
    os << "\n  ]\n}\n";
}

}  // namespace tpam
