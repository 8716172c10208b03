#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tpam/core.hpp"
#include "tpam/linalg.hpp"
#include "tpam/patterns.hpp"
#include "tpam/phasor.hpp"
#include "tpam/rng.hpp"

namespace tpam {

enum class IndexMode { pseudo_inverse, hebbian_random };
enum class PipelineModel { hebbian, sdm, tpam };

inline std::string model_label(PipelineModel model, IndexMode mode) {
    std::string s;
    switch (model) {
        case PipelineModel::hebbian: s = "hebbian"; break;
        case PipelineModel::sdm: s = "sdm"; break;
        case PipelineModel::tpam: s = "tpam"; break;
    }
    return s + (mode == IndexMode::pseudo_inverse ? "_pinv" : "_random");
}

// Codebook = one stored index per data column, kept as matrix columns.
// kind "phasor": sparse random phasors; kind "binary": sparse 0/1 supports
// (the baseline models use these).
inline CMatrix make_codebook(std::size_t n, std::size_t m, double p_hot, bool binary, Rng& rng) {
    EnsembleSpec spec;
    spec.n = n;
    spec.m = m;
    spec.p_hot = p_hot;
    spec.phase_bins = binary ? 1 : 0;  // one bin pins every phase at zero
    const auto pats = gen_patterns(spec, rng);
    CMatrix s(n, m);
    for (std::size_t mu = 0; mu < m; ++mu)
        for (std::size_t i = 0; i < n; ++i) s.at(i, mu) = pats[mu][i];
    return s;
}

// Orthonormalizes the columns over the complex dot product. The entries stop
// being unit phasors, so this pairs with the hebbian/sdm readout paths.
inline void gram_schmidt_columns(CMatrix& s) {
    for (std::size_t j = 0; j < s.cols; ++j) {
        for (std::size_t p = 0; p < j; ++p) {
            cplx coef = 0.0;
            for (std::size_t i = 0; i < s.rows; ++i)
                coef += std::conj(s.at(i, p)) * s.at(i, j);
            for (std::size_t i = 0; i < s.rows; ++i) s.at(i, j) -= coef * s.at(i, p);
        }
        double nrm = 0.0;
        for (std::size_t i = 0; i < s.rows; ++i) nrm += std::norm(s.at(i, j));
        nrm = std::sqrt(nrm);
        if (nrm < 1e-10)
            throw std::runtime_error("gram_schmidt_columns: dependent column " +
                                     std::to_string(j));
        for (std::size_t i = 0; i < s.rows; ++i) s.at(i, j) /= nrm;
    }
}

struct IndexingWeights {
    CMatrix w;  // N x D
    IndexMode mode = IndexMode::pseudo_inverse;
};

// Index stage: projects a data vector into the code space. pseudo_inverse
// amplifies the differences between correlated columns (W_I = S P+); the
// hebbian_random baseline is the plain correlation W_I = S P^T.
inline IndexingWeights build_index_stage(const RMatrix& data, const CMatrix& codebook,
                                         IndexMode mode) {
    if (codebook.cols != data.cols)
        throw std::invalid_argument("build_index_stage: column counts differ");
    const RMatrix proj =
        mode == IndexMode::pseudo_inverse ? pseudo_inverse(data) : transpose(data);
    IndexingWeights out;
    out.mode = mode;
    out.w = CMatrix(codebook.rows, data.rows);
    for (std::size_t i = 0; i < codebook.rows; ++i)
        for (std::size_t mu = 0; mu < codebook.cols; ++mu) {
            const cplx sim = codebook.at(i, mu);
            if (sim == cplx(0.0, 0.0)) continue;
            for (std::size_t d = 0; d < data.rows; ++d)
                out.w.at(i, d) += sim * proj.at(mu, d);
        }
    return out;
}

inline PhasorState apply_index(const IndexingWeights& w, const std::vector<double>& cue) {
    if (cue.size() != w.w.cols)
        throw std::invalid_argument("apply_index: cue length mismatch");
    PhasorState u(w.w.rows, cplx(0.0, 0.0));
    for (std::size_t i = 0; i < w.w.rows; ++i) {
        cplx s = 0.0;
        const cplx* row = &w.w.a[i * w.w.cols];
        for (std::size_t d = 0; d < cue.size(); ++d) s += row[d] * cue[d];
        u[i] = s;
    }
    return u;
}

struct HeteroWeights {
    CMatrix w;          // D x N
    std::size_t k = 1;  // active count behind the 1/K readout normalization
};

// Heteroassociative readout: W_H = sum_mu P_mu S_mu^dagger.
inline HeteroWeights build_hetero_stage(const RMatrix& data, const CMatrix& codebook,
                                        std::size_t k) {
    if (codebook.cols != data.cols)
        throw std::invalid_argument("build_hetero_stage: column counts differ");
    if (k == 0) throw std::invalid_argument("build_hetero_stage: k must be positive");
    HeteroWeights out;
    out.k = k;
    out.w = CMatrix(data.rows, codebook.rows);
    for (std::size_t mu = 0; mu < data.cols; ++mu)
        for (std::size_t i = 0; i < codebook.rows; ++i) {
            const cplx conj_s = std::conj(codebook.at(i, mu));
            if (conj_s == cplx(0.0, 0.0)) continue;
            for (std::size_t d = 0; d < data.rows; ++d)
                out.w.at(d, i) += data.at(d, mu) * conj_s;
        }
    return out;
}

inline std::vector<double> decode(const HeteroWeights& w, const PhasorState& z) {
    if (z.size() != w.w.cols) throw std::invalid_argument("decode: state length mismatch");
    std::vector<double> out(w.w.rows, 0.0);
    const double inv_k = 1.0 / static_cast<double>(w.k);
    for (std::size_t d = 0; d < w.w.rows; ++d) {
        cplx s = 0.0;
        const cplx* row = &w.w.a[d * w.w.cols];
        for (std::size_t i = 0; i < z.size(); ++i) {
            if (z[i] == cplx(0.0, 0.0)) continue;
            s += row[i] * z[i];
        }
        out[d] = inv_k * s.real();
    }
    return out;
}

namespace detail {

inline std::vector<std::size_t> top_k_indices(const std::vector<double>& v, std::size_t k) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    // ties resolve to the lowest index
    std::stable_sort(idx.begin(), idx.end(),
                     [&v](std::size_t a, std::size_t b) { return v[a] > v[b]; });
    idx.resize(k);
    return idx;
}

}  // namespace detail

// K-winner stage of the sparse distributed memory baseline: a binary vector
// with exactly k ones at the k largest entries, ties to the lowest index.
inline PhasorState sdm_topk(const std::vector<double>& v, std::size_t k) {
    if (k > v.size()) throw std::invalid_argument("sdm_topk: k exceeds the vector length");
    PhasorState out(v.size(), cplx(0.0, 0.0));
    for (std::size_t i : detail::top_k_indices(v, k)) out[i] = cplx(1.0, 0.0);
    return out;
}

// Phasor analogue used to form the hidden cue: keeps the phases of the k
// strongest components and silences the rest. Zero-magnitude components are
// never activated.
inline PhasorState top_k_phasor(const PhasorState& u, std::size_t k) {
    if (k > u.size()) throw std::invalid_argument("top_k_phasor: k exceeds the state length");
    std::vector<double> mag(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) mag[i] = std::abs(u[i]);
    PhasorState out(u.size(), cplx(0.0, 0.0));
    for (std::size_t i : detail::top_k_indices(mag, k))
        if (mag[i] > 0.0) out[i] = u[i] / mag[i];
    return out;
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.empty())
        throw std::invalid_argument("pearson: length mismatch");
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa <= 0.0 || sbb <= 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

constexpr double kRetrievalBitsCap = 16.0;  // bits per pixel as rho -> 1

// Gaussian-channel information of the readout: -1/2 log2(1 - rho^2), capped.
inline double bits_from_rho(double rho) {
    const double r2 = std::min(rho * rho, 1.0);
    if (r2 >= 1.0) return kRetrievalBitsCap;
    const double bits = -0.5 * std::log2(1.0 - r2);
    return std::min(bits, kRetrievalBitsCap);
}

struct PipelineConfig {
    PipelineModel model = PipelineModel::tpam;
    IndexMode mode = IndexMode::pseudo_inverse;
    double theta = 0.9;          // clean-up threshold factor (tpam model)
    std::size_t max_iters = 50;  // 0 skips the clean-up recall
    bool gram_schmidt = false;   // orthonormalize the codebook first
};

struct PipelineResult {
    std::vector<double> estimate;
    PhasorState hidden;  // post-cleanup hidden state
    double rho = 0.0;
    double bits_per_pixel = 0.0;
    bool cleanup_converged = true;  // false when the recall budget ran out
};

// Index -> optional clean-up -> readout. Weights are built once; retrieval
// is per-cue.
class IndexPipeline {
  public:
    IndexPipeline(RMatrix data, CMatrix codebook, PipelineConfig cfg)
        : data_(std::move(data)), cfg_(cfg) {
        if (codebook.cols != data_.cols)
            throw std::invalid_argument("IndexPipeline: column counts differ");
        if (data_.cols == 0) throw std::invalid_argument("IndexPipeline: no data");

        k_ = 0;
        for (std::size_t i = 0; i < codebook.rows; ++i)
            if (codebook.at(i, 0) != cplx(0.0, 0.0)) ++k_;
        if (k_ == 0) throw std::invalid_argument("IndexPipeline: empty codebook column");

        if (cfg_.gram_schmidt) gram_schmidt_columns(codebook);
        index_ = build_index_stage(data_, codebook, cfg_.mode);
        hetero_ = build_hetero_stage(data_, codebook, k_);
        if (cfg_.model == PipelineModel::tpam) {
            std::vector<PhasorState> pats(codebook.cols, PhasorState(codebook.rows));
            for (std::size_t mu = 0; mu < codebook.cols; ++mu)
                for (std::size_t i = 0; i < codebook.rows; ++i)
                    pats[mu][i] = codebook.at(i, mu);
            cleanup_ = learn_conjugate_outer(pats, codebook.rows);
        }
    }

    std::size_t k() const { return k_; }
    const RMatrix& data() const { return data_; }

    PipelineResult retrieve(const std::vector<double>& cue, std::size_t mu) const {
        if (mu >= data_.cols) throw std::invalid_argument("retrieve: no such column");
        const PhasorState u = apply_index(index_, cue);

        PipelineResult res;
        switch (cfg_.model) {
            case PipelineModel::hebbian:
                res.hidden = u;
                break;
            case PipelineModel::sdm: {
                std::vector<double> re(u.size());
                for (std::size_t i = 0; i < u.size(); ++i) re[i] = u[i].real();
                res.hidden = sdm_topk(re, k_);
                break;
            }
            case PipelineModel::tpam: {
                res.hidden = top_k_phasor(u, k_);
                if (cfg_.max_iters > 0) {
                    RecallOptions opts;
                    opts.max_iters = cfg_.max_iters;
                    opts.record_states = false;
                    opts.record_energy = false;
                    const RecallTrace trace =
                        recall(cleanup_, res.hidden, ThresholdPolicy::dynamic(cfg_.theta),
                               TransferKind::tpam(), Schedule::parallel, opts);
                    res.hidden = trace.final_state;
                    res.cleanup_converged = trace.converged || trace.limit_cycle;
                }
                break;
            }
        }

        res.estimate = decode(hetero_, res.hidden);
        std::vector<double> target(data_.rows);
        for (std::size_t d = 0; d < data_.rows; ++d) target[d] = data_.at(d, mu);
        res.rho = pearson(res.estimate, target);
        res.bits_per_pixel = bits_from_rho(res.rho);
        return res;
    }

  private:
    RMatrix data_;
    PipelineConfig cfg_;
    std::size_t k_ = 0;
    IndexingWeights index_;
    HeteroWeights hetero_;
    HermitianWeights cleanup_;
};

inline std::vector<double> noisy_cue(const RMatrix& data, std::size_t mu, double sd, Rng& rng) {
    if (mu >= data.cols) throw std::invalid_argument("noisy_cue: no such column");
    std::vector<double> cue(data.rows);
    for (std::size_t d = 0; d < data.rows; ++d)
        cue[d] = data.at(d, mu) + (sd > 0.0 ? rng.normal(0.0, sd) : 0.0);
    return cue;
}

struct RetrievalRow {
    std::size_t mu = 0;
    double noise = 0.0;
    std::string model;
    double rho = 0.0;
    double bits_per_pixel = 0.0;
};

inline void write_retrieval_csv(std::ostream& os, const std::vector<RetrievalRow>& rows,
                                const std::string& comment = "") {
    if (!comment.empty()) os << "# " << comment << "\n";
    os << "mu,noise,model,rho,bits_per_pixel\n";
    os << std::setprecision(17);
    for (const auto& r : rows)
        os << r.mu << ',' << r.noise << ',' << r.model << ',' << r.rho << ','
           << r.bits_per_pixel << '\n';
}

}  // namespace tpam
