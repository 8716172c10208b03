#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <vector>

#include "tpam/imageio.hpp"
#include "tpam/indexing.hpp"

using namespace tpam;

namespace {

PhasorState column_of(const CMatrix& m, std::size_t j) {
    PhasorState v(m.rows);
    for (std::size_t i = 0; i < m.rows; ++i) v[i] = m.at(i, j);
    return v;
}

std::vector<double> real_column_of(const RMatrix& m, std::size_t j) {
    std::vector<double> v(m.rows);
    for (std::size_t i = 0; i < m.rows; ++i) v[i] = m.at(i, j);
    return v;
}

RMatrix correlated_patches(std::size_t m, Rng& rng) {
    const Image tex = synth_texture(96, 96, rng);
    return extract_patches(tex, 12, 12, m, rng);
}

}  // namespace

TEST_CASE("the k-winner stage keeps exactly the largest entries") {
    const PhasorState a = sdm_topk({3.0, 1.0, 2.0}, 2);
    REQUIRE(a == PhasorState{cplx(1, 0), cplx(0, 0), cplx(1, 0)});

    const PhasorState b = sdm_topk({5.0, 5.0, 5.0, 5.0}, 1);
    REQUIRE(b == PhasorState{cplx(1, 0), cplx(0, 0), cplx(0, 0), cplx(0, 0)});

    // vacuous threshold: every unit selected
    const PhasorState c = sdm_topk({-1.0, 0.0, 2.0}, 3);
    REQUIRE(c == PhasorState(3, cplx(1, 0)));

    REQUIRE_THROWS_AS(sdm_topk({1.0}, 2), std::invalid_argument);
}

TEST_CASE("the k-winner stage agrees with a sort-based reference") {
    Rng rng(51, "index", 0);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> v(37);
        for (auto& x : v) x = rng.normal(0.0, 1.0);
        const std::size_t k = 1 + rng.uniform_index(36);
        const PhasorState picked = sdm_topk(v, k);

        std::vector<double> sorted = v;
        std::sort(sorted.begin(), sorted.end(), std::greater<>());
        const double cutoff = sorted[k - 1];
        std::size_t ones = 0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (picked[i] == cplx(1.0, 0.0)) {
                ++ones;
                REQUIRE(v[i] >= cutoff);
            } else {
                REQUIRE(picked[i] == cplx(0.0, 0.0));
                REQUIRE(v[i] <= cutoff);
            }
        }
        REQUIRE(ones == k);
    }
}

TEST_CASE("the phasor k-winner keeps phases and skips silent drive") {
    const cplx e1 = std::polar(1.0, 0.7);
    const PhasorState u = {2.0 * e1, cplx(0.0, 0.0), cplx(-3.0, 0.0), cplx(0.1, 0.0)};
    const PhasorState z = top_k_phasor(u, 2);
    REQUIRE(std::abs(z[0] - e1) < 1e-15);
    REQUIRE(z[1] == cplx(0.0, 0.0));
    REQUIRE(z[2] == cplx(-1.0, 0.0));
    REQUIRE(z[3] == cplx(0.0, 0.0));

    // a zero-magnitude component is never activated, even inside the top k
    const PhasorState sparse = top_k_phasor({cplx(1.0, 0.0), cplx(0.0, 0.0)}, 2);
    REQUIRE(sparse[0] == cplx(1.0, 0.0));
    REQUIRE(sparse[1] == cplx(0.0, 0.0));
}

TEST_CASE("pattern separation recovers stored codes exactly at full rank") {
    Rng rng(52, "index", 1);
    RMatrix data(40, 6);
    for (auto& v : data.a) v = rng.normal(0.0, 1.0);
    const CMatrix codebook = make_codebook(32, 6, 0.1, false, rng);

    const IndexingWeights w = build_index_stage(data, codebook, IndexMode::pseudo_inverse);
    REQUIRE(w.w.rows == 32);
    REQUIRE(w.w.cols == 40);
    for (std::size_t mu = 0; mu < 6; ++mu) {
        const PhasorState u = apply_index(w, real_column_of(data, mu));
        const PhasorState s = column_of(codebook, mu);
        for (std::size_t i = 0; i < u.size(); ++i) REQUIRE(std::abs(u[i] - s[i]) < 1e-8);
    }
}

TEST_CASE("plain correlation indexing is exact on orthonormal data") {
    Rng rng(53, "index", 2);
    RMatrix data(24, 5);
    for (auto& v : data.a) v = rng.normal(0.0, 1.0);
    // orthonormalize the data columns so S P^T P picks single columns
    for (std::size_t j = 0; j < data.cols; ++j) {
        for (std::size_t p = 0; p < j; ++p) {
            double dot = 0.0;
            for (std::size_t i = 0; i < data.rows; ++i) dot += data.at(i, j) * data.at(i, p);
            for (std::size_t i = 0; i < data.rows; ++i) data.at(i, j) -= dot * data.at(i, p);
        }
        double nrm = 0.0;
        for (std::size_t i = 0; i < data.rows; ++i) nrm += data.at(i, j) * data.at(i, j);
        nrm = std::sqrt(nrm);
        for (std::size_t i = 0; i < data.rows; ++i) data.at(i, j) /= nrm;
    }
    const CMatrix codebook = make_codebook(16, 5, 0.25, true, rng);
    const IndexingWeights w = build_index_stage(data, codebook, IndexMode::hebbian_random);
    for (std::size_t mu = 0; mu < 5; ++mu) {
        const PhasorState u = apply_index(w, real_column_of(data, mu));
        const PhasorState s = column_of(codebook, mu);
        for (std::size_t i = 0; i < u.size(); ++i) REQUIRE(std::abs(u[i] - s[i]) < 1e-12);
    }
}

TEST_CASE("readout through disjoint supports reproduces the data exactly") {
    Rng rng(54, "index", 3);
    const std::size_t n = 20, m = 4, k = 5, d = 9;
    CMatrix codebook(n, m);
    for (std::size_t mu = 0; mu < m; ++mu)
        for (std::size_t r = 0; r < k; ++r)
            codebook.at(mu * k + r, mu) = std::polar(1.0, rng.uniform(0.0, kTau));
    RMatrix data(d, m);
    for (auto& v : data.a) v = rng.normal(0.0, 1.0);

    const HeteroWeights wh = build_hetero_stage(data, codebook, k);
    for (std::size_t mu = 0; mu < m; ++mu) {
        const std::vector<double> est = decode(wh, column_of(codebook, mu));
        for (std::size_t i = 0; i < d; ++i)
            REQUIRE(est[i] == Catch::Approx(data.at(i, mu)).margin(1e-12));
    }

    const std::vector<double> silent = decode(wh, PhasorState(n, cplx(0.0, 0.0)));
    for (double v : silent) REQUIRE(v == 0.0);
}

TEST_CASE("readout noise follows the stated signal-to-noise scaling") {
    Rng rng(55, "index", 4);
    const std::size_t n = 1024, m = 20, d = 432;
    const CMatrix codebook = make_codebook(n, m, 1.0, false, rng);  // dense phasors
    RMatrix data(d, m);
    for (auto& v : data.a) v = rng.normal(0.0, 1.0);

    const HeteroWeights wh = build_hetero_stage(data, codebook, n);
    double sig = 0.0, noise = 0.0;
    for (std::size_t mu = 0; mu < m; ++mu) {
        const std::vector<double> est = decode(wh, column_of(codebook, mu));
        for (std::size_t i = 0; i < d; ++i) {
            sig += data.at(i, mu) * data.at(i, mu);
            noise += (est[i] - data.at(i, mu)) * (est[i] - data.at(i, mu));
        }
    }
    const double snr = sig / noise;
    const double ideal = 2.0 * static_cast<double>(n) / static_cast<double>(m);
    REQUIRE(std::abs(std::log(snr / ideal)) < 0.35);
}

TEST_CASE("an orthogonalized codebook makes the clean pipeline exact") {
    Rng rng(56, "index", 5);
    const RMatrix patches = correlated_patches(20, rng);
    const CMatrix codebook = make_codebook(64, 20, 0.1, false, rng);

    PipelineConfig cfg;
    cfg.model = PipelineModel::hebbian;
    cfg.mode = IndexMode::pseudo_inverse;
    cfg.gram_schmidt = true;
    const IndexPipeline pipe(patches, codebook, cfg);
    for (std::size_t mu = 0; mu < 20; ++mu) {
        const auto res = pipe.retrieve(noisy_cue(patches, mu, 0.0, rng), mu);
        REQUIRE(res.rho == Catch::Approx(1.0).margin(1e-10));
        REQUIRE(res.bits_per_pixel == kRetrievalBitsCap);
    }
}

TEST_CASE("pattern separation beats plain correlation on correlated patches") {
    Rng rng(57, "index", 6);
    const RMatrix patches = correlated_patches(20, rng);
    const CMatrix codebook = make_codebook(128, 20, 0.1, false, rng);

    const IndexingWeights pinv = build_index_stage(patches, codebook, IndexMode::pseudo_inverse);
    const IndexingWeights plain = build_index_stage(patches, codebook, IndexMode::hebbian_random);
    double sim_pinv = 0.0, sim_plain = 0.0;
    for (std::size_t mu = 0; mu < 20; ++mu) {
        const std::vector<double> cue = real_column_of(patches, mu);
        const PhasorState target = column_of(codebook, mu);
        sim_pinv += similarity(apply_index(pinv, cue), target);
        sim_plain += similarity(apply_index(plain, cue), target);
    }
    REQUIRE(sim_pinv > sim_plain);
    REQUIRE(sim_pinv / 20.0 > 0.99);  // separation is exact at full rank
}

TEST_CASE("the cleanup stage lifts noisy retrievals above the plain baseline") {
    Rng rng(58, "index", 7);
    const RMatrix patches = correlated_patches(20, rng);
    const CMatrix codebook = make_codebook(256, 20, 0.1, false, rng);

    PipelineConfig full;
    full.model = PipelineModel::tpam;
    full.mode = IndexMode::pseudo_inverse;
    PipelineConfig baseline;
    baseline.model = PipelineModel::hebbian;
    baseline.mode = IndexMode::hebbian_random;

    const IndexPipeline pipe_full(patches, codebook, full);
    const IndexPipeline pipe_base(patches, codebook, baseline);
    double bits_full = 0.0, bits_base = 0.0;
    for (std::size_t mu = 0; mu < 20; ++mu) {
        const std::vector<double> cue = noisy_cue(patches, mu, 0.3, rng);
        bits_full += pipe_full.retrieve(cue, mu).bits_per_pixel;
        bits_base += pipe_base.retrieve(cue, mu).bits_per_pixel;
    }
    REQUIRE(bits_full > bits_base);
}

TEST_CASE("a starved recall budget is reported in the diagnostics") {
    Rng rng(59, "index", 8);
    const RMatrix patches = correlated_patches(10, rng);
    const CMatrix codebook = make_codebook(64, 10, 0.1, false, rng);
    PipelineConfig cfg;
    cfg.model = PipelineModel::tpam;
    cfg.max_iters = 1;
    const IndexPipeline pipe(patches, codebook, cfg);
    const auto res = pipe.retrieve(noisy_cue(patches, 0, 0.8, rng), 0);
    REQUIRE_FALSE(res.cleanup_converged);
    REQUIRE(res.estimate.size() == patches.rows);  // still decoded
}

TEST_CASE("retrieval information is monotone in the correlation") {
    REQUIRE(bits_from_rho(0.0) == 0.0);
    REQUIRE(bits_from_rho(1.0) == kRetrievalBitsCap);
    REQUIRE(bits_from_rho(-1.0) == kRetrievalBitsCap);
    REQUIRE(bits_from_rho(0.5) == Catch::Approx(-0.5 * std::log2(0.75)).epsilon(1e-12));
    double prev = -1.0;
    for (double r = 0.0; r < 1.0; r += 0.05) {
        REQUIRE(bits_from_rho(r) > prev);
        prev = bits_from_rho(r);
    }
}

TEST_CASE("retrieval rows serialize with the agreed columns") {
    std::vector<RetrievalRow> rows(1);
    rows[0].mu = 3;
    rows[0].noise = 0.3;
    rows[0].model = model_label(PipelineModel::tpam, IndexMode::pseudo_inverse);
    rows[0].rho = 0.5;
    rows[0].bits_per_pixel = 0.25;
    std::ostringstream os;
    write_retrieval_csv(os, rows, "patches");
    const std::string text = os.str();
    REQUIRE(text.find("# patches\n") == 0);
    REQUIRE(text.find("mu,noise,model,rho,bits_per_pixel\n") != std::string::npos);
    REQUIRE(text.find("3,0.29999999999999999,tpam_pinv,0.5,0.25\n") != std::string::npos);
    REQUIRE(model_label(PipelineModel::sdm, IndexMode::hebbian_random) == "sdm_random");
}

TEST_CASE("stage builders validate their shapes") {
    RMatrix data(8, 3);
    CMatrix codebook(6, 4);
    REQUIRE_THROWS_AS(build_index_stage(data, codebook, IndexMode::hebbian_random),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(build_hetero_stage(data, codebook, 2), std::invalid_argument);
    REQUIRE_THROWS_AS(build_hetero_stage(RMatrix(8, 4), codebook, 0), std::invalid_argument);
}
