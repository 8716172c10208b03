#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tpam/core.hpp"
#include "tpam/rng.hpp"

namespace tpam {

// Interleaved RGB, row-major, 8 bits per channel.
struct Image {
    std::size_t width = 0, height = 0;
    std::vector<std::uint8_t> rgb;

    std::uint8_t& at(std::size_t x, std::size_t y, std::size_t c) {
        return rgb[(y * width + x) * 3 + c];
    }
    std::uint8_t at(std::size_t x, std::size_t y, std::size_t c) const {
        return rgb[(y * width + x) * 3 + c];
    }
};

namespace detail {

// PPM headers are whitespace-separated tokens; '#' starts a comment that runs
// to the end of the line.
inline std::string ppm_token(std::istream& in) {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {}
            continue;
        }
        if (std::isspace(ch)) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(static_cast<char>(ch));
    }
    if (tok.empty()) throw std::runtime_error("ppm: truncated header");
    return tok;
}

inline std::size_t ppm_number(std::istream& in) {
    const std::string tok = ppm_token(in);
    for (char c : tok)
        if (!std::isdigit(static_cast<unsigned char>(c)))
            throw std::runtime_error("ppm: malformed header number '" + tok + "'");
    return static_cast<std::size_t>(std::stoull(tok));
}

}  // namespace detail

inline Image read_ppm(std::istream& in) {
    if (detail::ppm_token(in) != "P6")
        throw std::runtime_error("ppm: only binary P6 is supported");
    Image img;
    img.width = detail::ppm_number(in);
    img.height = detail::ppm_number(in);
    const std::size_t maxval = detail::ppm_number(in);
    if (img.width == 0 || img.height == 0)
        throw std::runtime_error("ppm: empty image");
    if (maxval == 0 || maxval > 255)
        throw std::runtime_error("ppm: only 8-bit channels are supported");
    // exactly one whitespace byte separates the header from the pixel data
    img.rgb.resize(img.width * img.height * 3);
    in.read(reinterpret_cast<char*>(img.rgb.data()),
            static_cast<std::streamsize>(img.rgb.size()));
    if (static_cast<std::size_t>(in.gcount()) != img.rgb.size())
        throw std::runtime_error("ppm: truncated pixel data");
    return img;
}

inline void write_ppm(std::ostream& out, const Image& img) {
    if (img.rgb.size() != img.width * img.height * 3)
        throw std::invalid_argument("ppm: pixel buffer does not match dimensions");
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.rgb.data()),
              static_cast<std::streamsize>(img.rgb.size()));
}

inline Image read_ppm_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("ppm: cannot open " + path);
    return read_ppm(f);
}

inline void write_ppm_file(const std::string& path, const Image& img) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("ppm: cannot open " + path + " for writing");
    write_ppm(f, img);
}

// Raw patch tensor: u32 D, u32 M (little-endian), then M columns of D float32
// values each, little-endian. Column mu is one flattened patch.
inline void write_float_tensor(std::ostream& out, const RMatrix& m) {
    const std::uint32_t d = static_cast<std::uint32_t>(m.rows);
    const std::uint32_t cols = static_cast<std::uint32_t>(m.cols);
    out.write(reinterpret_cast<const char*>(&d), 4);
    out.write(reinterpret_cast<const char*>(&cols), 4);
    for (std::size_t j = 0; j < m.cols; ++j)
        for (std::size_t i = 0; i < m.rows; ++i) {
            const float v = static_cast<float>(m.at(i, j));
            out.write(reinterpret_cast<const char*>(&v), 4);
        }
}

inline RMatrix read_float_tensor(std::istream& in) {
    std::uint32_t d = 0, cols = 0;
    in.read(reinterpret_cast<char*>(&d), 4);
    in.read(reinterpret_cast<char*>(&cols), 4);
    if (!in || d == 0 || cols == 0)
        throw std::runtime_error("tensor: malformed header");
    RMatrix m(d, cols);
    for (std::size_t j = 0; j < m.cols; ++j)
        for (std::size_t i = 0; i < m.rows; ++i) {
            float v = 0.0f;
            in.read(reinterpret_cast<char*>(&v), 4);
            if (!in) throw std::runtime_error("tensor: truncated data");
            m.at(i, j) = static_cast<double>(v);
        }
    return m;
}

inline RMatrix read_float_tensor_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("tensor: cannot open " + path);
    return read_float_tensor(f);
}

inline void write_float_tensor_file(const std::string& path, const RMatrix& m) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("tensor: cannot open " + path + " for writing");
    write_float_tensor(f, m);
}

// Smooth band-limited texture whose channels share most of their structure:
// patches cut from it are strongly correlated with one another, which is the
// regime the pattern-separation stage is for.
inline Image synth_texture(std::size_t width, std::size_t height, Rng& rng) {
    if (width == 0 || height == 0)
        throw std::invalid_argument("synth_texture: empty image");
    // Enough components that a stack of patch restrictions stays numerically
    // full rank (each wave only spans two dimensions under translation), with
    // a red spectrum so large scales dominate and patches stay correlated.
    constexpr int kWaves = 40;
    struct Wave {
        double fx, fy, phase, amp, chan_shift;
    };
    std::vector<Wave> waves(kWaves);
    for (auto& w : waves) {
        const double period = std::exp(rng.uniform(std::log(4.0), std::log(64.0)));
        const double dir = rng.uniform(0.0, kTau);
        w.fx = std::cos(dir) / period;
        w.fy = std::sin(dir) / period;
        w.phase = rng.uniform(0.0, kTau);
        w.amp = rng.uniform(0.5, 1.0) * std::sqrt(period);
        w.chan_shift = rng.uniform(0.0, 0.8);
    }

    std::vector<double> field(width * height * 3);
    double lo = 1e300, hi = -1e300;
    for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x)
            for (std::size_t c = 0; c < 3; ++c) {
                double v = 0.0;
                for (const auto& w : waves)
                    v += w.amp * std::cos(kTau * (w.fx * static_cast<double>(x) +
                                                  w.fy * static_cast<double>(y)) +
                                          w.phase + static_cast<double>(c) * w.chan_shift);
                field[(y * width + x) * 3 + c] = v;
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }

    Image img;
    img.width = width;
    img.height = height;
    img.rgb.resize(field.size());
    const double span = hi > lo ? hi - lo : 1.0;
    for (std::size_t i = 0; i < field.size(); ++i) {
        const double unit = (field[i] - lo) / span;
        const double noisy = 255.0 * unit + rng.normal(0.0, 1.5);
        img.rgb[i] = static_cast<std::uint8_t>(std::clamp(std::lround(noisy), 0l, 255l));
    }
    return img;
}

// Zero-mean, unit-variance per column; the indexing stage assumes this
// normalization and the pseudo-inverse conditioning benefits from it.
inline void normalize_columns(RMatrix& m) {
    for (std::size_t j = 0; j < m.cols; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < m.rows; ++i) mean += m.at(i, j);
        mean /= static_cast<double>(m.rows);
        double var = 0.0;
        for (std::size_t i = 0; i < m.rows; ++i) {
            m.at(i, j) -= mean;
            var += m.at(i, j) * m.at(i, j);
        }
        var /= static_cast<double>(m.rows);
        if (var < 1e-18)
            throw std::runtime_error("normalize_columns: constant column " + std::to_string(j));
        const double inv = 1.0 / std::sqrt(var);
        for (std::size_t i = 0; i < m.rows; ++i) m.at(i, j) *= inv;
    }
}

// Cuts m patches of pw x ph pixels at random offsets and returns them as
// normalized columns (D = pw*ph*3). Constant patches are resampled.
inline RMatrix extract_patches(const Image& img, std::size_t pw, std::size_t ph, std::size_t m,
                               Rng& rng) {
    if (pw == 0 || ph == 0 || m == 0)
        throw std::invalid_argument("extract_patches: empty request");
    if (pw > img.width || ph > img.height)
        throw std::invalid_argument("extract_patches: patch larger than image");
    const std::size_t d = pw * ph * 3;
    RMatrix out(d, m);
    for (std::size_t j = 0; j < m; ++j) {
        for (int attempt = 0;; ++attempt) {
            const std::size_t x0 = rng.uniform_index(img.width - pw + 1);
            const std::size_t y0 = rng.uniform_index(img.height - ph + 1);
            std::size_t r = 0;
            double mean = 0.0, sq = 0.0;
            for (std::size_t y = 0; y < ph; ++y)
                for (std::size_t x = 0; x < pw; ++x)
                    for (std::size_t c = 0; c < 3; ++c, ++r) {
                        const double v = static_cast<double>(img.at(x0 + x, y0 + y, c));
                        out.at(r, j) = v;
                        mean += v;
                        sq += v * v;
                    }
            mean /= static_cast<double>(d);
            if (sq / static_cast<double>(d) - mean * mean > 1e-9) break;
            if (attempt >= 100)
                throw std::runtime_error("extract_patches: image is constant");
        }
    }
    normalize_columns(out);
    return out;
}

// Renders a normalized patch column for inspection; unit variance maps to
// roughly a quarter of the dynamic range around mid-gray.
inline Image patch_to_image(const std::vector<double>& column, std::size_t pw, std::size_t ph,
                            double scale = 48.0, double offset = 128.0) {
    if (column.size() != pw * ph * 3)
        throw std::invalid_argument("patch_to_image: column length mismatch");
    Image img;
    img.width = pw;
    img.height = ph;
    img.rgb.resize(column.size());
    for (std::size_t i = 0; i < column.size(); ++i)
        img.rgb[i] =
            static_cast<std::uint8_t>(std::clamp(std::lround(offset + scale * column[i]), 0l, 255l));
    return img;
}

}  // namespace tpam
