#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "ksgdiffuse/grid.hpp"
#include "ksgdiffuse/rng.hpp"

namespace ksg {

enum class MaskStructure { Cartesian1D, Gaussian1D, Dense };

/// Binary H x W undersampling pattern. Column-structured masks also record
/// the sampled column index set.
class Mask {
public:
    Mask(std::size_t height, std::size_t width, MaskStructure structure = MaskStructure::Dense)
        : height_(height), width_(width), structure_(structure),
          entries_(height * width, 0) {
        detail::check_shape(height, width);
    }

    static Mask from_columns(std::size_t h, std::size_t w, MaskStructure structure,
                             std::vector<std::size_t> columns) {
        Mask m(h, w, structure);
        m.columns_ = std::move(columns);
        for (std::size_t c : m.columns_) {
            if (c >= w) throw std::invalid_argument("mask: column index out of range");
            for (std::size_t r = 0; r < h; ++r) m.entries_[r * w + c] = 1;
        }
        return m;
    }

    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }
    MaskStructure structure() const { return structure_; }

    std::uint8_t& operator()(std::size_t r, std::size_t c) { return entries_[r * width_ + c]; }
    std::uint8_t operator()(std::size_t r, std::size_t c) const { return entries_[r * width_ + c]; }
    std::uint8_t& operator[](std::size_t i) { return entries_[i]; }
    std::uint8_t operator[](std::size_t i) const { return entries_[i]; }
    std::size_t size() const { return entries_.size(); }

    const std::vector<std::uint8_t>& entries() const { return entries_; }
    std::vector<std::uint8_t>& entries() { return entries_; }
    const std::vector<std::size_t>& columns() const { return columns_; }

    std::size_t count_sampled() const {
        std::size_t n = 0;
        for (auto v : entries_) n += v;
        return n;
    }

private:
    std::size_t height_;
    std::size_t width_;
    MaskStructure structure_;
    std::vector<std::uint8_t> entries_;
    std::vector<std::size_t> columns_;
};

namespace mask_detail {

inline std::size_t center_columns(std::size_t w, double center_fraction) {
    const double nc = center_fraction * static_cast<double>(w);
    const auto rounded = static_cast<std::size_t>(nc + 0.5);
    if (rounded < 1) throw std::invalid_argument("mask: center_fraction*w must be >= 1");
    if (rounded > w) throw std::invalid_argument("mask: center_fraction too large");
    return rounded;
}

} // namespace mask_detail

/// fastMRI-style Cartesian mask: round(cf*w) contiguous fully-sampled center
/// columns, plus each remaining column kept independently with probability
/// p = (w/R - center)/(w - center). Deterministic in seed.
inline Mask make_cartesian_mask(std::size_t h, std::size_t w, double acceleration,
                                double center_fraction, std::uint64_t seed) {
    detail::check_shape(h, w);
    if (!(acceleration > 1.0)) throw std::invalid_argument("mask: acceleration must be > 1");
    const std::size_t nc = mask_detail::center_columns(w, center_fraction);
    const std::size_t lo = (w - nc) / 2;
    const double p = (static_cast<double>(w) / acceleration - static_cast<double>(nc)) /
                     (static_cast<double>(w) - static_cast<double>(nc));
    if (p < 0.0 || p > 1.0) {
        throw std::invalid_argument(
            "mask: infeasible acceleration/center_fraction (column probability outside [0,1])");
    }
    CounterRng rng(seed, RngPurpose::MaskCartesian);
    std::vector<std::size_t> cols;
    for (std::size_t c = 0; c < w; ++c) {
        if (c >= lo && c < lo + nc) {
            cols.push_back(c);
        } else if (rng.uniform(0, static_cast<std::uint32_t>(c)) < p) {
            cols.push_back(c);
        }
    }
    return Mask::from_columns(h, w, MaskStructure::Cartesian1D, std::move(cols));
}

/// 1D variable-density mask: center columns fully sampled; each remaining
/// column kept with probability proportional to a Gaussian density centered
/// at w/2 (sd w/6), scaled so the expected column count matches w/R.
inline Mask make_gaussian_mask_1d(std::size_t h, std::size_t w, double acceleration,
                                  double center_fraction, std::uint64_t seed) {
    detail::check_shape(h, w);
    if (!(acceleration > 1.0)) throw std::invalid_argument("mask: acceleration must be > 1");
    const std::size_t nc = mask_detail::center_columns(w, center_fraction);
    const std::size_t lo = (w - nc) / 2;
    const double target = static_cast<double>(w) / acceleration - static_cast<double>(nc);
    if (target < 0.0 || target > static_cast<double>(w - nc)) {
        throw std::invalid_argument(
            "mask: infeasible acceleration/center_fraction (expected column count outside [0, w-center])");
    }
    const double mu = static_cast<double>(w) / 2.0;
    const double sd = static_cast<double>(w) / 6.0;
    std::vector<double> dens(w, 0.0);
    for (std::size_t c = 0; c < w; ++c) {
        if (c >= lo && c < lo + nc) continue;
        const double z = (static_cast<double>(c) - mu) / sd;
        dens[c] = std::exp(-0.5 * z * z);
    }
    // Scale the density so sum(min(lambda*dens, 1)) hits the target expected
    // count; bisection handles the clipping at probability 1.
    auto expected = [&](double lambda) {
        double s = 0.0;
        for (double d : dens) s += std::min(lambda * d, 1.0);
        return s;
    };
    double hi = 1.0;
    while (expected(hi) < target && hi < 1e12) hi *= 2.0;
    double lop = 0.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lop + hi);
        (expected(mid) < target ? lop : hi) = mid;
    }
    const double lambda = 0.5 * (lop + hi);
    CounterRng rng(seed, RngPurpose::MaskGaussian);
    std::vector<std::size_t> cols;
    for (std::size_t c = 0; c < w; ++c) {
        if (c >= lo && c < lo + nc) {
            cols.push_back(c);
        } else if (rng.uniform(0, static_cast<std::uint32_t>(c)) < std::min(lambda * dens[c], 1.0)) {
            cols.push_back(c);
        }
    }
    return Mask::from_columns(h, w, MaskStructure::Gaussian1D, std::move(cols));
}

/// Entrywise M * k.
inline KSpace apply_mask(const KSpace& k, const Mask& m) {
    if (k.height() != m.height() || k.width() != m.width()) {
        throw std::invalid_argument("apply_mask: shape mismatch");
    }
    KSpace out(k.height(), k.width());
    for (std::size_t i = 0; i < k.size(); ++i) {
        out[i] = m[i] ? k[i] : Complex(0.0, 0.0);
    }
    return out;
}

} // namespace ksg
