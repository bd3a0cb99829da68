#pragma once

#include <cmath>
#include <cstdint>

#include "ksgdiffuse/grid.hpp"
#include "ksgdiffuse/rng.hpp"

namespace ksg {

/// Smooth complex Gaussian bump centered on the grid; the standard prior
/// mean for desk-scale phantoms.
inline ComplexImage smooth_bump(std::size_t h, std::size_t w, double amplitude = 5.0) {
    ComplexImage img(h, w);
    const double cy = (static_cast<double>(h) - 1.0) / 2.0;
    const double cx = (static_cast<double>(w) - 1.0) / 2.0;
    const double sy = static_cast<double>(h) / 4.0;
    const double sx = static_cast<double>(w) / 4.0;
    for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
            const double dy = (static_cast<double>(r) - cy) / sy;
            const double dx = (static_cast<double>(c) - cx) / sx;
            const double g = amplitude * std::exp(-(dy * dy + dx * dx));
            img(r, c) = Complex(g, 0.3 * g);
        }
    }
    return img;
}

/// Draw y_0 ~ N(mu, s2 I), independent real/imaginary components.
inline ComplexImage sample_gaussian_phantom(const ComplexImage& mu, double s2,
                                            std::uint64_t seed, std::uint32_t stream = 0) {
    const CounterRng rng(seed, RngPurpose::Phantom, stream);
    ComplexImage out = rng.normal_field(0, mu.height(), mu.width(), std::sqrt(s2));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += mu[i];
    return out;
}

} // namespace ksg
