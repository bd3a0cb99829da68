#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "ksgdiffuse/grid.hpp"

namespace ksg {

struct MetricReport {
    double psnr = 0.0;
    double ssim = 0.0;
    double data_range = 0.0;
};

namespace metrics_detail {

inline RealGrid magnitude(const ComplexImage& img) {
    RealGrid m(img.height(), img.width());
    for (std::size_t i = 0; i < img.size(); ++i) m[i] = std::abs(img[i]);
    return m;
}

inline double max_value(const RealGrid& g) {
    double m = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) m = std::max(m, g[i]);
    return m;
}

} // namespace metrics_detail

/// PSNR on magnitude images: 10 log10(L^2 / MSE); +inf for identical inputs.
/// L defaults to the reference's max magnitude.
inline double psnr(const ComplexImage& reference, const ComplexImage& test,
                   std::optional<double> data_range = std::nullopt) {
    if (!reference.same_shape(test)) throw std::invalid_argument("psnr: shape mismatch");
    const RealGrid mr = metrics_detail::magnitude(reference);
    const RealGrid mt = metrics_detail::magnitude(test);
    double mse = 0.0;
    for (std::size_t i = 0; i < mr.size(); ++i) {
        const double d = mr[i] - mt[i];
        mse += d * d;
    }
    mse /= static_cast<double>(mr.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    const double L = data_range.value_or(metrics_detail::max_value(mr));
    return 10.0 * std::log10(L * L / mse);
}

/// Mean local SSIM on magnitude images: 7x7 uniform window, valid-window
/// cropping, C1 = (0.01 L)^2, C2 = (0.03 L)^2.
inline double ssim(const ComplexImage& reference, const ComplexImage& test,
                   std::optional<double> data_range = std::nullopt, std::size_t window = 7) {
    if (!reference.same_shape(test)) throw std::invalid_argument("ssim: shape mismatch");
    const std::size_t h = reference.height(), w = reference.width();
    if (h < window || w < window) {
        throw std::invalid_argument("ssim: image smaller than window");
    }
    const RealGrid a = metrics_detail::magnitude(reference);
    const RealGrid b = metrics_detail::magnitude(test);
    const double L = data_range.value_or(metrics_detail::max_value(a));
    const double c1 = (0.01 * L) * (0.01 * L);
    const double c2 = (0.03 * L) * (0.03 * L);
    const double nw = static_cast<double>(window * window);
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t r = 0; r + window <= h; ++r) {
        for (std::size_t c = 0; c + window <= w; ++c) {
            double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
            for (std::size_t i = 0; i < window; ++i) {
                for (std::size_t j = 0; j < window; ++j) {
                    const double va = a(r + i, c + j);
                    const double vb = b(r + i, c + j);
                    sa += va; sb += vb;
                    saa += va * va; sbb += vb * vb; sab += va * vb;
                }
            }
            const double ma = sa / nw, mb = sb / nw;
            // unbiased (N-1) covariance, matching common SSIM implementations
            const double va = (saa - nw * ma * ma) / (nw - 1.0);
            const double vb = (sbb - nw * mb * mb) / (nw - 1.0);
            const double cab = (sab - nw * ma * mb) / (nw - 1.0);
            const double num = (2.0 * ma * mb + c1) * (2.0 * cab + c2);
            const double den = (ma * ma + mb * mb + c1) * (va + vb + c2);
            total += num / den;
            ++count;
        }
    }
    return total / static_cast<double>(count);
}

inline MetricReport compute_metrics(const ComplexImage& reference, const ComplexImage& test,
                                    std::optional<double> data_range = std::nullopt) {
    MetricReport rep;
    rep.data_range = data_range.value_or(
        metrics_detail::max_value(metrics_detail::magnitude(reference)));
    rep.psnr = psnr(reference, test, rep.data_range);
    rep.ssim = ssim(reference, test, rep.data_range);
    return rep;
}

} // namespace ksg
