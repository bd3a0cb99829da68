#pragma once

#include <bit>
#include <numbers>
#include <vector>

#include "ksgdiffuse/grid.hpp"

namespace ksg {

// Centered unitary 2D Fourier transforms: fftshift(FFT(ifftshift(x))) with
// 1/sqrt(H*W) normalization in both directions, DC at (H/2, W/2).
namespace fft_detail {

/// In-place iterative radix-2 FFT. n must be a power of two.
/// No normalization; `inverse` flips the twiddle sign.
inline void fft_pow2(std::vector<Complex>& a, bool inverse) {
    const std::size_t n = a.size();
    if (n <= 1) return;
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 2.0 : -2.0) * std::numbers::pi / static_cast<double>(len);
        const Complex wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            Complex w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const Complex u = a[i + k];
                const Complex v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

/// Arbitrary-length DFT via Bluestein's chirp-z reduction to a
/// power-of-two convolution. No normalization.
inline void fft_bluestein(std::vector<Complex>& a, bool inverse) {
    const std::size_t n = a.size();
    std::size_t m = 1;
    while (m < 2 * n - 1) m <<= 1;

    // chirp[k] = exp(+-i*pi*k^2/n); k^2 taken mod 2n to keep the angle small
    std::vector<Complex> chirp(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t k2 = (k * k) % (2 * n);
        const double ang = std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n);
        chirp[k] = inverse ? Complex(std::cos(ang), std::sin(ang))
                           : Complex(std::cos(ang), -std::sin(ang));
    }

    std::vector<Complex> u(m, Complex(0.0, 0.0));
    std::vector<Complex> v(m, Complex(0.0, 0.0));
    for (std::size_t k = 0; k < n; ++k) u[k] = a[k] * chirp[k];
    v[0] = std::conj(chirp[0]);
    for (std::size_t k = 1; k < n; ++k) {
        v[k] = std::conj(chirp[k]);
        v[m - k] = v[k];
    }
    fft_pow2(u, false);
    fft_pow2(v, false);
    for (std::size_t k = 0; k < m; ++k) u[k] *= v[k];
    fft_pow2(u, true);
    const double scale = 1.0 / static_cast<double>(m);
    for (std::size_t k = 0; k < n; ++k) a[k] = u[k] * scale * chirp[k];
}

inline void fft_1d(std::vector<Complex>& a, bool inverse) {
    if (std::has_single_bit(a.size())) {
        fft_pow2(a, inverse);
    } else {
        fft_bluestein(a, inverse);
    }
}

/// 2D transform with pre/post center shifts and unitary scaling.
inline ComplexGrid centered_2d(const ComplexGrid& in, bool inverse) {
    const std::size_t h = in.height();
    const std::size_t w = in.width();

    // ifftshift on input: index map src[(r + h/2) % h][(c + w/2) % w]
    ComplexGrid work(h, w);
    const std::size_t rh = h / 2, rw = w / 2;
    for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
            work(r, c) = in((r + rh) % h, (c + rw) % w);
        }
    }

    std::vector<Complex> line;
    line.resize(w);
    for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) line[c] = work(r, c);
        fft_1d(line, inverse);
        for (std::size_t c = 0; c < w; ++c) work(r, c) = line[c];
    }
    line.resize(h);
    for (std::size_t c = 0; c < w; ++c) {
        for (std::size_t r = 0; r < h; ++r) line[r] = work(r, c);
        fft_1d(line, inverse);
        for (std::size_t r = 0; r < h; ++r) work(r, c) = line[r];
    }

    // fftshift on output: dst[(r + (h - h/2)) % h] = src[r], i.e. dst[r] = src[(r + h - rh') ...]
    // with rh' = (h + 1) / 2 so that fftshift(ifftshift(x)) = x for odd sizes too.
    const double scale = 1.0 / std::sqrt(static_cast<double>(h) * static_cast<double>(w));
    ComplexGrid out(h, w);
    const std::size_t sh = (h + 1) / 2, sw = (w + 1) / 2;
    for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
            out(r, c) = work((r + sh) % h, (c + sw) % w) * scale;
        }
    }
    return out;
}

} // namespace fft_detail

/// Centered unitary forward 2D DFT.
inline KSpace fft2c(const ComplexImage& img) {
    return KSpace(fft_detail::centered_2d(img, false));
}

/// Centered unitary inverse 2D DFT.
inline ComplexImage ifft2c(const KSpace& k) {
    return ComplexImage(fft_detail::centered_2d(k, true));
}

} // namespace ksg
