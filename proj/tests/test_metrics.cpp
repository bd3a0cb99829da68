#include "doctest.h"

#include <cmath>
#include <limits>

#include "ksgdiffuse/metrics.hpp"
#include "ksgdiffuse/rng.hpp"

using namespace ksg;

namespace {

// Independent PSNR written straight from the definition.
double brute_psnr(const ComplexImage& ref, const ComplexImage& test, double L) {
    double mse = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        const double d = std::abs(ref[i]) - std::abs(test[i]);
        mse += d * d;
    }
    mse /= static_cast<double>(ref.size());
    return 10.0 * std::log10(L * L / mse);
}

// Independent SSIM: explicit per-window loops, no shared helpers.
double brute_ssim(const ComplexImage& ref, const ComplexImage& test, double L) {
    const std::size_t h = ref.height(), w = ref.width(), win = 7;
    const double c1 = 0.0001 * L * L, c2 = 0.0009 * L * L;
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t r = 0; r + win <= h; ++r) {
        for (std::size_t c = 0; c + win <= w; ++c) {
            double ma = 0, mb = 0;
            for (std::size_t i = 0; i < win; ++i) {
                for (std::size_t j = 0; j < win; ++j) {
                    ma += std::abs(ref(r + i, c + j));
                    mb += std::abs(test(r + i, c + j));
                }
            }
            ma /= 49.0;
            mb /= 49.0;
            double va = 0, vb = 0, cab = 0;
            for (std::size_t i = 0; i < win; ++i) {
                for (std::size_t j = 0; j < win; ++j) {
                    const double da = std::abs(ref(r + i, c + j)) - ma;
                    const double db = std::abs(test(r + i, c + j)) - mb;
                    va += da * da;
                    vb += db * db;
                    cab += da * db;
                }
            }
            va /= 48.0;
            vb /= 48.0;
            cab /= 48.0;
            total += ((2 * ma * mb + c1) * (2 * cab + c2)) /
                     ((ma * ma + mb * mb + c1) * (va + vb + c2));
            ++count;
        }
    }
    return total / static_cast<double>(count);
}

ComplexImage random_image(std::size_t h, std::size_t w, std::uint64_t seed) {
    ComplexImage img = CounterRng(seed, RngPurpose::Phantom).normal_field(0, h, w, 1.0);
    for (auto& v : img.data()) v += Complex(3.0, 0.0); // keep magnitudes well away from 0
    return img;
}

} // namespace

TEST_CASE("psnr basics") {
    const ComplexImage a = random_image(8, 8, 1);
    CHECK(std::isinf(psnr(a, a)));
    CHECK(psnr(a, a) > 0.0); // +inf sentinel

    ComplexImage ones(8, 8), point9(8, 8);
    for (auto& v : ones.data()) v = Complex(1.0, 0.0);
    for (auto& v : point9.data()) v = Complex(0.9, 0.0);
    CHECK(psnr(ones, point9, 1.0) == doctest::Approx(20.0).epsilon(1e-12));

    const ComplexImage wrong = random_image(4, 8, 2);
    CHECK_THROWS_AS(psnr(a, wrong), std::invalid_argument);
}

TEST_CASE("psnr and ssim agree with brute-force reimplementations") {
    const ComplexImage a = random_image(16, 20, 10);
    const ComplexImage b = random_image(16, 20, 11);
    const double L = 4.5;
    CHECK(psnr(a, b, L) == doctest::Approx(brute_psnr(a, b, L)).epsilon(1e-9));
    CHECK(ssim(a, b, L) == doctest::Approx(brute_ssim(a, b, L)).epsilon(1e-9));
    // default data range = reference max magnitude
    double mx = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) mx = std::max(mx, std::abs(a[i]));
    CHECK(psnr(a, b) == doctest::Approx(brute_psnr(a, b, mx)).epsilon(1e-9));
    CHECK(ssim(a, b) == doctest::Approx(brute_ssim(a, b, mx)).epsilon(1e-9));
}

TEST_CASE("ssim basics") {
    const ComplexImage a = random_image(9, 9, 3);
    CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));

    ComplexImage shifted(9, 9);
    for (std::size_t i = 0; i < a.size(); ++i) shifted[i] = a[i] + Complex(5.0, 0.0);
    double mx = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) mx = std::max(mx, std::abs(a[i]));
    CHECK(ssim(a, shifted, mx) < 1.0); // luminance penalty

    const ComplexImage tiny = random_image(6, 9, 4);
    CHECK_THROWS_AS(ssim(tiny, tiny), std::invalid_argument);
}

TEST_CASE("psnr decreases monotonically with noise amplitude") {
    const ComplexImage ref = random_image(12, 12, 5);
    const ComplexImage noise = CounterRng(6, RngPurpose::Phantom).normal_field(0, 12, 12, 1.0);
    double prev = std::numeric_limits<double>::infinity();
    for (const double amp : {0.01, 0.03, 0.1, 0.3, 1.0}) {
        ComplexImage test(12, 12);
        for (std::size_t i = 0; i < ref.size(); ++i) test[i] = ref[i] + amp * noise[i];
        const double p = psnr(ref, test);
        CHECK(p < prev);
        prev = p;
    }
}

TEST_CASE("metrics are invariant to a global phase rotation of both images") {
    const ComplexImage a = random_image(10, 10, 7);
    const ComplexImage b = random_image(10, 10, 8);
    const Complex rot = std::polar(1.0, 0.83);
    ComplexImage ar(10, 10), br(10, 10);
    for (std::size_t i = 0; i < a.size(); ++i) {
        ar[i] = a[i] * rot;
        br[i] = b[i] * rot;
    }
    CHECK(psnr(a, b) == doctest::Approx(psnr(ar, br)).epsilon(1e-10));
    CHECK(ssim(a, b) == doctest::Approx(ssim(ar, br)).epsilon(1e-10));
}
