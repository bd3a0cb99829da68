#include "doctest.h"

#include <cmath>
#include <vector>

#include "ksgdiffuse/denoiser.hpp"
#include "ksgdiffuse/rng.hpp"
#include "ksgdiffuse/schedule.hpp"

using namespace ksg;

namespace {

// Schedule whose alpha_bar at step 2 is ~0.81 (linear beta 0.1, 0.1).
const Schedule& two_step() {
    static const Schedule s = Schedule::linear(2, 0.1, 0.1);
    return s;
}

} // namespace

TEST_CASE("zero denoiser returns a zero field of the input shape") {
    const ZeroDenoiser d;
    const ComplexImage y = CounterRng(1, RngPurpose::Phantom).normal_field(0, 5, 9, 1.0);
    const ComplexImage eps = d.predict_noise(y, 1, two_step());
    CHECK(eps.height() == 5);
    CHECK(eps.width() == 9);
    CHECK(eps.norm2() == 0.0);
}

TEST_CASE("gaussian denoiser hand value: mu=0, s2=1, abar=0.5, y=1") {
    // one step with beta = 0.5 gives abar_1 = 0.5 exactly
    const Schedule s = Schedule::linear(1, 0.5, 0.5);
    ComplexImage mu(1, 1);
    const GaussianPriorDenoiser d(mu, 1.0);
    ComplexImage y(1, 1);
    y[0] = Complex(1.0, 0.0);
    const ComplexImage eps = d.predict_noise(y, 1, s);
    // m_post = sqrt(0.5)/(0.5+0.5) = 0.70710..., eps = (1 - sqrt(0.5)*m_post)/sqrt(0.5)
    CHECK(eps[0].real() == doctest::Approx(0.7071067811865475).epsilon(1e-12));
    CHECK(eps[0].imag() == 0.0);
}

TEST_CASE("gaussian denoiser small-s2 limit collapses to the point-mass predictor") {
    const Schedule s = Schedule::linear(1, 0.25, 0.25); // abar = 0.75
    ComplexImage mu(1, 1);
    mu[0] = Complex(2.0, -1.0);
    const GaussianPriorDenoiser d(mu, 1e-12);
    ComplexImage y(1, 1);
    y[0] = Complex(0.5, 0.25);
    const ComplexImage eps = d.predict_noise(y, 1, s);
    const double sab = std::sqrt(0.75), s1ab = std::sqrt(0.25);
    CHECK(eps[0].real() == doctest::Approx((0.5 - sab * 2.0) / s1ab).epsilon(1e-9));
    CHECK(eps[0].imag() == doctest::Approx((0.25 - sab * -1.0) / s1ab).epsilon(1e-9));
}

TEST_CASE("gaussian denoiser matches Monte-Carlo regression E[eps | y_t]") {
    // 1-pixel problem: y0 ~ N(mu, s2), eps ~ N(0,1), y_t = sqrt(ab) y0 + sqrt(1-ab) eps.
    // Average eps within narrow bins of y_t and compare with the closed form.
    const double mu = 0.7, s2 = 0.8, ab = 0.35;
    // schedule with abar_1 = 0.35
    const Schedule s = Schedule::linear(1, 0.65, 0.65);
    REQUIRE(s.alpha_bar()[0] == doctest::Approx(ab).epsilon(1e-15));
    ComplexImage muimg(1, 1);
    muimg[0] = Complex(mu, mu);
    const GaussianPriorDenoiser den(muimg, s2);

    const CounterRng rng(77, RngPurpose::Phantom);
    const double targets[] = {-0.5, 0.3, 1.2};
    const double half_width = 0.05;
    double bin_sum[3] = {0, 0, 0}, bin_y[3] = {0, 0, 0};
    std::size_t bin_n[3] = {0, 0, 0};
    const std::size_t n_samples = 1000000;
    for (std::size_t i = 0; i < n_samples; ++i) {
        const auto [z0, z1] = rng.normal_pair(0, static_cast<std::uint32_t>(i));
        const double y0 = mu + std::sqrt(s2) * z0;
        const double eps = z1;
        const double yt = std::sqrt(ab) * y0 + std::sqrt(1.0 - ab) * eps;
        for (int b = 0; b < 3; ++b) {
            if (std::abs(yt - targets[b]) < half_width) {
                bin_sum[b] += eps;
                bin_y[b] += yt;
                ++bin_n[b];
            }
        }
    }
    for (int b = 0; b < 3; ++b) {
        REQUIRE(bin_n[b] > 10000);
        const double empirical = bin_sum[b] / static_cast<double>(bin_n[b]);
        const double y_center = bin_y[b] / static_cast<double>(bin_n[b]);
        ComplexImage y(1, 1);
        y[0] = Complex(y_center, y_center);
        const double closed = den.predict_noise(y, 1, s)[0].real();
        CHECK(std::abs(empirical - closed) <= 1e-2);
    }
}

TEST_CASE("gaussian denoiser determinism and validation") {
    const Schedule s = Schedule::cosine(50);
    const ComplexImage mu = CounterRng(3, RngPurpose::Phantom).normal_field(0, 4, 4, 1.0);
    const GaussianPriorDenoiser d(mu, 0.5);
    const ComplexImage y = CounterRng(4, RngPurpose::Phantom).normal_field(0, 4, 4, 1.0);
    const ComplexImage e1 = d.predict_noise(y, 25, s);
    const ComplexImage e2 = d.predict_noise(y, 25, s);
    for (std::size_t i = 0; i < e1.size(); ++i) CHECK(e1[i] == e2[i]); // bit-identical
    CHECK(e1.all_finite());

    CHECK_THROWS_AS(d.predict_noise(y, 51, s), std::invalid_argument); // invalid t
    const ComplexImage bad = CounterRng(5, RngPurpose::Phantom).normal_field(0, 3, 4, 1.0);
    CHECK_THROWS_AS(d.predict_noise(bad, 25, s), std::invalid_argument); // shape
    CHECK_THROWS_AS(GaussianPriorDenoiser(mu, 0.0), std::invalid_argument);
}
