#include "doctest.h"

#include <cmath>

#include "ksgdiffuse/fft.hpp"
#include "ksgdiffuse/oracle.hpp"
#include "ksgdiffuse/phantom.hpp"
#include "ksgdiffuse/rng.hpp"

using namespace ksg;

TEST_CASE("oracle degenerate masks") {
    const ComplexImage mu = smooth_bump(6, 6);
    const ComplexImage truth = sample_gaussian_phantom(mu, 1.0, 3);
    const KSpace x_full = fft2c(truth);

    Mask ones(6, 6);
    for (std::size_t i = 0; i < ones.size(); ++i) ones[i] = 1;
    const GaussianPosterior full = gaussian_posterior(mu, 1.0, ones, x_full);
    for (std::size_t i = 0; i < full.mean.size(); ++i) {
        CHECK(std::abs(full.mean[i] - truth[i]) <= 1e-12);
        CHECK(full.kspace_variance[i] == 0.0);
    }

    Mask zeros(6, 6);
    const KSpace x_none = apply_mask(x_full, zeros);
    const GaussianPosterior none = gaussian_posterior(mu, 2.5, zeros, x_none);
    for (std::size_t i = 0; i < none.mean.size(); ++i) {
        CHECK(std::abs(none.mean[i] - mu[i]) <= 1e-12);
        CHECK(none.kspace_variance[i] == 2.5);
    }
}

TEST_CASE("oracle self-consistency and validation") {
    const ComplexImage mu = smooth_bump(8, 8);
    const Mask m = make_cartesian_mask(8, 8, 2.0, 0.25, 9);
    const KSpace x_obs = apply_mask(fft2c(sample_gaussian_phantom(mu, 1.0, 4)), m);
    const GaussianPosterior post = gaussian_posterior(mu, 1.0, m, x_obs);
    const KSpace k = fft2c(post.mean);
    for (std::size_t i = 0; i < k.size(); ++i) {
        if (m[i]) {
            CHECK(std::abs(k[i] - x_obs[i]) <= 1e-12);
            CHECK(post.kspace_variance[i] == 0.0);
        } else {
            CHECK(post.kspace_variance[i] == 1.0);
        }
    }
    CHECK_THROWS_AS(gaussian_posterior(mu, 0.0, m, x_obs), std::invalid_argument);
    const Mask wrong(4, 8);
    CHECK_THROWS_AS(gaussian_posterior(mu, 1.0, wrong, x_obs), std::invalid_argument);
}

TEST_CASE("oracle linearity in x_obs with a zero-mean prior") {
    ComplexImage mu0(8, 8); // zero prior mean
    const Mask m = make_cartesian_mask(8, 8, 2.0, 0.25, 11);
    const KSpace x1 = apply_mask(fft2c(ComplexImage(
                          CounterRng(1, RngPurpose::Phantom).normal_field(0, 8, 8, 1.0))), m);
    const KSpace x2 = apply_mask(fft2c(ComplexImage(
                          CounterRng(2, RngPurpose::Phantom).normal_field(0, 8, 8, 1.0))), m);
    KSpace xsum(8, 8);
    for (std::size_t i = 0; i < xsum.size(); ++i) xsum[i] = x1[i] + x2[i];
    const auto p1 = gaussian_posterior(mu0, 1.0, m, x1);
    const auto p2 = gaussian_posterior(mu0, 1.0, m, x2);
    const auto ps = gaussian_posterior(mu0, 1.0, m, xsum);
    for (std::size_t i = 0; i < ps.mean.size(); ++i) {
        CHECK(std::abs(ps.mean[i] - (p1.mean[i] + p2.mean[i])) <= 1e-12);
    }
}

TEST_CASE("oracle verified by brute-force Monte-Carlo conditioning on a 2x2 grid") {
    // mu = 0, s2 = 1, observe one coefficient = 2 + 0i. Direct conditioning:
    // fix the observed coefficient, draw the three unobserved ones from the
    // prior, average the inverse transforms.
    ComplexImage mu0(2, 2);
    Mask m(2, 2);
    m(0, 1) = 1;
    KSpace x_obs(2, 2);
    x_obs(0, 1) = Complex(2.0, 0.0);
    const GaussianPosterior post = gaussian_posterior(mu0, 1.0, m, x_obs);

    const CounterRng rng(99, RngPurpose::Phantom);
    ComplexImage acc(2, 2);
    const std::size_t n_draws = 1000000;
    for (std::size_t d = 0; d < n_draws; ++d) {
        KSpace k(2, 2);
        std::uint32_t blk = 0;
        for (std::size_t i = 0; i < 4; ++i) {
            if (m[i]) {
                k[i] = x_obs[i];
            } else {
                const auto [re, im] =
                    rng.normal_pair(static_cast<std::uint32_t>(d), blk++);
                k[i] = Complex(re, im);
            }
        }
        const ComplexImage img = ifft2c(k);
        for (std::size_t i = 0; i < 4; ++i) acc[i] += img[i];
    }
    for (std::size_t i = 0; i < 4; ++i) acc[i] /= static_cast<double>(n_draws);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(std::abs(acc[i] - post.mean[i]) <= 3e-3);
    }
    // the analytic mean is F^-1 of [2 at the observed coordinate, 0 elsewhere]
    KSpace only_obs(2, 2);
    only_obs(0, 1) = Complex(2.0, 0.0);
    const ComplexImage direct = ifft2c(only_obs);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(std::abs(direct[i] - post.mean[i]) <= 1e-12);
    }
}

TEST_CASE("oracle brute force with a nonzero prior mean on a 2x2 grid") {
    const ComplexImage mu = smooth_bump(2, 2, 1.5);
    Mask m(2, 2);
    m(1, 0) = 1;
    m(1, 1) = 1;
    const KSpace x_obs = apply_mask(fft2c(sample_gaussian_phantom(mu, 0.7, 21)), m);
    const GaussianPosterior post = gaussian_posterior(mu, 0.7, m, x_obs);

    const KSpace kmu = fft2c(mu);
    const CounterRng rng(100, RngPurpose::Phantom);
    ComplexImage acc(2, 2);
    const std::size_t n_draws = 400000;
    const double sd = std::sqrt(0.7);
    for (std::size_t d = 0; d < n_draws; ++d) {
        KSpace k(2, 2);
        std::uint32_t blk = 0;
        for (std::size_t i = 0; i < 4; ++i) {
            if (m[i]) {
                k[i] = x_obs[i];
            } else {
                const auto [re, im] = rng.normal_pair(static_cast<std::uint32_t>(d), blk++);
                k[i] = kmu[i] + Complex(sd * re, sd * im);
            }
        }
        const ComplexImage img = ifft2c(k);
        for (std::size_t i = 0; i < 4; ++i) acc[i] += img[i];
    }
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(std::abs(acc[i] / static_cast<double>(n_draws) - post.mean[i]) <= 3e-3);
    }
}
