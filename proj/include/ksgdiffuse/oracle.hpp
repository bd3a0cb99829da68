#pragma once

#include <stdexcept>

#include "ksgdiffuse/fft.hpp"
#include "ksgdiffuse/grid.hpp"
#include "ksgdiffuse/mask.hpp"

namespace ksg {

/// Closed-form posterior for the prior y_0 ~ N(mu, s2 I) with independent
/// complex components under exact observation of masked k-space coordinates.
struct GaussianPosterior {
    ComplexImage mean;
    RealGrid kspace_variance; // per complex component: s2 unobserved, 0 observed
};

/// mean = F^-1(M x_obs + (1-M) F mu). With unitary F the prior is N(F mu, s2 I)
/// in k-space, so conditioning pins observed coordinates and leaves the rest
/// at the prior.
inline GaussianPosterior gaussian_posterior(const ComplexImage& mu, double s2, const Mask& mask,
                                            const KSpace& x_obs) {
    if (!(s2 > 0.0)) throw std::invalid_argument("gaussian_posterior: s2 must be > 0");
    if (mu.height() != mask.height() || mu.width() != mask.width() ||
        x_obs.height() != mask.height() || x_obs.width() != mask.width()) {
        throw std::invalid_argument("gaussian_posterior: shape mismatch");
    }
    const KSpace kmu = fft2c(mu);
    KSpace mixed(kmu.height(), kmu.width());
    GaussianPosterior post;
    post.kspace_variance = RealGrid(mask.height(), mask.width());
    for (std::size_t i = 0; i < kmu.size(); ++i) {
        mixed[i] = mask[i] ? x_obs[i] : kmu[i];
        post.kspace_variance[i] = mask[i] ? 0.0 : s2;
    }
    post.mean = ifft2c(mixed);
    return post;
}

} // namespace ksg
