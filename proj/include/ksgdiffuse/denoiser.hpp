#pragma once

#include <cmath>
#include <stdexcept>

#include "ksgdiffuse/grid.hpp"
#include "ksgdiffuse/schedule.hpp"

namespace ksg {

/// Noise predictor: maps (y_t, original timestep t) to a predicted noise
/// field of identical shape. Implementations must be deterministic.
class Denoiser {
public:
    virtual ~Denoiser() = default;
    virtual ComplexImage predict_noise(const ComplexImage& y_t, std::size_t t,
                                       const Schedule& schedule) const = 0;
};

/// Always predicts the zero field.
class ZeroDenoiser final : public Denoiser {
public:
    ComplexImage predict_noise(const ComplexImage& y_t, std::size_t /*t*/,
                               const Schedule& /*schedule*/) const override {
        return ComplexImage(y_t.height(), y_t.width());
    }
};

/// Exact noise predictor for the prior y_0 ~ N(mu, s2 I) (independent real
/// and imaginary components). With y_t ~ N(sqrt(ab)*y_0, (1-ab)I),
///   E[eps | y_t] = (y_t - sqrt(ab)*m_post) / sqrt(1-ab),
///   m_post = (sqrt(ab)*s2*y_t + (1-ab)*mu) / (ab*s2 + (1-ab)).
class GaussianPriorDenoiser final : public Denoiser {
public:
    GaussianPriorDenoiser(ComplexImage mu, double s2) : mu_(std::move(mu)), s2_(s2) {
        if (!(s2 > 0.0)) throw std::invalid_argument("GaussianPriorDenoiser: s2 must be > 0");
        mu_.require_finite("GaussianPriorDenoiser mu");
    }

    const ComplexImage& mu() const { return mu_; }
    double s2() const { return s2_; }

    ComplexImage predict_noise(const ComplexImage& y_t, std::size_t t,
                               const Schedule& schedule) const override {
        if (!y_t.same_shape(mu_)) {
            throw std::invalid_argument("GaussianPriorDenoiser: shape mismatch");
        }
        const std::size_t j = schedule.index_of_timestep(t);
        const double ab = schedule.alpha_bar()[j - 1];
        const double sab = std::sqrt(ab);
        const double denom = ab * s2_ + (1.0 - ab);
        const double inv_s1ab = 1.0 / std::sqrt(1.0 - ab);
        ComplexImage eps(y_t.height(), y_t.width());
        for (std::size_t i = 0; i < y_t.size(); ++i) {
            const Complex m_post = (sab * s2_ * y_t[i] + (1.0 - ab) * mu_[i]) / denom;
            eps[i] = (y_t[i] - sab * m_post) * inv_s1ab;
        }
        return eps;
    }

private:
    ComplexImage mu_;
    double s2_;
};

} // namespace ksg
