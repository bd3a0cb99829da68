#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

#include "ksgdiffuse/denoiser.hpp"
#include "ksgdiffuse/fft.hpp"
#include "ksgdiffuse/grid.hpp"
#include "ksgdiffuse/mask.hpp"
#include "ksgdiffuse/rng.hpp"
#include "ksgdiffuse/schedule.hpp"

namespace ksg {

/// Non-finite state detected mid-chain.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SamplerConfig {
    std::size_t T = 4000;
    std::size_t k = 40;
    std::size_t N = 10;
    std::size_t T_refine = 20;
    bool ksg_noise = true;
    bool refine = true;
    bool keep_samples = false;
    std::uint64_t seed = 0;
    std::size_t threads = 0; // 0 = hardware concurrency

    void validate() const {
        if (T == 0 || k == 0 || N == 0) {
            throw std::invalid_argument("sampler config: T, k, N must be positive");
        }
        if (T / k < 1) throw std::invalid_argument("sampler config: floor(T/k) must be >= 1");
        if (refine && T_refine >= T) {
            throw std::invalid_argument("sampler config: T_refine must be < T");
        }
    }
};

struct ReconResult {
    ComplexImage mean;
    RealGrid variance;                // per-pixel variance of |sample| over coarse chains
    std::vector<ComplexImage> samples;
    double speedup_factor = 1.0;
    double coarse_seconds = 0.0;
    double refine_seconds = 0.0;
    std::size_t coarse_steps = 0;
};

/// T*N / (T*N/k + T_refine); k exactly when refinement is disabled.
inline double speedup_factor(const SamplerConfig& cfg) {
    cfg.validate();
    if (!cfg.refine) return static_cast<double>(cfg.k);
    const double tn = static_cast<double>(cfg.T) * static_cast<double>(cfg.N);
    return tn / (tn / static_cast<double>(cfg.k) + static_cast<double>(cfg.T_refine));
}

/// One reverse-diffusion update at step j (1-based within `schedule`):
/// y'_{j-1} = (y_j - ((1-a_j)/sqrt(1-ab_j)) * eps) / sqrt(a_j) + sigma_j z.
/// The stochastic term draws from `noise_rng` at counter step j; sigma_1 = 0
/// makes the final step deterministic.
inline ComplexImage reverse_step(const ComplexImage& y, std::size_t j,
                                 const Schedule& schedule, const Denoiser& denoiser,
                                 const CounterRng& noise_rng) {
    const double a = schedule.alpha()[j - 1];
    const double ab = schedule.alpha_bar()[j - 1];
    const double s2 = schedule.sigma2()[j - 1];
    const ComplexImage eps = denoiser.predict_noise(y, schedule.timestep(j), schedule);
    if (!eps.same_shape(y)) throw std::invalid_argument("reverse_step: denoiser shape mismatch");
    const double coef = (1.0 - a) / std::sqrt(1.0 - ab);
    const double inv_sa = 1.0 / std::sqrt(a);
    ComplexImage out(y.height(), y.width());
    for (std::size_t i = 0; i < y.size(); ++i) {
        out[i] = (y[i] - coef * eps[i]) * inv_sa;
    }
    if (s2 > 0.0) {
        const ComplexImage z = noise_rng.normal_field(static_cast<std::uint32_t>(j),
                                                      y.height(), y.width(), std::sqrt(s2));
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += z[i];
    }
    if (!out.all_finite()) throw NumericalError("reverse_step: non-finite state");
    return out;
}

/// K-space guidance mix at post-step level 1-abar: replaces observed k-space
/// coordinates with x_obs, optionally noised by F(N(0, level*I)) with the
/// noise field drawn in the image domain.
inline ComplexImage ksg_step(const ComplexImage& y_prime, double level, const KSpace& x_obs,
                             const Mask& mask, bool ksg_noise, const CounterRng& noise_rng,
                             std::uint32_t step) {
    if (y_prime.height() != mask.height() || y_prime.width() != mask.width() ||
        x_obs.height() != mask.height() || x_obs.width() != mask.width()) {
        throw std::invalid_argument("ksg_step: shape mismatch");
    }
    const KSpace ky = fft2c(y_prime);
    KSpace mixed(ky.height(), ky.width());
    if (ksg_noise && level > 0.0) {
        const ComplexImage nz = noise_rng.normal_field(step, y_prime.height(), y_prime.width(),
                                                       std::sqrt(level));
        const KSpace kn = fft2c(nz);
        for (std::size_t i = 0; i < ky.size(); ++i) {
            mixed[i] = mask[i] ? x_obs[i] + kn[i] : ky[i];
        }
    } else {
        for (std::size_t i = 0; i < ky.size(); ++i) {
            mixed[i] = mask[i] ? x_obs[i] : ky[i];
        }
    }
    ComplexImage out = ifft2c(mixed);
    if (!out.all_finite()) throw NumericalError("ksg_step: non-finite state");
    return out;
}

/// Direct replacement of observed coordinates (ksg_step with no noise).
inline ComplexImage project_consistent(const ComplexImage& y, const KSpace& x_obs,
                                       const Mask& mask) {
    return ksg_step(y, 0.0, x_obs, mask, false, CounterRng(0, RngPurpose::KsgNoise), 0);
}

/// Plain reverse diffusion from y_T ~ N(0, I) down to t = 0.
inline ComplexImage sample_unconditional(std::size_t h, std::size_t w, const Schedule& schedule,
                                         const Denoiser& denoiser, std::uint64_t seed,
                                         std::uint32_t chain = 0) {
    const CounterRng init_rng(seed, RngPurpose::ChainInit, chain);
    const CounterRng rev_rng(seed, RngPurpose::ReverseNoise, chain);
    ComplexImage y = init_rng.normal_field(0, h, w, 1.0);
    for (std::size_t j = schedule.num_steps(); j >= 1; --j) {
        y = reverse_step(y, j, schedule, denoiser, rev_rng);
    }
    return y;
}

/// KSG-guided reverse diffusion: alternates reverse_step and ksg_step from
/// t = T down to 0. The mix after step j happens at level 1 - abar_{j-1}
/// (zero at the last step, so M F(y_0) = x_obs).
inline ComplexImage sample_ksg(const KSpace& x_obs, const Mask& mask, const Schedule& schedule,
                               const Denoiser& denoiser, bool ksg_noise, std::uint64_t seed,
                               std::uint32_t chain = 0) {
    const CounterRng init_rng(seed, RngPurpose::ChainInit, chain);
    const CounterRng rev_rng(seed, RngPurpose::ReverseNoise, chain);
    const CounterRng ksg_rng(seed, RngPurpose::KsgNoise, chain);
    ComplexImage y = init_rng.normal_field(0, x_obs.height(), x_obs.width(), 1.0);
    for (std::size_t j = schedule.num_steps(); j >= 1; --j) {
        y = reverse_step(y, j, schedule, denoiser, rev_rng);
        const double level = 1.0 - schedule.alpha_bar_prev(j);
        y = ksg_step(y, level, x_obs, mask, ksg_noise, ksg_rng, static_cast<std::uint32_t>(j));
    }
    return y;
}

/// Unbiased per-pixel sample variance of the magnitudes |y| (divisor N-1;
/// zero map for a single sample).
inline RealGrid variance_map(const std::vector<ComplexImage>& samples) {
    if (samples.empty()) throw std::invalid_argument("variance_map: no samples");
    const std::size_t h = samples[0].height(), w = samples[0].width();
    RealGrid var(h, w);
    if (samples.size() == 1) return var;
    for (const auto& s : samples) {
        if (!s.same_shape(samples[0])) throw std::invalid_argument("variance_map: shape mismatch");
    }
    const double n = static_cast<double>(samples.size());
    for (std::size_t i = 0; i < h * w; ++i) {
        double mean = 0.0;
        for (const auto& s : samples) mean += std::abs(s[i]);
        mean /= n;
        double ss = 0.0;
        for (const auto& s : samples) {
            const double d = std::abs(s[i]) - mean;
            ss += d * d;
        }
        var[i] = ss / (n - 1.0);
    }
    return var;
}

/// Per-chain denoiser supplier. Pure denoisers can hand out one shared
/// instance; remote plugins must return one connection per concurrent chain.
using DenoiserFactory = std::function<std::shared_ptr<const Denoiser>()>;

inline DenoiserFactory shared_denoiser(std::shared_ptr<const Denoiser> d) {
    return [d]() { return d; };
}

/// Coarse-to-fine reconstruction: N KSG chains on respace(schedule, T/k),
/// averaged, then (optionally) refined with the last T_refine steps of the
/// full schedule using direct replacement, and finally projected onto the
/// data-consistency constraint.
inline ReconResult c2f_reconstruct(const KSpace& x_obs, const Mask& mask,
                                   const Schedule& full_schedule, const DenoiserFactory& factory,
                                   const SamplerConfig& cfg) {
    cfg.validate();
    if (full_schedule.num_steps() != cfg.T) {
        throw std::invalid_argument("c2f_reconstruct: schedule length does not match config T");
    }
    if (x_obs.height() != mask.height() || x_obs.width() != mask.width()) {
        throw std::invalid_argument("c2f_reconstruct: shape mismatch");
    }
    const std::size_t n_coarse = cfg.T / cfg.k;
    const Schedule coarse = full_schedule.respace(n_coarse);

    const auto t0 = std::chrono::steady_clock::now();
    std::vector<ComplexImage> samples(cfg.N);
    std::size_t n_threads = cfg.threads ? cfg.threads : std::thread::hardware_concurrency();
    if (n_threads == 0) n_threads = 1;
    n_threads = std::min(n_threads, cfg.N);

    std::mutex mu;
    std::exception_ptr failure;
    std::size_t next = 0;
    auto worker = [&]() {
        std::shared_ptr<const Denoiser> den;
        try {
            den = factory();
        } catch (...) {
            std::lock_guard<std::mutex> lk(mu);
            if (!failure) failure = std::current_exception();
            return;
        }
        for (;;) {
            std::size_t i;
            {
                std::lock_guard<std::mutex> lk(mu);
                if (failure || next >= cfg.N) return;
                i = next++;
            }
            try {
                samples[i] = sample_ksg(x_obs, mask, coarse, *den, cfg.ksg_noise, cfg.seed,
                                        static_cast<std::uint32_t>(i));
            } catch (...) {
                std::lock_guard<std::mutex> lk(mu);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    ComplexImage avg(x_obs.height(), x_obs.width());
    for (const auto& s : samples) {
        for (std::size_t i = 0; i < avg.size(); ++i) avg[i] += s[i];
    }
    const double inv_n = 1.0 / static_cast<double>(cfg.N);
    for (std::size_t i = 0; i < avg.size(); ++i) avg[i] *= inv_n;
    const auto t1 = std::chrono::steady_clock::now();

    ReconResult res;
    res.variance = variance_map(samples);
    res.coarse_steps = n_coarse;
    res.speedup_factor = speedup_factor(cfg);

    ComplexImage y = std::move(avg);
    if (cfg.refine && cfg.T_refine > 0) {
        // y_avg is treated as the state at t = T_refine of the full schedule;
        // refinement uses direct replacement (no x_obs noise).
        std::shared_ptr<const Denoiser> den = factory();
        const CounterRng ref_rng(cfg.seed, RngPurpose::RefineNoise);
        for (std::size_t j = cfg.T_refine; j >= 1; --j) {
            y = reverse_step(y, j, full_schedule, *den, ref_rng);
            y = project_consistent(y, x_obs, mask);
        }
    }
    res.mean = project_consistent(y, x_obs, mask);
    const auto t2 = std::chrono::steady_clock::now();
    res.coarse_seconds = std::chrono::duration<double>(t1 - t0).count();
    res.refine_seconds = std::chrono::duration<double>(t2 - t1).count();
    if (cfg.keep_samples) res.samples = std::move(samples);
    return res;
}

} // namespace ksg
