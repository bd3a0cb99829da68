#pragma once

#include <algorithm>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "ksgdiffuse/grid.hpp"

namespace ksg {

enum class ScheduleKind { Linear, Cosine, Respaced };

/// Immutable diffusion noise schedule. Tables are 0-indexed by storage but
/// the model is 1-based: beta()[t-1] is beta_t. abar_0 is defined as 1, so
/// sigma2()[0] == 0 always.
class Schedule {
public:
    static Schedule cosine(std::size_t T) {
        if (T == 0) throw std::invalid_argument("cosine schedule: T must be >= 1");
        const double s = 0.008;
        auto f = [&](double t) {
            const double x = ((t / static_cast<double>(T) + s) / (1.0 + s)) * std::numbers::pi / 2.0;
            const double c = std::cos(x);
            return c * c;
        };
        const double f0 = f(0.0);
        std::vector<double> beta(T);
        double abar_prev = 1.0;
        for (std::size_t t = 1; t <= T; ++t) {
            const double abar_t = f(static_cast<double>(t)) / f0;
            beta[t - 1] = std::min(1.0 - abar_t / abar_prev, 0.999);
            abar_prev = abar_t;
        }
        return Schedule(ScheduleKind::Cosine, std::move(beta));
    }

    static Schedule linear(std::size_t T, double beta_start, double beta_end) {
        if (T == 0) throw std::invalid_argument("linear schedule: T must be >= 1");
        if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0)) {
            throw std::invalid_argument("linear schedule: require 0 < beta_start <= beta_end < 1");
        }
        std::vector<double> beta(T);
        for (std::size_t t = 0; t < T; ++t) {
            const double frac = T == 1 ? 0.0 : static_cast<double>(t) / static_cast<double>(T - 1);
            beta[t] = beta_start + frac * (beta_end - beta_start);
        }
        return Schedule(ScheduleKind::Linear, std::move(beta));
    }

    /// Evenly-spaced sub-schedule with n steps. Selected original timesteps
    /// are sel(j) = floor(j*T/n) for j = 1..n (always includes T); the
    /// sub-schedule's abar values equal the parent's at those timesteps.
    Schedule respace(std::size_t n) const {
        if (n == 0 || n > num_steps()) {
            throw std::invalid_argument("respace: require 1 <= num_substeps <= T");
        }
        const std::size_t T = num_steps();
        std::vector<double> beta(n);
        std::vector<std::size_t> labels(n);
        double abar_prev = 1.0;
        for (std::size_t j = 1; j <= n; ++j) {
            const std::size_t sel = (j * T) / n;
            const double abar_sel = alpha_bar_[sel - 1];
            beta[j - 1] = 1.0 - abar_sel / abar_prev;
            labels[j - 1] = timestep_[sel - 1];
            abar_prev = abar_sel;
        }
        return Schedule(ScheduleKind::Respaced, std::move(beta), std::move(labels));
    }

    std::size_t num_steps() const { return beta_.size(); }
    ScheduleKind kind() const { return kind_; }

    const std::vector<double>& beta() const { return beta_; }
    const std::vector<double>& alpha() const { return alpha_; }
    const std::vector<double>& alpha_bar() const { return alpha_bar_; }
    const std::vector<double>& sigma2() const { return sigma2_; }

    /// Original-schedule timestep label for step j (1-based); equals j for
    /// non-respaced schedules. This is what a trained denoiser is queried with.
    std::size_t timestep(std::size_t j) const { return timestep_.at(j - 1); }
    const std::vector<std::size_t>& timesteps() const { return timestep_; }

    /// Step index j (1-based) whose original-timestep label equals t.
    std::size_t index_of_timestep(std::size_t t) const {
        const auto it = std::lower_bound(timestep_.begin(), timestep_.end(), t);
        if (it == timestep_.end() || *it != t) {
            throw std::invalid_argument("schedule: timestep not in schedule");
        }
        return static_cast<std::size_t>(it - timestep_.begin()) + 1;
    }

    /// abar_{j-1} with abar_0 = 1 (the post-step noise level of step j).
    double alpha_bar_prev(std::size_t j) const {
        return j >= 2 ? alpha_bar_[j - 2] : 1.0;
    }

private:
    Schedule(ScheduleKind kind, std::vector<double> beta, std::vector<std::size_t> labels = {})
        : kind_(kind), beta_(std::move(beta)), timestep_(std::move(labels)) {
        const std::size_t T = beta_.size();
        alpha_.resize(T);
        alpha_bar_.resize(T);
        sigma2_.resize(T);
        double abar = 1.0;
        for (std::size_t t = 0; t < T; ++t) {
            if (!(beta_[t] > 0.0 && beta_[t] < 1.0)) {
                throw std::invalid_argument("schedule: beta out of (0,1)");
            }
            alpha_[t] = 1.0 - beta_[t];
            const double abar_prev = abar;
            abar *= alpha_[t];
            alpha_bar_[t] = abar;
            sigma2_[t] = (1.0 - abar_prev) / (1.0 - abar) * beta_[t];
        }
        if (timestep_.empty()) {
            timestep_.resize(T);
            for (std::size_t t = 0; t < T; ++t) timestep_[t] = t + 1;
        }
    }

    ScheduleKind kind_;
    std::vector<double> beta_;
    std::vector<double> alpha_;
    std::vector<double> alpha_bar_;
    std::vector<double> sigma2_;
    std::vector<std::size_t> timestep_;
};

} // namespace ksg
