#pragma once

#include <complex>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ksg {

using Complex = std::complex<double>;

namespace detail {

inline void check_shape(std::size_t h, std::size_t w) {
    if (h == 0 || w == 0) {
        throw std::invalid_argument("grid dimensions must be positive");
    }
}

} // namespace detail

/// Row-major H x W grid of complex samples.
class ComplexGrid {
public:
    ComplexGrid() = default;

    ComplexGrid(std::size_t height, std::size_t width)
        : height_(height), width_(width), data_(height * width) {
        detail::check_shape(height, width);
    }

    ComplexGrid(std::size_t height, std::size_t width, std::vector<Complex> data)
        : height_(height), width_(width), data_(std::move(data)) {
        detail::check_shape(height, width);
        if (data_.size() != height * width) {
            throw std::invalid_argument("data length does not match grid shape");
        }
    }

    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }
    std::size_t size() const { return data_.size(); }

    Complex& operator()(std::size_t row, std::size_t col) { return data_[row * width_ + col]; }
    const Complex& operator()(std::size_t row, std::size_t col) const { return data_[row * width_ + col]; }

    Complex& operator[](std::size_t i) { return data_[i]; }
    const Complex& operator[](std::size_t i) const { return data_[i]; }

    std::vector<Complex>& data() { return data_; }
    const std::vector<Complex>& data() const { return data_; }

    bool same_shape(const ComplexGrid& other) const {
        return height_ == other.height_ && width_ == other.width_;
    }

    bool all_finite() const {
        for (const auto& v : data_) {
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
        }
        return true;
    }

    void require_finite(const char* what) const {
        if (!all_finite()) {
            throw std::invalid_argument(std::string(what) + ": non-finite entries");
        }
    }

    double norm2() const {
        double s = 0.0;
        for (const auto& v : data_) s += std::norm(v);
        return std::sqrt(s);
    }

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<Complex> data_;
};

/// Image-domain state (y_t, reconstructions).
struct ComplexImage : ComplexGrid {
    using ComplexGrid::ComplexGrid;
    explicit ComplexImage(ComplexGrid g) : ComplexGrid(std::move(g)) {}
};

/// Fourier-domain samples with the DC component at the grid center.
struct KSpace : ComplexGrid {
    using ComplexGrid::ComplexGrid;
    explicit KSpace(ComplexGrid g) : ComplexGrid(std::move(g)) {}
};

/// Real-valued H x W map (variance maps, magnitude images).
class RealGrid {
public:
    RealGrid() = default;
    RealGrid(std::size_t height, std::size_t width, double fill = 0.0)
        : height_(height), width_(width), data_(height * width, fill) {
        detail::check_shape(height, width);
    }

    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t row, std::size_t col) { return data_[row * width_ + col]; }
    const double& operator()(std::size_t row, std::size_t col) const { return data_[row * width_ + col]; }
    double& operator[](std::size_t i) { return data_[i]; }
    const double& operator[](std::size_t i) const { return data_[i]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<double> data_;
};

} // namespace ksg
