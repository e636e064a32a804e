#pragma once

// RAII wrapper over FFTW real-to-complex / complex-to-real plans of one size.
// Plans use FFTW_ESTIMATE so the transform (and its rounding) is the same on
// every run.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <mutex>
#include <span>
#include <stdexcept>

namespace levymv {

namespace detail {
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}
} // namespace detail

class RealFft {
public:
    explicit RealFft(std::size_t size) : n_(size) {
        if (n_ < 2) throw std::invalid_argument("RealFft: size must be at least 2");
        real_ = fftw_alloc_real(n_);
        spec_ = fftw_alloc_complex(n_ / 2 + 1);
        if (!real_ || !spec_) throw std::bad_alloc();
        std::lock_guard lock(detail::fftw_planner_mutex());
        const int n = static_cast<int>(n_);
        fwd_ = fftw_plan_dft_r2c_1d(n, real_, spec_, FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft_c2r_1d(n, spec_, real_, FFTW_ESTIMATE);
    }
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;
    RealFft(RealFft&& o) noexcept { swap(o); }
    RealFft& operator=(RealFft&& o) noexcept {
        swap(o);
        return *this;
    }
    ~RealFft() {
        std::lock_guard lock(detail::fftw_planner_mutex());
        if (fwd_) fftw_destroy_plan(fwd_);
        if (bwd_) fftw_destroy_plan(bwd_);
        if (real_) fftw_free(real_);
        if (spec_) fftw_free(spec_);
    }

    std::size_t size() const noexcept { return n_; }
    std::size_t spectrum_size() const noexcept { return n_ / 2 + 1; }

    /// Unnormalized forward transform.
    void forward(std::span<const double> in, std::span<std::complex<double>> out) {
        if (in.size() != n_ || out.size() != spectrum_size()) throw std::invalid_argument("RealFft::forward: size mismatch");
        std::copy(in.begin(), in.end(), real_);
        fftw_execute(fwd_);
        for (std::size_t k = 0; k < spectrum_size(); ++k) out[k] = {spec_[k][0], spec_[k][1]};
    }

    /// Inverse transform including the 1/n factor.
    void backward(std::span<const std::complex<double>> in, std::span<double> out) {
        if (in.size() != spectrum_size() || out.size() != n_) throw std::invalid_argument("RealFft::backward: size mismatch");
        for (std::size_t k = 0; k < spectrum_size(); ++k) {
            spec_[k][0] = in[k].real();
            spec_[k][1] = in[k].imag();
        }
        fftw_execute(bwd_);
        const double scale = 1.0 / static_cast<double>(n_);
        for (std::size_t i = 0; i < n_; ++i) out[i] = real_[i] * scale;
    }

private:
    void swap(RealFft& o) noexcept {
        std::swap(n_, o.n_);
        std::swap(real_, o.real_);
        std::swap(spec_, o.spec_);
        std::swap(fwd_, o.fwd_);
        std::swap(bwd_, o.bwd_);
    }

    std::size_t n_ = 0;
    double* real_ = nullptr;
    fftw_complex* spec_ = nullptr;
    fftw_plan fwd_ = nullptr;
    fftw_plan bwd_ = nullptr;
};

} // namespace levymv
