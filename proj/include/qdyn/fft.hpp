#pragma once

#include <fftw3.h>

#include <complex>
#include <mutex>
#include <vector>

#include "qdyn/common.hpp"
#include "qdyn/grid.hpp"

namespace qdyn {

namespace detail {
// FFTW's planner is not thread-safe; executions on distinct buffers are.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace detail

// Complex-to-complex FFT of fixed size, FFTW_ESTIMATE plans for run-to-run
// determinism. Unnormalized forward; inverse scales by 1/N.
class Fft {
  public:
    explicit Fft(int n) : n_(n) {
        buf_ = fftw_alloc_complex(n);
        std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
        fwd_ = fftw_plan_dft_1d(n, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft_1d(n, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    ~Fft() {
        std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
        fftw_free(buf_);
    }
    Fft(const Fft&) = delete;
    Fft& operator=(const Fft&) = delete;

    void forward(std::vector<complexd>& v) { run(v, fwd_, 1.0); }
    void inverse(std::vector<complexd>& v) { run(v, bwd_, 1.0 / n_); }

    int size() const { return n_; }

  private:
    void run(std::vector<complexd>& v, fftw_plan plan, double scale) {
        if (static_cast<int>(v.size()) != n_) throw grid_mismatch_error("fft: size mismatch");
        auto* b = reinterpret_cast<complexd*>(buf_);
        std::copy(v.begin(), v.end(), b);
        fftw_execute(plan);
        for (int i = 0; i < n_; ++i) v[i] = b[i] * scale;
    }

    int n_;
    fftw_complex* buf_;
    fftw_plan fwd_, bwd_;
};

// DST-I (FFTW RODFT00): the discrete sine transform whose kernel
// sin(pi j k / (N+1)) is exactly the infinite-well eigenbasis sampled on the
// N interior points x_j = j L/(N+1). Self-inverse up to the factor 2(N+1).
class Dst1 {
  public:
    explicit Dst1(int n) : n_(n) {
        buf_ = fftw_alloc_real(n);
        std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
        plan_ = fftw_plan_r2r_1d(n, buf_, buf_, FFTW_RODFT00, FFTW_ESTIMATE);
    }
    ~Dst1() {
        std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
        fftw_destroy_plan(plan_);
        fftw_free(buf_);
    }
    Dst1(const Dst1&) = delete;
    Dst1& operator=(const Dst1&) = delete;

    // unnormalized: out_k = 2 sum_j in_j sin(pi j k / (N+1))
    void transform(std::vector<double>& v) {
        if (static_cast<int>(v.size()) != n_) throw grid_mismatch_error("dst: size mismatch");
        std::copy(v.begin(), v.end(), buf_);
        fftw_execute(plan_);
        std::copy(buf_, buf_ + n_, v.begin());
    }

    // applies the real transform to both components of a complex field
    void transform(std::vector<complexd>& v) {
        std::vector<double> re(n_), im(n_);
        for (int i = 0; i < n_; ++i) {
            re[i] = v[i].real();
            im[i] = v[i].imag();
        }
        transform(re);
        transform(im);
        for (int i = 0; i < n_; ++i) v[i] = {re[i], im[i]};
    }

    int size() const { return n_; }

  private:
    int n_;
    double* buf_;
    fftw_plan plan_;
};

// Momentum grid for an N-point spatial grid treated as periodic with period
// N*dx (standard FFT ordering).
inline std::vector<double> fft_wavenumbers(const Grid& g) {
    int n = g.n;
    double dk = 2.0 * pi / (n * g.dx());
    std::vector<double> ks(n);
    for (int i = 0; i < n; ++i) ks[i] = (i <= n / 2 ? i : i - n) * dk;
    return ks;
}

}  // namespace qdyn
