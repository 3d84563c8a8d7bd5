#pragma once

#include <fftw3.h>

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <vector>

namespace semiclass {

/// Per-instance FFTW workspace for a fixed 1-D size.  forward/backward act
/// in place on the internal buffer; backward includes the 1/n factor so the
/// round trip is the identity.
class Fft1d {
  public:
    explicit Fft1d(int n) : n_(n), buf_(n) {
        if (n < 1) throw std::invalid_argument("Fft1d: size must be positive");
        auto* p = reinterpret_cast<fftw_complex*>(buf_.data());
        plan_fwd_ = fftw_plan_dft_1d(n, p, p, FFTW_FORWARD, FFTW_ESTIMATE);
        plan_bwd_ = fftw_plan_dft_1d(n, p, p, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    ~Fft1d() {
        fftw_destroy_plan(plan_fwd_);
        fftw_destroy_plan(plan_bwd_);
    }
    Fft1d(const Fft1d&) = delete;
    Fft1d& operator=(const Fft1d&) = delete;

    int size() const { return n_; }
    std::complex<double>* data() { return buf_.data(); }

    void load(const Eigen::VectorXcd& v) {
        for (int i = 0; i < n_; ++i) buf_[i] = v[i];
    }
    void store(Eigen::VectorXcd& v) const {
        for (int i = 0; i < n_; ++i) v[i] = buf_[i];
    }
    void forward() { fftw_execute(plan_fwd_); }
    void backward() {
        fftw_execute(plan_bwd_);
        const double s = 1.0 / n_;
        for (auto& z : buf_) z *= s;
    }

    /// Signed frequency index of FFT bin j: in [-n/2, n/2).
    int freq_index(int j) const { return j < n_ / 2 ? j : j - n_; }

  private:
    int n_;
    std::vector<std::complex<double>> buf_;
    fftw_plan plan_fwd_;
    fftw_plan plan_bwd_;
};

}  // namespace semiclass
