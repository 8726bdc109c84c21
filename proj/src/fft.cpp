#include "fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>

namespace selfsim {

namespace {

struct PlanPair {
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
};

// FFTW planning is not thread safe; execution of an existing plan on new
// arrays is.
std::mutex plan_mutex;
std::map<int, PlanPair> plan_cache;

const PlanPair& plans_for(int n) {
    std::lock_guard<std::mutex> lock(plan_mutex);
    auto it = plan_cache.find(n);
    if (it != plan_cache.end()) return it->second;
    fftw_complex* buf = fftw_alloc_complex(static_cast<std::size_t>(n));
    PlanPair pp;
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    pp.fwd = fftw_plan_dft_1d(n, buf, buf, FFTW_FORWARD, flags);
    pp.bwd = fftw_plan_dft_1d(n, buf, buf, FFTW_BACKWARD, flags);
    fftw_free(buf);
    if (!pp.fwd || !pp.bwd) throw NumericalError("FFTW planning failed");
    return plan_cache.emplace(n, pp).first->second;
}

inline fftw_complex* as_fftw(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace

void dft_forward(cplx* data, int n) {
    const auto& pp = plans_for(n);
    fftw_execute_dft(pp.fwd, as_fftw(data), as_fftw(data));
}

void dft_backward(cplx* data, int n) {
    const auto& pp = plans_for(n);
    fftw_execute_dft(pp.bwd, as_fftw(data), as_fftw(data));
}

int next_pow2(int n) {
    int p = 1;
    while (p < n) p <<= 1;
    return p;
}

namespace {

// exp(i*theta) with theta = pi*beta*m accumulated in long double; m can be
// large (squared indices) so the reduction matters.
cplx cis_pi(long double beta_m) {
    long double t = std::fmod(beta_m, 2.0L);
    t *= 3.141592653589793238462643383279502884L;
    return {static_cast<double>(std::cos(t)), static_cast<double>(std::sin(t))};
}

}  // namespace

ChirpTransform::ChirpTransform(int n_in, int n_out, double beta, double k0)
    : n_in_(n_in), n_out_(n_out), n_conv_(next_pow2(n_in + n_out - 1)) {
    if (n_in < 1 || n_out < 1) throw ValidationError("chirp transform sizes must be positive");
    const long double B = beta;
    const long double K0 = k0;
    // jk' = j(k - k0) = (j^2 + k^2 - (k-j)^2)/2 - j k0
    pre_.resize(n_in);
    for (int j = 0; j < n_in; ++j) {
        const long double jj = j;
        pre_[j] = cis_pi(-B * (jj * jj - 2.0L * jj * K0));
    }
    post_.resize(n_out);
    for (int k = 0; k < n_out; ++k) {
        const long double kk = k;
        post_[k] = cis_pi(-B * kk * kk);
    }
    kernel_.assign(n_conv_, cplx(0.0));
    for (int m = 0; m < n_out; ++m) {
        const long double mm = m;
        kernel_[m] = cis_pi(B * mm * mm);
    }
    for (int m = 1; m < n_in; ++m) {
        const long double mm = m;
        kernel_[n_conv_ - m] = cis_pi(B * mm * mm);
    }
    dft_forward(kernel_.data(), n_conv_);
}

void ChirpTransform::apply(const cplx* in, cplx* out) const {
    CVec work(n_conv_, cplx(0.0));
    for (int j = 0; j < n_in_; ++j) work[j] = in[j] * pre_[j];
    dft_forward(work.data(), n_conv_);
    for (int m = 0; m < n_conv_; ++m) work[m] *= kernel_[m];
    dft_backward(work.data(), n_conv_);
    const double scale = 1.0 / n_conv_;
    for (int k = 0; k < n_out_; ++k) out[k] = work[k] * post_[k] * scale;
}

}  // namespace selfsim
