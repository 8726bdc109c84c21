#pragma once

#include "core_types.hpp"

namespace selfsim {

// Unnormalized in-place DFT: X_k = sum_j x_j exp(-2 pi i jk/n) (forward),
// exp(+2 pi i jk/n) (backward). Plans are cached per size.
void dft_forward(cplx* data, int n);
void dft_backward(cplx* data, int n);

// Chirp z-transform via Bluestein:
//   X_k = sum_{j<n_in} x_j exp(-2 pi i beta j (k - k0)),  k = 0..n_out-1.
// beta need not be rational, so the nodes can be any uniform frequency set.
class ChirpTransform {
public:
    ChirpTransform(int n_in, int n_out, double beta, double k0);
    void apply(const cplx* in, cplx* out) const;
    int n_in() const { return n_in_; }
    int n_out() const { return n_out_; }

private:
    int n_in_, n_out_, n_conv_;
    CVec pre_;      // input chirp (with the k0 shift folded in)
    CVec post_;     // output chirp
    CVec kernel_;   // FFT of the convolution kernel
};

int next_pow2(int n);

}  // namespace selfsim
