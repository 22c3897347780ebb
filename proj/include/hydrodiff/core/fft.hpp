#pragma once

#include <Eigen/Core>
#include <complex>

namespace hydrodiff::core {

using ComplexArray = Eigen::ArrayX<std::complex<double>>;

/// Next power of two >= n (n >= 1).
Eigen::Index fft_pad_length(Eigen::Index n);

/// In-place radix-2 complex FFT. Length must be a power of two.
/// inverse=true applies the conjugate transform and the 1/N scaling.
void fft_inplace(ComplexArray& a, bool inverse);

/// Causal linear convolution of two equal-length real sequences:
///   out[t] = sum_{s=0..t} k[s] * u[t-s]
/// computed by zero-padding to the next power of two >= 2L-1,
/// multiplying in the frequency domain, and truncating back to L.
Eigen::ArrayXd fft_linear_convolve(const Eigen::Ref<const Eigen::ArrayXd>& u,
                                   const Eigen::Ref<const Eigen::ArrayXd>& k);

/// Spectrum of a real sequence zero-padded to nfft (power of two).
ComplexArray fft_real(const Eigen::Ref<const Eigen::ArrayXd>& x, Eigen::Index nfft);

/// Inverse transform of a spectrum; returns the first `keep` real samples.
Eigen::ArrayXd ifft_to_real(const ComplexArray& spectrum, Eigen::Index keep);

}  // namespace hydrodiff::core
