#include "hydrodiff/core/fft.hpp"

#include <cmath>
#include <map>
#include <numbers>

#include "hydrodiff/core/errors.hpp"

namespace hydrodiff::core {

namespace {

// Twiddle table for size n: w[k] = exp(-2*pi*i*k/n), k = 0..n/2-1.
// Cached per size; conv sizes repeat heavily inside training loops.
const ComplexArray& twiddles(Eigen::Index n) {
    thread_local std::map<Eigen::Index, ComplexArray> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    ComplexArray w(n / 2);
    const double step = -2.0 * std::numbers::pi / static_cast<double>(n);
    for (Eigen::Index k = 0; k < n / 2; ++k) {
        const double a = step * static_cast<double>(k);
        w[k] = {std::cos(a), std::sin(a)};
    }
    return cache.emplace(n, std::move(w)).first->second;
}

}  // namespace

Eigen::Index fft_pad_length(Eigen::Index n) {
    Eigen::Index p = 1;
    while (p < n) p <<= 1;
    return p;
}

void fft_inplace(ComplexArray& a, bool inverse) {
    const Eigen::Index n = a.size();
    if (n == 0 || (n & (n - 1)) != 0)
        throw ArgumentError("fft_inplace: length must be a power of two, got " + std::to_string(n));
    if (n == 1) return;

    // bit reversal
    for (Eigen::Index i = 1, j = 0; i < n; ++i) {
        Eigen::Index bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }

    const ComplexArray& w = twiddles(n);
    for (Eigen::Index len = 2; len <= n; len <<= 1) {
        const Eigen::Index stride = n / len;
        for (Eigen::Index i = 0; i < n; i += len) {
            for (Eigen::Index k = 0; k < len / 2; ++k) {
                std::complex<double> tw = w[k * stride];
                if (inverse) tw = std::conj(tw);
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * tw;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
            }
        }
    }
    if (inverse) a /= static_cast<double>(n);
}

ComplexArray fft_real(const Eigen::Ref<const Eigen::ArrayXd>& x, Eigen::Index nfft) {
    ComplexArray a = ComplexArray::Zero(nfft);
    for (Eigen::Index i = 0; i < x.size(); ++i) a[i] = x[i];
    fft_inplace(a, false);
    return a;
}

Eigen::ArrayXd ifft_to_real(const ComplexArray& spectrum, Eigen::Index keep) {
    ComplexArray a = spectrum;
    fft_inplace(a, true);
    return a.head(keep).real();
}

Eigen::ArrayXd fft_linear_convolve(const Eigen::Ref<const Eigen::ArrayXd>& u,
                                   const Eigen::Ref<const Eigen::ArrayXd>& k) {
    const Eigen::Index L = u.size();
    if (L < 1) throw ArgumentError("fft_linear_convolve: empty input");
    if (k.size() != L)
        throw ArgumentError("fft_linear_convolve: kernel length " + std::to_string(k.size()) +
                            " != input length " + std::to_string(L));
    if (L == 1) return Eigen::ArrayXd::Constant(1, u[0] * k[0]);

    const Eigen::Index nfft = fft_pad_length(2 * L - 1);
    ComplexArray su = fft_real(u, nfft);
    const ComplexArray sk = fft_real(k, nfft);
    su *= sk;
    return ifft_to_real(su, L);
}

}  // namespace hydrodiff::core
