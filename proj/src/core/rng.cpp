#include "hydrodiff/core/rng.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace hydrodiff::core {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// SplitMix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline double to_unit(std::uint64_t v) {
    return static_cast<double>(v >> 11) * 0x1.0p-53;  // [0, 1)
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream)
    : key_(mix64(mix64(seed + kGolden) ^ mix64(stream + 0x5851f42d4c957f2dULL))) {}

RngStream RngStream::child(std::uint64_t label) const {
    RngStream c(0);
    c.key_ = mix64(key_ ^ mix64(label + kGolden));
    return c;
}

RngStream RngStream::child(std::string_view label) const { return child(fnv1a(label)); }

std::uint64_t RngStream::next_u64() { return mix64(key_ + kGolden * ++counter_); }

double RngStream::uniform() { return to_unit(next_u64()); }

double RngStream::gaussian() {
    // u1 in (0, 1] so the log is finite.
    const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    const double u2 = to_unit(next_u64());
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Eigen::ArrayXd RngStream::gaussian_vector(Eigen::Index n) {
    Eigen::ArrayXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) out[i] = gaussian();
    return out;
}

Eigen::ArrayXXd RngStream::gaussian_matrix(Eigen::Index rows, Eigen::Index cols) {
    Eigen::ArrayXXd out(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) out(i, j) = gaussian();
    return out;
}

Eigen::ArrayXd RngStream::uniform_vector(Eigen::Index n) {
    Eigen::ArrayXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) out[i] = uniform();
    return out;
}

std::vector<std::size_t> RngStream::permutation(std::size_t n) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = next_u64() % i;
        std::swap(idx[i - 1], idx[j]);
    }
    return idx;
}

Eigen::ArrayXd gaussian_sample(Eigen::Index n, std::uint64_t seed) {
    return RngStream(seed).gaussian_vector(n);
}

Eigen::ArrayXXd gaussian_sample(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    return RngStream(seed).gaussian_matrix(rows, cols);
}

}  // namespace hydrodiff::core
