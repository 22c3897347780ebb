#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string_view>

namespace hydrodiff::core {

/// Counter-based random stream. Each draw hashes (key, counter), so streams
/// are stateless apart from the counter: the i-th draw of a stream is the
/// same no matter what other streams do, which makes parallel ensemble
/// members reproducible independent of scheduling.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0);

    /// Derived stream; children with distinct labels are independent.
    RngStream child(std::uint64_t label) const;
    RngStream child(std::string_view label) const;

    std::uint64_t next_u64();

    /// Uniform in [0, 1).
    double uniform();

    /// Standard normal via Box-Muller; consumes two counters per draw.
    double gaussian();

    Eigen::ArrayXd gaussian_vector(Eigen::Index n);
    Eigen::ArrayXXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols);
    Eigen::ArrayXd uniform_vector(Eigen::Index n);

    /// Fisher-Yates shuffle of [0, n) index vector.
    std::vector<std::size_t> permutation(std::size_t n);

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Seeded i.i.d. standard normal array. Same (shape, seed) gives
/// bit-identical output on every platform.
Eigen::ArrayXd gaussian_sample(Eigen::Index n, std::uint64_t seed);
Eigen::ArrayXXd gaussian_sample(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed);

}  // namespace hydrodiff::core
