#ifndef WMAGIN_LINEAR_HPP
#define WMAGIN_LINEAR_HPP

#include <cstddef>
#include <random>

#include "wmagin/tensor.hpp"

namespace wmagin {

using Rng = std::mt19937_64;

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weight matrix, fan_in = rows.
Tensor init_weight(std::size_t fan_in, std::size_t fan_out, Rng& rng);

/// y = x W + b, W is in x out.
struct Linear {
    Tensor weight;
    Tensor bias;

    static Linear make(std::size_t in, std::size_t out, Rng& rng);
    /// Weight = identity (in == out), bias = 0. Used by pass-through tests.
    static Linear identity(std::size_t dim);

    std::size_t in_features() const { return weight.rows(); }
    std::size_t out_features() const { return weight.cols(); }
    Tensor operator()(const Tensor& x) const { return add(matmul(x, weight), bias); }
};

}  // namespace wmagin

#endif  // WMAGIN_LINEAR_HPP
