#include "wmagin/linear.hpp"

#include <cmath>

namespace wmagin {

Tensor init_weight(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::vector<double> w(fan_in * fan_out);
    for (double& v : w) v = dist(rng);
    return Tensor::from({fan_in, fan_out}, std::move(w), true);
}

Linear Linear::make(std::size_t in, std::size_t out, Rng& rng) {
    return {init_weight(in, out, rng), Tensor::zeros({out}, true)};
}

Linear Linear::identity(std::size_t dim) {
    std::vector<double> w(dim * dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i) w[i * dim + i] = 1.0;
    return {Tensor::from({dim, dim}, std::move(w), true), Tensor::zeros({dim}, true)};
}

}  // namespace wmagin
