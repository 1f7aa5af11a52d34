#ifndef WMAGIN_WMA_LAYER_HPP
#define WMAGIN_WMA_LAYER_HPP

#include <cstddef>

#include "wmagin/graph.hpp"
#include "wmagin/linear.hpp"
#include "wmagin/tensor.hpp"

namespace wmagin {

/// Fixed mixing weights of the three neighborhood aggregators.
struct AggregatorWeights {
    double alpha = 1.0 / 3.0;  // sum
    double beta = 1.0 / 3.0;   // mean
    double gamma = 1.0 / 3.0;  // softmax

    /// Throws std::invalid_argument if any weight is negative or non-finite.
    void validate() const;
    bool operator==(const AggregatorWeights&) const = default;
};

/// Learnable state of one WMA-GIN layer: a scalar epsilon and a single
/// linear layer as the update MLP.
struct WmaGinLayerParams {
    Tensor epsilon;  // shape {1}, starts at 0
    Linear mlp;

    static WmaGinLayerParams make(std::size_t in, std::size_t out, Rng& rng);
    std::size_t in_features() const { return mlp.in_features(); }
    std::size_t out_features() const { return mlp.out_features(); }
};

// Neighbor-list aggregators. Row i of the result aggregates rows N(i) of X.

/// Row i = sum of X_j over j in N(i). Isolated nodes give zeros.
Tensor aggregate_sum(const Tensor& x, const NeighborLists& neighbors);

/// Row i = (1/d_i) sum of X_j. Throws if some node has no neighbors.
Tensor aggregate_mean(const Tensor& x, const NeighborLists& neighbors);

/// Row i, column d = sum_j w_jd X_jd with w_jd = softmax over j in N(i) of
/// X_jd, i.e. an independent weight distribution per feature dimension.
/// Throws if some node has no neighbors.
Tensor aggregate_softmax(const Tensor& x, const NeighborLists& neighbors);

// Dense-matrix formulations over an n x n binary adjacency tensor.
Tensor aggregate_sum_dense(const Tensor& x, const Tensor& adjacency);
Tensor aggregate_mean_dense(const Tensor& x, const Tensor& adjacency);
Tensor aggregate_softmax_dense(const Tensor& x, const Tensor& adjacency);

/// MLP((1 + eps) X_i + alpha sum_i + beta mean_i + gamma softmax_i).
/// Aggregators whose weight is exactly zero are not evaluated.
Tensor wma_gin_forward(const Tensor& x, const NeighborLists& neighbors,
                       const WmaGinLayerParams& params, const AggregatorWeights& weights);

/// Same update computed through the dense aggregators.
Tensor wma_gin_forward_dense(const Tensor& x, const Tensor& adjacency,
                             const WmaGinLayerParams& params, const AggregatorWeights& weights);

}  // namespace wmagin

#endif  // WMAGIN_WMA_LAYER_HPP
