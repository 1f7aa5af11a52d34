#include "wmagin/wma_layer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace wmagin {

void AggregatorWeights::validate() const {
    for (double w : {alpha, beta, gamma}) {
        if (!std::isfinite(w) || w < 0.0) {
            throw std::invalid_argument("aggregator weights must be finite and >= 0");
        }
    }
}

WmaGinLayerParams WmaGinLayerParams::make(std::size_t in, std::size_t out, Rng& rng) {
    return {Tensor::zeros({1}, true), Linear::make(in, out, rng)};
}

namespace {

void check_inputs(const Tensor& x, const NeighborLists& neighbors) {
    if (x.rank() != 2) {
        throw DimensionError("aggregation expects n x h features, got " + shape_to_string(x.shape()));
    }
    if (neighbors.num_nodes() != x.rows()) {
        throw DimensionError("neighbor lists cover " + std::to_string(neighbors.num_nodes()) +
                             " nodes but features have " + std::to_string(x.rows()) + " rows");
    }
}

void require_no_isolated(const NeighborLists& neighbors, const char* what) {
    for (std::size_t i = 0; i < neighbors.num_nodes(); ++i) {
        if (neighbors.degree(i) == 0) {
            throw std::invalid_argument(std::string(what) + " aggregation: node " +
                                        std::to_string(i) + " has no neighbors");
        }
    }
}

// Shared by sum and mean: row i = scale_i * sum_{j in N(i)} X_j.
Tensor weighted_neighbor_sum(const Tensor& x, const NeighborLists& neighbors, bool mean) {
    const std::size_t n = x.rows(), h = x.cols();
    const auto src = x.data();
    std::vector<double> out(n * h, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double* row = out.data() + i * h;
        for (std::size_t j : neighbors.neighbors(i)) {
            const double* xj = src.data() + j * h;
            for (std::size_t d = 0; d < h; ++d) row[d] += xj[d];
        }
        if (mean) {
            const double deg = static_cast<double>(neighbors.degree(i));
            for (std::size_t d = 0; d < h; ++d) row[d] /= deg;
        }
    }
    return make_op(OpKind::Custom, {n, h}, std::move(out), {x},
                   [neighbors, n, h, mean](TensorNode& self) {
                       auto gx = self.inputs[0]->grad_buffer();
                       for (std::size_t i = 0; i < n; ++i) {
                           const double s =
                               mean ? 1.0 / static_cast<double>(neighbors.degree(i)) : 1.0;
                           const double* gi = self.grad.data() + i * h;
                           for (std::size_t j : neighbors.neighbors(i)) {
                               double* gj = gx.data() + j * h;
                               for (std::size_t d = 0; d < h; ++d) gj[d] += s * gi[d];
                           }
                       }
                   });
}

}  // namespace

Tensor aggregate_sum(const Tensor& x, const NeighborLists& neighbors) {
    check_inputs(x, neighbors);
    return weighted_neighbor_sum(x, neighbors, false);
}

Tensor aggregate_mean(const Tensor& x, const NeighborLists& neighbors) {
    check_inputs(x, neighbors);
    require_no_isolated(neighbors, "mean");
    return weighted_neighbor_sum(x, neighbors, true);
}

Tensor aggregate_softmax(const Tensor& x, const NeighborLists& neighbors) {
    check_inputs(x, neighbors);
    require_no_isolated(neighbors, "softmax");
    const std::size_t n = x.rows(), h = x.cols();
    const auto src = x.data();
    std::vector<double> out(n * h, 0.0);
    std::vector<double> mx(h), denom(h);
    for (std::size_t i = 0; i < n; ++i) {
        const auto nb = neighbors.neighbors(i);
        std::fill(mx.begin(), mx.end(), -std::numeric_limits<double>::infinity());
        for (std::size_t j : nb)
            for (std::size_t d = 0; d < h; ++d) mx[d] = std::max(mx[d], src[j * h + d]);
        std::fill(denom.begin(), denom.end(), 0.0);
        double* row = out.data() + i * h;
        for (std::size_t j : nb) {
            for (std::size_t d = 0; d < h; ++d) {
                const double e = std::exp(src[j * h + d] - mx[d]);
                denom[d] += e;
                row[d] += e * src[j * h + d];
            }
        }
        for (std::size_t d = 0; d < h; ++d) row[d] /= denom[d];
    }
    return make_op(OpKind::Custom, {n, h}, std::move(out), {x}, [neighbors, n, h](TensorNode& self) {
        // d out_id / d x_jd = w_jd (1 + x_jd - out_id)
        const auto& xs = self.inputs[0]->data;
        auto gx = self.inputs[0]->grad_buffer();
        std::vector<double> mx(h), denom(h);
        for (std::size_t i = 0; i < n; ++i) {
            const auto nb = neighbors.neighbors(i);
            std::fill(mx.begin(), mx.end(), -std::numeric_limits<double>::infinity());
            for (std::size_t j : nb)
                for (std::size_t d = 0; d < h; ++d) mx[d] = std::max(mx[d], xs[j * h + d]);
            std::fill(denom.begin(), denom.end(), 0.0);
            for (std::size_t j : nb)
                for (std::size_t d = 0; d < h; ++d) denom[d] += std::exp(xs[j * h + d] - mx[d]);
            const double* gi = self.grad.data() + i * h;
            const double* oi = self.data.data() + i * h;
            for (std::size_t j : nb) {
                for (std::size_t d = 0; d < h; ++d) {
                    const double xv = xs[j * h + d];
                    const double w = std::exp(xv - mx[d]) / denom[d];
                    gx[j * h + d] += gi[d] * w * (1.0 + xv - oi[d]);
                }
            }
        }
    });
}

namespace {

void check_dense(const Tensor& x, const Tensor& adjacency) {
    if (adjacency.rank() != 2 || adjacency.rows() != adjacency.cols() ||
        adjacency.rows() != x.rows()) {
        throw DimensionError("adjacency " + shape_to_string(adjacency.shape()) +
                             " does not match features " + shape_to_string(x.shape()));
    }
}

std::vector<double> row_degrees(const Tensor& adjacency, const char* what) {
    const std::size_t n = adjacency.rows();
    std::vector<double> deg(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) deg[i] += adjacency.at(i, j);
        if (deg[i] == 0.0) {
            throw std::invalid_argument(std::string(what) + " aggregation: node " +
                                        std::to_string(i) + " has no neighbors");
        }
    }
    return deg;
}

}  // namespace

Tensor aggregate_sum_dense(const Tensor& x, const Tensor& adjacency) {
    check_dense(x, adjacency);
    return matmul(adjacency, x);
}

Tensor aggregate_mean_dense(const Tensor& x, const Tensor& adjacency) {
    check_dense(x, adjacency);
    const auto deg = row_degrees(adjacency, "mean");
    const std::size_t n = adjacency.rows();
    std::vector<double> normalized(adjacency.data().begin(), adjacency.data().end());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) normalized[i * n + j] /= deg[i];
    return matmul(Tensor::from({n, n}, std::move(normalized)), x);
}

Tensor aggregate_softmax_dense(const Tensor& x, const Tensor& adjacency) {
    check_dense(x, adjacency);
    row_degrees(adjacency, "softmax");
    // A per-column shift cancels between numerator and denominator.
    const std::size_t h = x.cols();
    std::vector<double> shift(h, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t d = 0; d < h; ++d) shift[d] = std::max(shift[d], x.at(i, d));
    const Tensor e = exp(sub(x, Tensor::from({h}, std::move(shift))));
    return div(matmul(adjacency, mul(x, e)), matmul(adjacency, e));
}

namespace {

template <typename Sum, typename Mean, typename Soft>
Tensor combine(const Tensor& x, const WmaGinLayerParams& params, const AggregatorWeights& w,
               Sum&& sum_agg, Mean&& mean_agg, Soft&& soft_agg) {
    w.validate();
    if (x.cols() != params.in_features()) {
        throw DimensionError("layer expects " + std::to_string(params.in_features()) +
                             " input features, got " + shape_to_string(x.shape()));
    }
    Tensor acc = mul(x, add(Tensor::scalar(1.0), params.epsilon));
    if (w.alpha != 0.0) acc = add(acc, scale(sum_agg(), w.alpha));
    if (w.beta != 0.0) acc = add(acc, scale(mean_agg(), w.beta));
    if (w.gamma != 0.0) acc = add(acc, scale(soft_agg(), w.gamma));
    return params.mlp(acc);
}

}  // namespace

Tensor wma_gin_forward(const Tensor& x, const NeighborLists& neighbors,
                       const WmaGinLayerParams& params, const AggregatorWeights& weights) {
    check_inputs(x, neighbors);
    return combine(
        x, params, weights, [&] { return aggregate_sum(x, neighbors); },
        [&] { return aggregate_mean(x, neighbors); },
        [&] { return aggregate_softmax(x, neighbors); });
}

Tensor wma_gin_forward_dense(const Tensor& x, const Tensor& adjacency,
                             const WmaGinLayerParams& params, const AggregatorWeights& weights) {
    check_dense(x, adjacency);
    return combine(
        x, params, weights, [&] { return aggregate_sum_dense(x, adjacency); },
        [&] { return aggregate_mean_dense(x, adjacency); },
        [&] { return aggregate_softmax_dense(x, adjacency); });
}

}  // namespace wmagin
