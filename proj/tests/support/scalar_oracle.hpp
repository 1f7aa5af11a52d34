// Plain-loop reimplementation of the model used as a test oracle. It reads
// parameter values out of ModelParams but shares no computation with the
// tensor engine.
#ifndef WMAGIN_TESTS_SCALAR_ORACLE_HPP
#define WMAGIN_TESTS_SCALAR_ORACLE_HPP

#include <cstddef>
#include <vector>

#include "wmagin/graph.hpp"
#include "wmagin/model.hpp"

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;
using Adjacency = std::vector<std::vector<std::size_t>>;

Mat to_mat(const wmagin::Tensor& t);
Vec to_vec(const wmagin::Tensor& t);

Adjacency cycle(std::size_t n);
Adjacency complete(std::size_t n);

/// x W + b row by row.
Mat linear(const Mat& x, const Mat& w, const Vec& b);

Mat aggregate_sum(const Mat& x, const Adjacency& adj);
Mat aggregate_mean(const Mat& x, const Adjacency& adj);
Mat aggregate_softmax(const Mat& x, const Adjacency& adj);

/// W((1 + eps) x_i + sum_j x_j) + b, the unweighted GIN update.
Mat plain_gin(const Mat& x, const Adjacency& adj, double eps, const Mat& w, const Vec& b);

struct Logits {
    Vec a;
    std::vector<Vec> gin;
    Vec e;
    Vec total;
};

Logits model_forward(const wmagin::FrameGraph& graph, const wmagin::ModelParams& params,
                     const wmagin::ModelConfig& config);

double cross_entropy(const Vec& logits, int label);

}  // namespace oracle

#endif
