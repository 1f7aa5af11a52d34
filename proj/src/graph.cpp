#include "wmagin/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wmagin {

Matrix::Matrix(std::size_t r, std::size_t c, std::vector<double> v)
    : rows(r), cols(c), values(std::move(v)) {
    if (values.size() != rows * cols) {
        throw DimensionError("matrix " + std::to_string(rows) + "x" + std::to_string(cols) +
                             " given " + std::to_string(values.size()) + " values");
    }
}

Tensor Matrix::to_tensor(bool requires_grad) const {
    return Tensor::from({rows, cols}, values, requires_grad);
}

NeighborLists::NeighborLists(std::vector<std::vector<std::size_t>> lists) {
    auto store = std::make_shared<Storage>();
    store->offsets.reserve(lists.size() + 1);
    store->offsets.push_back(0);
    for (auto& list : lists) {
        std::sort(list.begin(), list.end());
        for (std::size_t j : list) {
            if (j >= lists.size()) {
                throw std::out_of_range("neighbor index " + std::to_string(j) + " for " +
                                        std::to_string(lists.size()) + " nodes");
            }
        }
        store->indices.insert(store->indices.end(), list.begin(), list.end());
        store->offsets.push_back(store->indices.size());
    }
    store_ = std::move(store);
}

NeighborLists NeighborLists::tiled(std::size_t copies) const {
    auto store = std::make_shared<Storage>();
    const std::size_t n = num_nodes();
    store->offsets.reserve(n * copies + 1);
    store->indices.reserve(num_entries() * copies);
    store->offsets.push_back(0);
    for (std::size_t c = 0; c < copies; ++c) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j : neighbors(i)) store->indices.push_back(j + c * n);
            store->offsets.push_back(store->indices.size());
        }
    }
    NeighborLists out;
    out.store_ = std::move(store);
    return out;
}

NeighborLists build_adjacency(std::size_t n, AdjacencyKind kind) {
    if (n < 3) {
        throw std::invalid_argument("adjacency needs at least 3 nodes, got " + std::to_string(n));
    }
    std::vector<std::vector<std::size_t>> lists(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (kind == AdjacencyKind::Cycle) {
            lists[i] = {(i + n - 1) % n, (i + 1) % n};
        } else {
            lists[i].reserve(n - 1);
            for (std::size_t j = 0; j < n; ++j)
                if (j != i) lists[i].push_back(j);
        }
    }
    return NeighborLists(std::move(lists));
}

std::size_t FrameGraph::num_real_nodes() const {
    return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

std::vector<FrameGraph> segment_utterance(const UtteranceFeatures& utterance,
                                          std::size_t graph_len, std::size_t utterance_index) {
    if (graph_len < 3) {
        throw std::invalid_argument("graph length must be at least 3, got " +
                                    std::to_string(graph_len));
    }
    const Matrix& frames = utterance.frames;
    if (frames.rows == 0 || frames.cols == 0) {
        throw std::invalid_argument("utterance '" + utterance.utterance_id + "' has no frames");
    }
    const std::size_t h = frames.cols;
    const std::size_t count = (frames.rows + graph_len - 1) / graph_len;
    const NeighborLists cycle = build_adjacency(graph_len, AdjacencyKind::Cycle);

    std::vector<FrameGraph> graphs;
    graphs.reserve(count);
    for (std::size_t s = 0; s < count; ++s) {
        const std::size_t start = s * graph_len;
        const std::size_t real = std::min(graph_len, frames.rows - start);
        FrameGraph g;
        g.node_features = Matrix(graph_len, h);
        std::copy_n(frames.values.begin() + static_cast<std::ptrdiff_t>(start * h), real * h,
                    g.node_features.values.begin());
        g.kind = AdjacencyKind::Cycle;
        g.neighbors = cycle;
        g.mask.assign(graph_len, 0);
        std::fill_n(g.mask.begin(), real, std::uint8_t{1});
        g.label = utterance.label;
        g.utterance_index = utterance_index;
        graphs.push_back(std::move(g));
    }
    return graphs;
}

std::vector<FrameGraph> segment_all(std::span<const UtteranceFeatures> utterances,
                                    std::size_t graph_len) {
    std::vector<FrameGraph> out;
    for (std::size_t u = 0; u < utterances.size(); ++u) {
        auto part = segment_utterance(utterances[u], graph_len, u);
        std::move(part.begin(), part.end(), std::back_inserter(out));
    }
    return out;
}

Tensor neighbor_matrix(const NeighborLists& neighbors) {
    const std::size_t n = neighbors.num_nodes();
    std::vector<double> a(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j : neighbors.neighbors(i)) a[i * n + j] = 1.0;
    return Tensor::from({n, n}, std::move(a));
}

Tensor neighbor_matrix(const FrameGraph& graph) { return neighbor_matrix(graph.neighbors); }

}  // namespace wmagin
