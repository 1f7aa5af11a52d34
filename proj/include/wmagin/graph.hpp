#ifndef WMAGIN_GRAPH_HPP
#define WMAGIN_GRAPH_HPP

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "wmagin/tensor.hpp"

namespace wmagin {

/// Plain row-major matrix used for data that never enters the autodiff graph.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), values(r * c, fill) {}
    Matrix(std::size_t r, std::size_t c, std::vector<double> v);

    double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
    std::span<const double> row(std::size_t r) const { return {values.data() + r * cols, cols}; }

    Tensor to_tensor(bool requires_grad = false) const;
    bool operator==(const Matrix&) const = default;
};

/// Frame-level features of one utterance (T frames x h features).
struct UtteranceFeatures {
    Matrix frames;
    int label = 0;
    std::string utterance_id;
    std::string group_id;
};

enum class AdjacencyKind { Cycle, Full };

/// Compressed neighbor lists. Each list is kept in ascending index order so
/// that aggregations sum in a canonical order.
class NeighborLists {
public:
    NeighborLists() = default;
    /// Takes arbitrary per-node lists; sorts each one.
    explicit NeighborLists(std::vector<std::vector<std::size_t>> lists);

    std::size_t num_nodes() const { return store_ ? store_->offsets.size() - 1 : 0; }
    std::span<const std::size_t> neighbors(std::size_t node) const {
        const auto& o = store_->offsets;
        return {store_->indices.data() + o[node], o[node + 1] - o[node]};
    }
    std::size_t degree(std::size_t node) const {
        return store_->offsets[node + 1] - store_->offsets[node];
    }
    std::size_t num_entries() const { return store_ ? store_->indices.size() : 0; }

    /// Disjoint union of `copies` shifted copies (block-diagonal batch).
    NeighborLists tiled(std::size_t copies) const;

private:
    // Immutable once built; copies of a NeighborLists share it.
    struct Storage {
        std::vector<std::size_t> offsets;
        std::vector<std::size_t> indices;
    };
    std::shared_ptr<const Storage> store_;
};

/// Cycle: i <-> (i +- 1 mod n). Full: every distinct pair. Requires n >= 3.
NeighborLists build_adjacency(std::size_t n, AdjacencyKind kind);

/// One fixed-size graph cut from an utterance.
struct FrameGraph {
    Matrix node_features;  // n x h, zero rows for padding
    AdjacencyKind kind = AdjacencyKind::Cycle;
    NeighborLists neighbors;
    Mask mask;             // 1 for real frames, 0 for padding
    int label = 0;
    std::size_t utterance_index = 0;  // position of the source utterance in its dataset

    std::size_t num_nodes() const { return node_features.rows; }
    std::size_t num_real_nodes() const;
};

/// Cuts an utterance into ceil(T / graph_len) cycle graphs. The last one is
/// zero-padded and masked. Every graph carries the utterance label.
std::vector<FrameGraph> segment_utterance(const UtteranceFeatures& utterance,
                                          std::size_t graph_len,
                                          std::size_t utterance_index = 0);

/// Segments every utterance, preserving order.
std::vector<FrameGraph> segment_all(std::span<const UtteranceFeatures> utterances,
                                    std::size_t graph_len);

/// Dense binary adjacency with zero diagonal.
Tensor neighbor_matrix(const NeighborLists& neighbors);
Tensor neighbor_matrix(const FrameGraph& graph);

}  // namespace wmagin

#endif  // WMAGIN_GRAPH_HPP
