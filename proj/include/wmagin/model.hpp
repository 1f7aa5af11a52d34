#ifndef WMAGIN_MODEL_HPP
#define WMAGIN_MODEL_HPP

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wmagin/graph.hpp"
#include "wmagin/linear.hpp"
#include "wmagin/tensor.hpp"
#include "wmagin/wma_layer.hpp"

namespace wmagin {

/// Which representation feeds stage head e.
enum class StageESource {
    Mpa,      // multi-phase attention output (default)
    LastGin,  // last WMA-GIN layer directly; attention is skipped
};

struct ModelConfig {
    std::size_t feature_dim = 78;
    std::size_t graph_len = 120;
    std::size_t gru_hidden = 128;  // per direction
    std::size_t gin_hidden = 256;
    std::size_t num_gin_layers = 4;
    std::size_t fa_layer_index = 2;  // 1-based
    std::size_t num_classes = 4;
    AggregatorWeights aggregator_weights;
    bool residual = true;
    StageESource stage_e_source = StageESource::Mpa;

    void validate() const;
    /// Number of logit vectors entering the multi-stage loss: one per GIN
    /// layer except the last, then e, then G.
    std::size_t num_loss_stages() const { return num_gin_layers + 1; }
    bool operator==(const ModelConfig&) const = default;
};

/// GRU cell in the input-concat form: each gate matrix is (in + hidden) x hidden
/// and multiplies [x_t, h_{t-1}] (the candidate uses [x_t, r * h_{t-1}]).
struct GruCell {
    Tensor w_z, w_r, w_h;
    Tensor b_z, b_r, b_h;

    static GruCell make(std::size_t in, std::size_t hidden, Rng& rng);
    static GruCell zeros(std::size_t in, std::size_t hidden);
    std::size_t hidden() const { return w_z.cols(); }
    std::size_t input_dim() const { return w_z.rows() - hidden(); }
};

struct BiGruParams {
    GruCell forward;
    GruCell backward;
};

struct MpaParams {
    Linear query;
    Linear key;
    Linear value;
};

struct ModelParams {
    BiGruParams gru;
    std::vector<WmaGinLayerParams> gin;
    MpaParams mpa;
    Linear head_a;                  // on the Bi-GRU output
    std::vector<Linear> gin_heads;  // on GIN layers 1 .. L-1
    Linear head_e;

    /// Seeded initialisation: uniform(+-1/sqrt(fan_in)) weights, zero biases
    /// and epsilons.
    static ModelParams init(const ModelConfig& config, Rng& rng);

    std::vector<std::pair<std::string, Tensor>> named_parameters() const;
    /// Pointers to every parameter handle, in named_parameters() order.
    std::vector<Tensor*> parameter_slots();
    /// Deep copy; the clone shares no storage with this object.
    ModelParams clone() const;
    std::vector<Tensor> parameters() const;
    void zero_grad() const;
    void zero_heads();
    std::size_t num_scalars() const;
};

/// A batch of equally sized graphs stacked as one block-diagonal graph.
/// Node b * n + t is frame t of graph b.
struct GraphBatch {
    Tensor features;  // (B n) x h
    NeighborLists cycle;
    NeighborLists full;
    Mask mask;
    std::vector<int> labels;
    std::size_t num_graphs = 0;
    std::size_t nodes_per_graph = 0;

    static GraphBatch make(std::span<const FrameGraph* const> graphs);
    static GraphBatch make(std::span<const FrameGraph> graphs);
};

struct StageLogits {
    Tensor a;
    std::vector<Tensor> gin;  // b, c, d for the default four layers
    Tensor e;
    Tensor total;             // G = a + sum(gin) + e

    /// Stages entering the loss, shallow to deep: gin..., e, G.
    std::vector<Tensor> loss_stages() const;
};

/// Runs one GRU direction over every graph of the batch.
Tensor gru_direction_forward(const Tensor& x, const GruCell& cell, std::size_t num_graphs,
                             std::size_t nodes_per_graph, bool reverse);

/// Concatenation [forward, backward] along the feature axis.
Tensor bigru_forward(const Tensor& x, const BiGruParams& params, std::size_t num_graphs,
                     std::size_t nodes_per_graph);

/// Outputs of every WMA-GIN layer. Layer `fa_layer_index` uses full
/// adjacency; layers >= 2 add their input back when residuals are enabled.
std::vector<Tensor> gin_stack_forward(const Tensor& g, const GraphBatch& batch,
                                      std::span<const WmaGinLayerParams> layers,
                                      const ModelConfig& config);

/// softmax(Q K^T / sqrt(d)) V per graph with Q from the raw features, K from
/// the Bi-GRU output and V from the last GIN layer. Padding keys are masked.
Tensor mpa_forward(const Tensor& features, const Tensor& g, const Tensor& last_gin,
                   const MpaParams& params, const Mask& mask, std::size_t num_graphs);

/// Mean over the real (mask = 1) rows of each graph: (B n) x d -> B x d.
Tensor readout(const Tensor& x, const Mask& mask, std::size_t num_graphs);

StageLogits model_forward(const GraphBatch& batch, const ModelParams& params,
                          const ModelConfig& config);
StageLogits model_forward(const FrameGraph& graph, const ModelParams& params,
                          const ModelConfig& config);

/// Argmax of G per graph, lowest index on ties.
std::vector<int> predict(const StageLogits& logits);

}  // namespace wmagin

#endif  // WMAGIN_MODEL_HPP
