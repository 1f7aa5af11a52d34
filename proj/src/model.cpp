#include "wmagin/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace wmagin {

void ModelConfig::validate() const {
    auto positive = [](std::size_t v, const char* name) {
        if (v == 0) throw std::invalid_argument(std::string("model.") + name + " must be positive");
    };
    positive(feature_dim, "feature_dim");
    positive(gru_hidden, "gru_hidden");
    positive(gin_hidden, "gin_hidden");
    positive(num_gin_layers, "num_gin_layers");
    positive(num_classes, "num_classes");
    if (graph_len < 3) throw std::invalid_argument("model.graph_len must be at least 3");
    if (fa_layer_index < 1 || fa_layer_index > num_gin_layers) {
        throw std::invalid_argument("model.fa_layer_index must lie in [1, num_gin_layers]");
    }
    aggregator_weights.validate();
}

GruCell GruCell::make(std::size_t in, std::size_t hidden, Rng& rng) {
    GruCell c;
    c.w_z = init_weight(in + hidden, hidden, rng);
    c.w_r = init_weight(in + hidden, hidden, rng);
    c.w_h = init_weight(in + hidden, hidden, rng);
    c.b_z = Tensor::zeros({hidden}, true);
    c.b_r = Tensor::zeros({hidden}, true);
    c.b_h = Tensor::zeros({hidden}, true);
    return c;
}

GruCell GruCell::zeros(std::size_t in, std::size_t hidden) {
    GruCell c;
    for (Tensor* w : {&c.w_z, &c.w_r, &c.w_h}) *w = Tensor::zeros({in + hidden, hidden}, true);
    for (Tensor* b : {&c.b_z, &c.b_r, &c.b_h}) *b = Tensor::zeros({hidden}, true);
    return c;
}

ModelParams ModelParams::init(const ModelConfig& config, Rng& rng) {
    config.validate();
    ModelParams p;
    const std::size_t h = config.feature_dim;
    const std::size_t g_dim = 2 * config.gru_hidden;
    const std::size_t d = config.gin_hidden;
    p.gru.forward = GruCell::make(h, config.gru_hidden, rng);
    p.gru.backward = GruCell::make(h, config.gru_hidden, rng);
    for (std::size_t l = 0; l < config.num_gin_layers; ++l) {
        p.gin.push_back(WmaGinLayerParams::make(l == 0 ? g_dim : d, d, rng));
    }
    p.mpa.query = Linear::make(h, d, rng);
    p.mpa.key = Linear::make(g_dim, d, rng);
    p.mpa.value = Linear::make(d, d, rng);
    p.head_a = Linear::make(g_dim, config.num_classes, rng);
    for (std::size_t l = 0; l + 1 < config.num_gin_layers; ++l) {
        p.gin_heads.push_back(Linear::make(d, config.num_classes, rng));
    }
    p.head_e = Linear::make(d, config.num_classes, rng);
    return p;
}

namespace {

// Visits every parameter of `p` (const or not) as (name, tensor&) in a fixed order.
template <typename Params, typename Fn>
void visit_parameters(Params& p, Fn&& fn) {
    auto cell = [&](const std::string& prefix, auto& c) {
        fn(prefix + ".w_z", c.w_z);
        fn(prefix + ".w_r", c.w_r);
        fn(prefix + ".w_h", c.w_h);
        fn(prefix + ".b_z", c.b_z);
        fn(prefix + ".b_r", c.b_r);
        fn(prefix + ".b_h", c.b_h);
    };
    auto linear = [&](const std::string& prefix, auto& l) {
        fn(prefix + ".weight", l.weight);
        fn(prefix + ".bias", l.bias);
    };
    cell("gru.forward", p.gru.forward);
    cell("gru.backward", p.gru.backward);
    for (std::size_t l = 0; l < p.gin.size(); ++l) {
        const std::string prefix = "gin." + std::to_string(l + 1);
        fn(prefix + ".epsilon", p.gin[l].epsilon);
        linear(prefix + ".mlp", p.gin[l].mlp);
    }
    linear("mpa.query", p.mpa.query);
    linear("mpa.key", p.mpa.key);
    linear("mpa.value", p.mpa.value);
    linear("head.a", p.head_a);
    for (std::size_t l = 0; l < p.gin_heads.size(); ++l) {
        linear("head.gin" + std::to_string(l + 1), p.gin_heads[l]);
    }
    linear("head.e", p.head_e);
}

}  // namespace

std::vector<std::pair<std::string, Tensor>> ModelParams::named_parameters() const {
    std::vector<std::pair<std::string, Tensor>> out;
    visit_parameters(*this, [&](std::string name, const Tensor& t) { out.emplace_back(std::move(name), t); });
    return out;
}

std::vector<Tensor*> ModelParams::parameter_slots() {
    std::vector<Tensor*> out;
    visit_parameters(*this, [&](const std::string&, Tensor& t) { out.push_back(&t); });
    return out;
}

ModelParams ModelParams::clone() const {
    ModelParams copy = *this;
    for (Tensor* slot : copy.parameter_slots()) {
        Tensor fresh = slot->detach();
        fresh.set_requires_grad(true);
        *slot = fresh;
    }
    return copy;
}

std::vector<Tensor> ModelParams::parameters() const {
    std::vector<Tensor> out;
    for (auto& [name, t] : named_parameters()) out.push_back(t);
    return out;
}

void ModelParams::zero_grad() const {
    for (auto& [name, t] : named_parameters()) {
        Tensor copy = t;
        copy.zero_grad();
    }
}

void ModelParams::zero_heads() {
    auto clear = [](Linear& l) {
        for (Tensor* t : {&l.weight, &l.bias}) {
            auto d = t->mutable_data();
            std::fill(d.begin(), d.end(), 0.0);
        }
    };
    clear(head_a);
    for (auto& h : gin_heads) clear(h);
    clear(head_e);
}

std::size_t ModelParams::num_scalars() const {
    std::size_t n = 0;
    for (auto& [name, t] : named_parameters()) n += t.size();
    return n;
}

GraphBatch GraphBatch::make(std::span<const FrameGraph* const> graphs) {
    if (graphs.empty()) throw std::invalid_argument("cannot batch zero graphs");
    const std::size_t n = graphs[0]->num_nodes();
    const std::size_t h = graphs[0]->node_features.cols;
    GraphBatch b;
    b.num_graphs = graphs.size();
    b.nodes_per_graph = n;
    std::vector<double> feats;
    feats.reserve(graphs.size() * n * h);
    for (const FrameGraph* g : graphs) {
        if (g->num_nodes() != n || g->node_features.cols != h) {
            throw DimensionError("all graphs in a batch must share node count and feature size");
        }
        if (g->mask.size() != n) throw DimensionError("graph mask length differs from node count");
        feats.insert(feats.end(), g->node_features.values.begin(), g->node_features.values.end());
        b.mask.insert(b.mask.end(), g->mask.begin(), g->mask.end());
        b.labels.push_back(g->label);
    }
    b.features = Tensor::from({graphs.size() * n, h}, std::move(feats));
    b.cycle = graphs[0]->neighbors.num_nodes() == n
                  ? graphs[0]->neighbors.tiled(graphs.size())
                  : build_adjacency(n, AdjacencyKind::Cycle).tiled(graphs.size());
    b.full = build_adjacency(n, AdjacencyKind::Full).tiled(graphs.size());
    return b;
}

GraphBatch GraphBatch::make(std::span<const FrameGraph> graphs) {
    std::vector<const FrameGraph*> ptrs;
    for (const auto& g : graphs) ptrs.push_back(&g);
    return make(std::span<const FrameGraph* const>(ptrs));
}

std::vector<Tensor> StageLogits::loss_stages() const {
    std::vector<Tensor> out = gin;
    out.push_back(e);
    out.push_back(total);
    return out;
}

Tensor gru_direction_forward(const Tensor& x, const GruCell& cell, std::size_t num_graphs,
                             std::size_t nodes_per_graph, bool reverse) {
    const std::size_t in = cell.input_dim(), hid = cell.hidden();
    const std::size_t n = nodes_per_graph;
    if (x.rank() != 2 || x.cols() != in || x.rows() != num_graphs * n) {
        throw DimensionError("GRU input " + shape_to_string(x.shape()) + " does not match " +
                             std::to_string(num_graphs) + " graphs of " + std::to_string(n) +
                             " nodes with " + std::to_string(in) + " features");
    }
    // [x, h] W == x W[:in] + h W[in:]; the input half is applied to all
    // frames at once.
    auto input_part = [&](const Tensor& w, const Tensor& b) {
        return add(matmul(x, slice_rows(w, 0, in)), b);
    };
    const Tensor xz = input_part(cell.w_z, cell.b_z);
    const Tensor xr = input_part(cell.w_r, cell.b_r);
    const Tensor xh = input_part(cell.w_h, cell.b_h);
    const Tensor uz = slice_rows(cell.w_z, in, hid);
    const Tensor ur = slice_rows(cell.w_r, in, hid);
    const Tensor uh = slice_rows(cell.w_h, in, hid);

    Tensor h = Tensor::zeros({num_graphs, hid});
    std::vector<Tensor> steps(n);
    std::vector<std::size_t> rows(num_graphs);
    for (std::size_t s = 0; s < n; ++s) {
        const std::size_t t = reverse ? n - 1 - s : s;
        for (std::size_t b = 0; b < num_graphs; ++b) rows[b] = b * n + t;
        const Tensor z = sigmoid(add(gather_rows(xz, rows), matmul(h, uz)));
        const Tensor r = sigmoid(add(gather_rows(xr, rows), matmul(h, ur)));
        const Tensor cand = tanh(add(gather_rows(xh, rows), matmul(mul(r, h), uh)));
        h = add(h, mul(z, sub(cand, h)));
        steps[t] = h;
    }
    // steps stacked time-major: row t * B + b  ->  row b * n + t
    const Tensor stacked = concat(std::span<const Tensor>(steps), 0);
    std::vector<std::size_t> perm(num_graphs * n);
    for (std::size_t b = 0; b < num_graphs; ++b)
        for (std::size_t t = 0; t < n; ++t) perm[b * n + t] = t * num_graphs + b;
    return gather_rows(stacked, perm);
}

Tensor bigru_forward(const Tensor& x, const BiGruParams& params, std::size_t num_graphs,
                     std::size_t nodes_per_graph) {
    return concat(gru_direction_forward(x, params.forward, num_graphs, nodes_per_graph, false),
                  gru_direction_forward(x, params.backward, num_graphs, nodes_per_graph, true), 1);
}

std::vector<Tensor> gin_stack_forward(const Tensor& g, const GraphBatch& batch,
                                      std::span<const WmaGinLayerParams> layers,
                                      const ModelConfig& config) {
    std::vector<Tensor> outputs;
    outputs.reserve(layers.size());
    Tensor x = g;
    for (std::size_t l = 1; l <= layers.size(); ++l) {
        const NeighborLists& nb = l == config.fa_layer_index ? batch.full : batch.cycle;
        Tensor out = wma_gin_forward(x, nb, layers[l - 1], config.aggregator_weights);
        if (config.residual && l >= 2) out = add(out, x);
        outputs.push_back(out);
        x = out;
    }
    return outputs;
}

Tensor mpa_forward(const Tensor& features, const Tensor& g, const Tensor& last_gin,
                   const MpaParams& params, const Mask& mask, std::size_t num_graphs) {
    const Tensor q = params.query(features);
    const Tensor k = params.key(g);
    const Tensor v = params.value(last_gin);
    const std::size_t total = q.rows();
    if (num_graphs == 0 || total % num_graphs != 0 || mask.size() != total ||
        k.rows() != total || v.rows() != total) {
        throw DimensionError("attention inputs do not split into " + std::to_string(num_graphs) +
                             " equal graphs");
    }
    const std::size_t n = total / num_graphs;
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(q.cols()));
    std::vector<Tensor> parts;
    parts.reserve(num_graphs);
    for (std::size_t b = 0; b < num_graphs; ++b) {
        const Tensor qb = slice_rows(q, b * n, n);
        const Tensor kb = slice_rows(k, b * n, n);
        const Tensor vb = slice_rows(v, b * n, n);
        const std::span<const std::uint8_t> keys(mask.data() + b * n, n);
        const Tensor attn = softmax_rows(scale(matmul(qb, transpose(kb)), inv_sqrt_d), keys);
        parts.push_back(matmul(attn, vb));
    }
    return concat(std::span<const Tensor>(parts), 0);
}

Tensor readout(const Tensor& x, const Mask& mask, std::size_t num_graphs) {
    if (x.rank() != 2 || mask.size() != x.rows() || num_graphs == 0 ||
        x.rows() % num_graphs != 0) {
        throw DimensionError("readout: features " + shape_to_string(x.shape()) + ", mask of " +
                             std::to_string(mask.size()) + ", " + std::to_string(num_graphs) +
                             " graphs");
    }
    const std::size_t n = x.rows() / num_graphs, d = x.cols();
    std::vector<double> inv_count(num_graphs);
    for (std::size_t b = 0; b < num_graphs; ++b) {
        const auto real = std::count(mask.begin() + static_cast<std::ptrdiff_t>(b * n),
                                     mask.begin() + static_cast<std::ptrdiff_t>((b + 1) * n),
                                     std::uint8_t{1});
        if (real == 0) throw std::invalid_argument("readout: graph has no real nodes");
        inv_count[b] = 1.0 / static_cast<double>(real);
    }
    const auto src = x.data();
    std::vector<double> out(num_graphs * d, 0.0);
    for (std::size_t b = 0; b < num_graphs; ++b) {
        double* row = out.data() + b * d;
        for (std::size_t t = 0; t < n; ++t) {
            if (!mask[b * n + t]) continue;
            const double* xr = src.data() + (b * n + t) * d;
            for (std::size_t j = 0; j < d; ++j) row[j] += xr[j];
        }
        for (std::size_t j = 0; j < d; ++j) row[j] *= inv_count[b];
    }
    return make_op(OpKind::Custom, {num_graphs, d}, std::move(out), {x},
                   [mask, inv_count, n, d, num_graphs](TensorNode& self) {
                       auto gx = self.inputs[0]->grad_buffer();
                       for (std::size_t b = 0; b < num_graphs; ++b) {
                           const double* gb = self.grad.data() + b * d;
                           for (std::size_t t = 0; t < n; ++t) {
                               if (!mask[b * n + t]) continue;
                               double* gr = gx.data() + (b * n + t) * d;
                               for (std::size_t j = 0; j < d; ++j) gr[j] += gb[j] * inv_count[b];
                           }
                       }
                   });
}

StageLogits model_forward(const GraphBatch& batch, const ModelParams& params,
                          const ModelConfig& config) {
    if (batch.features.cols() != config.feature_dim) {
        throw DimensionError("batch has " + std::to_string(batch.features.cols()) +
                             " features, model expects " + std::to_string(config.feature_dim));
    }
    if (params.gin.size() != config.num_gin_layers ||
        params.gin_heads.size() + 1 != config.num_gin_layers) {
        throw std::invalid_argument("parameters do not match num_gin_layers");
    }
    const std::size_t graphs = batch.num_graphs;
    const Tensor g = bigru_forward(batch.features, params.gru, graphs, batch.nodes_per_graph);
    const auto layers = gin_stack_forward(g, batch, params.gin, config);

    StageLogits out;
    out.a = params.head_a(readout(g, batch.mask, graphs));
    for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
        out.gin.push_back(params.gin_heads[l](readout(layers[l], batch.mask, graphs)));
    }
    const Tensor deepest = config.stage_e_source == StageESource::Mpa
                               ? mpa_forward(batch.features, g, layers.back(), params.mpa,
                                             batch.mask, graphs)
                               : layers.back();
    out.e = params.head_e(readout(deepest, batch.mask, graphs));
    Tensor total = out.a;
    for (const auto& s : out.gin) total = add(total, s);
    out.total = add(total, out.e);
    return out;
}

StageLogits model_forward(const FrameGraph& graph, const ModelParams& params,
                          const ModelConfig& config) {
    const FrameGraph* ptr = &graph;
    return model_forward(GraphBatch::make(std::span<const FrameGraph* const>(&ptr, 1)), params,
                         config);
}

std::vector<int> predict(const StageLogits& logits) {
    const Tensor& g = logits.total;
    std::vector<int> out(g.rows());
    for (std::size_t i = 0; i < g.rows(); ++i) {
        int best = 0;
        for (std::size_t c = 1; c < g.cols(); ++c)
            if (g.at(i, c) > g.at(i, static_cast<std::size_t>(best))) best = static_cast<int>(c);
        out[i] = best;
    }
    return out;
}

}  // namespace wmagin
