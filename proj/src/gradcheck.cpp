#include "wmagin/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "wmagin/trainer.hpp"

namespace wmagin {

nlohmann::json GradCheckResult::to_json() const {
    nlohmann::json per = nlohmann::json::array();
    for (const auto& p : parameters) {
        per.push_back({{"name", p.name}, {"size", p.size}, {"max_rel_error", p.max_rel_error}});
    }
    return {{"max_rel_error", max_rel_error},
            {"worst_parameter", worst_parameter},
            {"num_checked", num_checked},
            {"parameters", per}};
}

double relative_error(double a, double b, double floor) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

ModelConfig tiny_gradcheck_config() {
    ModelConfig c;
    c.feature_dim = 3;
    c.graph_len = 6;
    c.gru_hidden = 4;  // 8 after concatenating both directions
    c.gin_hidden = 8;
    c.num_gin_layers = 2;
    c.fa_layer_index = 2;
    c.num_classes = 4;
    return c;
}

std::vector<FrameGraph> tiny_gradcheck_graphs(const ModelConfig& config, std::uint64_t seed) {
    Rng rng(seed);
    std::uniform_real_distribution<double> value(-1.0, 1.0);
    std::vector<FrameGraph> graphs;
    const std::size_t lengths[] = {config.graph_len, config.graph_len - 2};
    for (std::size_t g = 0; g < 2; ++g) {
        UtteranceFeatures u;
        u.frames = Matrix(lengths[g], config.feature_dim);
        for (double& v : u.frames.values) v = value(rng);
        u.label = static_cast<int>((g * 3 + 1) % config.num_classes);
        u.utterance_id = "u" + std::to_string(g);
        auto segs = segment_utterance(u, config.graph_len, g);
        graphs.push_back(std::move(segs.front()));
    }
    return graphs;
}

void randomize_parameters(ModelParams& params, double scale, std::uint64_t seed) {
    Rng rng(seed);
    std::uniform_real_distribution<double> value(-scale, scale);
    for (Tensor* p : params.parameter_slots()) {
        for (double& v : p->mutable_data()) v = value(rng);
    }
}

GradCheckResult gradient_check(const ModelConfig& config, ModelParams& params,
                               std::span<const FrameGraph> graphs,
                               const GradCheckOptions& options) {
    const GraphBatch batch = GraphBatch::make(graphs);
    const auto loss_value = [&] {
        const StageLogits logits = model_forward(batch, params, config);
        return multi_stage_loss(logits.loss_stages(), batch.labels, config.num_loss_stages());
    };

    params.zero_grad();
    backward(loss_value());

    GradCheckResult result;
    const auto named = params.named_parameters();
    const auto slots = params.parameter_slots();
    for (std::size_t p = 0; p < slots.size(); ++p) {
        Tensor& t = *slots[p];
        const std::vector<double> analytic = t.grad();
        ParameterGradError entry{named[p].first, t.size(), 0.0};
        NoGradGuard no_grad;
        auto data = t.mutable_data();
        for (std::size_t i = 0; i < data.size(); ++i) {
            const double saved = data[i];
            data[i] = saved + options.step;
            const double plus = loss_value().item();
            data[i] = saved - options.step;
            const double minus = loss_value().item();
            data[i] = saved;
            const double numeric = (plus - minus) / (2.0 * options.step);
            entry.max_rel_error =
                std::max(entry.max_rel_error, relative_error(analytic[i], numeric, options.floor));
            ++result.num_checked;
        }
        if (entry.max_rel_error >= result.max_rel_error) {
            result.max_rel_error = entry.max_rel_error;
            result.worst_parameter = entry.name;
        }
        result.parameters.push_back(std::move(entry));
    }
    return result;
}

GradCheckResult run_tiny_gradient_check(std::uint64_t seed) {
    const ModelConfig config = tiny_gradcheck_config();
    Rng rng(seed);
    ModelParams params = ModelParams::init(config, rng);
    randomize_parameters(params, 0.5, seed + 1);
    const auto graphs = tiny_gradcheck_graphs(config, seed + 2);
    return gradient_check(config, params, graphs);
}

}  // namespace wmagin
