#include "wmagin/checkpoint.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace wmagin {

using nlohmann::json;

json model_config_to_json(const ModelConfig& c) {
    return {
        {"feature_dim", c.feature_dim},
        {"graph_len", c.graph_len},
        {"gru_hidden", c.gru_hidden},
        {"gin_hidden", c.gin_hidden},
        {"num_gin_layers", c.num_gin_layers},
        {"fa_layer_index", c.fa_layer_index},
        {"num_classes", c.num_classes},
        {"alpha", c.aggregator_weights.alpha},
        {"beta", c.aggregator_weights.beta},
        {"gamma", c.aggregator_weights.gamma},
        {"residual", c.residual},
        {"stage_e_source", c.stage_e_source == StageESource::Mpa ? "mpa" : "last_gin"},
    };
}

ModelConfig model_config_from_json(const json& j) {
    ModelConfig c;
    c.feature_dim = j.at("feature_dim").get<std::size_t>();
    c.graph_len = j.at("graph_len").get<std::size_t>();
    c.gru_hidden = j.at("gru_hidden").get<std::size_t>();
    c.gin_hidden = j.at("gin_hidden").get<std::size_t>();
    c.num_gin_layers = j.at("num_gin_layers").get<std::size_t>();
    c.fa_layer_index = j.at("fa_layer_index").get<std::size_t>();
    c.num_classes = j.at("num_classes").get<std::size_t>();
    c.aggregator_weights.alpha = j.at("alpha").get<double>();
    c.aggregator_weights.beta = j.at("beta").get<double>();
    c.aggregator_weights.gamma = j.at("gamma").get<double>();
    c.residual = j.at("residual").get<bool>();
    const auto source = j.at("stage_e_source").get<std::string>();
    if (source == "mpa") {
        c.stage_e_source = StageESource::Mpa;
    } else if (source == "last_gin") {
        c.stage_e_source = StageESource::LastGin;
    } else {
        throw std::invalid_argument("unknown stage_e_source '" + source + "'");
    }
    c.validate();
    return c;
}

json checkpoint_to_json(const ModelConfig& config, const ModelParams& params) {
    json tensors = json::array();
    for (const auto& [name, t] : params.named_parameters()) {
        tensors.push_back({{"name", name},
                           {"shape", t.shape()},
                           {"values", std::vector<double>(t.data().begin(), t.data().end())}});
    }
    return {{"format", "wmagin-checkpoint"},
            {"format_version", kCheckpointFormatVersion},
            {"model_config", model_config_to_json(config)},
            {"parameters", std::move(tensors)}};
}

Checkpoint checkpoint_from_json(const json& j) {
    if (j.value("format", "") != "wmagin-checkpoint") {
        throw std::invalid_argument("not a wmagin checkpoint");
    }
    const int version = j.at("format_version").get<int>();
    if (version != kCheckpointFormatVersion) {
        throw std::invalid_argument("unsupported checkpoint format_version " +
                                    std::to_string(version));
    }
    Checkpoint ck;
    ck.config = model_config_from_json(j.at("model_config"));
    Rng rng(0);
    ck.params = ModelParams::init(ck.config, rng);

    std::map<std::string, const json*> stored;
    for (const auto& entry : j.at("parameters")) {
        stored[entry.at("name").get<std::string>()] = &entry;
    }
    for (auto& [name, t] : ck.params.named_parameters()) {
        auto it = stored.find(name);
        if (it == stored.end()) throw std::invalid_argument("checkpoint lacks parameter " + name);
        const auto shape = it->second->at("shape").get<Shape>();
        const auto values = it->second->at("values").get<std::vector<double>>();
        if (shape != t.shape() || values.size() != t.size()) {
            throw DimensionError("checkpoint parameter " + name + " has shape " +
                                 shape_to_string(shape) + ", expected " +
                                 shape_to_string(t.shape()));
        }
        Tensor target = t;
        std::copy(values.begin(), values.end(), target.mutable_data().begin());
        stored.erase(it);
    }
    if (!stored.empty()) {
        throw std::invalid_argument("checkpoint has unexpected parameter " + stored.begin()->first);
    }
    return ck;
}

std::string checkpoint_to_string(const ModelConfig& config, const ModelParams& params) {
    return checkpoint_to_json(config, params).dump();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out << contents;
        out.flush();
        if (!out) {
            std::filesystem::remove(tmp);
            throw std::runtime_error("failed writing " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

void save_checkpoint(const std::filesystem::path& path, const ModelConfig& config,
                     const ModelParams& params) {
    write_file_atomic(path, checkpoint_to_string(config, params) + "\n");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("checkpoint " + path.string() + ": " + e.what());
    }
    return checkpoint_from_json(j);
}

}  // namespace wmagin
