#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "wmagin/checkpoint.hpp"
#include "wmagin/cli.hpp"
#include "wmagin/data_io.hpp"
#include "wmagin/gradcheck.hpp"
#include "wmagin/model.hpp"
#include "wmagin/trainer.hpp"
#include "wmagin/wma_layer.hpp"

namespace py = pybind11;
using namespace wmagin;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
    if (a.ndim() != 2) throw std::invalid_argument("expected a 2-D array");
    const auto rows = static_cast<std::size_t>(a.shape(0));
    const auto cols = static_cast<std::size_t>(a.shape(1));
    return Matrix(rows, cols, std::vector<double>(a.data(), a.data() + rows * cols));
}

Array to_array(const Matrix& m) {
    Array out({m.rows, m.cols});
    std::copy(m.values.begin(), m.values.end(), out.mutable_data());
    return out;
}

Array tensor_to_array(const Tensor& t) {
    Array out({t.rows(), t.cols()});
    std::copy(t.data().begin(), t.data().end(), out.mutable_data());
    return out;
}

Tensor aggregate(const Array& x, const std::vector<std::vector<std::size_t>>& neighbors,
                 Tensor (*fn)(const Tensor&, const NeighborLists&)) {
    return fn(to_matrix(x).to_tensor(), NeighborLists(neighbors));
}

py::dict logits_to_dict(const StageLogits& s) {
    py::dict d;
    d["a"] = tensor_to_array(s.a);
    py::list gin;
    for (const auto& t : s.gin) gin.append(tensor_to_array(t));
    d["gin"] = gin;
    d["e"] = tensor_to_array(s.e);
    d["G"] = tensor_to_array(s.total);
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "WMA-GIN speech emotion recognition core";

    py::class_<AggregatorWeights>(m, "AggregatorWeights")
        .def(py::init<>())
        .def(py::init<double, double, double>(), py::arg("alpha"), py::arg("beta"), py::arg("gamma"))
        .def_readwrite("alpha", &AggregatorWeights::alpha)
        .def_readwrite("beta", &AggregatorWeights::beta)
        .def_readwrite("gamma", &AggregatorWeights::gamma);

    py::enum_<StageESource>(m, "StageESource")
        .value("MPA", StageESource::Mpa)
        .value("LAST_GIN", StageESource::LastGin);

    py::class_<ModelConfig>(m, "ModelConfig")
        .def(py::init<>())
        .def_readwrite("feature_dim", &ModelConfig::feature_dim)
        .def_readwrite("graph_len", &ModelConfig::graph_len)
        .def_readwrite("gru_hidden", &ModelConfig::gru_hidden)
        .def_readwrite("gin_hidden", &ModelConfig::gin_hidden)
        .def_readwrite("num_gin_layers", &ModelConfig::num_gin_layers)
        .def_readwrite("fa_layer_index", &ModelConfig::fa_layer_index)
        .def_readwrite("num_classes", &ModelConfig::num_classes)
        .def_readwrite("aggregator_weights", &ModelConfig::aggregator_weights)
        .def_readwrite("residual", &ModelConfig::residual)
        .def_readwrite("stage_e_source", &ModelConfig::stage_e_source)
        .def("validate", &ModelConfig::validate);

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("learning_rate", &TrainConfig::learning_rate)
        .def_readwrite("weight_decay", &TrainConfig::weight_decay)
        .def_readwrite("batch_size", &TrainConfig::batch_size)
        .def_readwrite("max_epochs", &TrainConfig::max_epochs)
        .def_readwrite("early_stop_patience", &TrainConfig::early_stop_patience)
        .def_readwrite("seed", &TrainConfig::seed)
        .def_readwrite("folds", &TrainConfig::folds)
        .def_readwrite("split_ratio", &TrainConfig::split_ratio)
        .def("validate", &TrainConfig::validate);

    py::class_<SynthSpec>(m, "SynthSpec")
        .def(py::init<>())
        .def_readwrite("num_classes", &SynthSpec::num_classes)
        .def_readwrite("utterances_per_class", &SynthSpec::utterances_per_class)
        .def_readwrite("frames_min", &SynthSpec::frames_min)
        .def_readwrite("frames_max", &SynthSpec::frames_max)
        .def_readwrite("feature_dim", &SynthSpec::feature_dim)
        .def_readwrite("num_groups", &SynthSpec::num_groups)
        .def_readwrite("noise", &SynthSpec::noise)
        .def_readwrite("seed", &SynthSpec::seed)
        .def_readwrite("frequencies", &SynthSpec::frequencies)
        .def_readwrite("amplitudes", &SynthSpec::amplitudes)
        .def_readwrite("envelope_rates", &SynthSpec::envelope_rates);

    py::class_<RunConfig>(m, "RunConfig")
        .def(py::init<>())
        .def_readwrite("model", &RunConfig::model)
        .def_readwrite("train", &RunConfig::train)
        .def_readwrite("synth", &RunConfig::synth);

    py::class_<UtteranceFeatures>(m, "Utterance")
        .def(py::init([](const Array& frames, int label, std::string id, std::string group) {
                 return UtteranceFeatures{to_matrix(frames), label, std::move(id), std::move(group)};
             }),
             py::arg("frames"), py::arg("label"), py::arg("utterance_id") = "",
             py::arg("group_id") = "")
        .def_property_readonly("frames", [](const UtteranceFeatures& u) { return to_array(u.frames); })
        .def_readwrite("label", &UtteranceFeatures::label)
        .def_readwrite("utterance_id", &UtteranceFeatures::utterance_id)
        .def_readwrite("group_id", &UtteranceFeatures::group_id);

    py::class_<EvalReport>(m, "EvalReport")
        .def_readonly("wa", &EvalReport::wa)
        .def_readonly("ua", &EvalReport::ua)
        .def_readonly("confusion", &EvalReport::confusion)
        .def_readonly("per_class_recall", &EvalReport::per_class_recall)
        .def("to_json", [](const EvalReport& r) { return r.to_json().dump(); });

    py::class_<GradCheckResult>(m, "GradCheckResult")
        .def_readonly("max_rel_error", &GradCheckResult::max_rel_error)
        .def_readonly("num_checked", &GradCheckResult::num_checked)
        .def_readonly("worst_parameter", &GradCheckResult::worst_parameter);

    py::class_<Checkpoint>(m, "Checkpoint")
        .def_readonly("config", &Checkpoint::config)
        .def("parameters",
             [](const Checkpoint& c) {
                 py::dict d;
                 for (const auto& [name, t] : c.params.named_parameters()) {
                     Array a(std::vector<py::ssize_t>(t.shape().begin(), t.shape().end()));
                     std::copy(t.data().begin(), t.data().end(), a.mutable_data());
                     d[py::str(name)] = a;
                 }
                 return d;
             })
        .def("forward",
             [](const Checkpoint& c, const Array& frames) {
                 UtteranceFeatures u{to_matrix(frames), 0, "", ""};
                 py::list out;
                 NoGradGuard guard;
                 for (const auto& g : segment_utterance(u, c.config.graph_len))
                     out.append(logits_to_dict(model_forward(g, c.params, c.config)));
                 return out;
             },
             py::arg("frames"), "Stage logits for every graph cut from the frames.")
        .def("evaluate",
             [](const Checkpoint& c, const std::vector<UtteranceFeatures>& data) {
                 return evaluate(segment_all(data, c.config.graph_len), c.params, c.config);
             });

    m.def("aggregate_sum", [](const Array& x, const std::vector<std::vector<std::size_t>>& nb) {
        return tensor_to_array(aggregate(x, nb, aggregate_sum));
    });
    m.def("aggregate_mean", [](const Array& x, const std::vector<std::vector<std::size_t>>& nb) {
        return tensor_to_array(aggregate(x, nb, aggregate_mean));
    });
    m.def("aggregate_softmax", [](const Array& x, const std::vector<std::vector<std::size_t>>& nb) {
        return tensor_to_array(aggregate(x, nb, aggregate_softmax));
    });
    m.def("cycle_neighbors", [](std::size_t n) {
        const auto nb = build_adjacency(n, AdjacencyKind::Cycle);
        std::vector<std::vector<std::size_t>> out(n);
        for (std::size_t i = 0; i < n; ++i) out[i].assign(nb.neighbors(i).begin(), nb.neighbors(i).end());
        return out;
    });

    m.def("stage_weights", &stage_weights, py::arg("num_stages"));
    m.def("report_from_confusion", &report_from_confusion, py::arg("confusion"));

    m.def("generate_synthetic", &generate_synthetic, py::arg("spec") = SynthSpec{});
    m.def("load_dataset", &load_dataset, py::arg("path"), py::arg("num_classes") = 4);
    m.def("save_dataset", &save_dataset, py::arg("path"), py::arg("dataset"));
    m.def("parse_config", &parse_config, py::arg("path"));
    m.def("parse_config_text", &parse_config_text, py::arg("text"), py::arg("origin") = "<memory>");

    m.def("load_checkpoint", &load_checkpoint, py::arg("path"));
    m.def("init_checkpoint", [](const ModelConfig& config, std::uint64_t seed, bool zero_heads) {
        Rng rng(seed);
        Checkpoint c{config, ModelParams::init(config, rng)};
        if (zero_heads) c.params.zero_heads();
        return c;
    }, py::arg("config"), py::arg("seed") = 0, py::arg("zero_heads") = false);
    m.def("save_checkpoint", [](const std::filesystem::path& path, const Checkpoint& c) {
        save_checkpoint(path, c.config, c.params);
    }, py::arg("path"), py::arg("checkpoint"));

    m.def("train",
          [](const std::vector<UtteranceFeatures>& data, const TrainConfig& train_config,
             const ModelConfig& model_config) {
              py::gil_scoped_release release;
              auto run = train_holdout(data, train_config, model_config);
              py::gil_scoped_acquire acquire;
              py::dict d;
              d["checkpoint"] = Checkpoint{model_config, std::move(run.fit.best)};
              d["best_epoch"] = run.fit.best_epoch;
              d["best_valid_wa"] = run.fit.best_valid_wa;
              d["log"] = run.fit.log_ndjson();
              d["test"] = run.test;
              return d;
          },
          py::arg("dataset"), py::arg("train_config"), py::arg("model_config"),
          "Train on a ratio split and evaluate on its test part.");
    m.def("cross_validate",
          [](const std::vector<UtteranceFeatures>& data, const TrainConfig& train_config,
             const ModelConfig& model_config) {
              py::gil_scoped_release release;
              const auto r = cross_validate(data, train_config, model_config);
              return r.to_json().dump();
          },
          py::arg("dataset"), py::arg("train_config"), py::arg("model_config"));

    m.def("gradient_check", &run_tiny_gradient_check, py::arg("seed") = 0);

    m.def("cli", [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = cli_main(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
    }, py::arg("args"), "Runs the command-line tool in-process; returns (code, stdout, stderr).");
}
