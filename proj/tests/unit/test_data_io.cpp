#include <cmath>
#include <cstdlib>
#include <fstream>

#include "doctest.h"
#include "helpers.hpp"
#include "wmagin/data_io.hpp"

using namespace wmagin;

namespace {

const char* kTwoUtterances =
    "utterance_id,group_id,label,frame_index,f0,f1,f2\n"
    "a,spk1,2,0,0.1,0.2,0.3\n"
    "a,spk1,2,1,1.1,1.2,1.3\n"
    "a,spk1,2,2,2.1,2.2,2.3\n"
    "a,spk1,2,3,3.1,3.2,3.3\n"
    "b,spk2,0,0,-1,-2,-3\n"
    "b,spk2,0,1,4,5,6\n";

std::string parse_error(const std::string& text) {
    try {
        parse_dataset(text, 4, "data.csv");
    } catch (const ParseError& e) {
        return e.what();
    }
    return {};
}

// Lag-1 autocorrelation over all channels; depends on frequency only.
double lag1(const UtteranceFeatures& u) {
    double num = 0.0, den = 0.0;
    for (std::size_t t = 0; t < u.frames.rows; ++t) {
        for (std::size_t k = 0; k < u.frames.cols; ++k) {
            den += u.frames(t, k) * u.frames(t, k);
            if (t + 1 < u.frames.rows) num += u.frames(t, k) * u.frames(t + 1, k);
        }
    }
    return num / den;
}

}  // namespace

TEST_CASE("parse a two-utterance file") {
    const auto d = parse_dataset(kTwoUtterances);
    REQUIRE(d.size() == 2);
    CHECK(d[0].utterance_id == "a");
    CHECK(d[0].group_id == "spk1");
    CHECK(d[0].label == 2);
    CHECK(d[0].frames.rows == 4);
    CHECK(d[0].frames.cols == 3);
    CHECK(d[0].frames(3, 2) == 3.3);
    CHECK(d[1].frames.rows == 2);
    CHECK(d[1].frames(1, 0) == 4.0);
}

TEST_CASE("malformed files name the line") {
    CHECK(parse_error("").find("empty") != std::string::npos);
    CHECK(parse_error("utterance_id,group_id,frame_index,f0\n").find("label") != std::string::npos);
    const std::string header = "utterance_id,group_id,label,frame_index,f0,f1\n";
    CHECK(parse_error(header + "a,g,0,0,1,2\na,g,0,2,1,2\n").find("data.csv:3") != std::string::npos);
    CHECK(parse_error(header + "a,g,0,0,1,2\na,g,0,1,1\n").find("data.csv:3") != std::string::npos);
    CHECK(parse_error(header + "a,g,7,0,1,2\n").find("label") != std::string::npos);
    CHECK(parse_error(header + "a,g,0,0,1,2\nb,g,0,0,1,2\na,g,0,1,1,2\n").find("data.csv:4") !=
          std::string::npos);
    CHECK(parse_error(header + "a,g,0,0,1,x\n").find("f1") != std::string::npos);
    CHECK_THROWS_AS(load_dataset("/nonexistent/file.csv"), std::runtime_error);
}

TEST_CASE("save and load round trip") {
    testing::TempDir dir("wmagin_data");
    const auto data = generate_synthetic(SynthSpec{});
    const auto path = dir.path / "synth.csv";
    save_dataset(path, data);
    const auto back = load_dataset(path);
    REQUIRE(back.size() == data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        CHECK(back[i].utterance_id == data[i].utterance_id);
        CHECK(back[i].group_id == data[i].group_id);
        CHECK(back[i].label == data[i].label);
        REQUIRE(back[i].frames.values.size() == data[i].frames.values.size());
        for (std::size_t k = 0; k < data[i].frames.values.size(); ++k)
            CHECK(std::abs(back[i].frames.values[k] - data[i].frames.values[k]) <= 1e-12);
    }
    // No temporary files are left next to the output.
    std::size_t files = 0;
    for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir.path)) ++files;
    CHECK(files == 1);
}

TEST_CASE("synthetic generator") {
    const SynthSpec spec;
    const auto a = generate_synthetic(spec);
    const auto b = generate_synthetic(spec);
    REQUIRE(a.size() == 200);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].frames == b[i].frames);

    std::vector<int> per_class(4, 0);
    for (const auto& u : a) {
        ++per_class[static_cast<std::size_t>(u.label)];
        CHECK(u.frames.rows >= spec.frames_min);
        CHECK(u.frames.rows <= spec.frames_max);
        CHECK(u.frames.cols == spec.feature_dim);
    }
    CHECK(per_class == std::vector<int>{50, 50, 50, 50});

    SynthSpec other = spec;
    other.seed = spec.seed + 1;
    CHECK_FALSE(generate_synthetic(other)[0].frames == a[0].frames);

    other.frequencies.pop_back();
    CHECK_THROWS(generate_synthetic(other));
}

TEST_CASE("noise-free synthetic data is separable by a template classifier") {
    SynthSpec spec;
    spec.noise = 0.0;
    const auto data = generate_synthetic(spec);
    std::vector<double> centre(spec.num_classes, 0.0);
    for (const auto& u : data) centre[static_cast<std::size_t>(u.label)] += lag1(u);
    for (double& c : centre) c /= static_cast<double>(spec.utterances_per_class);
    std::size_t correct = 0;
    for (const auto& u : data) {
        const double v = lag1(u);
        std::size_t best = 0;
        for (std::size_t c = 1; c < centre.size(); ++c)
            if (std::abs(v - centre[c]) < std::abs(v - centre[best])) best = c;
        correct += static_cast<int>(best) == u.label;
    }
    CHECK(correct == data.size());
}

TEST_CASE("configuration parsing") {
    const auto empty = parse_config_text("");
    CHECK(empty.model == ModelConfig{});
    CHECK(empty.model.graph_len == 120);
    CHECK(empty.model.gru_hidden == 128);
    CHECK(empty.model.gin_hidden == 256);
    CHECK(empty.model.num_gin_layers == 4);
    CHECK(empty.model.fa_layer_index == 2);
    CHECK(empty.model.aggregator_weights.alpha == 1.0 / 3.0);
    CHECK(empty.train.learning_rate == 1e-4);
    CHECK(empty.train.weight_decay == 1e-8);
    CHECK(empty.train.batch_size == 128);
    CHECK_FALSE(empty.synth.has_value());

    CHECK(parse_config_text("model.fa_layer_index = 4\n").model.fa_layer_index == 4);
    const auto soft = parse_config_text("model.aggregator_weights = 1,0,0  # softmax only\n");
    CHECK(soft.model.aggregator_weights == AggregatorWeights{0.0, 0.0, 1.0});
    const auto third = parse_config_text("model.alpha = 1/3\ntrain.split_ratio = 8:1:1\n");
    CHECK(third.model.aggregator_weights.alpha == 1.0 / 3.0);

    const auto synth = parse_config_text("synth.noise = 0.25\nsynth.frequencies = 0.1,0.2,0.3,0.4\n");
    REQUIRE(synth.synth.has_value());
    CHECK(synth.synth->noise == 0.25);
    CHECK(synth.synth->frequencies[3] == 0.4);

    const auto message = [](const std::string& text) {
        try {
            parse_config_text(text, "run.cfg");
        } catch (const ParseError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK(message("model.width = 3\n").find("model.width") != std::string::npos);
    CHECK(message("\ntrain.batch_size = many\n").find("run.cfg:2") != std::string::npos);
    CHECK(message("train.batch_size = many\n").find("train.batch_size") != std::string::npos);
    CHECK(message("model.residual = maybe\n").find("model.residual") != std::string::npos);
    CHECK(message("just text\n").find("run.cfg:1") != std::string::npos);
    CHECK_FALSE(message("model.fa_layer_index = 9\n").empty());

    // Formatting then parsing gives back the same configuration.
    RunConfig full = parse_config_text("model.beta = 0.1\nsynth.seed = 3\nmodel.stage_e_source = last_gin\n");
    const auto again = parse_config_text(format_config(full));
    CHECK(again.model == full.model);
    CHECK(again.train == full.train);
    CHECK(again.synth == full.synth);
}

TEST_CASE("seed override from the environment") {
    RunConfig c;
    ::setenv("WMAGIN_SEED", "42", 1);
    apply_env_overrides(c);
    ::unsetenv("WMAGIN_SEED");
    CHECK(c.train.seed == 42);
    RunConfig d;
    apply_env_overrides(d);
    CHECK(d.train.seed == 0);
}

TEST_CASE("sweep grids") {
    const auto grid = parse_grid_text(
        "model.graph_len = 24\n"
        "sweep.model.fa_layer_index = 1; 2; 4\n");
    const auto rows = grid.expand();
    REQUIRE(rows.size() == 3);
    CHECK(rows[2].first == "model.fa_layer_index=4");
    CHECK(rows[2].second.model.fa_layer_index == 4);
    CHECK(rows[0].second.model.graph_len == 24);

    const auto two = parse_grid_text(
        "sweep.model.aggregator_weights = 1,0,0 ; 0,1,0\n"
        "sweep.train.seed = 1;2\n");
    CHECK(two.expand().size() == 4);
    CHECK_THROWS_AS(parse_grid_text("sweep.model.nope = 1;2\n"), ParseError);
}
