#include "wmagin/cli.hpp"

#include <filesystem>
#include <iomanip>
#include <sstream>

#include "CLI11.hpp"
#include "wmagin/checkpoint.hpp"
#include "wmagin/data_io.hpp"
#include "wmagin/gradcheck.hpp"
#include "wmagin/trainer.hpp"

namespace wmagin {

namespace {

namespace fs = std::filesystem;

std::vector<UtteranceFeatures> dataset_for(const RunConfig& config, const std::string& data_path) {
    std::vector<UtteranceFeatures> data;
    if (!data_path.empty()) {
        data = load_dataset(data_path, config.model.num_classes);
    } else if (config.synth) {
        data = generate_synthetic(*config.synth);
    } else {
        throw std::invalid_argument("no --data given and the configuration has no synth.* section");
    }
    const std::size_t h = data.front().frames.cols;
    if (h != config.model.feature_dim) {
        throw std::invalid_argument("dataset has " + std::to_string(h) +
                                    " features per frame but model.feature_dim is " +
                                    std::to_string(config.model.feature_dim));
    }
    return data;
}

RunConfig load_run_config(const std::string& path) {
    RunConfig config = path.empty() ? RunConfig{} : parse_config(path);
    apply_env_overrides(config);
    return config;
}

int run_train(const std::string& config_path, const std::string& data_path,
              const std::string& out_dir, bool cv, std::ostream& out) {
    const RunConfig config = load_run_config(config_path);
    const auto data = dataset_for(config, data_path);
    fs::create_directories(out_dir);
    if (cv) {
        const auto report = cross_validate(data, config.train, config.model);
        const std::string text = report.to_json().dump(2) + "\n";
        write_file_atomic(fs::path(out_dir) / "cv_report.json", text);
        out << text;
        return 0;
    }
    const auto run = train_holdout(data, config.train, config.model);
    nlohmann::json report = run.test.to_json();
    report["best_epoch"] = run.fit.best_epoch;
    report["best_valid_wa"] = run.fit.best_valid_wa;
    report["epochs"] = run.fit.log.size();
    save_checkpoint(fs::path(out_dir) / "checkpoint.json", config.model, run.fit.best);
    write_file_atomic(fs::path(out_dir) / "train_log.jsonl", run.fit.log_ndjson());
    write_file_atomic(fs::path(out_dir) / "config.txt", format_config(config));
    write_file_atomic(fs::path(out_dir) / "report.json", report.dump(2) + "\n");
    out << report.dump(2) << '\n';
    return 0;
}

int run_eval(const std::string& checkpoint_path, const std::string& data_path, std::ostream& out) {
    const Checkpoint ckpt = load_checkpoint(checkpoint_path);
    const auto data = load_dataset(data_path, ckpt.config.num_classes);
    const auto graphs = segment_all(data, ckpt.config.graph_len);
    out << evaluate(graphs, ckpt.params, ckpt.config).to_json().dump(2) << '\n';
    return 0;
}

int run_sweep(const std::string& grid_path, const std::string& data_path,
              const std::string& table_path, std::ostream& out) {
    const SweepGrid grid = parse_grid(grid_path);
    std::ostringstream table;
    table << std::setprecision(6) << "configuration\tepochs\tbest_epoch\tvalid_wa\ttest_wa\ttest_ua\n";
    for (auto [label, config] : grid.expand()) {
        apply_env_overrides(config);
        const auto data = dataset_for(config, data_path);
        const auto run = train_holdout(data, config.train, config.model);
        table << (label.empty() ? "base" : label) << '\t' << run.fit.log.size() << '\t'
              << run.fit.best_epoch << '\t' << run.fit.best_valid_wa << '\t' << run.test.wa << '\t'
              << run.test.ua << '\n';
    }
    if (!table_path.empty()) write_file_atomic(table_path, table.str());
    out << table.str();
    return 0;
}

int run_gradcheck(std::uint64_t seed, std::ostream& out) {
    const auto result = run_tiny_gradient_check(seed);
    out << result.to_json().dump(2) << '\n';
    out << "max relative error " << std::scientific << result.max_rel_error << '\n';
    return result.max_rel_error < 1e-4 ? 0 : 1;
}

int run_gen_synth(const std::string& spec_path, const std::string& out_path, std::ostream& out) {
    SynthSpec spec;
    if (!spec_path.empty()) {
        const RunConfig config = parse_config(spec_path);
        if (config.synth) spec = *config.synth;
    }
    const auto data = generate_synthetic(spec);
    save_dataset(out_path, data);
    out << "wrote " << data.size() << " utterances to " << out_path << '\n';
    return 0;
}

int run_init(const std::string& config_path, const std::string& out_path, bool zero_heads,
             std::ostream& out) {
    const RunConfig config = load_run_config(config_path);
    Rng rng(config.train.seed);
    ModelParams params = ModelParams::init(config.model, rng);
    if (zero_heads) params.zero_heads();
    save_checkpoint(out_path, config.model, params);
    out << "wrote " << params.num_scalars() << " parameters to " << out_path << '\n';
    return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"WMA-GIN speech emotion recognition"};
    app.require_subcommand(1);

    std::string config_path, data_path, out_path, checkpoint_path, grid_path, spec_path;
    bool cv = false;
    bool zero_heads = false;
    std::uint64_t seed = 0;

    auto* train_cmd = app.add_subcommand("train", "train on a held-out split and save a checkpoint");
    train_cmd->add_option("--config", config_path, "configuration file");
    train_cmd->add_option("--data", data_path, "feature CSV (defaults to the synth.* section)");
    train_cmd->add_option("--out", out_path, "output directory")->required();
    train_cmd->add_flag("--cv", cv, "run group-exclusive cross-validation instead");

    auto* eval_cmd = app.add_subcommand("eval", "print an evaluation report as JSON");
    eval_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
    eval_cmd->add_option("--data", data_path, "feature CSV")->required();

    auto* sweep_cmd = app.add_subcommand("sweep", "train every configuration of a grid");
    sweep_cmd->add_option("--grid", grid_path, "grid file")->required();
    sweep_cmd->add_option("--data", data_path, "feature CSV (defaults to the synth.* section)");
    sweep_cmd->add_option("--out", out_path, "also write the table to this file");

    auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference check on a tiny model");
    grad_cmd->add_option("--seed", seed, "seed for parameters and inputs");

    auto* synth_cmd = app.add_subcommand("gen-synth", "write a synthetic dataset");
    synth_cmd->add_option("--spec", spec_path, "file with synth.* settings");
    synth_cmd->add_option("--out", out_path, "output CSV")->required();

    auto* init_cmd = app.add_subcommand("init", "write a freshly initialised checkpoint");
    init_cmd->add_option("--config", config_path, "configuration file");
    init_cmd->add_option("--out", out_path, "checkpoint file")->required();
    init_cmd->add_flag("--zero-heads", zero_heads, "zero every stage head");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*train_cmd) return run_train(config_path, data_path, out_path, cv, out);
        if (*eval_cmd) return run_eval(checkpoint_path, data_path, out);
        if (*sweep_cmd) return run_sweep(grid_path, data_path, out_path, out);
        if (*grad_cmd) return run_gradcheck(seed, out);
        if (*synth_cmd) return run_gen_synth(spec_path, out_path, out);
        if (*init_cmd) return run_init(config_path, out_path, zero_heads, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv{"wmagin"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace wmagin
