#include "wmagin/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "wmagin/checkpoint.hpp"

namespace wmagin {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::optional<double> to_double(const std::string& s) {
    double v = 0.0;
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end) return std::nullopt;
    return v;
}

std::optional<long long> to_integer(const std::string& s) {
    long long v = 0;
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end) return std::nullopt;
    return v;
}

std::string where(const std::string& origin, std::size_t line) {
    return origin + ":" + std::to_string(line) + ": ";
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------
// CSV

std::vector<UtteranceFeatures> parse_dataset(const std::string& text, std::size_t num_classes,
                                             const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    std::size_t h = 0;
    bool have_header = false;
    std::vector<UtteranceFeatures> out;
    std::set<std::string> finished;

    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split(line, ',');
        if (!have_header) {
            static const char* required[] = {"utterance_id", "group_id", "label", "frame_index"};
            for (std::size_t i = 0; i < 4; ++i) {
                if (i >= cells.size() || cells[i] != required[i]) {
                    throw ParseError(where(origin, line_no) + "missing column '" + required[i] + "'");
                }
            }
            h = cells.size() - 4;
            if (h == 0) throw ParseError(where(origin, line_no) + "no feature columns");
            for (std::size_t k = 0; k < h; ++k) {
                if (cells[4 + k] != "f" + std::to_string(k)) {
                    throw ParseError(where(origin, line_no) + "expected column 'f" +
                                     std::to_string(k) + "', found '" + cells[4 + k] + "'");
                }
            }
            have_header = true;
            continue;
        }
        if (cells.size() != h + 4) {
            throw ParseError(where(origin, line_no) + "expected " + std::to_string(h + 4) +
                             " fields, found " + std::to_string(cells.size()));
        }
        const std::string& id = cells[0];
        const auto label = to_integer(cells[2]);
        if (!label || *label < 0 || static_cast<std::size_t>(*label) >= num_classes) {
            throw ParseError(where(origin, line_no) + "unknown label '" + cells[2] + "'");
        }
        const auto frame = to_integer(cells[3]);
        if (!frame || *frame < 0) {
            throw ParseError(where(origin, line_no) + "bad frame_index '" + cells[3] + "'");
        }
        if (out.empty() || out.back().utterance_id != id) {
            if (!finished.insert(id).second) {
                throw ParseError(where(origin, line_no) + "utterance '" + id +
                                 "' appears in non-contiguous rows");
            }
            UtteranceFeatures u;
            u.utterance_id = id;
            u.group_id = cells[1];
            u.label = static_cast<int>(*label);
            u.frames.cols = h;
            out.push_back(std::move(u));
        }
        UtteranceFeatures& u = out.back();
        if (u.group_id != cells[1] || u.label != *label) {
            throw ParseError(where(origin, line_no) + "group or label changes within utterance '" +
                             id + "'");
        }
        if (static_cast<std::size_t>(*frame) != u.frames.rows) {
            throw ParseError(where(origin, line_no) + "frame_index " + cells[3] + " of '" + id +
                             "' is not contiguous (expected " + std::to_string(u.frames.rows) + ")");
        }
        for (std::size_t k = 0; k < h; ++k) {
            const auto v = to_double(cells[4 + k]);
            if (!v || !std::isfinite(*v)) {
                throw ParseError(where(origin, line_no) + "bad value '" + cells[4 + k] + "' in f" +
                                 std::to_string(k));
            }
            u.frames.values.push_back(*v);
        }
        ++u.frames.rows;
    }
    if (!have_header) throw ParseError(origin + ": empty dataset file");
    if (out.empty()) throw ParseError(origin + ": dataset has no rows");
    return out;
}

std::vector<UtteranceFeatures> load_dataset(const std::filesystem::path& path,
                                            std::size_t num_classes) {
    return parse_dataset(read_text_file(path), num_classes, path.string());
}

std::string format_dataset(const std::vector<UtteranceFeatures>& dataset) {
    if (dataset.empty()) throw std::invalid_argument("cannot write an empty dataset");
    const std::size_t h = dataset.front().frames.cols;
    std::ostringstream os;
    os.precision(17);
    os << "utterance_id,group_id,label,frame_index";
    for (std::size_t k = 0; k < h; ++k) os << ",f" << k;
    os << '\n';
    for (const auto& u : dataset) {
        if (u.frames.cols != h) throw DimensionError("inconsistent feature dimension in dataset");
        for (std::size_t t = 0; t < u.frames.rows; ++t) {
            os << u.utterance_id << ',' << u.group_id << ',' << u.label << ',' << t;
            for (std::size_t k = 0; k < h; ++k) os << ',' << u.frames(t, k);
            os << '\n';
        }
    }
    return os.str();
}

void save_dataset(const std::filesystem::path& path, const std::vector<UtteranceFeatures>& dataset) {
    write_file_atomic(path, format_dataset(dataset));
}

// ---------------------------------------------------------------------------
// Synthetic data

void SynthSpec::validate() const {
    if (num_classes == 0 || utterances_per_class == 0 || feature_dim == 0 || num_groups == 0) {
        throw std::invalid_argument("synthetic spec counts must be positive");
    }
    if (frames_min == 0 || frames_max < frames_min) {
        throw std::invalid_argument("synthetic frame range must satisfy 1 <= min <= max");
    }
    if (!(noise >= 0.0)) throw std::invalid_argument("synthetic noise must be >= 0");
    for (const auto* v : {&frequencies, &amplitudes, &envelope_rates}) {
        if (v->size() != num_classes) {
            throw std::invalid_argument("synthetic class signatures need one entry per class");
        }
    }
}

std::vector<UtteranceFeatures> generate_synthetic(const SynthSpec& spec) {
    spec.validate();
    constexpr double two_pi = 2.0 * std::numbers::pi;
    Rng rng(spec.seed);
    std::uniform_int_distribution<std::size_t> length(spec.frames_min, spec.frames_max);
    std::uniform_real_distribution<double> phase(0.0, two_pi);
    std::uniform_real_distribution<double> jitter(-0.05, 0.05);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<UtteranceFeatures> out;
    out.reserve(spec.num_classes * spec.utterances_per_class);
    for (std::size_t u = 0; u < spec.utterances_per_class; ++u) {
        for (std::size_t c = 0; c < spec.num_classes; ++c) {
            const std::size_t frames = length(rng);
            const double freq = spec.frequencies[c] * (1.0 + jitter(rng));
            const double env_phase = phase(rng);
            UtteranceFeatures utt;
            utt.utterance_id = "c" + std::to_string(c) + "_u" + std::to_string(u);
            utt.group_id = "g" + std::to_string(u % spec.num_groups);
            utt.label = static_cast<int>(c);
            utt.frames = Matrix(frames, spec.feature_dim);
            std::vector<double> phases(spec.feature_dim);
            for (double& p : phases) p = phase(rng);
            for (std::size_t t = 0; t < frames; ++t) {
                const double env =
                    1.0 + 0.5 * std::sin(two_pi * spec.envelope_rates[c] * static_cast<double>(t) /
                                             static_cast<double>(frames) + env_phase);
                for (std::size_t k = 0; k < spec.feature_dim; ++k) {
                    const double wave = std::sin(two_pi * freq * static_cast<double>(t) + phases[k]);
                    utt.frames(t, k) = spec.amplitudes[c] * env * wave + spec.noise * gauss(rng);
                }
            }
            out.push_back(std::move(utt));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Configuration

namespace {

double parse_number(const std::string& key, const std::string& value) {
    const auto slash = value.find('/');
    if (slash != std::string::npos) {
        const auto num = to_double(trim(value.substr(0, slash)));
        const auto den = to_double(trim(value.substr(slash + 1)));
        if (num && den && *den != 0.0) return *num / *den;
    } else if (const auto v = to_double(value)) {
        return *v;
    }
    throw ParseError("config key '" + key + "': expected a number, got '" + value + "'");
}

std::size_t parse_count(const std::string& key, const std::string& value) {
    const auto v = to_integer(value);
    if (!v || *v < 0) {
        throw ParseError("config key '" + key + "': expected a non-negative integer, got '" +
                         value + "'");
    }
    return static_cast<std::size_t>(*v);
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw ParseError("config key '" + key + "': expected true/false, got '" + value + "'");
}

std::vector<double> parse_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    const char sep = value.find(':') != std::string::npos ? ':' : ',';
    for (const auto& part : split(value, sep)) out.push_back(parse_number(key, part));
    return out;
}

std::string join(const std::vector<double>& v, char sep = ',') {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) os << sep;
        os << v[i];
    }
    return os.str();
}

SynthSpec& synth_of(RunConfig& c) {
    if (!c.synth) c.synth = SynthSpec{};
    return *c.synth;
}

}  // namespace

void apply_setting(RunConfig& c, const std::string& key, const std::string& value) {
    ModelConfig& m = c.model;
    TrainConfig& t = c.train;
    // model
    if (key == "model.feature_dim") { m.feature_dim = parse_count(key, value); return; }
    if (key == "model.graph_len") { m.graph_len = parse_count(key, value); return; }
    if (key == "model.gru_hidden") { m.gru_hidden = parse_count(key, value); return; }
    if (key == "model.gin_hidden") { m.gin_hidden = parse_count(key, value); return; }
    if (key == "model.num_gin_layers") { m.num_gin_layers = parse_count(key, value); return; }
    if (key == "model.fa_layer_index") { m.fa_layer_index = parse_count(key, value); return; }
    if (key == "model.num_classes") { m.num_classes = parse_count(key, value); return; }
    if (key == "model.aggregator_weights") {
        // Column order softmax, sum, mean.
        const auto w = parse_list(key, value);
        if (w.size() != 3) throw ParseError("config key '" + key + "': expected softmax,sum,mean");
        m.aggregator_weights = {w[1], w[2], w[0]};
        return;
    }
    if (key == "model.alpha") { m.aggregator_weights.alpha = parse_number(key, value); return; }
    if (key == "model.beta") { m.aggregator_weights.beta = parse_number(key, value); return; }
    if (key == "model.gamma") { m.aggregator_weights.gamma = parse_number(key, value); return; }
    if (key == "model.residual") { m.residual = parse_bool(key, value); return; }
    if (key == "model.stage_e_source") {
        if (value == "mpa") m.stage_e_source = StageESource::Mpa;
        else if (value == "last_gin") m.stage_e_source = StageESource::LastGin;
        else throw ParseError("config key '" + key + "': expected mpa or last_gin, got '" + value + "'");
        return;
    }
    // train
    if (key == "train.learning_rate") { t.learning_rate = parse_number(key, value); return; }
    if (key == "train.weight_decay") { t.weight_decay = parse_number(key, value); return; }
    if (key == "train.batch_size") { t.batch_size = parse_count(key, value); return; }
    if (key == "train.max_epochs") { t.max_epochs = parse_count(key, value); return; }
    if (key == "train.early_stop_patience") { t.early_stop_patience = parse_count(key, value); return; }
    if (key == "train.seed") { t.seed = parse_count(key, value); return; }
    if (key == "train.folds") { t.folds = parse_count(key, value); return; }
    if (key == "train.split_ratio") {
        const auto r = parse_list(key, value);
        if (r.size() != 3) throw ParseError("config key '" + key + "': expected train:valid:test");
        t.split_ratio = {r[0], r[1], r[2]};
        return;
    }
    // synth
    if (key == "synth.num_classes") { synth_of(c).num_classes = parse_count(key, value); return; }
    if (key == "synth.utterances_per_class") { synth_of(c).utterances_per_class = parse_count(key, value); return; }
    if (key == "synth.frames_min") { synth_of(c).frames_min = parse_count(key, value); return; }
    if (key == "synth.frames_max") { synth_of(c).frames_max = parse_count(key, value); return; }
    if (key == "synth.feature_dim") { synth_of(c).feature_dim = parse_count(key, value); return; }
    if (key == "synth.num_groups") { synth_of(c).num_groups = parse_count(key, value); return; }
    if (key == "synth.noise") { synth_of(c).noise = parse_number(key, value); return; }
    if (key == "synth.seed") { synth_of(c).seed = parse_count(key, value); return; }
    if (key == "synth.frequencies") { synth_of(c).frequencies = parse_list(key, value); return; }
    if (key == "synth.amplitudes") { synth_of(c).amplitudes = parse_list(key, value); return; }
    if (key == "synth.envelope_rates") { synth_of(c).envelope_rates = parse_list(key, value); return; }
    throw ParseError("unknown config key '" + key + "'");
}

namespace {

// Calls fn(line_no, key, value) for every setting line.
template <typename Fn>
void for_each_setting(const std::string& text, const std::string& origin, Fn&& fn) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ParseError(where(origin, line_no) + "expected 'section.key = value'");
        }
        const std::string key = trim(body.substr(0, eq));
        const std::string value = trim(body.substr(eq + 1));
        try {
            fn(key, value);
        } catch (const ParseError& e) {
            throw ParseError(where(origin, line_no) + e.what());
        }
    }
}

void validate_run_config(const RunConfig& c) {
    try {
        c.model.validate();
        c.train.validate();
        if (c.synth) c.synth->validate();
    } catch (const std::invalid_argument& e) {
        throw ParseError(e.what());
    }
}

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
    RunConfig c;
    for_each_setting(text, origin, [&](const std::string& key, const std::string& value) {
        apply_setting(c, key, value);
    });
    validate_run_config(c);
    return c;
}

RunConfig parse_config(const std::filesystem::path& path) {
    return parse_config_text(read_text_file(path), path.string());
}

std::string format_config(const RunConfig& c) {
    std::ostringstream os;
    os.precision(17);
    const ModelConfig& m = c.model;
    const TrainConfig& t = c.train;
    os << "model.feature_dim = " << m.feature_dim << '\n'
       << "model.graph_len = " << m.graph_len << '\n'
       << "model.gru_hidden = " << m.gru_hidden << '\n'
       << "model.gin_hidden = " << m.gin_hidden << '\n'
       << "model.num_gin_layers = " << m.num_gin_layers << '\n'
       << "model.fa_layer_index = " << m.fa_layer_index << '\n'
       << "model.num_classes = " << m.num_classes << '\n'
       << "model.alpha = " << m.aggregator_weights.alpha << '\n'
       << "model.beta = " << m.aggregator_weights.beta << '\n'
       << "model.gamma = " << m.aggregator_weights.gamma << '\n'
       << "model.residual = " << (m.residual ? "true" : "false") << '\n'
       << "model.stage_e_source = " << (m.stage_e_source == StageESource::Mpa ? "mpa" : "last_gin") << '\n'
       << "train.learning_rate = " << t.learning_rate << '\n'
       << "train.weight_decay = " << t.weight_decay << '\n'
       << "train.batch_size = " << t.batch_size << '\n'
       << "train.max_epochs = " << t.max_epochs << '\n'
       << "train.early_stop_patience = " << t.early_stop_patience << '\n'
       << "train.seed = " << t.seed << '\n'
       << "train.folds = " << t.folds << '\n'
       << "train.split_ratio = " << join({t.split_ratio.begin(), t.split_ratio.end()}, ':') << '\n';
    if (c.synth) {
        const SynthSpec& s = *c.synth;
        os << "synth.num_classes = " << s.num_classes << '\n'
           << "synth.utterances_per_class = " << s.utterances_per_class << '\n'
           << "synth.frames_min = " << s.frames_min << '\n'
           << "synth.frames_max = " << s.frames_max << '\n'
           << "synth.feature_dim = " << s.feature_dim << '\n'
           << "synth.num_groups = " << s.num_groups << '\n'
           << "synth.noise = " << s.noise << '\n'
           << "synth.seed = " << s.seed << '\n'
           << "synth.frequencies = " << join(s.frequencies) << '\n'
           << "synth.amplitudes = " << join(s.amplitudes) << '\n'
           << "synth.envelope_rates = " << join(s.envelope_rates) << '\n';
    }
    return os.str();
}

void apply_env_overrides(RunConfig& config) {
    if (const char* seed = std::getenv("WMAGIN_SEED"); seed && *seed) {
        config.train.seed = parse_count("WMAGIN_SEED", seed);
    }
}

std::vector<std::pair<std::string, RunConfig>> SweepGrid::expand() const {
    std::vector<std::pair<std::string, RunConfig>> rows{{"", base}};
    for (const auto& [key, values] : axes) {
        std::vector<std::pair<std::string, RunConfig>> next;
        for (const auto& [label, cfg] : rows) {
            for (const auto& v : values) {
                RunConfig copy = cfg;
                apply_setting(copy, key, v);
                validate_run_config(copy);
                next.emplace_back(label.empty() ? key + "=" + v : label + ", " + key + "=" + v,
                                  std::move(copy));
            }
        }
        rows = std::move(next);
    }
    return rows;
}

SweepGrid parse_grid_text(const std::string& text, const std::string& origin) {
    SweepGrid grid;
    static const std::string prefix = "sweep.";
    for_each_setting(text, origin, [&](const std::string& key, const std::string& value) {
        if (key.rfind(prefix, 0) == 0) {
            const std::string target = key.substr(prefix.size());
            auto values = split(value, ';');
            std::erase_if(values, [](const std::string& s) { return s.empty(); });
            if (values.empty()) throw ParseError("sweep key '" + key + "' has no values");
            RunConfig probe = grid.base;
            for (const auto& v : values) apply_setting(probe, target, v);
            grid.axes.emplace_back(target, std::move(values));
        } else {
            apply_setting(grid.base, key, value);
        }
    });
    return grid;
}

SweepGrid parse_grid(const std::filesystem::path& path) {
    return parse_grid_text(read_text_file(path), path.string());
}

}  // namespace wmagin
