#ifndef WMAGIN_DATA_IO_HPP
#define WMAGIN_DATA_IO_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "wmagin/graph.hpp"
#include "wmagin/model.hpp"
#include "wmagin/trainer.hpp"

namespace wmagin {

/// Malformed input file; the message carries the source and line number.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Feature CSV
//
//   utterance_id,group_id,label,frame_index,f0,...,f{h-1}
//
// Rows of one utterance are contiguous with frame_index 0, 1, 2, ...

std::vector<UtteranceFeatures> parse_dataset(const std::string& text, std::size_t num_classes = 4,
                                             const std::string& origin = "<memory>");
std::vector<UtteranceFeatures> load_dataset(const std::filesystem::path& path,
                                            std::size_t num_classes = 4);
std::string format_dataset(const std::vector<UtteranceFeatures>& dataset);
/// Writes through a temporary file.
void save_dataset(const std::filesystem::path& path, const std::vector<UtteranceFeatures>& dataset);

// ---------------------------------------------------------------------------
// Synthetic data

/// Noisy multi-channel oscillations whose frequency (and optionally envelope
/// rate) depends on the class. A random phase per utterance and channel makes
/// a single frame uninformative, so the class has to be read from how frames
/// relate.
struct SynthSpec {
    std::size_t num_classes = 4;
    std::size_t utterances_per_class = 50;
    std::size_t frames_min = 30;
    std::size_t frames_max = 46;
    std::size_t feature_dim = 8;
    std::size_t num_groups = 5;
    double noise = 0.4;
    std::uint64_t seed = 7;
    std::vector<double> frequencies{0.05, 0.12, 0.22, 0.35};  // cycles per frame
    std::vector<double> amplitudes{1.0, 1.0, 1.0, 1.0};
    std::vector<double> envelope_rates{0.0, 0.0, 0.0, 0.0};    // envelope cycles per utterance

    void validate() const;
    bool operator==(const SynthSpec&) const = default;
};

std::vector<UtteranceFeatures> generate_synthetic(const SynthSpec& spec);

// ---------------------------------------------------------------------------
// Configuration
//
// Flat `section.key = value` lines, '#' starts a comment. Missing keys keep
// their defaults. Numbers may be written as fractions ("1/3").

struct RunConfig {
    ModelConfig model;
    TrainConfig train;
    std::optional<SynthSpec> synth;
};

RunConfig parse_config_text(const std::string& text, const std::string& origin = "<memory>");
RunConfig parse_config(const std::filesystem::path& path);

/// Applies one `key = value` setting; throws ParseError naming the key.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);

/// Every documented key with its current value, in config-file syntax.
std::string format_config(const RunConfig& config);

/// WMAGIN_SEED, when set, replaces train.seed.
void apply_env_overrides(RunConfig& config);

/// A base configuration plus `sweep.<key> = v1 ; v2 ; ...` axes.
struct SweepGrid {
    RunConfig base;
    std::vector<std::pair<std::string, std::vector<std::string>>> axes;

    /// Cartesian product of the axes, each with a "key=value, ..." label.
    std::vector<std::pair<std::string, RunConfig>> expand() const;
};

SweepGrid parse_grid_text(const std::string& text, const std::string& origin = "<memory>");
SweepGrid parse_grid(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace wmagin

#endif  // WMAGIN_DATA_IO_HPP
