#ifndef WMAGIN_CHECKPOINT_HPP
#define WMAGIN_CHECKPOINT_HPP

#include <filesystem>
#include <string>

#include "json.hpp"
#include "wmagin/model.hpp"

namespace wmagin {

inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
    ModelConfig config;
    ModelParams params;
};

nlohmann::json model_config_to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);

/// {format, format_version, model_config, parameters: [{name, shape, values}]}
nlohmann::json checkpoint_to_json(const ModelConfig& config, const ModelParams& params);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

std::string checkpoint_to_string(const ModelConfig& config, const ModelParams& params);

/// Writes to a temporary sibling and renames it into place.
void save_checkpoint(const std::filesystem::path& path, const ModelConfig& config,
                     const ModelParams& params);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Replaces `path` atomically with `contents`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace wmagin

#endif  // WMAGIN_CHECKPOINT_HPP
