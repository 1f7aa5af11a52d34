#ifndef WMAGIN_GRADCHECK_HPP
#define WMAGIN_GRADCHECK_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "wmagin/graph.hpp"
#include "wmagin/model.hpp"

namespace wmagin {

struct GradCheckOptions {
    double step = 1e-5;
    /// Denominator floor so that near-zero gradients are compared absolutely.
    double floor = 1e-6;
};

struct ParameterGradError {
    std::string name;
    std::size_t size = 0;
    double max_rel_error = 0.0;
};

struct GradCheckResult {
    std::vector<ParameterGradError> parameters;
    std::size_t num_checked = 0;
    double max_rel_error = 0.0;
    std::string worst_parameter;

    nlohmann::json to_json() const;
};

/// |a - b| / max(|a|, |b|, floor)
double relative_error(double a, double b, double floor);

/// n = 6 nodes, 3 features, hidden 8 everywhere, two GIN layers with the
/// second one fully adjacent.
ModelConfig tiny_gradcheck_config();

/// Two random graphs for `config`, the second one partly padded.
std::vector<FrameGraph> tiny_gradcheck_graphs(const ModelConfig& config, std::uint64_t seed);

/// Fills every parameter (epsilons and biases included) with uniform values
/// in [-scale, scale] so that no gradient path is trivially zero.
void randomize_parameters(ModelParams& params, double scale, std::uint64_t seed);

/// Compares the autodiff gradient of the multi-stage loss with central
/// differences for every scalar of every parameter.
GradCheckResult gradient_check(const ModelConfig& config, ModelParams& params,
                               std::span<const FrameGraph> graphs,
                               const GradCheckOptions& options = {});

/// The suite behind the `gradcheck` command.
GradCheckResult run_tiny_gradient_check(std::uint64_t seed = 0);

}  // namespace wmagin

#endif  // WMAGIN_GRADCHECK_HPP
