#ifndef WMAGIN_TRAINER_HPP
#define WMAGIN_TRAINER_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "wmagin/graph.hpp"
#include "wmagin/model.hpp"
#include "wmagin/tensor.hpp"

namespace wmagin {

struct TrainConfig {
    double learning_rate = 1e-4;
    double weight_decay = 1e-8;
    std::size_t batch_size = 128;
    std::size_t max_epochs = 200;
    std::size_t early_stop_patience = 20;
    std::uint64_t seed = 0;
    std::size_t folds = 5;
    std::array<double, 3> split_ratio{8.0, 1.0, 1.0};  // train : valid : test
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;

    void validate() const;
    bool operator==(const TrainConfig&) const = default;
};

// ---------------------------------------------------------------------------
// Multi-stage loss

/// i / sum(1..I) for i = 1..I.
std::vector<double> stage_weights(std::size_t num_stages);

/// sum_i i * L_i / sum_i i over scalar per-stage losses, shallow stage first.
Tensor combine_stage_losses(std::span<const Tensor> stage_losses);

/// Cross-entropy of every stage combined with the depth weights. Throws if
/// the number of stages differs from `expected_stages`.
Tensor multi_stage_loss(std::span<const Tensor> stages, std::span<const int> labels,
                        std::size_t expected_stages);

// ---------------------------------------------------------------------------
// Optimizer

struct AdamState {
    std::size_t step = 0;
    std::vector<std::vector<double>> first_moment;
    std::vector<std::vector<double>> second_moment;
};

/// One Adam update over `params` using their accumulated grads. Weight decay
/// is added to the gradient (coupled L2).
void adam_step(std::span<Tensor> params, AdamState& state, const TrainConfig& config);

// ---------------------------------------------------------------------------
// Metrics

struct EvalReport {
    double wa = 0.0;
    double ua = 0.0;
    std::vector<std::vector<long>> confusion;  // [true][predicted]
    std::vector<double> per_class_recall;

    nlohmann::json to_json() const;
};

/// WA = trace / total. UA = mean recall over classes that occur; an absent
/// class reports recall 0 and is left out of the mean.
EvalReport report_from_confusion(std::vector<std::vector<long>> confusion);

EvalReport evaluate(std::span<const FrameGraph> graphs, const ModelParams& params,
                    const ModelConfig& config, std::size_t batch_size = 128);

// ---------------------------------------------------------------------------
// Training

struct EpochLog {
    std::size_t epoch = 0;
    std::vector<double> stage_losses;
    double total_loss = 0.0;
    double train_wa = 0.0;  // running accuracy of G during the epoch
    double valid_wa = 0.0;
    double valid_ua = 0.0;

    nlohmann::json to_json() const;
};

struct TrainResult {
    ModelParams best;
    std::size_t best_epoch = 0;
    double best_valid_wa = 0.0;
    std::vector<EpochLog> log;

    /// One JSON record per line.
    std::string log_ndjson() const;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Shuffled mini-batch Adam on the multi-stage loss with early stopping on
/// validation WA. Returns the best-validation parameters.
TrainResult train(std::span<const FrameGraph> train_set, std::span<const FrameGraph> valid_set,
                  const TrainConfig& train_config, const ModelConfig& model_config,
                  const EpochCallback& on_epoch = {});

// ---------------------------------------------------------------------------
// Splits

/// Index lists over utterances.
struct FoldSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> valid;
    std::vector<std::size_t> test;
};

/// Random utterance-level split following `ratio`.
FoldSplit split_by_ratio(std::size_t num_utterances, const std::array<double, 3>& ratio,
                         std::uint64_t seed);

/// Group-exclusive folds: sorted distinct groups are dealt round-robin into
/// `folds` buckets; fold k tests on bucket k and draws its validation
/// utterances from the remaining groups.
std::vector<FoldSplit> make_group_folds(std::span<const std::string> group_ids, std::size_t folds,
                                        const std::array<double, 3>& ratio, std::uint64_t seed);

struct CrossValidationReport {
    std::vector<EvalReport> folds;
    double mean_wa = 0.0;
    double mean_ua = 0.0;

    nlohmann::json to_json() const;
};

CrossValidationReport cross_validate(std::span<const UtteranceFeatures> dataset,
                                     const TrainConfig& train_config,
                                     const ModelConfig& model_config);

/// Training on one ratio split followed by a test-set evaluation.
struct HoldoutResult {
    FoldSplit split;
    TrainResult fit;
    EvalReport test;
};

HoldoutResult train_holdout(std::span<const UtteranceFeatures> dataset,
                            const TrainConfig& train_config, const ModelConfig& model_config,
                            const EpochCallback& on_epoch = {});

/// Segments the selected utterances into graphs.
std::vector<FrameGraph> graphs_for(std::span<const UtteranceFeatures> dataset,
                                   std::span<const std::size_t> indices, std::size_t graph_len);

}  // namespace wmagin

#endif  // WMAGIN_TRAINER_HPP
