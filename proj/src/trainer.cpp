#include "wmagin/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "wmagin/linear.hpp"

namespace wmagin {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("train.learning_rate must be > 0");
    if (!(weight_decay >= 0.0)) throw std::invalid_argument("train.weight_decay must be >= 0");
    if (batch_size == 0) throw std::invalid_argument("train.batch_size must be positive");
    if (folds < 2) throw std::invalid_argument("train.folds must be at least 2");
    for (double r : split_ratio) {
        if (!(r > 0.0)) throw std::invalid_argument("train.split_ratio entries must be > 0");
    }
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
        throw std::invalid_argument("Adam betas must lie in [0, 1)");
    }
    if (!(adam_eps > 0.0)) throw std::invalid_argument("Adam eps must be > 0");
}

std::vector<double> stage_weights(std::size_t num_stages) {
    if (num_stages == 0) throw std::invalid_argument("need at least one stage");
    const double total = static_cast<double>(num_stages * (num_stages + 1) / 2);
    std::vector<double> w(num_stages);
    for (std::size_t i = 0; i < num_stages; ++i) w[i] = static_cast<double>(i + 1) / total;
    return w;
}

Tensor combine_stage_losses(std::span<const Tensor> stage_losses) {
    if (stage_losses.empty()) throw std::invalid_argument("need at least one stage loss");
    const std::size_t count = stage_losses.size();
    Tensor weighted = stage_losses[0];
    for (std::size_t i = 1; i < count; ++i) {
        weighted = add(weighted, scale(stage_losses[i], static_cast<double>(i + 1)));
    }
    const double total = static_cast<double>(count * (count + 1) / 2);
    return div(weighted, Tensor::scalar(total));
}

namespace {

std::vector<Tensor> stage_cross_entropies(std::span<const Tensor> stages,
                                          std::span<const int> labels) {
    std::vector<Tensor> ce;
    ce.reserve(stages.size());
    for (const auto& s : stages) ce.push_back(cross_entropy_logits(s, labels));
    return ce;
}

}  // namespace

Tensor multi_stage_loss(std::span<const Tensor> stages, std::span<const int> labels,
                        std::size_t expected_stages) {
    if (stages.size() != expected_stages) {
        throw std::invalid_argument("multi-stage loss expects " + std::to_string(expected_stages) +
                                    " stages, got " + std::to_string(stages.size()));
    }
    const auto ce = stage_cross_entropies(stages, labels);
    return combine_stage_losses(ce);
}

void adam_step(std::span<Tensor> params, AdamState& state, const TrainConfig& config) {
    if (state.first_moment.size() != params.size()) {
        state.first_moment.assign(params.size(), {});
        state.second_moment.assign(params.size(), {});
        for (std::size_t i = 0; i < params.size(); ++i) {
            state.first_moment[i].assign(params[i].size(), 0.0);
            state.second_moment[i].assign(params[i].size(), 0.0);
        }
    }
    ++state.step;
    const double b1 = config.adam_beta1, b2 = config.adam_beta2;
    const double t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(b1, t);
    const double correction2 = 1.0 - std::pow(b2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto values = params[i].mutable_data();
        const auto grad = params[i].grad();
        auto& m = state.first_moment[i];
        auto& v = state.second_moment[i];
        if (m.size() != values.size()) {
            throw DimensionError("Adam state does not match parameter " + std::to_string(i));
        }
        for (std::size_t k = 0; k < values.size(); ++k) {
            const double g = grad[k] + config.weight_decay * values[k];
            m[k] = b1 * m[k] + (1.0 - b1) * g;
            v[k] = b2 * v[k] + (1.0 - b2) * g * g;
            const double m_hat = m[k] / correction1;
            const double v_hat = v[k] / correction2;
            values[k] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.adam_eps);
        }
    }
}

nlohmann::json EvalReport::to_json() const {
    return {{"wa", wa}, {"ua", ua}, {"confusion", confusion}, {"per_class_recall", per_class_recall}};
}

EvalReport report_from_confusion(std::vector<std::vector<long>> confusion) {
    EvalReport r;
    const std::size_t c = confusion.size();
    long total = 0, correct = 0;
    double recall_sum = 0.0;
    std::size_t present = 0;
    r.per_class_recall.assign(c, 0.0);
    for (std::size_t i = 0; i < c; ++i) {
        if (confusion[i].size() != c) throw DimensionError("confusion matrix must be square");
        const long support = std::accumulate(confusion[i].begin(), confusion[i].end(), 0L);
        total += support;
        correct += confusion[i][i];
        if (support > 0) {
            r.per_class_recall[i] = static_cast<double>(confusion[i][i]) / static_cast<double>(support);
            recall_sum += r.per_class_recall[i];
            ++present;
        }
    }
    r.wa = total > 0 ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
    r.ua = present > 0 ? recall_sum / static_cast<double>(present) : 0.0;
    r.confusion = std::move(confusion);
    return r;
}

EvalReport evaluate(std::span<const FrameGraph> graphs, const ModelParams& params,
                    const ModelConfig& config, std::size_t batch_size) {
    NoGradGuard no_grad;
    const std::size_t c = config.num_classes;
    std::vector<std::vector<long>> confusion(c, std::vector<long>(c, 0));
    for (std::size_t start = 0; start < graphs.size(); start += batch_size) {
        const std::size_t count = std::min(batch_size, graphs.size() - start);
        const auto batch = GraphBatch::make(graphs.subspan(start, count));
        const auto predictions = predict(model_forward(batch, params, config));
        for (std::size_t i = 0; i < count; ++i) {
            const int truth = batch.labels[i];
            if (truth < 0 || static_cast<std::size_t>(truth) >= c) {
                throw std::out_of_range("label " + std::to_string(truth) + " outside [0, " +
                                        std::to_string(c) + ")");
            }
            ++confusion[static_cast<std::size_t>(truth)][static_cast<std::size_t>(predictions[i])];
        }
    }
    return report_from_confusion(std::move(confusion));
}

nlohmann::json EpochLog::to_json() const {
    return {{"epoch", epoch},           {"stage_losses", stage_losses}, {"total_loss", total_loss},
            {"train_wa", train_wa},     {"valid_wa", valid_wa},         {"valid_ua", valid_ua}};
}

std::string TrainResult::log_ndjson() const {
    std::string out;
    for (const auto& e : log) out += e.to_json().dump() + "\n";
    return out;
}

TrainResult train(std::span<const FrameGraph> train_set, std::span<const FrameGraph> valid_set,
                  const TrainConfig& train_config, const ModelConfig& model_config,
                  const EpochCallback& on_epoch) {
    train_config.validate();
    model_config.validate();
    if (train_set.empty()) throw std::invalid_argument("training set is empty");
    if (valid_set.empty()) throw std::invalid_argument("validation set is empty");

    Rng rng(train_config.seed);
    ModelParams params = ModelParams::init(model_config, rng);
    std::vector<Tensor> tensors = params.parameters();
    AdamState adam;

    TrainResult result;
    result.best = params.clone();
    result.best_valid_wa = -1.0;
    const std::size_t num_stages = model_config.num_loss_stages();

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);
    std::size_t since_improvement = 0;

    for (std::size_t epoch = 1; epoch <= train_config.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        EpochLog entry;
        entry.epoch = epoch;
        entry.stage_losses.assign(num_stages, 0.0);
        std::size_t correct = 0;

        for (std::size_t start = 0; start < order.size(); start += train_config.batch_size) {
            const std::size_t count = std::min(train_config.batch_size, order.size() - start);
            std::vector<const FrameGraph*> members(count);
            for (std::size_t i = 0; i < count; ++i) members[i] = &train_set[order[start + i]];
            const auto batch = GraphBatch::make(std::span<const FrameGraph* const>(members));

            params.zero_grad();
            const StageLogits logits = model_forward(batch, params, model_config);
            const auto stages = logits.loss_stages();
            if (stages.size() != num_stages) throw std::logic_error("unexpected stage count");
            const auto ce = stage_cross_entropies(stages, batch.labels);
            const Tensor loss = combine_stage_losses(ce);
            backward(loss);
            adam_step(tensors, adam, train_config);

            const double weight = static_cast<double>(count);
            for (std::size_t s = 0; s < num_stages; ++s) entry.stage_losses[s] += weight * ce[s].item();
            entry.total_loss += weight * loss.item();
            const auto pred = predict(logits);
            for (std::size_t i = 0; i < count; ++i) correct += pred[i] == batch.labels[i];
        }
        const double n = static_cast<double>(order.size());
        for (double& v : entry.stage_losses) v /= n;
        entry.total_loss /= n;
        entry.train_wa = static_cast<double>(correct) / n;

        const EvalReport valid = evaluate(valid_set, params, model_config, train_config.batch_size);
        entry.valid_wa = valid.wa;
        entry.valid_ua = valid.ua;
        result.log.push_back(entry);
        if (on_epoch) on_epoch(entry);

        if (valid.wa > result.best_valid_wa) {
            result.best = params.clone();
            result.best_valid_wa = valid.wa;
            result.best_epoch = epoch;
            since_improvement = 0;
        } else {
            ++since_improvement;
        }
        if (since_improvement >= train_config.early_stop_patience) break;
    }
    if (result.log.empty()) result.best_valid_wa = 0.0;
    return result;
}

FoldSplit split_by_ratio(std::size_t num_utterances, const std::array<double, 3>& ratio,
                         std::uint64_t seed) {
    const double sum = ratio[0] + ratio[1] + ratio[2];
    const auto n = static_cast<double>(num_utterances);
    auto n_valid = static_cast<std::size_t>(std::llround(n * ratio[1] / sum));
    auto n_test = static_cast<std::size_t>(std::llround(n * ratio[2] / sum));
    if (num_utterances >= 3) {
        n_valid = std::max<std::size_t>(n_valid, 1);
        n_test = std::max<std::size_t>(n_test, 1);
    }
    if (n_valid + n_test >= num_utterances) {
        throw std::invalid_argument("too few utterances (" + std::to_string(num_utterances) +
                                    ") for a train/valid/test split");
    }
    std::vector<std::size_t> order(num_utterances);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    FoldSplit split;
    split.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
    split.valid.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test),
                       order.begin() + static_cast<std::ptrdiff_t>(n_test + n_valid));
    split.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test + n_valid), order.end());
    for (auto* v : {&split.train, &split.valid, &split.test}) std::sort(v->begin(), v->end());
    return split;
}

std::vector<FoldSplit> make_group_folds(std::span<const std::string> group_ids, std::size_t folds,
                                        const std::array<double, 3>& ratio, std::uint64_t seed) {
    const std::set<std::string> unique(group_ids.begin(), group_ids.end());
    if (unique.size() < folds) {
        throw std::invalid_argument("need at least " + std::to_string(folds) + " groups, found " +
                                    std::to_string(unique.size()));
    }
    std::map<std::string, std::size_t> bucket;
    std::size_t i = 0;
    for (const auto& g : unique) bucket[g] = i++ % folds;

    std::vector<FoldSplit> out(folds);
    for (std::size_t k = 0; k < folds; ++k) {
        std::vector<std::size_t> rest;
        for (std::size_t u = 0; u < group_ids.size(); ++u) {
            (bucket[group_ids[u]] == k ? out[k].test : rest).push_back(u);
        }
        const double frac = ratio[1] / (ratio[0] + ratio[1]);
        auto n_valid = static_cast<std::size_t>(std::llround(static_cast<double>(rest.size()) * frac));
        n_valid = std::clamp<std::size_t>(n_valid, 1, rest.size() - 1);
        Rng rng(seed);
        std::vector<std::size_t> shuffled = rest;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        out[k].valid.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_valid));
        out[k].train.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_valid), shuffled.end());
        std::sort(out[k].valid.begin(), out[k].valid.end());
        std::sort(out[k].train.begin(), out[k].train.end());
    }
    return out;
}

std::vector<FrameGraph> graphs_for(std::span<const UtteranceFeatures> dataset,
                                   std::span<const std::size_t> indices, std::size_t graph_len) {
    std::vector<FrameGraph> out;
    for (std::size_t idx : indices) {
        auto part = segment_utterance(dataset[idx], graph_len, idx);
        std::move(part.begin(), part.end(), std::back_inserter(out));
    }
    return out;
}

nlohmann::json CrossValidationReport::to_json() const {
    nlohmann::json fold_list = nlohmann::json::array();
    for (const auto& f : folds) fold_list.push_back(f.to_json());
    return {{"folds", fold_list}, {"mean_wa", mean_wa}, {"mean_ua", mean_ua}};
}

CrossValidationReport cross_validate(std::span<const UtteranceFeatures> dataset,
                                     const TrainConfig& train_config,
                                     const ModelConfig& model_config) {
    std::vector<std::string> groups;
    groups.reserve(dataset.size());
    for (const auto& u : dataset) groups.push_back(u.group_id);
    const auto splits =
        make_group_folds(groups, train_config.folds, train_config.split_ratio, train_config.seed);

    CrossValidationReport report;
    for (const auto& split : splits) {
        const auto train_graphs = graphs_for(dataset, split.train, model_config.graph_len);
        const auto valid_graphs = graphs_for(dataset, split.valid, model_config.graph_len);
        const auto test_graphs = graphs_for(dataset, split.test, model_config.graph_len);
        const auto fit = train(train_graphs, valid_graphs, train_config, model_config);
        report.folds.push_back(evaluate(test_graphs, fit.best, model_config, train_config.batch_size));
    }
    for (const auto& f : report.folds) {
        report.mean_wa += f.wa;
        report.mean_ua += f.ua;
    }
    report.mean_wa /= static_cast<double>(report.folds.size());
    report.mean_ua /= static_cast<double>(report.folds.size());
    return report;
}

HoldoutResult train_holdout(std::span<const UtteranceFeatures> dataset,
                            const TrainConfig& train_config, const ModelConfig& model_config,
                            const EpochCallback& on_epoch) {
    HoldoutResult out;
    out.split = split_by_ratio(dataset.size(), train_config.split_ratio, train_config.seed);
    const auto train_graphs = graphs_for(dataset, out.split.train, model_config.graph_len);
    const auto valid_graphs = graphs_for(dataset, out.split.valid, model_config.graph_len);
    const auto test_graphs = graphs_for(dataset, out.split.test, model_config.graph_len);
    out.fit = train(train_graphs, valid_graphs, train_config, model_config, on_epoch);
    out.test = evaluate(test_graphs, out.fit.best, model_config, train_config.batch_size);
    return out;
}

}  // namespace wmagin
